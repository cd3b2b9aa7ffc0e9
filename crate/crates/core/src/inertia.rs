//! Inertia and gap of finite matrices.

use faer::{c64, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigvalsh, hermitian_defect, singular_values};

/// Relative zero tolerance used when none is given.
pub const DEFAULT_RELATIVE_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InertiaResult {
    pub n_plus: usize,
    pub n_minus: usize,
    pub n_zero: usize,
    pub signature: i64,
    pub min_abs_eig: f64,
    pub zero_tolerance: f64,
}

impl InertiaResult {
    /// Counts from eigenvalues; `zero_tolerance = None` uses `1e-10 * max |eig|`.
    pub fn from_eigenvalues(eigs: &[f64], zero_tolerance: Option<f64>) -> Self {
        let norm = eigs.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let tol = zero_tolerance.unwrap_or(DEFAULT_RELATIVE_TOLERANCE * norm);
        let mut r = Self {
            n_plus: 0,
            n_minus: 0,
            n_zero: 0,
            signature: 0,
            min_abs_eig: f64::INFINITY,
            zero_tolerance: tol,
        };
        for &e in eigs {
            r.min_abs_eig = r.min_abs_eig.min(e.abs());
            if e > tol {
                r.n_plus += 1;
            } else if e < -tol {
                r.n_minus += 1;
            } else {
                r.n_zero += 1;
            }
        }
        if eigs.is_empty() {
            r.min_abs_eig = 0.0;
        }
        r.signature = r.n_plus as i64 - r.n_minus as i64;
        r
    }

    pub fn dim(&self) -> usize {
        self.n_plus + self.n_minus + self.n_zero
    }

    /// No eigenvalue within 100 tolerances of zero.
    pub fn certified(&self) -> bool {
        self.n_zero == 0 && self.min_abs_eig >= 100.0 * self.zero_tolerance
    }
}

pub(crate) fn check_hermitian(m: MatRef<'_, c64>) -> Result<()> {
    let defect = hermitian_defect(m);
    let scale = m.norm_l2();
    if defect > 1e-12 * scale {
        return Err(Error::NotHermitian(defect));
    }
    Ok(())
}

pub fn inertia(m: MatRef<'_, c64>, zero_tolerance: Option<f64>) -> Result<InertiaResult> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch("inertia needs a square matrix".into()));
    }
    if let Some(t) = zero_tolerance {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!("zero tolerance {t}")));
        }
    }
    check_hermitian(m)?;
    Ok(InertiaResult::from_eigenvalues(&eigvalsh(m)?, zero_tolerance))
}

/// Smallest singular value (0 for singular or empty input).
pub fn gap(m: MatRef<'_, c64>) -> Result<f64> {
    Ok(singular_values(m)?.last().copied().unwrap_or(0.0))
}

/// `dist(0, spec M)` for Hermitian `M`, via eigenvalues.
pub fn gap_hermitian(m: MatRef<'_, c64>) -> Result<f64> {
    check_hermitian(m)?;
    Ok(eigvalsh(m)?.iter().fold(f64::INFINITY, |a, &b| a.min(b.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag_real, direct_sum, random_gaussian, random_hermitian, random_unitary, scaled, singular_values};
    use faer::Mat;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn inertia_examples() {
        let r = inertia(diag_real(&[2.0, -3.0, 5.0]).as_ref(), None).unwrap();
        assert_eq!((r.n_plus, r.n_minus, r.n_zero, r.signature), (2, 1, 0, 1));
        let r = inertia(Mat::<c64>::identity(7, 7).as_ref(), None).unwrap();
        assert_eq!((r.n_plus, r.n_minus, r.n_zero), (7, 0, 0));
        assert!(r.certified());
        let r = inertia(diag_real(&[1.0, 0.0, -1.0]).as_ref(), Some(1e-9)).unwrap();
        assert_eq!(r.n_zero, 1);
        assert!(!r.certified());
    }

    #[test]
    fn inertia_rejects_non_hermitian() {
        let mut m = diag_real(&[1.0, 2.0]);
        m[(0, 1)] = c64::new(1.0, 0.0);
        assert!(matches!(inertia(m.as_ref(), None), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn gap_examples() {
        assert_eq!(gap(diag_real(&[1.0, -1.0]).as_ref()).unwrap(), 1.0);
        assert_eq!(gap(diag_real(&[1.0, 0.0]).as_ref()).unwrap(), 0.0);
        let a = diag_real(&[3.0, -0.5]);
        let d = diag_real(&[-2.0, 0.75, 4.0]);
        let s = direct_sum(a.as_ref(), d.as_ref());
        assert_eq!(gap(s.as_ref()).unwrap(), 0.5);
        assert!((gap_hermitian(s.as_ref()).unwrap() - 0.5).abs() < 1e-15);
    }

    fn condition(m: &Mat<c64>) -> f64 {
        let s = singular_values(m.as_ref()).unwrap();
        s[0] / s[s.len() - 1]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn sylvester_invariance(seed in any::<u64>(), n in 2usize..60) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_hermitian(&mut rng, n);
            let mut g = random_gaussian(&mut rng, n, n);
            while condition(&g) > 1e3 {
                g = random_gaussian(&mut rng, n, n);
            }
            let c = g.adjoint() * &m * &g;
            let c = scaled((&c + c.adjoint()).as_ref(), 0.5);
            let a = inertia(m.as_ref(), None).unwrap();
            let b = inertia(c.as_ref(), None).unwrap();
            prop_assume!(a.certified());
            prop_assert_eq!((a.n_plus, a.n_minus, a.n_zero), (b.n_plus, b.n_minus, b.n_zero));
        }

        #[test]
        fn negation_swaps_counts(seed in any::<u64>(), n in 1usize..30) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_hermitian(&mut rng, n);
            let a = inertia(m.as_ref(), None).unwrap();
            let b = inertia(scaled(m.as_ref(), -1.0).as_ref(), None).unwrap();
            prop_assert_eq!((a.n_plus, a.n_minus), (b.n_minus, b.n_plus));
            prop_assert_eq!(a.signature, -b.signature);
        }

        #[test]
        fn gap_unitary_invariance(seed in any::<u64>(), n in 1usize..20) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_gaussian(&mut rng, n, n);
            let u = random_unitary(&mut rng, n);
            let v = random_unitary(&mut rng, n);
            let g0 = gap(m.as_ref()).unwrap();
            let g1 = gap((&u * &m * &v).as_ref()).unwrap();
            let g2 = gap(m.adjoint().to_owned().as_ref()).unwrap();
            let scale = singular_values(m.as_ref()).unwrap()[0];
            prop_assert!((g0 - g1).abs() < 1e-12 * scale.max(1.0));
            prop_assert!((g0 - g2).abs() < 1e-12 * scale.max(1.0));
        }
    }
}
