//! Finite boxes in Z^d and the diagonal position-derived operators on them.

use faer::c64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::re;
use crate::operators::LocalOperator;

/// A lattice point; for d = 1 the second coordinate is always 0.
pub type Site = [i64; 2];

/// The square box `{x in Z^d : |x|_inf <= ell}` with lexicographic `(x2, x1)` order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeBox {
    dim: usize,
    ell: usize,
    sites: Vec<Site>,
}

impl LatticeBox {
    pub fn new(dim: usize, ell: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidDimension(dim));
        }
        if ell < 1 {
            return Err(Error::InvalidRadius(ell));
        }
        let r = ell as i64;
        let sites = if dim == 1 {
            (-r..=r).map(|x| [x, 0]).collect()
        } else {
            let mut s = Vec::with_capacity((2 * ell + 1).pow(2));
            for y in -r..=r {
                for x in -r..=r {
                    s.push([x, y]);
                }
            }
            s
        };
        Ok(Self { dim, ell, sites })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn side(&self) -> usize {
        2 * self.ell + 1
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn site(&self, index: usize) -> Site {
        self.sites[index]
    }

    pub fn contains(&self, s: Site) -> bool {
        let r = self.ell as i64;
        s[0].abs() <= r && s[1].abs() <= r && (self.dim == 2 || s[1] == 0)
    }

    pub fn index_of(&self, s: Site) -> Option<usize> {
        if !self.contains(s) {
            return None;
        }
        let r = self.ell as i64;
        let side = self.side() as i64;
        let i = if self.dim == 1 {
            s[0] + r
        } else {
            (s[1] + r) * side + (s[0] + r)
        };
        Some(i as usize)
    }

    /// Wraps a point onto the box treated as a torus of side `2 ell + 1`.
    pub fn wrap(&self, s: Site) -> Site {
        let side = self.side() as i64;
        let r = self.ell as i64;
        let w = |x: i64| (x + r).rem_euclid(side) - r;
        if self.dim == 1 {
            [w(s[0]), 0]
        } else {
            [w(s[0]), w(s[1])]
        }
    }

    /// Distance to the outer boundary layer, in the sup norm (0 on the boundary).
    pub fn depth(&self, s: Site) -> usize {
        let r = self.ell as i64;
        let m = if self.dim == 1 {
            s[0].abs()
        } else {
            s[0].abs().max(s[1].abs())
        };
        (r - m).max(0) as usize
    }
}

/// Euclidean norm of a lattice point.
pub fn euclid(s: Site) -> f64 {
    ((s[0] * s[0] + s[1] * s[1]) as f64).sqrt()
}

/// Sup norm of a lattice point.
pub fn sup_norm(s: Site) -> i64 {
    s[0].abs().max(s[1].abs())
}

pub fn sign_value(x: i64) -> f64 {
    if x >= 0 {
        1.0
    } else {
        -1.0
    }
}

/// The clamped position map: 1 at the origin, `x` for `1 <= |x| < ell`,
/// `ell x / |x|` beyond. Points of Z^2 are read as `x1 + i x2`.
pub fn f_ell_value(x: Site, ell: usize) -> c64 {
    let z = c64::new(x[0] as f64, x[1] as f64);
    let r = z.norm();
    if r == 0.0 {
        c64::new(1.0, 0.0)
    } else if r < ell as f64 {
        z
    } else {
        z * (ell as f64 / r)
    }
}

/// `exp(i arg(x1 + i x2))`, set to 1 at the origin.
pub fn laughlin_value(x: Site) -> c64 {
    let z = c64::new(x[0] as f64, x[1] as f64);
    let r = z.norm();
    if r == 0.0 {
        c64::new(1.0, 0.0)
    } else {
        z / r
    }
}

/// The square-box variant `ell L + chi_[-ell,ell]^d (X - ell L) + P_0`.
///
/// Equals the amended raw position on the box and `ell L` outside it.
pub fn square_clamped_value(x: Site, ell: usize) -> c64 {
    if sup_norm(x) <= ell as i64 {
        raw_amended_value(x)
    } else {
        laughlin_value(x) * ell as f64
    }
}

/// The position itself, amended to 1 at the origin.
pub fn raw_amended_value(x: Site) -> c64 {
    if x == [0, 0] {
        c64::new(1.0, 0.0)
    } else {
        c64::new(x[0] as f64, x[1] as f64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PositionKind {
    RawAmended,
    ClampedFell,
    Sign,
    LaughlinPhase,
    SquareClamped,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositionFunction {
    pub kind: PositionKind,
    pub ell: usize,
    pub dim: usize,
}

impl PositionFunction {
    pub fn new(kind: PositionKind, ell: usize, dim: usize) -> Self {
        Self { kind, ell, dim }
    }

    pub fn value(&self, x: Site) -> c64 {
        match self.kind {
            PositionKind::RawAmended => raw_amended_value(x),
            PositionKind::ClampedFell => f_ell_value(x, self.ell),
            PositionKind::Sign => re(sign_value(x[0])),
            PositionKind::LaughlinPhase => laughlin_value(x),
            PositionKind::SquareClamped => square_clamped_value(x, self.ell),
        }
    }
}

/// Diagonal operator `fun(X) ⊗ 1_N` on `box ⊗ C^N`.
pub fn build_position_operator(
    lbox: &LatticeBox,
    fun: PositionFunction,
    internal_dim: usize,
) -> Result<LocalOperator> {
    if fun.dim != lbox.dim() {
        return Err(Error::DimensionMismatch(format!(
            "position function has d = {}, box has d = {}",
            fun.dim,
            lbox.dim()
        )));
    }
    match fun.kind {
        PositionKind::Sign if lbox.dim() != 1 => {
            return Err(Error::DimensionMismatch("sign profile needs d = 1".into()))
        }
        PositionKind::LaughlinPhase if lbox.dim() != 2 => {
            return Err(Error::DimensionMismatch(
                "Laughlin phase needs d = 2".into(),
            ))
        }
        _ => {}
    }
    // The localizer box and the function radius are allowed to differ (the
    // infinite-volume surrogate lives on a larger box than `fun.ell`), except for
    // the raw position, which is only meaningful on its own box.
    if fun.kind == PositionKind::RawAmended && fun.ell != lbox.ell() {
        return Err(Error::DimensionMismatch(format!(
            "raw position of radius {} on a box of radius {}",
            fun.ell,
            lbox.ell()
        )));
    }
    let diag: Vec<c64> = lbox.sites().iter().map(|&s| fun.value(s)).collect();
    Ok(LocalOperator::diagonal(lbox.clone(), internal_dim, &diag))
}

/// Projection onto `{x : x_axis >= 0}`, tensored with `1_N`. `axis` is 1-based.
pub fn half_space_projection(
    lbox: &LatticeBox,
    axis: usize,
    internal_dim: usize,
) -> Result<LocalOperator> {
    if axis == 0 || axis > lbox.dim() {
        return Err(Error::InvalidAxis {
            axis,
            dim: lbox.dim(),
        });
    }
    let diag: Vec<c64> = lbox
        .sites()
        .iter()
        .map(|s| re(if s[axis - 1] >= 0 { 1.0 } else { 0.0 }))
        .collect();
    Ok(LocalOperator::diagonal(lbox.clone(), internal_dim, &diag))
}

/// Per-site diagonal of `fun` expanded over the internal index.
pub fn expand_diagonal(values: &[c64], internal_dim: usize) -> Vec<c64> {
    values
        .iter()
        .flat_map(|&v| std::iter::repeat(v).take(internal_dim))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_defect, max_abs_diff, singular_values};
    use proptest::prelude::*;

    #[test]
    fn box_counts() {
        let b = LatticeBox::new(1, 2).unwrap();
        assert_eq!(b.len(), 5);
        let xs: Vec<i64> = b.sites().iter().map(|s| s[0]).collect();
        assert_eq!(xs, vec![-2, -1, 0, 1, 2]);
        assert_eq!(LatticeBox::new(2, 1).unwrap().len(), 9);
        assert_eq!(LatticeBox::new(2, 10).unwrap().len(), 441);
    }

    #[test]
    fn box_rejects_bad_dimension() {
        assert_eq!(LatticeBox::new(3, 2), Err(Error::InvalidDimension(3)));
        assert_eq!(LatticeBox::new(0, 2), Err(Error::InvalidDimension(0)));
        assert_eq!(LatticeBox::new(1, 0), Err(Error::InvalidRadius(0)));
    }

    #[test]
    fn index_is_a_bijection_in_lexicographic_order() {
        for (d, ell) in [(1, 4), (2, 3)] {
            let b = LatticeBox::new(d, ell).unwrap();
            for (i, &s) in b.sites().iter().enumerate() {
                assert_eq!(b.index_of(s), Some(i));
            }
            assert_eq!(b.index_of([ell as i64 + 1, 0]), None);
        }
        let b = LatticeBox::new(2, 1).unwrap();
        assert_eq!(b.site(0), [-1, -1]);
        assert_eq!(b.site(1), [0, -1]);
        assert_eq!(b.site(3), [-1, 0]);
    }

    #[test]
    fn f_ell_examples() {
        assert_eq!(f_ell_value([0, 0], 10), c64::new(1.0, 0.0));
        assert_eq!(f_ell_value([15, 0], 10), c64::new(10.0, 0.0));
        assert_eq!(f_ell_value([-15, 0], 10), c64::new(-10.0, 0.0));
        assert_eq!(f_ell_value([3, 4], 10), c64::new(3.0, 4.0));
        let z = f_ell_value([6, 8], 5);
        assert!((z - c64::new(3.0, 4.0)).norm() < 1e-15);
    }

    #[test]
    fn f_ell_matches_figure_profile() {
        // f_10 on [-20, 20): clamps at +-10, 0 -> 1.
        for x in -20..20i64 {
            let expect = if x == 0 {
                1.0
            } else {
                x.clamp(-10, 10) as f64
            };
            assert_eq!(f_ell_value([x, 0], 10).re, expect);
        }
    }

    #[test]
    fn sign_convention() {
        assert_eq!(sign_value(0), 1.0);
        assert_eq!(sign_value(-7), -1.0);
        assert_eq!(sign_value(3), 1.0);
    }

    #[test]
    fn position_operator_examples() {
        let b = LatticeBox::new(1, 2).unwrap();
        let x = build_position_operator(&b, PositionFunction::new(PositionKind::RawAmended, 2, 1), 1)
            .unwrap();
        let d: Vec<f64> = (0..5).map(|i| x.matrix()[(i, i)].re).collect();
        assert_eq!(d, vec![-2.0, -1.0, 1.0, 1.0, 2.0]);

        let s = build_position_operator(&b, PositionFunction::new(PositionKind::Sign, 2, 1), 1)
            .unwrap();
        let d: Vec<f64> = (0..5).map(|i| s.matrix()[(i, i)].re).collect();
        assert_eq!(d, vec![-1.0, -1.0, 1.0, 1.0, 1.0]);

        let b2 = LatticeBox::new(2, 1).unwrap();
        let l = build_position_operator(
            &b2,
            PositionFunction::new(PositionKind::LaughlinPhase, 1, 2),
            1,
        )
        .unwrap();
        for (i, &s) in b2.sites().iter().enumerate() {
            let v = l.matrix()[(i, i)];
            if s == [0, 0] {
                assert_eq!(v, c64::new(1.0, 0.0));
            } else {
                let phase = (s[1] as f64).atan2(s[0] as f64);
                assert!((v - c64::new(phase.cos(), phase.sin())).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn position_operator_dimension_mismatch() {
        let b = LatticeBox::new(1, 2).unwrap();
        let r = build_position_operator(&b, PositionFunction::new(PositionKind::ClampedFell, 2, 2), 1);
        assert!(matches!(r, Err(Error::DimensionMismatch(_))));
        let r = build_position_operator(&b, PositionFunction::new(PositionKind::LaughlinPhase, 2, 1), 1);
        assert!(matches!(r, Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn internal_blocks_are_scalar_identity() {
        let b = LatticeBox::new(1, 2).unwrap();
        let x = build_position_operator(&b, PositionFunction::new(PositionKind::RawAmended, 2, 1), 3)
            .unwrap();
        assert_eq!(x.matrix().nrows(), 15);
        for site in 0..5 {
            for a in 0..3 {
                for bb in 0..3 {
                    let v = x.matrix()[(site * 3 + a, site * 3 + bb)];
                    if a == bb {
                        assert_eq!(v, x.matrix()[(site * 3, site * 3)]);
                    } else {
                        assert_eq!(v, c64::new(0.0, 0.0));
                    }
                }
            }
        }
    }

    #[test]
    fn clamped_singular_values_in_range() {
        for (d, ell) in [(1, 7), (2, 4)] {
            let b = LatticeBox::new(d, ell + 3).unwrap();
            let f = build_position_operator(&b, PositionFunction::new(PositionKind::ClampedFell, ell, d), 2)
                .unwrap();
            let sv = singular_values(f.matrix().as_ref()).unwrap();
            assert!(sv.iter().all(|&s| s >= 1.0 - 1e-12 && s <= ell as f64 + 1e-12));
        }
    }

    #[test]
    fn half_space_projection_examples() {
        let b = LatticeBox::new(1, 1).unwrap();
        let p = half_space_projection(&b, 1, 1).unwrap();
        let d: Vec<f64> = (0..3).map(|i| p.matrix()[(i, i)].re).collect();
        assert_eq!(d, vec![0.0, 1.0, 1.0]);

        let b = LatticeBox::new(1, 2).unwrap();
        let p = half_space_projection(&b, 1, 2).unwrap();
        let m = p.matrix();
        let sq = m * m;
        assert_eq!(max_abs_diff(sq.as_ref(), m.as_ref()), 0.0);
        assert_eq!(hermitian_defect(m.as_ref()), 0.0);
        assert_eq!(crate::linalg::trace(m.as_ref()).re, 6.0);

        assert!(matches!(
            half_space_projection(&b, 2, 1),
            Err(Error::InvalidAxis { axis: 2, dim: 1 })
        ));
    }

    #[test]
    fn square_variant_agrees_with_raw_on_the_box() {
        let b = LatticeBox::new(2, 5).unwrap();
        for &s in b.sites() {
            assert_eq!(square_clamped_value(s, 5), raw_amended_value(s));
        }
        let z = square_clamped_value([9, 0], 5);
        assert!((z - c64::new(5.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn origin_amendment_breaks_plain_lipschitz() {
        // f(0) = 1 and f(-1) = -1 sit at distance 1 but differ by 2.
        let diff = (f_ell_value([0, 0], 10) - f_ell_value([-1, 0], 10)).norm();
        assert_eq!(diff, 2.0);
    }

    proptest! {
        // Off the origin the clamp is the nearest-point map onto a disc and is
        // 1-Lipschitz uniformly in ell; the origin amendment adds at most 1.
        #[test]
        fn clamp_is_lipschitz(ell in 1usize..12, x1 in -36i64..36, x2 in -36i64..36,
                              y1 in -36i64..36, y2 in -36i64..36, two_d in any::<bool>()) {
            let (x, y) = if two_d { ([x1, x2], [y1, y2]) } else { ([x1, 0], [y1, 0]) };
            let lhs = (f_ell_value(x, ell) - f_ell_value(y, ell)).norm();
            let dist = euclid([x[0] - y[0], x[1] - y[1]]);
            let slack = if x == [0, 0] || y == [0, 0] { 1.0 } else { 0.0 };
            prop_assert!(lhs <= dist + slack + 1e-12);
            prop_assert!(f_ell_value(x, ell).norm() <= ell as f64 + 1e-12);
            prop_assert!(f_ell_value(x, ell).norm() >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn clamp_exhaustive_scan_d1() {
        for ell in 1..=6usize {
            let r = 3 * ell as i64;
            for x in -r..=r {
                if (1..ell as i64).contains(&x.abs()) {
                    assert_eq!(f_ell_value([x, 0], ell).re, x as f64);
                }
                for y in -r..=r {
                    if x == 0 || y == 0 {
                        continue;
                    }
                    let lhs = (f_ell_value([x, 0], ell) - f_ell_value([y, 0], ell)).norm();
                    assert!(lhs <= (x - y).abs() as f64);
                }
            }
        }
    }
}
