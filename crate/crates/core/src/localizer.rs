//! Finite-volume localizer, its outer-box surrogate and the threshold constants.

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inertia::{inertia, InertiaResult};
use crate::lattice::{LatticeBox, PositionFunction, PositionKind};
use crate::linalg::{eigvalsh, CMat};
use crate::operators::{
    build_qwz_with, build_ssh_with, qwz_bulk_gap_norm, ssh_bulk_gap_norm, Boundary, LocalOperator,
    LocalityBudget, SshParams,
};

/// A lattice model that can be built on any box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Model {
    Ssh(SshParams),
    Qwz { m: f64 },
}

impl Model {
    pub fn dim(&self) -> usize {
        match self {
            Model::Ssh(_) => 1,
            Model::Qwz { .. } => 2,
        }
    }

    pub fn internal_dim(&self) -> usize {
        2
    }

    pub fn is_clean(&self) -> bool {
        match self {
            Model::Ssh(p) => p.disorder == 0.0,
            Model::Qwz { .. } => true,
        }
    }

    pub fn build(&self, ell: usize, boundary: Boundary) -> Result<LocalOperator> {
        let lbox = LatticeBox::new(self.dim(), ell)?;
        match *self {
            Model::Ssh(p) => build_ssh_with(&lbox, p, boundary),
            Model::Qwz { m } => build_qwz_with(&lbox, m, boundary),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizerSpec {
    pub model: Model,
    pub ell: usize,
    pub kappa: f64,
    pub budget: LocalityBudget,
    pub outer_ell: usize,
}

impl LocalizerSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.kappa) {
            return Err(Error::KappaOutOfRange(self.kappa));
        }
        if self.ell < 1 {
            return Err(Error::InvalidRadius(self.ell));
        }
        Ok(())
    }

    pub fn with_kappa(&self, kappa: f64) -> Self {
        Self { kappa, ..*self }
    }

    pub fn with_outer(&self, outer_ell: usize) -> Self {
        Self { outer_ell, ..*self }
    }
}

/// Localizer of a Hamiltonian `h` on its own box with position profile `fun`.
///
/// d = 1: `(1 - k) H + k f(X) Γ` with `Γ` the chiral grading, i.e.
/// `(1 - k)[[0, S*], [S, 0]] + k (f(X) ⊕ -f(X))`.
/// d = 2: `(1 - k)(H ⊕ -H) + k [[0, f(X)*], [f(X), 0]]`, copy index outermost
/// inside each site: dense index `site * 2N + copy * N + a`.
pub fn localizer_from_hamiltonian(h: &LocalOperator, kappa: f64, fun: PositionFunction) -> Result<LocalOperator> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::KappaOutOfRange(kappa));
    }
    let lbox = h.lattice_box();
    let n = h.internal_dim();
    let vals: Vec<c64> = lbox.sites().iter().map(|&s| fun.value(s)).collect();
    let hm = h.matrix();
    match lbox.dim() {
        1 => {
            if !h.is_chiral() {
                return Err(Error::NotChiral);
            }
            let half = n / 2;
            let dim = hm.nrows();
            let mut m = Mat::from_fn(dim, dim, |i, j| hm[(i, j)] * (1.0 - kappa));
            for (s, v) in vals.iter().enumerate() {
                for a in 0..n {
                    let sign = if a < half { 1.0 } else { -1.0 };
                    m[(s * n + a, s * n + a)] += *v * (kappa * sign);
                }
            }
            LocalOperator::new(lbox.clone(), n, m)
        }
        _ => {
            let sites = lbox.len();
            let n2 = 2 * n;
            let mut m = Mat::<c64>::zeros(sites * n2, sites * n2);
            for x in 0..sites {
                for y in 0..sites {
                    for a in 0..n {
                        for b in 0..n {
                            let v = hm[(x * n + a, y * n + b)];
                            if v != c64::new(0.0, 0.0) {
                                m[(x * n2 + a, y * n2 + b)] = v * (1.0 - kappa);
                                m[(x * n2 + n + a, y * n2 + n + b)] = -v * (1.0 - kappa);
                            }
                        }
                    }
                }
                for a in 0..n {
                    m[(x * n2 + n + a, x * n2 + a)] = vals[x] * kappa;
                    m[(x * n2 + a, x * n2 + n + a)] = vals[x].conj() * kappa;
                }
            }
            LocalOperator::new(lbox.clone(), n2, m)
        }
    }
}

/// `L_{kappa, ell}` with the raw amended position on the ell-box (open boundary).
pub fn build_localizer(spec: &LocalizerSpec) -> Result<LocalOperator> {
    spec.validate()?;
    let h = spec.model.build(spec.ell, Boundary::Open)?;
    let d = spec.model.dim();
    localizer_from_hamiltonian(&h, spec.kappa, PositionFunction::new(PositionKind::RawAmended, spec.ell, d))
}

/// Position profile of the surrogate; its restriction to the ell-box is the raw
/// amended position, so the inner block equals `build_localizer`.
pub fn surrogate_profile(d: usize, ell: usize) -> PositionFunction {
    if d == 1 {
        PositionFunction::new(PositionKind::ClampedFell, ell, 1)
    } else {
        PositionFunction::new(PositionKind::SquareClamped, ell, 2)
    }
}

/// The localizer with the clamped profile, truncated to the outer box.
pub fn build_infinite_surrogate(spec: &LocalizerSpec) -> Result<LocalOperator> {
    spec.validate()?;
    if spec.outer_ell < 2 * spec.ell {
        return Err(Error::OuterTooSmall {
            ell: spec.ell,
            outer: spec.outer_ell,
        });
    }
    let h = spec.model.build(spec.outer_ell, Boundary::Open)?;
    localizer_from_hamiltonian(&h, spec.kappa, surrogate_profile(spec.model.dim(), spec.ell))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremConstants {
    pub gap_h: f64,
    pub norm_h: f64,
    pub d_const: f64,
    pub dim: usize,
    pub kappa_star: f64,
    pub ell_min: f64,
}

impl TheoremConstants {
    pub fn new(gap_h: f64, norm_h: f64, d_const: f64, dim: usize) -> Result<Self> {
        if !(gap_h > 1e-10) {
            return Err(Error::GaplessModel(gap_h));
        }
        let dd = d_const.powi(dim as i32);
        let kappa_star = gap_h * gap_h / (2.0 * (gap_h * gap_h + dd));
        let ell_min = norm_h / kappa_star * f64::max(2.0, 1.0 + 8.0 * norm_h / gap_h);
        Ok(Self {
            gap_h,
            norm_h,
            d_const,
            dim,
            kappa_star,
            ell_min,
        })
    }
}

/// Probe-box estimates of `gap(H)` and `|H|`.
///
/// Takes the smallest gap and largest norm over a periodic box of radius
/// `probe_ell` and, for clean models, a Bloch grid that contains the
/// high-symmetry momenta.
pub fn probe_gap_norm(model: &Model, probe_ell: usize) -> Result<(f64, f64)> {
    let h = model.build(probe_ell, Boundary::Periodic)?;
    let e = eigvalsh(h.matrix().as_ref())?;
    let mut g = e.iter().fold(f64::INFINITY, |a, &b| a.min(b.abs()));
    let mut n = e.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if model.is_clean() {
        let (gk, nk) = match *model {
            Model::Ssh(p) => ssh_bulk_gap_norm(p.v, p.w, 4096),
            Model::Qwz { m } => qwz_bulk_gap_norm(m, 256),
        };
        g = g.min(gk);
        n = n.max(nk);
    }
    Ok((g, n))
}

pub fn theorem_constants(model: &Model, budget: &LocalityBudget, probe_ell: usize) -> Result<TheoremConstants> {
    let (g, n) = probe_gap_norm(model, probe_ell)?;
    TheoremConstants::new(g, n, budget.d, model.dim())
}

/// `sqrt((1 - k)^2 g^2 - k (1 - k) D^d)`; errors once the radicand is negative.
pub fn gap_lower_bound(kappa: f64, budget: &LocalityBudget, gap_h: f64, dim: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::KappaOutOfRange(kappa));
    }
    let dd = budget.d.powi(dim as i32);
    let radicand = (1.0 - kappa) * ((1.0 - kappa) * gap_h * gap_h - kappa * dd);
    if radicand < 0.0 {
        // Rounding at exactly 2 kappa_star.
        if radicand > -1e-12 * gap_h * gap_h {
            return Ok(0.0);
        }
        return Err(Error::KappaTooLarge { kappa, radicand });
    }
    Ok(radicand.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizerSignature {
    pub inertia: InertiaResult,
    /// `Signature / 2`.
    pub half_signature: i64,
    /// Spectral flow from `kappa` to 1, i.e. `-Signature / 2`; compared with the
    /// bulk invariant.
    pub index: i64,
    pub certified: bool,
}

pub fn localizer_signature(l: &LocalOperator) -> Result<LocalizerSignature> {
    localizer_signature_with(l, None)
}

/// As `localizer_signature`, with an absolute zero tolerance in place of the
/// relative default.
pub fn localizer_signature_with(l: &LocalOperator, zero_tolerance: Option<f64>) -> Result<LocalizerSignature> {
    let r = inertia(l.matrix().as_ref(), zero_tolerance)?;
    Ok(LocalizerSignature {
        inertia: r,
        half_signature: r.signature / 2,
        index: -r.signature / 2,
        certified: r.certified() && r.signature % 2 == 0,
    })
}

/// Dense matrix of `build_localizer` at a given kappa; used for paths.
pub fn localizer_matrix(spec: &LocalizerSpec, kappa: f64) -> Result<CMat> {
    Ok(build_localizer(&spec.with_kappa(kappa))?.into_matrix())
}
