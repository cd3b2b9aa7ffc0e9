//! Bulk-edge check in d = 1: flattened interface family, Kubo integrand and
//! the symmetry between full-line and half-line spectral flow.

use std::io::Write;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{spectral_flow, FlowOptions, HermitianPath};
use crate::invariants::{InvariantValue, Method};
use crate::lattice::{sign_value, sup_norm};
use crate::linalg::{op_norm, re, unitarity_defect, CMat};
use crate::localizer::{probe_gap_norm, Model};
use crate::operators::{polar_part, Boundary, ChiralBlock, LocalOperator};

/// Which side of the interface: `Sigma^+` carries `+kappa` on the upper block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WallSide {
    Plus,
    Minus,
}

impl WallSide {
    pub fn sign(self) -> f64 {
        match self {
            WallSide::Plus => 1.0,
            WallSide::Minus => -1.0,
        }
    }
}

/// Default quadrature cutoff.
pub const DEFAULT_KAPPA_MAX: f64 = 20.0;
/// Default number of trapezoid nodes on `[-kappa_max, kappa_max]`.
pub const DEFAULT_NODES: usize = 4001;
/// Largest change allowed when the node count is doubled.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-4;

const UNITARY_TOLERANCE: f64 = 1e-10;

fn require_unitary(u: &ChiralBlock) -> Result<()> {
    let defect = unitarity_defect(u.s().as_ref());
    if defect > UNITARY_TOLERANCE {
        return Err(Error::NotUnitary(defect));
    }
    Ok(())
}

fn require_one_dimensional(u: &ChiralBlock) -> Result<()> {
    let d = u.lattice_box().dim();
    if d != 1 {
        return Err(Error::WrongDimension { expected: 1, got: d });
    }
    Ok(())
}

/// `(kappa^2 + 1)^(-1/2) [[±kappa, U*], [U, ∓kappa]]` in the site layout of `U`.
pub fn flattened_sigma(u: &ChiralBlock, kappa: f64, side: WallSide) -> Result<LocalOperator> {
    require_unitary(u)?;
    let w = u.reassemble();
    let z = w.grading()?;
    let alpha = (1.0 + kappa * kappa).powf(-0.5);
    let k = side.sign() * kappa;
    let m = Mat::from_fn(w.dim(), w.dim(), |i, j| {
        (w.matrix()[(i, j)] + z[(i, j)] * k) * alpha
    });
    LocalOperator::with_boundary(w.lattice_box().clone(), w.internal_dim(), m, u.boundary())
}

/// Composite trapezoid on `[-kappa_max, kappa_max]` plus a tail contribution.
pub fn trapezoid<F: Fn(f64) -> f64>(f: F, kappa_max: f64, nodes: usize, tail: f64) -> f64 {
    let h = 2.0 * kappa_max / (nodes - 1) as f64;
    let mut sum = 0.0;
    for i in 0..nodes {
        let k = -kappa_max + h * i as f64;
        let weight = if i == 0 || i + 1 == nodes { 0.5 } else { 1.0 };
        sum += weight * f(k);
    }
    sum * h + tail
}

/// The envelope `2 (1 + kappa^2)^(-3/2)` integrated by [`trapezoid`] with its exact tail.
pub fn profile_integral(kappa_max: f64, nodes: usize) -> f64 {
    let k = kappa_max;
    // Two tails of the antiderivative 2 kappa / sqrt(1 + kappa^2).
    let tail = 2.0 * 2.0 * (1.0 - k / (1.0 + k * k).sqrt());
    trapezoid(|x| 2.0 * (1.0 + x * x).powf(-1.5), kappa_max, nodes, tail)
}

/// Windowed trace coefficients of the double-commutator integrand.
///
/// With `Sigma = a (s k Z + W)`, `a = (1 + k^2)^(-1/2)`, `G = [Λ, W]`, one has
/// `[Λ, Sigma] = a G` and `d Sigma / dk = a^3 (s Z - k W)`, so
/// `tr_w(Sigma [[Λ, Sigma], dSigma]) = a^5 (c2 k^2 + c1 k + c0)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KuboCoefficients {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl KuboCoefficients {
    /// The `-1/8`-normalized integrand at `kappa`.
    pub fn integrand(&self, kappa: f64) -> f64 {
        let a5 = (1.0 + kappa * kappa).powf(-2.5);
        -0.125 * a5 * (self.c2 * kappa * kappa + self.c1 * kappa + self.c0)
    }

    /// Exact contribution of `|kappa| > kappa_max`.
    pub fn tail(&self, kappa_max: f64) -> f64 {
        let k = kappa_max;
        let r = (1.0 + k * k).powf(1.5);
        let t0 = 2.0 / 3.0 - k * (2.0 * k * k + 3.0) / (3.0 * r);
        let t2 = 1.0 / 3.0 - k * k * k / (3.0 * r);
        // The odd part cancels between the two tails.
        -0.125 * 2.0 * (self.c0 * t0 + self.c2 * t2)
    }
}

/// Sites inside the trace window: sup-distance `<= ell - margin` from the origin.
fn window_mask(u: &ChiralBlock, margin: usize) -> Result<Vec<bool>> {
    let ell = u.lattice_box().ell();
    if margin >= ell {
        return Err(Error::InvalidParameter(format!(
            "margin {margin} must be below the box radius {ell}"
        )));
    }
    let r = (ell - margin) as i64;
    let w = u.reassemble();
    let n = w.internal_dim();
    Ok((0..w.dim())
        .map(|i| sup_norm(w.lattice_box().site(i / n)) <= r)
        .collect())
}

fn windowed_trace(m: &CMat, mask: &[bool]) -> f64 {
    mask.iter()
        .enumerate()
        .filter(|(_, &inside)| inside)
        .map(|(i, _)| m[(i, i)].re)
        .sum()
}

pub fn kubo_coefficients(u: &ChiralBlock, side: WallSide, margin: usize) -> Result<KuboCoefficients> {
    require_one_dimensional(u)?;
    require_unitary(u)?;
    let w_op = u.reassemble();
    let w = w_op.matrix();
    let z = w_op.grading()?;
    let n = w_op.internal_dim();
    let lam: Vec<f64> = (0..w_op.dim())
        .map(|i| if w_op.lattice_box().site(i / n)[0] >= 0 { 1.0 } else { 0.0 })
        .collect();
    let g = Mat::from_fn(w.nrows(), w.ncols(), |i, j| w[(i, j)] * (lam[i] - lam[j]));
    let mask = window_mask(u, margin)?;
    let s = side.sign();

    // Sigma [[Λ, Sigma], dSigma] = a^5 (s k Z + W)[G, s Z - k W].
    let gz = &g * &z;
    let zg = &z * &g;
    let gw = &g * w;
    let wg = w * &g;
    let comm_z = &gz - &zg;
    let comm_w = &gw - &wg;
    // (s k Z + W)(s [G, Z] - k [G, W]).
    let c2 = -windowed_trace(&(&z * &comm_w), &mask) * s;
    let c1 = windowed_trace(&(&z * &comm_z), &mask) - windowed_trace(&(w * &comm_w), &mask);
    let c0 = windowed_trace(&(w * &comm_z), &mask) * s;
    Ok(KuboCoefficients { c0, c1, c2 })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KuboIntegrand {
    pub kappa: Vec<f64>,
    pub values: Vec<f64>,
    pub margin: usize,
}

impl KuboIntegrand {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidParameter(format!("csv output: {e}"));
        wtr.write_record(["kappa", "integrand"]).map_err(io)?;
        for (k, v) in self.kappa.iter().zip(&self.values) {
            wtr.write_record([format!("{k:?}"), format!("{v:?}")]).map_err(io)?;
        }
        wtr.flush()
            .map_err(|e| Error::InvalidParameter(format!("csv output: {e}")))
    }
}

pub fn kubo_integrand(
    u: &ChiralBlock,
    side: WallSide,
    kappa_max: f64,
    nodes: usize,
    margin: usize,
) -> Result<KuboIntegrand> {
    let c = kubo_coefficients(u, side, margin)?;
    let kappa = crate::flow::linspace(-kappa_max, kappa_max, nodes);
    let values = kappa.iter().map(|&k| c.integrand(k)).collect();
    Ok(KuboIntegrand {
        kappa,
        values,
        margin,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KuboChern {
    pub value: InvariantValue,
    /// `∓ tr_w(U* [Λ, U])`.
    pub trace_formula: f64,
    /// Change of the quadrature when the node count is doubled.
    pub doubling_change: f64,
}

/// Chern number of `[[0, U*], [U, 0]] ± kappa sigma_3` from the double-commutator
/// formula, integrated over `kappa` on a symmetric grid.
pub fn kubo_chern(
    u: &ChiralBlock,
    side: WallSide,
    kappa_max: f64,
    nodes: usize,
    margin: usize,
) -> Result<KuboChern> {
    if !(kappa_max >= 10.0) {
        return Err(Error::InvalidParameter(format!(
            "kappa_max = {kappa_max} must be at least 10"
        )));
    }
    if nodes < 3 {
        return Err(Error::InvalidParameter(format!("{nodes} quadrature nodes")));
    }
    let c = kubo_coefficients(u, side, margin)?;
    let tail = c.tail(kappa_max);
    let coarse = trapezoid(|k| c.integrand(k), kappa_max, nodes, tail);
    let fine = trapezoid(|k| c.integrand(k), kappa_max, 2 * nodes - 1, tail);
    let change = (fine - coarse).abs();
    if change > CONVERGENCE_TOLERANCE {
        return Err(Error::QuadratureUnconverged(change));
    }
    // ∓ tr_w(U* [Λ, U]) over the same window.
    let radius = (u.lattice_box().ell() - margin) as i64;
    let rows = u.row_sites();
    let s = u.s();
    let lam: Vec<f64> = rows.iter().map(|x| if x[0] >= 0 { 1.0 } else { 0.0 }).collect();
    let mut tr = 0.0;
    for (i, site) in rows.iter().enumerate() {
        if sup_norm(*site) > radius {
            continue;
        }
        let acc: f64 = (0..rows.len()).map(|k| lam[k] * s[(k, i)].norm_sqr()).sum();
        tr += acc - lam[i];
    }
    Ok(KuboChern {
        value: InvariantValue::from_raw(coarse, Method::KuboChern),
        trace_formula: -side.sign() * tr,
        doubling_change: change,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalflineReport {
    /// Flow over `[-kappa_max, -kappa_0] ∪ [kappa_0, kappa_max]`.
    pub full: i64,
    /// Flow over `[kappa_0, kappa_max]`.
    pub half: i64,
    /// Flow over `[-kappa_max, -kappa_0]`.
    pub negative: i64,
    pub kappa_0: f64,
    pub kappa_max: f64,
    pub symmetric: bool,
}

/// `kappa -> [[0, S*], [S, 0]] + kappa sgn(X) sigma_3` on the open box.
pub fn interface_matrix(h: &LocalOperator, kappa: f64) -> CMat {
    let n = h.internal_dim();
    let half = n / 2;
    let lbox = h.lattice_box();
    let mut m = h.matrix().clone();
    for i in 0..m.nrows() {
        let grade = if i % n < half { 1.0 } else { -1.0 };
        m[(i, i)] += re(kappa * sign_value(lbox.site(i / n)[0]) * grade);
    }
    m
}

/// Spectral flow of the sign-profile interface family on the full and half line.
///
/// On the infinite line the family is invertible for `|kappa| < g^2 / ||[S, sgn X]||`
/// (`g` the bulk gap). The open box adds outer-edge states that only cross at
/// `kappa ≈ 0`, so the window `|kappa| < kappa_0 = g^2 / (2 ||[S, sgn X]||)` is
/// excluded from both flows.
pub fn halfline_flow_symmetry(model: &Model, ell: usize, kappa_max: Option<f64>) -> Result<HalflineReport> {
    if model.dim() != 1 {
        return Err(Error::WrongDimension {
            expected: 1,
            got: model.dim(),
        });
    }
    let h = model.build(ell, Boundary::Open)?;
    if !h.is_chiral() {
        return Err(Error::NotChiral);
    }
    let (g, norm) = probe_gap_norm(model, ell)?;
    let kappa_max = kappa_max.unwrap_or(3.0 * norm);
    let block = ChiralBlock::from_operator(&h)?;
    let sgn: Vec<f64> = block.row_sites().iter().map(|x| sign_value(x[0])).collect();
    let sm = block.s();
    let comm = Mat::from_fn(sm.nrows(), sm.ncols(), |i, j| sm[(i, j)] * (sgn[i] - sgn[j]));
    let comm_norm = op_norm(comm.as_ref())?;
    let kappa_0 = if comm_norm > 0.0 {
        (g * g / (2.0 * comm_norm)).min(0.5 * kappa_max)
    } else {
        0.5 * kappa_max
    };
    let points = 201;
    let opts = FlowOptions::default();
    let supplier = |k: f64| Ok(interface_matrix(&h, k));
    let pos = spectral_flow(&HermitianPath::uniform(kappa_0, kappa_max, points, supplier), opts)?;
    let neg = spectral_flow(&HermitianPath::uniform(-kappa_max, -kappa_0, points, supplier), opts)?;
    let full = pos.flow + neg.flow;
    Ok(HalflineReport {
        full,
        half: pos.flow,
        negative: neg.flow,
        kappa_0,
        kappa_max,
        symmetric: full == 2 * pos.flow,
    })
}

/// Polar part of the chiral block of a model on a periodic box.
pub fn flattened_block(model: &Model, ell: usize) -> Result<ChiralBlock> {
    let h = model.build(ell, Boundary::Periodic)?;
    let block = ChiralBlock::from_operator(&h)?;
    let u = polar_part(block.s())?;
    Ok(ChiralBlock::from_matrix(h.lattice_box().clone(), h.internal_dim(), u)?
        .with_boundary(Boundary::Periodic))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariants::realspace_winding;
    use crate::lattice::LatticeBox;
    use crate::linalg::{max_abs_diff, random_unitary};
    use crate::operators::SshParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn identity_block(ell: usize) -> ChiralBlock {
        let lbox = LatticeBox::new(1, ell).unwrap();
        let n = lbox.len();
        ChiralBlock::from_matrix(lbox, 2, Mat::identity(n, n)).unwrap()
    }

    fn random_block(ell: usize, seed: u64) -> ChiralBlock {
        let lbox = LatticeBox::new(1, ell).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_unitary(&mut rng, lbox.len());
        ChiralBlock::from_matrix(lbox, 2, u).unwrap()
    }

    #[test]
    fn sigma_at_zero_is_the_off_diagonal_unitary() {
        let u = random_block(4, 1);
        let s = flattened_sigma(&u, 0.0, WallSide::Plus).unwrap();
        assert!(max_abs_diff(s.matrix().as_ref(), u.reassemble().matrix().as_ref()) < 1e-15);
    }

    #[test]
    fn sigma_is_an_involution() {
        let u = random_block(5, 2);
        for side in [WallSide::Plus, WallSide::Minus] {
            for kappa in [-30.0, -1.0, 0.0, 0.3, 1.0, 7.0] {
                let s = flattened_sigma(&u, kappa, side).unwrap();
                let sq = s.matrix() * s.matrix();
                let id = Mat::identity(sq.nrows(), sq.ncols());
                assert!(max_abs_diff(sq.as_ref(), id.as_ref()) < 1e-10);
                assert!(s.is_hermitian());
            }
        }
    }

    #[test]
    fn sigma_limits_are_signed_grading() {
        let u = random_block(3, 3);
        let z = u.reassemble().grading().unwrap();
        for (side, sign) in [(WallSide::Plus, 1.0), (WallSide::Minus, -1.0)] {
            for k in [1e6, -1e6] {
                let s = flattened_sigma(&u, k, side).unwrap();
                let target = crate::linalg::scaled(z.as_ref(), sign * k.signum());
                assert!(max_abs_diff(s.matrix().as_ref(), target.as_ref()) < 1e-5);
            }
        }
    }

    #[test]
    fn sigma_rejects_non_unitary() {
        let lbox = LatticeBox::new(1, 2).unwrap();
        let s = crate::linalg::scaled(Mat::<faer::c64>::identity(5, 5).as_ref(), 2.0);
        let b = ChiralBlock::from_matrix(lbox, 2, s).unwrap();
        assert!(matches!(flattened_sigma(&b, 0.5, WallSide::Plus), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn profile_quadrature() {
        assert!((profile_integral(DEFAULT_KAPPA_MAX, DEFAULT_NODES) - 4.0).abs() < 1e-6);
    }

    #[test]
    fn coefficients_match_direct_evaluation() {
        // Direct windowed trace of Sigma [[Λ, Sigma], dSigma/dk] with a
        // central difference for the derivative.
        let model = Model::Ssh(SshParams::clean(0.4, 1.0));
        let u = flattened_block(&model, 10).unwrap();
        let margin = 3;
        for side in [WallSide::Plus, WallSide::Minus] {
            let c = kubo_coefficients(&u, side, margin).unwrap();
            let mask = window_mask(&u, margin).unwrap();
            let n = u.internal_dim();
            let lbox = u.lattice_box().clone();
            let lam: Vec<f64> = (0..lbox.len() * n)
                .map(|i| if lbox.site(i / n)[0] >= 0 { 1.0 } else { 0.0 })
                .collect();
            for kappa in [-2.0, -0.3, 0.0, 0.7, 4.0] {
                let sig = flattened_sigma(&u, kappa, side).unwrap().into_matrix();
                let h = 1e-5;
                let sp = flattened_sigma(&u, kappa + h, side).unwrap().into_matrix();
                let sm = flattened_sigma(&u, kappa - h, side).unwrap().into_matrix();
                let ds = crate::linalg::scaled((&sp - &sm).as_ref(), 0.5 / h);
                let ls = Mat::from_fn(sig.nrows(), sig.ncols(), |i, j| sig[(i, j)] * (lam[i] - lam[j]));
                let inner = &ls * &ds - &ds * &ls;
                let full = &sig * inner;
                let direct = -0.125 * windowed_trace(&full, &mask);
                assert!((direct - c.integrand(kappa)).abs() < 1e-8, "kappa {kappa}: {direct} vs {}", c.integrand(kappa));
            }
        }
    }

    #[test]
    fn identity_gives_zero() {
        let u = identity_block(10);
        let r = kubo_chern(&u, WallSide::Plus, DEFAULT_KAPPA_MAX, DEFAULT_NODES, 2).unwrap();
        assert_eq!(r.value.raw, 0.0);
        assert_eq!(r.trace_formula, 0.0);
    }

    #[test]
    fn ssh_kubo_matches_winding() {
        let model = Model::Ssh(SshParams::clean(0.4, 1.0));
        let u = flattened_block(&model, 40).unwrap();
        let margin = 10;
        let w = realspace_winding(&u, margin).unwrap();
        assert_eq!(w.value, 1);
        for (side, sign) in [(WallSide::Plus, 1), (WallSide::Minus, -1)] {
            let r = kubo_chern(&u, side, DEFAULT_KAPPA_MAX, DEFAULT_NODES, margin).unwrap();
            assert_eq!(r.value.value, sign * w.value);
            assert!(r.value.residual < 0.05);
            assert!((r.value.raw - r.trace_formula).abs() < 1e-6);
        }
    }

    #[test]
    fn integrand_decays_like_envelope() {
        let model = Model::Ssh(SshParams::clean(0.4, 1.0));
        let u = flattened_block(&model, 20).unwrap();
        let c = kubo_coefficients(&u, WallSide::Plus, 5).unwrap();
        let ratio = |k: f64| c.integrand(k) / (1.0 + k * k).powf(-1.5);
        let r0 = ratio(5.0);
        for k in [6.0, 10.0, 20.0, 50.0] {
            assert!(((ratio(k) - r0) / r0).abs() < 0.05);
        }
    }

    #[test]
    fn kubo_is_stable_under_larger_cutoff() {
        let model = Model::Ssh(SshParams::clean(0.4, 1.0));
        let u = flattened_block(&model, 20).unwrap();
        let a = kubo_chern(&u, WallSide::Plus, 10.0, 2001, 5).unwrap();
        let b = kubo_chern(&u, WallSide::Plus, 20.0, 4001, 5).unwrap();
        assert!((a.value.raw - b.value.raw).abs() < 1e-4);
    }

    #[test]
    fn halfline_flow_examples() {
        let topo = halfline_flow_symmetry(&Model::Ssh(SshParams::clean(0.4, 1.0)), 30, None).unwrap();
        assert_eq!((topo.full, topo.half), (2, 1));
        assert!(topo.symmetric);
        let triv = halfline_flow_symmetry(&Model::Ssh(SshParams::clean(1.0, 0.4)), 30, None).unwrap();
        assert_eq!((triv.full, triv.half), (0, 0));
        let atomic = halfline_flow_symmetry(&Model::Ssh(SshParams::clean(1.0, 0.0)), 10, None).unwrap();
        assert_eq!((atomic.full, atomic.half), (0, 0));
    }

    #[test]
    fn integrand_csv_has_header() {
        let u = identity_block(3);
        let it = kubo_integrand(&u, WallSide::Plus, 10.0, 5, 1).unwrap();
        let mut buf = Vec::new();
        it.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("kappa,integrand\n"));
        assert_eq!(text.lines().count(), 6);
    }
}
