//! Numerical checks of the commutator and gap estimates on concrete matrices.
//!
//! Every check produces a [`BoundReport`] for an inequality `lhs <= rhs`.
//! Randomized suites are split into independent draws, each seeded from
//! `(seed, draw index)`, so callers may evaluate draws in any order or in
//! parallel and still obtain identical reports.

use faer::{c64, Mat};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inertia::gap;
use crate::lattice::{expand_diagonal, LatticeBox, PositionFunction, PositionKind};
use crate::linalg::{
    block2, commutator, diag_real, direct_sum, draw_rng, inverse, op_norm, random_gaussian, random_unitary,
    schatten_norm, singular_values, CMat,
};
use crate::operators::{
    estimate_locality, random_local, Boundary, ChiralBlock, LocalOperator, LocalityBudget,
};

/// Relative slack allowed on every inequality.
pub const RELATIVE_SLACK: f64 = 1e-10;

/// Interior depth, in units of `1/mu`, used to emulate the infinite-volume commutator.
pub const INTERIOR_DEPTH_FACTOR: f64 = 5.0;

/// Points of the `s`-grid used for the cut-interpolation check.
pub const CUT_GRID_POINTS: usize = 101;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub tag: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub margin: f64,
    pub pass: bool,
}

impl BoundReport {
    /// Report for `lhs <= rhs`, passing when `margin >= -1e-10 * max(|lhs|, |rhs|)`.
    pub fn new(tag: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        let margin = rhs - lhs;
        let scale = lhs.abs().max(rhs.abs());
        Self {
            tag: tag.into(),
            lhs,
            rhs,
            margin,
            pass: margin.is_finite() && margin >= -RELATIVE_SLACK * scale,
        }
    }
}

fn require_budget(a: &LocalOperator, budget: &LocalityBudget) -> Result<()> {
    let needed = estimate_locality(a, budget.mu)?.c;
    if needed > budget.c * (1.0 + 1e-12) {
        return Err(Error::BudgetViolated {
            needed,
            budget: budget.c,
        });
    }
    Ok(())
}

/// `[A, f(X)]` for a diagonal `f(X)`: entries `A_ij (f_j - f_i)`.
fn diagonal_commutator(a: &CMat, f: &[c64]) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * (f[j] - f[i]))
}

fn site_values(a: &LocalOperator, fun: PositionFunction) -> Vec<c64> {
    let per_site: Vec<c64> = a.lattice_box().sites().iter().map(|&s| fun.value(s)).collect();
    expand_diagonal(&per_site, a.internal_dim())
}

fn require_open(a: &LocalOperator) -> Result<()> {
    if a.boundary() != Boundary::Open {
        return Err(Error::InvalidParameter(
            "position commutators need an open-boundary operator".into(),
        ));
    }
    Ok(())
}

/// Right-hand side of the Holmgren-Schur commutator estimate.
pub fn holmgren_rhs(budget: &LocalityBudget, d: usize) -> f64 {
    let sd = (d as f64).sqrt();
    let coth = 1.0 / (budget.mu / (2.0 * sd)).tanh();
    budget.c * coth.powi(d as i32 - 1) / ((budget.mu / sd).cosh() - 1.0)
}

/// `||[A, X_j]|| <= C coth(mu / 2 sqrt d)^(d-1) / (cosh(mu / sqrt d) - 1)`.
///
/// The left side keeps only rows at sup-distance `>= ceil(5 / mu)` from the
/// box boundary. Periodic operators use torus displacements. `axis` is 1-based.
pub fn check_holmgren_commutator(
    a: &LocalOperator,
    budget: &LocalityBudget,
    axis: usize,
) -> Result<BoundReport> {
    let lbox = a.lattice_box();
    let d = lbox.dim();
    if axis == 0 || axis > d {
        return Err(Error::InvalidAxis { axis, dim: d });
    }
    require_budget(a, budget)?;
    let cutoff = (INTERIOR_DEPTH_FACTOR / budget.mu).ceil() as usize;
    let n = a.internal_dim();
    let sites = lbox.sites();
    let rows: Vec<usize> = (0..a.dim())
        .filter(|&i| lbox.depth(sites[i / n]) >= cutoff)
        .collect();
    if rows.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "box radius {} has no sites at depth {cutoff}",
            lbox.ell()
        )));
    }
    let m = a.matrix();
    let c = Mat::from_fn(rows.len(), a.dim(), |r, j| {
        let i = rows[r];
        let disp = a.displacement(sites[j / n], sites[i / n]);
        m[(i, j)] * disp[axis - 1] as f64
    });
    Ok(BoundReport::new(
        format!("holmgren-commutator-d{d}-axis{axis}"),
        op_norm(c.as_ref())?,
        holmgren_rhs(budget, d),
    ))
}

/// Operator-norm and trace-norm reports for `[A, f_ell(X)]` in d = 1.
///
/// `f_ell` is the radial clamp. Operator norm: `<= C / (cosh mu - 1)`.
/// Trace norm: `<= ell ||[A, sgn X]||_1 + 2N ||A|| ell (2 ell + 1) + 4N ||A||`.
pub fn check_fl_commutator(
    a: &LocalOperator,
    budget: &LocalityBudget,
    ell: usize,
) -> Result<[BoundReport; 2]> {
    let lbox = a.lattice_box();
    if lbox.dim() != 1 {
        return Err(Error::WrongDimension {
            expected: 1,
            got: lbox.dim(),
        });
    }
    check_profile_args(a, ell)?;
    require_budget(a, budget)?;
    let n = a.internal_dim() as f64;
    let l = ell as f64;
    let norm_a = op_norm(a.matrix().as_ref())?;

    let f = site_values(a, PositionFunction::new(PositionKind::ClampedFell, ell, 1));
    let cf = diagonal_commutator(a.matrix(), &f);
    let sgn = site_values(a, PositionFunction::new(PositionKind::Sign, ell, 1));
    let cs = diagonal_commutator(a.matrix(), &sgn);

    let op = BoundReport::new(
        format!("fl-commutator-op-ell{ell}"),
        op_norm(cf.as_ref())?,
        budget.d,
    );
    let tr = BoundReport::new(
        format!("fl-commutator-trace-ell{ell}"),
        schatten_norm(cf.as_ref(), 1.0)?,
        l * schatten_norm(cs.as_ref(), 1.0)? + 2.0 * n * norm_a * l * (2.0 * l + 1.0)
            + 4.0 * n * norm_a,
    );
    Ok([op, tr])
}

/// Operator-norm and Schatten-3 reports for `[A, f_ell(X)]` in d = 2, where
/// `f_ell = ell L + chi_[-ell, ell]^2 (X - ell L) + P_0`.
///
/// Operator norm: `<= (C / (cosh mu - 1))^2`.
/// Schatten-3: `<= ell ||[A, L]||_3 + 2N ||A|| ell (2 ell + 1)^2 + 4N ||A||`.
pub fn check_fl_commutator_2d(
    a: &LocalOperator,
    budget: &LocalityBudget,
    ell: usize,
) -> Result<[BoundReport; 2]> {
    let lbox = a.lattice_box();
    if lbox.dim() != 2 {
        return Err(Error::WrongDimension {
            expected: 2,
            got: lbox.dim(),
        });
    }
    check_profile_args(a, ell)?;
    require_budget(a, budget)?;
    let n = a.internal_dim() as f64;
    let l = ell as f64;
    let norm_a = op_norm(a.matrix().as_ref())?;

    let f = site_values(a, PositionFunction::new(PositionKind::SquareClamped, ell, 2));
    let cf = diagonal_commutator(a.matrix(), &f);
    let phase = site_values(a, PositionFunction::new(PositionKind::LaughlinPhase, ell, 2));
    let cl = diagonal_commutator(a.matrix(), &phase);

    let op = BoundReport::new(
        format!("fl2d-commutator-op-ell{ell}"),
        op_norm(cf.as_ref())?,
        budget.d * budget.d,
    );
    let s3 = BoundReport::new(
        format!("fl2d-commutator-s3-ell{ell}"),
        schatten_norm(cf.as_ref(), 3.0)?,
        l * schatten_norm(cl.as_ref(), 3.0)? + 2.0 * n * norm_a * l * (2.0 * l + 1.0).powi(2)
            + 4.0 * n * norm_a,
    );
    Ok([op, s3])
}

fn check_profile_args(a: &LocalOperator, ell: usize) -> Result<()> {
    require_open(a)?;
    if ell == 0 || ell > a.lattice_box().ell() {
        return Err(Error::InvalidParameter(format!(
            "profile radius {ell} must lie in 1..={}",
            a.lattice_box().ell()
        )));
    }
    Ok(())
}

/// `gap(L)^2 >= gap(A)^2 + gap(B)^2 - ||[A, B]||` for `L = [[A, B*], [B, -A]]`.
pub fn check_traceless(tag: impl Into<String>, a: &CMat, b: &CMat) -> Result<BoundReport> {
    if a.nrows() != a.ncols() || b.nrows() != a.nrows() || b.ncols() != a.ncols() {
        return Err(Error::DimensionMismatch(
            "traceless block check needs square blocks of equal size".into(),
        ));
    }
    let neg_a = crate::linalg::scaled(a.as_ref(), -1.0);
    let l = block2(a.as_ref(), b.adjoint().to_owned().as_ref(), b.as_ref(), neg_a.as_ref());
    let ga = gap(a.as_ref())?;
    let gb = gap(b.as_ref())?;
    let comm = op_norm(commutator(a.as_ref(), b.as_ref()).as_ref())?;
    let gl = gap(l.as_ref())?;
    Ok(BoundReport::new(tag, ga * ga + gb * gb - comm, gl * gl))
}

/// The traceless-block estimate on the d = 1 localizer, `A = kappa X`, `B = (1 - kappa) S`,
/// with `X` the amended raw position of the box.
pub fn check_localizer_traceless(block: &ChiralBlock, kappa: f64) -> Result<BoundReport> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::KappaOutOfRange(kappa));
    }
    let lbox = block.lattice_box();
    if lbox.dim() != 1 {
        return Err(Error::WrongDimension {
            expected: 1,
            got: lbox.dim(),
        });
    }
    let fun = PositionFunction::new(PositionKind::RawAmended, lbox.ell(), 1);
    let x: Vec<f64> = block.row_sites().iter().map(|&s| fun.value(s).re).collect();
    let a = crate::linalg::scaled(diag_real(&x).as_ref(), kappa);
    let b = crate::linalg::scaled(block.s().as_ref(), 1.0 - kappa);
    check_traceless(format!("traceless-localizer-kappa{kappa}"), &a, &b)
}

/// Parameters of a random exponentially enveloped test operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvelopeRange {
    pub mu_min: f64,
    pub mu_max: f64,
}

impl Default for EnvelopeRange {
    fn default() -> Self {
        Self {
            mu_min: 0.5,
            mu_max: 1.5,
        }
    }
}

/// One draw of the commutator suites: A.1 in d = 1 and d = 2, the d = 1 clamp
/// pair and the d = 2 square-clamp pair, each on its own random operator with
/// the tight budget `C = estimate_locality(A, mu).C`.
pub fn commutator_draw(seed: u64, index: u64, env: EnvelopeRange) -> Result<Vec<BoundReport>> {
    let mut rng = draw_rng(seed, index);
    let mut out = Vec::with_capacity(7);
    let random_op = |rng: &mut ChaCha8Rng, d: usize, ell: usize| -> Result<(LocalOperator, LocalityBudget)> {
        let mu = rng.random_range(env.mu_min..=env.mu_max);
        let n = rng.random_range(1..=2usize);
        let hermitian = rng.random_bool(0.5);
        let lbox = LatticeBox::new(d, ell)?;
        let a = random_local(rng, &lbox, n, mu, hermitian);
        let budget = estimate_locality(&a, mu)?;
        Ok((a, budget))
    };

    for d in [1usize, 2] {
        // Interior must be non-empty: depth >= ceil(5/mu) <= 10.
        let ell = if d == 1 { rng.random_range(12..=24) } else { rng.random_range(11..=13) };
        let (a, budget) = random_op(&mut rng, d, ell)?;
        let axis = rng.random_range(1..=d);
        out.push(check_holmgren_commutator(&a, &budget, axis)?);
    }

    let ell = rng.random_range(2..=12usize);
    let (a, budget) = random_op(&mut rng, 1, ell + 3)?;
    out.extend(check_fl_commutator(&a, &budget, ell)?);

    let ell = rng.random_range(3..=6usize);
    let (a, budget) = random_op(&mut rng, 2, ell + 2)?;
    out.extend(check_fl_commutator_2d(&a, &budget, ell)?);
    Ok(out)
}

/// Random Hermitian matrix `U diag(±e_i) U*` with `e_i` uniform in `[lo, hi]`.
fn hermitian_with_gap<R: Rng + ?Sized>(rng: &mut R, n: usize, lo: f64, hi: f64) -> CMat {
    let eigs: Vec<f64> = (0..n)
        .map(|_| {
            let e = rng.random_range(lo..=hi);
            if rng.random_bool(0.5) {
                e
            } else {
                -e
            }
        })
        .collect();
    let u = random_unitary(rng, n);
    &u * diag_real(&eigs) * u.adjoint()
}

/// Gaussian matrix with condition number at most `max_cond`, by rejection.
fn conditioned_gaussian<R: Rng + ?Sized>(rng: &mut R, n: usize, max_cond: f64) -> Result<CMat> {
    loop {
        let g = random_gaussian(rng, n, n);
        let s = singular_values(g.as_ref())?;
        if s[0] <= max_cond * s[n - 1] {
            return Ok(g);
        }
    }
}

fn positive_semidefinite<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Result<CMat> {
    let g = conditioned_gaussian(rng, n, 100.0)?;
    Ok(g.adjoint() * &g)
}

/// One draw of the gap-lemma suites with blocks of size at most `max_dim`.
///
/// Besides random instances satisfying each hypothesis, every draw includes a
/// planted instance attaining the lower bound `gap(A + B) = gap(A) - ||B||`.
pub fn gap_lemma_draw(max_dim: usize, seed: u64, index: u64) -> Result<Vec<BoundReport>> {
    if max_dim < 2 {
        return Err(Error::InvalidParameter(format!(
            "dimension budget {max_dim} must be at least 2"
        )));
    }
    let mut rng = draw_rng(seed, index);
    let rng = &mut rng;
    let mut dim = |rng: &mut ChaCha8Rng| rng.random_range(1..=max_dim);
    let mut out = Vec::with_capacity(20);

    // Basic estimates.
    let n = dim(rng);
    let a = conditioned_gaussian(rng, n, 100.0)?;
    let ga = gap(a.as_ref())?;
    let gata = gap((a.adjoint() * &a).as_ref())?.sqrt();
    out.push(BoundReport::new("gap-squared-upper", ga, gata));
    out.push(BoundReport::new("gap-squared-lower", gata, ga));

    let b = conditioned_gaussian(rng, n, 100.0)?;
    let gb = gap(b.as_ref())?;
    let gab = gap((&a * &b).as_ref())?;
    out.push(BoundReport::new("gap-product-lower", ga * gb, gab));
    out.push(BoundReport::new("gap-product-upper", gab, ga * op_norm(b.as_ref())?));

    let b = crate::linalg::scaled(random_gaussian(rng, n, n).as_ref(), rng.random_range(0.0..=1.0));
    let nb = op_norm(b.as_ref())?;
    let gsum = gap((&a + &b).as_ref())?;
    out.push(BoundReport::new("gap-sum-lower", ga - nb, gsum));
    out.push(BoundReport::new("gap-sum-upper", gsum, ga + nb));

    // Planted witness: shrink the eigenvalue closest to zero by a fraction s.
    let h = hermitian_with_gap(rng, n, 0.1, 2.0);
    let (eigs, vecs) = crate::linalg::eigh(h.as_ref())?;
    let k = (0..n)
        .min_by(|&i, &j| eigs[i].abs().total_cmp(&eigs[j].abs()))
        .expect("n >= 1");
    let s = rng.random_range(0.1..=0.9);
    let u = vecs.as_ref().col(k).to_owned();
    let shrink = Mat::from_fn(n, n, |i, j| u[i] * u[j].conj() * (-s * eigs[k]));
    out.push(BoundReport::new(
        "gap-sum-lower-planted",
        gap(h.as_ref())? - op_norm(shrink.as_ref())?,
        gap((&h + &shrink).as_ref())?,
    ));

    let p = positive_semidefinite(rng, n)?;
    let q = positive_semidefinite(rng, n)?;
    out.push(BoundReport::new(
        "gap-sum-positive",
        gap(p.as_ref())? + gap(q.as_ref())?,
        gap((&p + &q).as_ref())?,
    ));

    let m = dim(rng);
    let d = conditioned_gaussian(rng, m, 100.0)?;
    let gds = gap(direct_sum(a.as_ref(), d.as_ref()).as_ref())?;
    let gmin = ga.min(gap(d.as_ref())?);
    out.push(BoundReport::new("gap-direct-sum-upper", gds, gmin));
    out.push(BoundReport::new("gap-direct-sum-lower", gmin, gds));

    // Block operators.
    let (n, m) = (dim(rng), dim(rng));
    let a = hermitian_with_gap(rng, n, 0.1, 2.0);
    let d = hermitian_with_gap(rng, m, 0.1, 2.0);
    let b = crate::linalg::scaled(random_gaussian(rng, n, m).as_ref(), rng.random_range(0.0..=1.0));
    let h = block2(a.as_ref(), b.as_ref(), b.adjoint().to_owned().as_ref(), d.as_ref());
    let (ga, gd, nb, gh) = (gap(a.as_ref())?, gap(d.as_ref())?, op_norm(b.as_ref())?, gap(h.as_ref())?);
    out.push(BoundReport::new("block-gap", ga.min(gd) - nb, gh));
    let dinv = inverse(d.as_ref());
    let schur = &a - &b * &dinv * b.adjoint();
    let bd = op_norm((&b * &dinv).as_ref())?;
    out.push(BoundReport::new(
        "block-schur-upper",
        gh,
        gd.min(gap(schur.as_ref())?) * (1.0 + bd).powi(2),
    ));

    // Large-D variant: rescale D so that gap(A) <= gap(D).
    let d_big = crate::linalg::scaled(d.as_ref(), (ga / gd).max(1.0) * rng.random_range(1.0..=4.0));
    let gd_big = gap(d_big.as_ref())?;
    let h = block2(a.as_ref(), b.as_ref(), b.adjoint().to_owned().as_ref(), d_big.as_ref());
    out.push(BoundReport::new(
        "block-gap-large-d",
        ga - (ga / gd_big).sqrt() * nb,
        gap(h.as_ref())?,
    ));

    out.push(cut_interpolation_instance(rng, &mut dim)?);

    // Traceless blocks: a generic pair and a nearly commuting pair.
    let n = dim(rng);
    let a = hermitian_with_gap(rng, n, 0.1, 2.0);
    let b = random_gaussian(rng, n, n);
    out.push(check_traceless("traceless-generic", &a, &b)?);
    let (_, basis) = crate::linalg::eigh(a.as_ref())?;
    let c: Vec<c64> = (0..n)
        .map(|_| c64::new(rng.random_range(-2.0..=2.0), rng.random_range(-2.0..=2.0)))
        .collect();
    let eps = rng.random_range(0.0..=0.1);
    let b = &basis * crate::linalg::diag_complex(&c) * basis.adjoint()
        + crate::linalg::scaled(random_gaussian(rng, n, n).as_ref(), eps);
    out.push(check_traceless("traceless-near-commuting", &a, &b)?);
    Ok(out)
}

/// Cut interpolation `H_s = [[A, sB], [sB*, D]]`: with `D` scaled until
/// `gap(D) > ||B|| max(1, 4 ||B|| / gap(H_1))`, every `H_s` on the `s`-grid has
/// `gap(H_s) >= min(gap D, gap(H_1)/4 - ||B||^2/gap D) / (1 + ||B D^-1||)^2 > 0`.
fn cut_interpolation_instance(
    rng: &mut ChaCha8Rng,
    dim: &mut impl FnMut(&mut ChaCha8Rng) -> usize,
) -> Result<BoundReport> {
    let (n, m) = (dim(rng), dim(rng));
    let a = hermitian_with_gap(rng, n, 0.2, 2.0);
    let b = crate::linalg::scaled(random_gaussian(rng, n, m).as_ref(), rng.random_range(0.05..=0.5));
    let d0 = hermitian_with_gap(rng, m, 1.0, 2.0);
    let nb = op_norm(b.as_ref())?;
    let bs = b.adjoint().to_owned();
    let mut scale = 1.0;
    for _ in 0..64 {
        let d = crate::linalg::scaled(d0.as_ref(), scale);
        let gd = gap(d.as_ref())?;
        let h1 = block2(a.as_ref(), b.as_ref(), bs.as_ref(), d.as_ref());
        let gh1 = gap(h1.as_ref())?;
        if gd > nb * (1.0f64).max(4.0 * nb / gh1) {
            let bd = op_norm((&b * inverse(d.as_ref())).as_ref())?;
            let lower = gd.min(0.25 * gh1 - nb * nb / gd) / (1.0 + bd).powi(2);
            let mut worst = f64::INFINITY;
            for s in crate::flow::linspace(0.0, 1.0, CUT_GRID_POINTS) {
                let sb = crate::linalg::scaled(b.as_ref(), s);
                let sbs = crate::linalg::scaled(bs.as_ref(), s);
                let hs = block2(a.as_ref(), sb.as_ref(), sbs.as_ref(), d.as_ref());
                worst = worst.min(gap(hs.as_ref())?);
            }
            return Ok(BoundReport::new("cut-invertible", lower, worst));
        }
        scale *= 2.0;
    }
    Err(Error::InvalidParameter(
        "could not enlarge D enough to satisfy the cut hypothesis".into(),
    ))
}

/// All draws of the gap-lemma suites, in draw order.
pub fn check_gap_lemmas(max_dim: usize, draws: usize, seed: u64) -> Result<Vec<BoundReport>> {
    if draws == 0 {
        return Err(Error::InvalidParameter("draws must be at least 1".into()));
    }
    let mut out = Vec::new();
    for i in 0..draws {
        out.extend(gap_lemma_draw(max_dim, seed, i as u64)?);
    }
    Ok(out)
}

/// All draws of the commutator suites, in draw order.
pub fn check_commutator_suites(draws: usize, seed: u64, env: EnvelopeRange) -> Result<Vec<BoundReport>> {
    if draws == 0 {
        return Err(Error::InvalidParameter("draws must be at least 1".into()));
    }
    let mut out = Vec::new();
    for i in 0..draws {
        out.extend(commutator_draw(seed, i as u64, env)?);
    }
    Ok(out)
}
