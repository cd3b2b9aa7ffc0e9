//! Experiment drivers and their CSV schemas.
//!
//! Floats are written with Rust's shortest round-trip formatting, so equal
//! inputs always give byte-identical files.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bounds::BoundReport;
use crate::error::{Error, Result};
use crate::flow::{eigen_trajectory, spectral_flow, FlowCheck, FlowOptions, HermitianPath};
use crate::inertia::{gap_hermitian, inertia, InertiaResult};
use crate::invariants::{
    default_margin, qwz_kspace_chern, realspace_winding, ssh_kspace_winding, InvariantValue,
};
use crate::lattice::LatticeBox;
use crate::linalg::op_norm;
use crate::localizer::{
    build_infinite_surrogate, build_localizer, gap_lower_bound, localizer_matrix, localizer_signature_with,
    LocalizerSpec, Model, TheoremConstants,
};
use crate::operators::{compress, estimate_locality, Boundary, ChiralBlock, LocalityBudget};

/// Bloch grid used by the k-space oracles.
pub const ORACLE_NK_WINDING: usize = 4096;
pub const ORACLE_NK_CHERN: usize = 64;

fn csv_error(e: csv::Error) -> Error {
    Error::InvalidParameter(format!("csv output: {e}"))
}

fn io_error(e: std::io::Error) -> Error {
    Error::InvalidParameter(format!("csv output: {e}"))
}

fn fmt(x: f64) -> String {
    format!("{x:?}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}

/// Model columns shared by every per-model CSV.
pub const MODEL_COLUMNS: [&str; 6] = ["model", "v", "w", "m", "disorder", "seed"];

/// Values for `MODEL_COLUMNS`; unused parameters are empty.
pub fn model_fields(model: &Model) -> [String; 6] {
    match model {
        Model::Ssh(p) => [
            "ssh".into(),
            fmt(p.v),
            fmt(p.w),
            String::new(),
            fmt(p.disorder),
            p.seed.to_string(),
        ],
        Model::Qwz { m } => [
            "qwz".into(),
            String::new(),
            String::new(),
            fmt(*m),
            String::new(),
            String::new(),
        ],
    }
}

/// Reference value of the bulk invariant.
///
/// Clean SSH: k-space winding. Disordered SSH: real-space winding on the periodic
/// box of radius `ell`. QWZ: k-space Chern number.
pub fn oracle(model: &Model, ell: usize) -> Result<InvariantValue> {
    match model {
        Model::Ssh(p) if p.disorder == 0.0 => ssh_kspace_winding(p.v, p.w, ORACLE_NK_WINDING),
        Model::Ssh(_) => {
            let h = model.build(ell, Boundary::Periodic)?;
            realspace_winding(&ChiralBlock::from_operator(&h)?, default_margin(ell))
        }
        Model::Qwz { m } => qwz_kspace_chern(*m, ORACLE_NK_CHERN),
    }
}

/// Tight locality budget of the model at rate `mu`, measured on the periodic box.
pub fn model_budget(model: &Model, ell: usize, mu: f64) -> Result<LocalityBudget> {
    let h = model.build(ell, Boundary::Periodic)?;
    estimate_locality(&h, mu)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigRecord {
    pub model: Model,
    pub ell: usize,
    pub kappa: f64,
    pub kappa_star: Option<f64>,
    pub inertia: InertiaResult,
    pub half_signature: i64,
    /// `-Signature / 2`, compared with the oracle.
    pub index: i64,
    pub certified: bool,
    pub oracle: InvariantValue,
    pub matched: bool,
    pub note: String,
}

/// Signature of the finite localizer at `kappa` against the oracle.
pub fn run_sig(model: &Model, ell: usize, kappa: f64, kappa_star: Option<f64>) -> Result<SigRecord> {
    run_sig_with(model, ell, kappa, kappa_star, None)
}

pub fn run_sig_with(
    model: &Model,
    ell: usize,
    kappa: f64,
    kappa_star: Option<f64>,
    zero_tolerance: Option<f64>,
) -> Result<SigRecord> {
    let spec = LocalizerSpec {
        model: *model,
        ell,
        kappa,
        // The localizer itself does not depend on the budget.
        budget: LocalityBudget::new(1.0, 1.0)?,
        outer_ell: 2 * ell,
    };
    let l = build_localizer(&spec)?;
    let sig = localizer_signature_with(&l, zero_tolerance)?;
    let oracle = oracle(model, ell)?;
    let note = if kappa == 1.0 {
        "endpoint: spectrum is the position profile, signature 0".to_string()
    } else if !sig.certified {
        "uncertified inertia".to_string()
    } else {
        String::new()
    };
    let matched = if kappa == 1.0 {
        sig.inertia.signature == 0
    } else {
        sig.index == oracle.value
    };
    Ok(SigRecord {
        model: *model,
        ell,
        kappa,
        kappa_star,
        inertia: sig.inertia,
        half_signature: sig.half_signature,
        index: sig.index,
        certified: sig.certified,
        oracle,
        matched,
        note,
    })
}

pub const SIG_COLUMNS: [&str; 17] = [
    "ell",
    "kappa",
    "kappa_star",
    "n_plus",
    "n_minus",
    "n_zero",
    "signature",
    "half_signature",
    "index",
    "min_abs_eig",
    "certified",
    "oracle_method",
    "oracle_value",
    "oracle_raw",
    "oracle_residual",
    "match",
    "note",
];

pub fn write_sig_csv<W: Write>(records: &[SigRecord], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    let header: Vec<&str> = MODEL_COLUMNS.iter().chain(SIG_COLUMNS.iter()).copied().collect();
    wtr.write_record(&header).map_err(csv_error)?;
    for r in records {
        let mut row: Vec<String> = model_fields(&r.model).into();
        row.extend([
            r.ell.to_string(),
            fmt(r.kappa),
            fmt_opt(r.kappa_star),
            r.inertia.n_plus.to_string(),
            r.inertia.n_minus.to_string(),
            r.inertia.n_zero.to_string(),
            r.inertia.signature.to_string(),
            r.half_signature.to_string(),
            r.index.to_string(),
            fmt(r.inertia.min_abs_eig),
            r.certified.to_string(),
            r.oracle.method.tag().to_string(),
            r.oracle.value.to_string(),
            fmt(r.oracle.raw),
            fmt(r.oracle.residual),
            r.matched.to_string(),
            r.note.clone(),
        ]);
        wtr.write_record(&row).map_err(csv_error)?;
    }
    wtr.flush().map_err(io_error)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub kappa: f64,
    pub inertia: InertiaResult,
    /// Present for `kappa` in `[0, 2 kappa_star)`.
    pub gap_lower_bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSummary {
    pub from: f64,
    pub to: f64,
    pub flow: i64,
    pub start_signature: i64,
    pub end_signature: i64,
    pub crossings: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub flow: FlowSummary,
    /// `(kappa, eigenvalues of smallest modulus)` along the flow grid.
    pub trajectory: Vec<(f64, Vec<f64>)>,
}

pub const SWEEP_COLUMNS: [&str; 7] = [
    "kappa",
    "n_plus",
    "n_minus",
    "n_zero",
    "signature",
    "min_abs_eig",
    "gap_lower_bound",
];

pub const TRAJECTORY_COLUMNS: [&str; 3] = ["t", "eig_index", "value"];

/// Inertia of the finite localizer on a kappa grid, plus the spectral flow
/// over `[flow_from, 1]` on `flow_points` nodes.
pub fn run_sweep(
    spec: &LocalizerSpec,
    kappas: &[f64],
    constants: &TheoremConstants,
    flow_from: f64,
    flow_points: usize,
    trajectory_eigs: usize,
) -> Result<SweepReport> {
    spec.validate()?;
    let d = spec.model.dim();
    let mut rows = Vec::with_capacity(kappas.len());
    for &k in kappas {
        let m = localizer_matrix(spec, k)?;
        let r = inertia(m.as_ref(), None)?;
        let bound = if k < 2.0 * constants.kappa_star {
            Some(gap_lower_bound(k, &spec.budget, constants.gap_h, d)?)
        } else {
            None
        };
        rows.push(SweepRow {
            kappa: k,
            inertia: r,
            gap_lower_bound: bound,
        });
    }
    let path = HermitianPath::uniform(flow_from, 1.0, flow_points, |k| localizer_matrix(spec, k));
    let f = spectral_flow(&path, FlowOptions::default())?;
    let trajectory = if trajectory_eigs > 0 {
        eigen_trajectory(&path, trajectory_eigs)?
    } else {
        Vec::new()
    };
    Ok(SweepReport {
        rows,
        flow: FlowSummary {
            from: flow_from,
            to: 1.0,
            flow: f.flow,
            start_signature: f.start.signature,
            end_signature: f.end.signature,
            crossings: f.crossings.len(),
        },
        trajectory,
    })
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(SWEEP_COLUMNS).map_err(csv_error)?;
    for r in rows {
        wtr.write_record([
            fmt(r.kappa),
            r.inertia.n_plus.to_string(),
            r.inertia.n_minus.to_string(),
            r.inertia.n_zero.to_string(),
            r.inertia.signature.to_string(),
            fmt(r.inertia.min_abs_eig),
            fmt_opt(r.gap_lower_bound),
        ])
        .map_err(csv_error)?;
    }
    wtr.flush().map_err(io_error)
}

pub fn write_trajectory_csv<W: Write>(trajectory: &[(f64, Vec<f64>)], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(TRAJECTORY_COLUMNS).map_err(csv_error)?;
    for (t, eigs) in trajectory {
        for (i, e) in eigs.iter().enumerate() {
            wtr.write_record([fmt(*t), i.to_string(), fmt(*e)])
                .map_err(csv_error)?;
        }
    }
    wtr.flush().map_err(io_error)
}

pub const BOUND_COLUMNS: [&str; 5] = ["tag", "lhs", "rhs", "margin", "pass"];

pub fn write_bounds_csv<W: Write>(reports: &[BoundReport], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(BOUND_COLUMNS).map_err(csv_error)?;
    for r in reports {
        wtr.write_record([
            r.tag.clone(),
            fmt(r.lhs),
            fmt(r.rhs),
            fmt(r.margin),
            r.pass.to_string(),
        ])
        .map_err(csv_error)?;
    }
    wtr.flush().map_err(io_error)
}

pub const FLOW_CHECK_COLUMNS: [&str; 4] = ["tag", "expected", "observed", "pass"];

pub fn write_flow_checks_csv<W: Write>(checks: &[FlowCheck], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(FLOW_CHECK_COLUMNS).map_err(csv_error)?;
    for c in checks {
        wtr.write_record([
            c.tag.clone(),
            c.expected.to_string(),
            c.observed.to_string(),
            c.pass.to_string(),
        ])
        .map_err(csv_error)?;
    }
    wtr.flush().map_err(io_error)
}

/// Gap of the outer-box surrogate against `gap_lower_bound` on `points`
/// kappa values evenly spaced in `[0, fraction * 2 kappa_star]`.
pub fn gap_bound_scan(
    spec: &LocalizerSpec,
    constants: &TheoremConstants,
    fraction: f64,
    points: usize,
) -> Result<Vec<BoundReport>> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::InvalidParameter(format!(
            "fraction {fraction} of the proven window must lie in [0, 1)"
        )));
    }
    let d = spec.model.dim();
    crate::flow::linspace(0.0, fraction * 2.0 * constants.kappa_star, points)
        .into_iter()
        .map(|k| {
            let s = build_infinite_surrogate(&spec.with_kappa(k))?;
            let g = gap_hermitian(s.matrix().as_ref())?;
            let bound = gap_lower_bound(k, &spec.budget, constants.gap_h, d)?;
            Ok(BoundReport::new(format!("surrogate-gap-kappa{k:?}"), bound, g))
        })
        .collect()
}

/// Gap of the surrogate and the weight of its smallest-modulus eigenvector on
/// sites within `depth` of the outer box boundary.
///
/// Separates truncation artifacts (Dirichlet edge states of the outer box) from
/// spectrum that the infinite-volume operator actually has.
pub fn surrogate_lowest_mode(spec: &LocalizerSpec, depth: usize) -> Result<(f64, f64)> {
    let s = build_infinite_surrogate(spec)?;
    let outer = LatticeBox::new(spec.model.dim(), spec.outer_ell)?;
    let (vals, vecs) = crate::linalg::eigh(s.matrix().as_ref())?;
    let i = (0..vals.len())
        .min_by(|&a, &b| vals[a].abs().total_cmp(&vals[b].abs()))
        .ok_or_else(|| Error::InvalidParameter("empty surrogate".into()))?;
    // Grading copy outermost, then site, then internal index.
    let block = vals.len() / 2;
    let per_site = block / outer.len();
    let weight = (0..vals.len())
        .filter(|r| outer.depth(outer.site((r % block) / per_site)) < depth)
        .map(|r| vecs[(r, i)].norm_sqr())
        .sum();
    Ok((vals[i].abs(), weight))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecouplingReport {
    pub kappa: f64,
    pub gap_inner: f64,
    pub gap_outer: f64,
    pub coupling_norm: f64,
    pub gap_full: f64,
    /// `gap(D) > ||B|| max(1, ||B|| / (gap(M_1) / 4))`.
    pub hypothesis_holds: bool,
    /// Smallest gap of `M_{kappa, s}` over the `s`-grid.
    pub min_gap_on_grid: f64,
    pub invertible_on_grid: bool,
    pub inner_flow: i64,
    pub surrogate_flow: i64,
}

impl DecouplingReport {
    /// Flows agree, and the interpolation is invertible whenever the hypothesis holds.
    pub fn pass(&self) -> bool {
        self.inner_flow == self.surrogate_flow && (!self.hypothesis_holds || self.invertible_on_grid)
    }
}

/// Cut the surrogate at `spec.kappa` along the inner box and interpolate the
/// coupling by `s` on an `s_points` grid; compare the flows over `[kappa, 1]`
/// of the finite localizer and of the surrogate.
pub fn decoupling_check(spec: &LocalizerSpec, s_points: usize, flow_points: usize) -> Result<DecouplingReport> {
    let sur = build_infinite_surrogate(spec)?;
    let inner_box = LatticeBox::new(spec.model.dim(), spec.ell)?;
    let c = compress(&sur, &inner_box)?;
    let gap_inner = gap_hermitian(c.inner.matrix().as_ref())?;
    let gap_outer = gap_hermitian(c.outer.as_ref())?;
    let coupling_norm = op_norm(c.coupling.as_ref())?;
    let gap_full = gap_hermitian(sur.matrix().as_ref())?;
    let hypothesis_holds =
        gap_outer > coupling_norm * f64::max(1.0, coupling_norm / (0.25 * gap_full));
    let mut min_gap = f64::INFINITY;
    for s in crate::flow::linspace(0.0, 1.0, s_points) {
        min_gap = min_gap.min(gap_hermitian(c.interpolate(s).as_ref())?);
    }
    let scale = op_norm(sur.matrix().as_ref())?;
    let opts = FlowOptions::default();
    let inner = spectral_flow(
        &HermitianPath::uniform(spec.kappa, 1.0, flow_points, |k| localizer_matrix(spec, k)),
        opts,
    )?;
    let outer = spectral_flow(
        &HermitianPath::uniform(spec.kappa, 1.0, flow_points, |k| {
            Ok(build_infinite_surrogate(&spec.with_kappa(k))?.into_matrix())
        }),
        opts,
    )?;
    Ok(DecouplingReport {
        kappa: spec.kappa,
        gap_inner,
        gap_outer,
        coupling_norm,
        gap_full,
        hypothesis_holds,
        min_gap_on_grid: min_gap,
        invertible_on_grid: min_gap > 1e-10 * scale,
        inner_flow: inner.flow,
        surrogate_flow: outer.flow,
    })
}
