use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use specloc::bounds::{check_commutator_suites, check_gap_lemmas, check_holmgren_commutator, BoundReport, EnvelopeRange};
use specloc::experiments::{
    model_budget, oracle, run_sig_with, run_sweep, write_bounds_csv, write_flow_checks_csv, write_sig_csv,
    write_sweep_csv, write_trajectory_csv, model_fields, SigRecord, MODEL_COLUMNS,
};
use specloc::flow::{flow_property_draw, FlowCheck};
use specloc::invariants::{
    chern_marker, default_margin, realspace_winding, ssh_kspace_winding, InvariantValue,
};
use specloc::localizer::{
    build_localizer, probe_gap_norm, theorem_constants, LocalizerSpec, Model, TheoremConstants,
};
use specloc::operators::{write_dump, Boundary, ChiralBlock, LocalityBudget};

use crate::config::RunConfig;
use crate::CliError;

/// Outcome of a command that ran to completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    Mismatch,
}

pub struct Context {
    pub config: RunConfig,
    pub out: PathBuf,
    pub pool: rayon::ThreadPool,
}

impl Context {
    fn create(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        std::fs::create_dir_all(&self.out).map_err(|e| CliError::io(&self.out, e))?;
        let path = self.out.join(name);
        File::create(&path)
            .map(BufWriter::new)
            .map_err(|e| CliError::io(&path, e))
    }

    /// Evaluates `f` on every item on the worker pool; results keep item order.
    fn map<T: Sync, R: Send>(
        &self,
        items: &[T],
        f: impl Fn(&T) -> Result<R, CliError> + Sync + Send,
    ) -> Result<Vec<R>, CliError> {
        self.pool.install(|| items.par_iter().map(f).collect())
    }

    fn budget(&self, model: &Model) -> Result<LocalityBudget, CliError> {
        Ok(model_budget(model, self.config.localizer.ell, self.config.localizer.mu)?)
    }

    fn constants(&self, model: &Model) -> Result<(LocalityBudget, TheoremConstants), CliError> {
        let budget = self.budget(model)?;
        let c = theorem_constants(model, &budget, self.config.localizer.ell)?;
        Ok((budget, c))
    }

    fn spec(&self, model: Model, budget: LocalityBudget, kappa: f64) -> LocalizerSpec {
        let l = &self.config.localizer;
        LocalizerSpec {
            model,
            ell: l.ell,
            kappa,
            budget,
            outer_ell: l.outer(),
        }
    }
}

fn model_label(model: &Model) -> String {
    match model {
        Model::Ssh(p) if p.disorder == 0.0 => format!("ssh v={} w={}", p.v, p.w),
        Model::Ssh(p) => format!("ssh v={} w={} disorder={} seed={}", p.v, p.w, p.disorder, p.seed),
        Model::Qwz { m } => format!("qwz m={m}"),
    }
}

fn sig_line(r: &SigRecord) -> String {
    let ks = r.kappa_star.map(|k| format!(" kappa*={k:.5}")).unwrap_or_default();
    format!(
        "{} ell={} kappa={}{ks} inertia=({},{},{}) half-signature={} index={} oracle={} ({}) {}{}",
        model_label(&r.model),
        r.ell,
        r.kappa,
        r.inertia.n_plus,
        r.inertia.n_minus,
        r.inertia.n_zero,
        r.half_signature,
        r.index,
        r.oracle.value,
        r.oracle.method.tag(),
        if r.matched { "match" } else { "MISMATCH" },
        if r.note.is_empty() { String::new() } else { format!(" [{}]", r.note) }
    )
}

pub fn sig(ctx: &Context) -> Result<Status, CliError> {
    let l = &ctx.config.localizer;
    let mut jobs = Vec::new();
    for model in ctx.config.models() {
        let (_, c) = ctx.constants(&model)?;
        let kappas = l.kappas();
        if kappas.is_empty() {
            jobs.push((model, c.kappa_star, c.kappa_star));
        }
        jobs.extend(kappas.into_iter().map(|k| (model, k, c.kappa_star)));
    }
    let records = ctx.map(&jobs, |&(model, k, ks)| {
        Ok(run_sig_with(&model, l.ell, k, Some(ks), l.zero_tolerance)?)
    })?;
    for r in &records {
        println!("{}", sig_line(r));
    }
    write_sig_csv(&records, ctx.create("sig.csv")?)?;
    if let Some(r) = records.iter().find(|r| !r.certified) {
        return Err(CliError::Precondition(format!(
            "uncertified inertia at kappa={} (min |eig| {:e})",
            r.kappa, r.inertia.min_abs_eig
        )));
    }
    Ok(if records.iter().all(|r| r.matched) {
        Status::Ok
    } else {
        Status::Mismatch
    })
}

pub fn sweep(ctx: &Context) -> Result<Status, CliError> {
    let l = &ctx.config.localizer;
    let models = ctx.config.models();
    let [model] = models.as_slice() else {
        return Err(CliError::Config("model.seeds: sweep takes a single model".into()));
    };
    let kappas = l.kappas();
    if kappas.is_empty() {
        return Err(CliError::Config("localizer.kappa: sweep needs a kappa grid".into()));
    }
    let (budget, c) = ctx.constants(model)?;
    let spec = ctx.spec(*model, budget, c.kappa_star);
    let rep = ctx
        .pool
        .install(|| run_sweep(&spec, &kappas, &c, c.kappa_star, l.flow_points, l.trajectory_eigs))?;
    write_sweep_csv(&rep.rows, ctx.create("sweep.csv")?)?;
    write_trajectory_csv(&rep.trajectory, ctx.create("trajectory.csv")?)?;
    let f = &rep.flow;
    {
        let mut w = csv::Writer::from_writer(ctx.create("flow.csv")?);
        w.write_record(["from", "to", "flow", "start_signature", "end_signature", "crossings"])
            .map_err(CliError::csv)?;
        w.write_record([
            format!("{:?}", f.from),
            format!("{:?}", f.to),
            f.flow.to_string(),
            f.start_signature.to_string(),
            f.end_signature.to_string(),
            f.crossings.to_string(),
        ])
        .map_err(CliError::csv)?;
        w.flush().map_err(|e| CliError::io(&ctx.out, e))?;
    }
    println!(
        "{} kappa*={:.5}: flow over [{:.5}, 1] = {} ({} crossings), signature {} -> {}",
        model_label(model),
        c.kappa_star,
        f.from,
        f.flow,
        f.crossings,
        f.start_signature,
        f.end_signature
    );
    let flow_ok = 2 * f.flow == f.end_signature - f.start_signature;
    let end_ok = f.end_signature == 0;
    let below: Vec<f64> = rep
        .rows
        .iter()
        .filter(|r| r.gap_lower_bound.is_some_and(|b| r.inertia.min_abs_eig < b))
        .map(|r| r.kappa)
        .collect();
    println!("check flow = half signature difference: {}", if flow_ok { "ok" } else { "FAILED" });
    println!("check signature at kappa=1 is 0: {}", if end_ok { "ok" } else { "FAILED" });
    if !below.is_empty() {
        println!(
            "note: finite-box gap below the infinite-volume bound at {} kappa values (open-box edge states)",
            below.len()
        );
    }
    Ok(if flow_ok && end_ok { Status::Ok } else { Status::Mismatch })
}

struct PhaseRow {
    model: Model,
    value: f64,
    kappa: f64,
    record: Option<SigRecord>,
    note: String,
}

const PHASE_GAP_FLOOR: f64 = 1e-6;

pub fn phase(ctx: &Context) -> Result<Status, CliError> {
    let cfg = &ctx.config;
    let p = cfg
        .phase
        .as_ref()
        .ok_or_else(|| CliError::Config("phase: section required".into()))?;
    let values = p.values();
    if values.is_empty() {
        return Err(CliError::Config("phase.values: empty grid".into()));
    }
    let kappas = cfg.localizer.kappas();
    let [kappa] = kappas.as_slice() else {
        return Err(CliError::Config("localizer.kappa: phase takes exactly one kappa".into()));
    };
    let mut jobs = Vec::new();
    for &x in &values {
        for model in cfg.models_at(Some((p.parameter, x))) {
            jobs.push((model, x));
        }
    }
    let l = &cfg.localizer;
    let rows = ctx.map(&jobs, |&(model, x)| {
        let (gap, _) = probe_gap_norm(&model, l.ell)?;
        if gap < PHASE_GAP_FLOOR {
            return Ok(PhaseRow {
                model,
                value: x,
                kappa: *kappa,
                record: None,
                note: format!("gapless (gap {gap:e}); skipped"),
            });
        }
        let r = run_sig_with(&model, l.ell, *kappa, None, l.zero_tolerance)?;
        Ok(PhaseRow {
            model,
            value: x,
            kappa: *kappa,
            note: r.note.clone(),
            record: Some(r),
        })
    })?;
    let mut w = csv::Writer::from_writer(ctx.create("phase.csv")?);
    let header: Vec<&str> = MODEL_COLUMNS
        .iter()
        .copied()
        .chain(["parameter", "value", "ell", "kappa", "half_signature", "index", "oracle_value", "certified", "match", "note"])
        .collect();
    w.write_record(&header).map_err(CliError::csv)?;
    let parameter = match p.parameter {
        crate::config::PhaseParameter::V => "v",
        crate::config::PhaseParameter::W => "w",
        crate::config::PhaseParameter::M => "m",
    };
    let mut mismatches = 0;
    for row in &rows {
        let mut fields: Vec<String> = model_fields(&row.model).into();
        fields.extend([parameter.to_string(), format!("{:?}", row.value), l.ell.to_string(), format!("{:?}", row.kappa)]);
        match &row.record {
            Some(r) => {
                if r.certified && !r.matched {
                    mismatches += 1;
                }
                fields.extend([
                    r.half_signature.to_string(),
                    r.index.to_string(),
                    r.oracle.value.to_string(),
                    r.certified.to_string(),
                    r.matched.to_string(),
                ]);
                println!("{parameter}={}: index {} oracle {}", row.value, r.index, r.oracle.value);
            }
            None => {
                fields.extend(std::iter::repeat_n(String::new(), 5));
                println!("{parameter}={}: {}", row.value, row.note);
            }
        }
        fields.push(row.note.clone());
        w.write_record(&fields).map_err(CliError::csv)?;
    }
    w.flush().map_err(|e| CliError::io(&ctx.out, e))?;
    Ok(if mismatches == 0 { Status::Ok } else { Status::Mismatch })
}

pub fn verify(ctx: &Context) -> Result<Status, CliError> {
    let v = &ctx.config.verify;
    let mut reports: Vec<BoundReport> = Vec::new();
    for model in ctx.config.models() {
        let mut budget = ctx.budget(&model)?;
        if let Some(c) = v.budget_c {
            budget = LocalityBudget::new(c, budget.mu)?;
        }
        let h = model.build(ctx.config.localizer.ell, Boundary::Open)?;
        for axis in 1..=model.dim() {
            reports.push(check_holmgren_commutator(&h, &budget, axis)?);
        }
    }
    let env = EnvelopeRange {
        mu_min: v.mu_min,
        mu_max: v.mu_max,
    };
    let (lemmas, suites) = ctx.pool.install(|| {
        rayon::join(
            || check_gap_lemmas(v.max_dim, v.draws, v.seed),
            || check_commutator_suites(v.draws, v.seed, env),
        )
    });
    reports.extend(lemmas?);
    reports.extend(suites?);
    let draws: Vec<u64> = (0..v.draws as u64).collect();
    let checks: Vec<FlowCheck> = ctx
        .map(&draws, |&i| Ok(flow_property_draw(v.seed, i)?))?
        .into_iter()
        .flatten()
        .collect();
    write_bounds_csv(&reports, ctx.create("bounds.csv")?)?;
    write_flow_checks_csv(&checks, ctx.create("flow_checks.csv")?)?;
    let bad_bounds: Vec<&BoundReport> = reports.iter().filter(|r| !r.pass).collect();
    let bad_flows: Vec<&FlowCheck> = checks.iter().filter(|c| !c.pass).collect();
    println!(
        "{} bound reports ({} failed), {} flow checks ({} failed)",
        reports.len(),
        bad_bounds.len(),
        checks.len(),
        bad_flows.len()
    );
    if !bad_bounds.is_empty() || !bad_flows.is_empty() {
        let mut out = std::io::stdout().lock();
        write_bounds_csv(&bad_bounds.into_iter().cloned().collect::<Vec<_>>(), &mut out)?;
        write_flow_checks_csv(&bad_flows.into_iter().cloned().collect::<Vec<_>>(), &mut out)?;
        return Ok(Status::Mismatch);
    }
    Ok(Status::Ok)
}

fn oracle_values(model: &Model, ell: usize) -> Result<Vec<InvariantValue>, CliError> {
    let margin = default_margin(ell);
    let mut out = vec![oracle(model, ell)?];
    match *model {
        Model::Ssh(p) => {
            if p.disorder == 0.0 {
                let h = model.build(ell, Boundary::Periodic)?;
                out.push(realspace_winding(&ChiralBlock::from_operator(&h)?, margin)?);
            } else if p.v != p.w {
                // Clean reference for the disordered sample.
                out.push(ssh_kspace_winding(p.v, p.w, specloc::experiments::ORACLE_NK_WINDING)?);
            }
        }
        Model::Qwz { .. } => {
            let h = model.build(ell, Boundary::Periodic)?;
            out.push(chern_marker(&h, margin)?);
        }
    }
    Ok(out)
}

pub fn oracle_cmd(ctx: &Context) -> Result<Status, CliError> {
    let ell = ctx.config.localizer.ell;
    let models = ctx.config.models();
    let values = ctx.map(&models, |m| oracle_values(m, ell))?;
    let mut w = csv::Writer::from_writer(ctx.create("oracle.csv")?);
    let header: Vec<&str> = MODEL_COLUMNS
        .iter()
        .copied()
        .chain(["ell", "method", "value", "raw", "residual"])
        .collect();
    w.write_record(&header).map_err(CliError::csv)?;
    let mut consistent = true;
    for (model, vals) in models.iter().zip(&values) {
        for v in vals {
            let mut f: Vec<String> = model_fields(model).into();
            f.extend([
                ell.to_string(),
                v.method.tag().to_string(),
                v.value.to_string(),
                format!("{:?}", v.raw),
                format!("{:?}", v.residual),
            ]);
            w.write_record(&f).map_err(CliError::csv)?;
            println!("{}: {} = {} (raw {:.6})", model_label(model), v.method.tag(), v.value, v.raw);
        }
        consistent &= vals.iter().all(|v| v.value == vals[0].value);
    }
    w.flush().map_err(|e| CliError::io(&ctx.out, e))?;
    Ok(if consistent { Status::Ok } else { Status::Mismatch })
}

pub fn dump(ctx: &Context) -> Result<Status, CliError> {
    let l = &ctx.config.localizer;
    for (i, model) in ctx.config.models().iter().enumerate() {
        let h = model.build(l.ell, Boundary::Open)?;
        let name = format!("hamiltonian-{i}.txt");
        write_to(ctx, &name, |w| write_dump(&h, w))?;
        for (j, &k) in l.kappas().iter().enumerate() {
            let budget = LocalityBudget::new(1.0, 1.0)?;
            let loc = build_localizer(&ctx.spec(*model, budget, k))?;
            write_to(ctx, &format!("localizer-{i}-{j}.txt"), |w| write_dump(&loc, w))?;
        }
        println!("{}: wrote {name} and {} localizer dumps", model_label(model), l.kappas().len());
    }
    Ok(Status::Ok)
}

fn write_to(
    ctx: &Context,
    name: &str,
    f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<(), CliError> {
    let mut w = ctx.create(name)?;
    let path: &Path = &ctx.out.join(name);
    f(&mut w).map_err(|e| CliError::io(path, e))?;
    w.flush().map_err(|e| CliError::io(path, e))
}
