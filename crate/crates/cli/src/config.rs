//! TOML run configuration. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use specloc::localizer::Model;
use specloc::operators::SshParams;

use crate::CliError;

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub localizer: LocalizerConfig,
    #[serde(default)]
    pub phase: Option<PhaseConfig>,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    Ssh,
    Qwz,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: ModelName,
    pub v: Option<f64>,
    pub w: Option<f64>,
    pub m: Option<f64>,
    #[serde(default)]
    pub disorder: f64,
    /// Disorder seeds; one disordered model per seed.
    #[serde(default)]
    pub seeds: Vec<u64>,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 0 {
            return Vec::new();
        }
        specloc::flow::linspace(self.start, self.stop, self.points)
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct LocalizerConfig {
    pub ell: usize,
    pub outer_ell: Option<usize>,
    #[serde(default)]
    pub kappa: Vec<f64>,
    pub kappa_grid: Option<Grid>,
    /// Decay rate of the locality budget.
    pub mu: f64,
    pub zero_tolerance: Option<f64>,
    pub flow_points: usize,
    /// Eigenvalues of smallest modulus written per flow sample.
    pub trajectory_eigs: usize,
}

impl Default for LocalizerConfig {
    fn default() -> Self {
        Self {
            ell: 30,
            outer_ell: None,
            kappa: Vec::new(),
            kappa_grid: None,
            mu: std::f64::consts::LN_2,
            zero_tolerance: None,
            flow_points: 41,
            trajectory_eigs: 6,
        }
    }
}

impl LocalizerConfig {
    /// Explicit values followed by the grid, in file order.
    pub fn kappas(&self) -> Vec<f64> {
        let mut k = self.kappa.clone();
        if let Some(g) = self.kappa_grid {
            k.extend(g.values());
        }
        k
    }

    pub fn outer(&self) -> usize {
        self.outer_ell.unwrap_or(2 * self.ell)
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum PhaseParameter {
    V,
    W,
    M,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PhaseConfig {
    pub parameter: PhaseParameter,
    #[serde(default)]
    pub values: Vec<f64>,
    pub grid: Option<Grid>,
}

impl PhaseConfig {
    pub fn values(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        if let Some(g) = self.grid {
            v.extend(g.values());
        }
        v
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub draws: usize,
    pub max_dim: usize,
    pub mu_min: f64,
    pub mu_max: f64,
    pub seed: u64,
    /// Overrides the measured locality constant of the model.
    pub budget_c: Option<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            draws: 100,
            max_dim: 8,
            mu_min: 0.5,
            mu_max: 1.5,
            seed: 2024,
            budget_c: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// `--seed` replaces the disorder seeds and the suite seed.
    pub fn override_seed(&mut self, seed: u64) {
        if !self.model.seeds.is_empty() || self.model.disorder != 0.0 {
            self.model.seeds = vec![seed];
        }
        self.verify.seed = seed;
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let m = &self.model;
        match m.name {
            ModelName::Ssh => {
                let v = m.v.ok_or_else(|| invalid("model.v", "required for ssh"))?;
                let w = m.w.ok_or_else(|| invalid("model.w", "required for ssh"))?;
                if !v.is_finite() || !w.is_finite() {
                    return Err(invalid("model.v/w", "must be finite"));
                }
                if m.m.is_some() {
                    return Err(invalid("model.m", "not a parameter of ssh"));
                }
                if !(m.disorder >= 0.0 && m.disorder.is_finite()) {
                    return Err(invalid("model.disorder", "must be finite and non-negative"));
                }
                if m.disorder > 0.0 && m.seeds.is_empty() {
                    return Err(invalid("model.seeds", "at least one seed is required when disorder > 0"));
                }
            }
            ModelName::Qwz => {
                let mass = m.m.ok_or_else(|| invalid("model.m", "required for qwz"))?;
                if !mass.is_finite() {
                    return Err(invalid("model.m", "must be finite"));
                }
                if m.v.is_some() || m.w.is_some() {
                    return Err(invalid("model.v/w", "not parameters of qwz"));
                }
                if m.disorder != 0.0 || !m.seeds.is_empty() {
                    return Err(invalid("model.disorder", "qwz is clean"));
                }
            }
        }
        let l = &self.localizer;
        if l.ell < 1 {
            return Err(invalid("localizer.ell", "must be at least 1"));
        }
        if l.outer() < 2 * l.ell {
            return Err(invalid("localizer.outer_ell", format!("must be at least 2 * ell = {}", 2 * l.ell)));
        }
        if let Some(k) = l.kappas().iter().find(|k| !(0.0..=1.0).contains(*k)) {
            return Err(invalid("localizer.kappa", format!("{k} outside [0, 1]")));
        }
        if !(l.mu > 0.0 && l.mu.is_finite()) {
            return Err(invalid("localizer.mu", "must be positive"));
        }
        if let Some(t) = l.zero_tolerance {
            if !(t >= 0.0) {
                return Err(invalid("localizer.zero_tolerance", "must be non-negative"));
            }
        }
        if l.flow_points < 2 {
            return Err(invalid("localizer.flow_points", "must be at least 2"));
        }
        let v = &self.verify;
        if v.draws == 0 {
            return Err(invalid("verify.draws", "must be at least 1"));
        }
        if v.max_dim < 2 {
            return Err(invalid("verify.max_dim", "must be at least 2"));
        }
        if !(v.mu_min > 0.0 && v.mu_min <= v.mu_max) {
            return Err(invalid("verify.mu_min/mu_max", "need 0 < mu_min <= mu_max"));
        }
        if let Some(c) = v.budget_c {
            if !(c > 0.0) {
                return Err(invalid("verify.budget_c", "must be positive"));
            }
        }
        if let Some(p) = &self.phase {
            let ok = match (p.parameter, m.name) {
                (PhaseParameter::M, ModelName::Qwz) => true,
                (PhaseParameter::V | PhaseParameter::W, ModelName::Ssh) => true,
                _ => false,
            };
            if !ok {
                return Err(invalid("phase.parameter", "does not belong to the model"));
            }
        }
        Ok(())
    }

    /// The model with `value` substituted for the phase parameter.
    pub fn models_at(&self, parameter: Option<(PhaseParameter, f64)>) -> Vec<Model> {
        let m = &self.model;
        let mut v = m.v.unwrap_or(0.0);
        let mut w = m.w.unwrap_or(0.0);
        let mut mass = m.m.unwrap_or(0.0);
        match parameter {
            Some((PhaseParameter::V, x)) => v = x,
            Some((PhaseParameter::W, x)) => w = x,
            Some((PhaseParameter::M, x)) => mass = x,
            None => {}
        }
        match m.name {
            ModelName::Qwz => vec![Model::Qwz { m: mass }],
            ModelName::Ssh if m.disorder == 0.0 => vec![Model::Ssh(SshParams::clean(v, w))],
            ModelName::Ssh => m
                .seeds
                .iter()
                .map(|&seed| {
                    Model::Ssh(SshParams {
                        v,
                        w,
                        disorder: m.disorder,
                        seed,
                    })
                })
                .collect(),
        }
    }

    pub fn models(&self) -> Vec<Model> {
        self.models_at(None)
    }
}
