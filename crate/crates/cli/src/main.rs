//! `specloc`: command-line driver for localizer signatures, sweeps, phase scans,
//! bound verification, oracles and operator dumps.
//!
//! Exit codes: 0 ok, 1 verification mismatch, 2 usage, config or precondition error.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Context, Status};
use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Core(#[from] specloc::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv output: {0}")]
    Csv(csv::Error),
}

impl CliError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn csv(e: csv::Error) -> Self {
        Self::Csv(e)
    }
}

#[derive(Debug, Parser)]
#[command(name = "specloc", version, about = "Spectral localizer signatures of lattice Hamiltonians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; output does not depend on this.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Replaces the disorder seeds and the verification seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, Subcommand)]
enum Command {
    /// Half-signature of the localizer against the bulk invariant.
    Sig,
    /// Inertia on a kappa grid and the spectral flow up to kappa = 1.
    Sweep,
    /// Half-signature and oracle over a grid of model parameters.
    Phase,
    /// Randomized bound and flow-identity suites.
    VerifyBounds,
    /// Bulk invariants from every available oracle.
    Oracle,
    /// Hamiltonian and localizer matrices as text dumps.
    Dump,
}

fn run(cli: &Cli) -> Result<Status, CliError> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut config = RunConfig::load(path)?;
    if let Some(s) = cli.seed {
        config.override_seed(s);
    }
    if cli.workers == 0 {
        return Err(CliError::Config("--workers must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers)
        .build()
        .map_err(|e| CliError::Precondition(e.to_string()))?;
    let out = cli.out.clone().unwrap_or_else(|| config.output.dir.clone());
    let ctx = Context { config, out, pool };
    match cli.command {
        Command::Sig => commands::sig(&ctx),
        Command::Sweep => commands::sweep(&ctx),
        Command::Phase => commands::phase(&ctx),
        Command::VerifyBounds => commands::verify(&ctx),
        Command::Oracle => commands::oracle_cmd(&ctx),
        Command::Dump => commands::dump(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Mismatch) => ExitCode::from(1),
        Err(e) => {
            eprintln!("specloc: {e}");
            ExitCode::from(2)
        }
    }
}
