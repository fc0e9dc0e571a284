//! Command-line front end: simulate, control, sweep, decay and cost runs
//! driven by a TOML configuration.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{ConfigError, RunConfig};

/// Exit statuses, stable across versions.
pub mod exit {
    pub const OK: u8 = 0;
    pub const IO: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const SOLVER: u8 = 3;
    pub const NOT_CONVERGED: u8 = 4;
}

#[derive(Debug, Parser)]
#[command(name = "balpha", version, about = "Null controls for the 1D Burgers-alpha system")]
pub struct Cli {
    /// TOML run configuration; built-in defaults when omitted
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overrides output.dir [config default: balpha-out]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,
    /// Seed for the random_smooth initial family, overrides initial.seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand, PartialEq, Eq)]
pub enum Command {
    /// Uncontrolled forward run with the maximum-principle check
    Simulate,
    /// Null control (variant from control.variant)
    Control,
    /// Alpha sweep against the Burgers limit (kind from sweep.kind)
    Sweep,
    /// Decay-rate fits of the uncontrolled flow
    Decay,
    /// Control cost against the size of a constant transport coefficient
    Cost,
}

/// Report of a finished command.
#[derive(Debug)]
pub struct Summary {
    pub status: u8,
    pub lines: Vec<String>,
}

/// Exit status for an error escaping a command.
pub fn classify(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return exit::CONFIG;
    }
    match err.downcast_ref::<balpha::Error>() {
        Some(
            balpha::Error::InvalidGrid(_)
            | balpha::Error::InvalidField(_)
            | balpha::Error::InvalidWindow(_)
            | balpha::Error::InvalidParameter(_)
            | balpha::Error::ShapeMismatch { .. }
            | balpha::Error::Hypothesis(_),
        ) => exit::CONFIG,
        Some(balpha::Error::NonFinite { .. } | balpha::Error::Cfl { .. }) => exit::SOLVER,
        Some(balpha::Error::Divergence { .. }) => exit::NOT_CONVERGED,
        _ => exit::IO,
    }
}

/// Loads and validates the configuration, then runs the command in a pool of
/// `cli.workers` threads.
pub fn run(cli: &Cli) -> anyhow::Result<Summary> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(o) = &cli.out {
        cfg.output.dir = o.clone();
    }
    if let Some(s) = cli.seed {
        cfg.initial.seed = s;
    }
    if cli.workers == 0 {
        return Err(ConfigError("--workers must be >= 1".into()).into());
    }
    let resolved = cfg.resolve()?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build()?;
    pool.install(|| commands::dispatch(cli.command, &cfg, &resolved))
}
