//! Command-line experiment runner: identity checks, Dirichlet-energy
//! sweeps, smoothed-energy bias tables and Hodge spectra.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hodge_core::identities::WedgeFn;
use hodge_core::HodgeError;

pub use config::ExperimentConfig;

/// `git describe` of the build, or the package version outside a checkout.
pub const VERSION: &str = env!("HODGE_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] HodgeError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Core(HodgeError::GridTooCoarse { .. }) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hodge", version = VERSION, about = "Hodge Laplacian and Dirichlet-energy experiments on point clouds")]
pub struct Cli {
    /// Experiment config (JSON). Each command has a built-in default.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Run a single seed instead of the configured list.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; falls back to HODGE_THREADS, then to all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Circle,
    Torus,
    Arcs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Randomized checks of the algebraic identities; JSON summary.
    Identities {
        /// Instances per identity family.
        #[arg(long, default_value_t = 100)]
        instances: usize,
    },
    /// Replicate sweep of the empirical Dirichlet energy; CSV rows plus an
    /// aggregate block.
    Dirichlet {
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        t: Option<f64>,
        /// Fill the elapsed_ms column (makes output run-dependent).
        #[arg(long)]
        timing: bool,
    },
    /// Deterministic bias of the smoothed energy over the t grid.
    Bias {
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        #[arg(long)]
        t: Option<f64>,
    },
    /// Hodge spectra and Betti numbers of a sampled or stored complex; JSON.
    Spectrum {
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        t: Option<f64>,
        /// Skeleton JSON file to analyze instead of a sample.
        #[arg(long)]
        fixture: Option<PathBuf>,
        /// Directory for the Laplacian matrices in coordinate text format.
        #[arg(long)]
        coo_dir: Option<PathBuf>,
    },
}

fn thread_count(cli: &Cli) -> Result<Option<usize>, CliError> {
    if let Some(t) = cli.threads {
        return if t == 0 { Err(CliError::Config("--threads must be positive".into())) } else { Ok(Some(t)) };
    }
    match std::env::var("HODGE_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(Some(t)),
            _ => Err(CliError::Config(format!("HODGE_THREADS={v:?} is not a positive integer"))),
        },
        Err(_) => Ok(None),
    }
}

/// Runs a parsed command line and maps the outcome to an exit code:
/// 0 success, 1 failed check or run error, 2 configuration error.
pub fn run(cli: Cli) -> ExitCode {
    run_with_wedge(cli, hodge_core::forms::wedge)
}

/// [`run`] with the identity suite using `wedge` in place of the library's
/// wedge product.
pub fn run_with_wedge(cli: Cli, wedge: WedgeFn) -> ExitCode {
    let result = thread_count(&cli).and_then(|threads| {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(t) = threads {
            builder = builder.num_threads(t);
        }
        let pool = builder.build().map_err(|e| CliError::Failed(e.to_string()))?;
        pool.install(|| commands::dispatch(&cli, wedge))
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hodge: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
