//! `ddm`: scenario-driven decoupling and metrology runs.
//!
//! Every command reads a JSON scenario (except `reproduce-paper`), writes
//! its artifacts plus a manifest into `--out`, and prints a short summary.
//! Reruns with the same scenario and seed are byte-identical.

mod commands;
mod emit;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use emit::Format;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad scenario, schedule, or flag input. Exit code 2.
    #[error("{0}")]
    Scenario(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    /// A computation rejected its inputs at runtime. Exit code 2.
    #[error("{0}")]
    Compute(String),
    /// Acceptance criteria failed. Exit code 1.
    #[error("{failed} of {total} acceptance criteria failed")]
    Acceptance { failed: usize, total: usize },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Acceptance { .. } => 1,
            _ => 2,
        }
    }
}

macro_rules! compute_from {
    ($($ty:ty),*) => {$(
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::Compute(e.to_string())
            }
        }
    )*};
}
compute_from!(
    ddm_core::operators::OperatorError,
    ddm_core::hamiltonian::HamiltonianError,
    ddm_core::decoupling::DecouplingError,
    ddm_core::dynamics::DynamicsError,
    ddm_core::metrology::MetrologyError
);

#[derive(Parser)]
#[command(
    name = "ddm",
    version,
    about = "Dynamical-decoupling analysis and frequency-estimation bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario file (JSON).
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,

    /// Output directory for artifacts and the manifest.
    #[arg(long, global = true, default_value = "ddm-out")]
    out: PathBuf,

    /// Master seed; overrides the scenario's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for grid evaluation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Format for tabular artifacts.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Per-site noise canonicalization, rank, and decoupling directions.
    Analyze,
    /// Pulsed-evolution error against the cycle-averaged target over an
    /// m-grid, with the fitted convergence order.
    Evolve,
    /// Estimation-rate table: optimal interrogation time, rate, parallel
    /// bound, and their ratio over the (N, sigma) grid.
    Qfi,
    /// Rate scaling exponent over an N grid.
    Sweep,
    /// Runs every acceptance criterion and writes the evidence tables.
    ReproducePaper,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        // A second build_global in-process is harmless; keep the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let loaded = match &cli.scenario {
        Some(path) => {
            let (file, hash) = scenario::ScenarioFile::load(path)?;
            let dir = path
                .parent()
                .filter(|p| !p.as_os_str().is_empty())
                .unwrap_or_else(|| std::path::Path::new("."))
                .to_path_buf();
            Some(commands::LoadedScenario { file, hash, dir })
        }
        None => None,
    };
    let seed = cli
        .seed
        .or(loaded.as_ref().and_then(|s| s.file.seed))
        .unwrap_or(ddm_core::criteria::DEFAULT_SEED);
    let ctx = commands::RunCtx {
        scenario: loaded,
        seed,
        format: cli.format,
        out: cli.out,
        dim_cap: scenario::dim_cap_from_env()?,
    };
    match cli.command {
        Command::Analyze => commands::analyze::run(&ctx),
        Command::Evolve => commands::evolve::run(&ctx),
        Command::Qfi => commands::qfi::run(&ctx),
        Command::Sweep => commands::sweep::run(&ctx),
        Command::ReproducePaper => commands::reproduce::run(&ctx),
    }
}
