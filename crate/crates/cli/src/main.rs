//! `ustatlab`: batch front end for the U-statistics laboratory.

mod commands;
mod report;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;
use ustatlab_core::{BoundError, CertificateError, KernelError, NormError, SimError};

use report::Format;

/// Seed used when `--seed` is absent.
pub const DEFAULT_SEED: u64 = 20_240_917;

#[derive(Parser, Debug)]
#[command(name = "ustatlab", version, about = "Norms, bounds and LIL diagnostics for U-statistics on finite alphabets")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Monte Carlo replicates.
    #[arg(long, global = true, default_value_t = 1024)]
    pub reps: usize,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Canonicality tolerance and solver convergence tolerance.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,
    /// Override of the constant L_d for the kernel's order.
    #[arg(long = "Ld", global = true)]
    pub l_d: Option<f64>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Hoeffding projection and canonicality report.
    Project(commands::ProjectArgs),
    /// Partition norms, optionally truncated or replicated.
    Norms(commands::NormsArgs),
    /// Sums, moments, tails and LIL ratio paths.
    Simulate(commands::SimulateArgs),
    /// Moment, tail, variance, Paley–Zygmund and decoupling bounds.
    Bounds(commands::BoundsArgs),
    /// LIL certificate: growth curves, D* and optional C*.
    LilCheck(commands::LilCheckArgs),
    /// Run the built-in oracle suite.
    Selftest,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("guard violation: {0}")]
    Guard(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("selftest failed: {0} check(s) red")]
    Selftest(usize),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) | CliError::Io(_) => 2,
            CliError::Guard(_) => 3,
            CliError::Selftest(_) => 4,
        }
    }
}

impl From<KernelError> for CliError {
    fn from(e: KernelError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<NormError> for CliError {
    fn from(e: NormError) -> Self {
        match e {
            NormError::Guard { .. } => CliError::Guard(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Guard { .. } => CliError::Guard(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<BoundError> for CliError {
    fn from(e: BoundError) -> Self {
        match e {
            BoundError::Norm(e) => e.into(),
            BoundError::Sim(e) => e.into(),
            BoundError::Kernel(e) => e.into(),
            BoundError::InvalidArgument(s) => CliError::Input(s),
        }
    }
}

impl From<CertificateError> for CliError {
    fn from(e: CertificateError) -> Self {
        match e {
            CertificateError::Norm(e) => e.into(),
            CertificateError::Sim(e) => e.into(),
            CertificateError::InvalidArgument(s) => CliError::Input(s),
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let g = &cli.global;
    let report = match &cli.command {
        Command::Project(a) => commands::project(g, a)?,
        Command::Norms(a) => commands::norms(g, a)?,
        Command::Simulate(a) => commands::simulate(g, a)?,
        Command::Bounds(a) => commands::bounds(g, a)?,
        Command::LilCheck(a) => commands::lil_check(g, a)?,
        Command::Selftest => selftest::run(g),
    };
    let text = report.render(g.format)?;
    match &g.out {
        Some(path) => std::fs::write(path, &text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if report.command == "selftest" {
        let red = report.rows.iter().filter(|r| r.flag != "pass").count();
        if red > 0 {
            return Err(CliError::Selftest(red));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.global.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        builder = builder.num_threads(t);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
