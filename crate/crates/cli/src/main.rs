//! `eeqt`: reproducible arrival-time studies emitting plot-ready CSV.
//!
//! Exit codes: 0 success, 1 usage error, 2 numerical failure,
//! 3 oracle-check failure. `EEQT_THREADS` caps worker threads.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{Overrides, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "eeqt", version, about = "Arrival-time statistics at a point detector")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Density p(t), cumulative P(t) and the Wigner baseline
    Density(RunArgs),
    /// Efficiency P(∞) on a log-spaced grid of couplings
    EfficiencyCurve(RunArgs),
    /// Coupling that maximises P(∞)
    Optimize(RunArgs),
    /// Optimal coupling and efficiency per packet velocity
    SweepVelocity(RunArgs),
    /// Sampled detection events with a KS check
    Simulate(RunArgs),
    /// Closed form vs split-step grid vs discretised line
    OracleCheck(RunArgs),
    /// Split-step simulation with a point sink
    GridRun(RunArgs),
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// TOML config, or a previous output whose header should be replayed
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Output file (stdout if omitted)
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numerical(String),
    Oracle(String),
    Io(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 1,
            Self::Numerical(_) | Self::Io(_) => 2,
            Self::Oracle(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "usage error: {m}"),
            Self::Numerical(m) => write!(f, "numerical failure: {m}"),
            Self::Oracle(m) => write!(f, "oracle check failed: {m}"),
            Self::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<eeqt_core::Error> for Failure {
    fn from(e: eeqt_core::Error) -> Self {
        use eeqt_core::Error::*;
        match e {
            InvalidInput(_)
            | UnsupportedDimension(_)
            | NegativeTime(_)
            | OffGrid { .. }
            | BracketInvalid { .. }
            | InvalidModel(_) => Self::Usage(e.to_string()),
            _ => Self::Numerical(e.to_string()),
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("EEQT_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("EEQT_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Usage(e.to_string()))
}

type CommandFn = fn(&RunConfig) -> Result<output::Report, Failure>;

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    let (name, args, command): (&str, RunArgs, CommandFn) = match cli.command {
        Command::Density(a) => ("density", a, commands::density),
        Command::EfficiencyCurve(a) => ("efficiency-curve", a, commands::efficiency_curve_cmd),
        Command::Optimize(a) => ("optimize", a, commands::optimize),
        Command::SweepVelocity(a) => ("sweep-velocity", a, commands::sweep_velocity),
        Command::Simulate(a) => ("simulate", a, commands::simulate),
        Command::OracleCheck(a) => ("oracle-check", a, commands::oracle_check),
        Command::GridRun(a) => ("grid-run", a, commands::grid_run),
    };
    let mut config = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(previous) = &config.command {
        if previous != name {
            eprintln!("note: config was written by `{previous}`, running `{name}`");
        }
    }
    config.apply(&args.overrides)?;
    config.resolve(name);
    let report = command(&config)?;
    output::emit(&report.render(&config), args.output.as_deref())?;
    match report.failure {
        Some(failure) => Err(failure),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let informational = !e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if informational { 0 } else { 1 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("eeqt: {failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
