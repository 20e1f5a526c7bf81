//! `localfrac`: evaluate, compare and verify local fractional derivatives
//! from the command line.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 numeric failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod format;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Done;
use config::Config;
use error::CliError;
use format::Format;

#[derive(Debug, Parser)]
#[command(
    name = "localfrac",
    version,
    about = "Local fractional derivatives with pluggable kernels"
)]
struct Cli {
    /// Output format [default: json for single results, csv for grids, tables and trajectories]
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write output to this file instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for grids, comparisons and suites [default: number of processors]
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// key = value file with defaults
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Two-parameter Mittag-Leffler function E_{a,b}(z)
    Ml(commands::MlArgs),
    /// Evaluate an operator at a point or over a grid
    Deriv(commands::DerivArgs),
    /// One row per definition at a single point
    Compare(commands::CompareArgs),
    /// The integral J of a function between two points
    Integrate(commands::IntegrateArgs),
    /// Solve N x = g(t, x), x(t0) = x0
    Solve(commands::SolveArgs),
    /// Run the property suite
    Verify(commands::VerifyArgs),
}

fn run(cli: &Cli) -> Result<Option<CliError>, CliError> {
    let cfg = match &cli.config {
        Some(path) => Config::load(path).map_err(CliError::Input)?,
        None => Config::default(),
    };
    if let Some(jobs) = cli.jobs.or(cfg.jobs) {
        if jobs == 0 {
            return Err(CliError::Input("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Input(format!("cannot set up {jobs} workers: {e}")))?;
    }
    let done: Done = match &cli.command {
        Command::Ml(a) => commands::ml(a, &cfg)?,
        Command::Deriv(a) => commands::deriv(a, &cfg)?,
        Command::Compare(a) => commands::compare(a, &cfg)?,
        Command::Integrate(a) => commands::integrate(a, &cfg)?,
        Command::Solve(a) => commands::solve(a, &cfg)?,
        Command::Verify(a) => commands::verify(a, &cfg)?,
    };
    let format = cli.format.or(cfg.format).unwrap_or(done.default_format);
    let text = done.output.render(format);
    match &cli.out {
        Some(path) => {
            std::fs::write(path, &text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?
        }
        None => print!("{text}"),
    }
    if format != Format::Json {
        if let Some(note) = commands::picard_note(&done) {
            eprintln!("{note}");
        }
    }
    Ok(done.failure)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(e)) | Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
