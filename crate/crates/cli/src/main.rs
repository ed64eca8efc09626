//! `exhjb` command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 failed `--check` verdict.

mod commands;
mod config;
mod output;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Check(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Check(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Numerical(m) | CliError::Check(m) => m,
        }
    }
}

impl From<exhjb::Error> for CliError {
    fn from(e: exhjb::Error) -> CliError {
        use exhjb::Error as E;
        match e {
            E::UnknownLandscape(_)
            | E::InvalidLandscape(_)
            | E::Config(_)
            | E::GridMismatch(_)
            | E::UnsupportedDimension(_)
            | E::ControlDomain(_)
            | E::Parse(_) => CliError::Config(e.to_string()),
            E::Divergence { .. } | E::Blowup(_) | E::InsufficientData(_) | E::Io(_) => {
                CliError::Numerical(e.to_string())
            }
        }
    }
}

#[derive(Parser)]
#[command(
    name = "exhjb",
    about = "Exploratory HJB solving, feedback-policy annealing and stationary-law experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the master seed from the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Evaluate the pipeline's quantitative claims and fail on violation.
    #[arg(long)]
    check: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one HJB equation and export the value and diffusion fields.
    Solve(Common),
    /// Compare exploratory, bang-bang and Langevin annealing budgets.
    Anneal(Common),
    /// Estimate the exploratory stationary law and test it against Gibbs fits.
    Stationary(Common),
    /// Sweep lambda and measure the distance to the classical solution.
    Sweep(Common),
}

fn run(common: &Common, f: impl FnOnce(&config::RunConfig, &PathBuf, bool) -> Result<(), CliError>) -> Result<(), CliError> {
    let cfg = config::RunConfig::load(&common.config, common.seed)?;
    f(&cfg, &common.out, common.check)
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(c) => run(c, |cfg, out, check| commands::cmd_solve(cfg, out, check)),
        Command::Anneal(c) => run(c, |cfg, out, check| commands::cmd_anneal(cfg, out, check)),
        Command::Stationary(c) => {
            run(c, |cfg, out, check| commands::cmd_stationary(cfg, out, check))
        }
        Command::Sweep(c) => run(c, |cfg, out, check| commands::cmd_sweep(cfg, out, check)),
    };
    if let Err(e) = result {
        eprintln!("error: {}", e.message());
        std::process::exit(e.exit_code());
    }
}
