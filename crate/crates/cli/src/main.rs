//! `probgsp`: desk-scale experiments over probability spaces of shift operators.
//!
//! Every subcommand reads a TOML config, writes CSV files into `--out` and
//! records the resolved config (seed included) next to them. Exit codes: 0 on
//! success, 1 on a validation error, 2 on a numerical failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod manifest;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Numerical(String),
    #[error(transparent)]
    Core(#[from] probgsp::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Core(e) if e.is_numerical() => 2,
            CliError::Core(_) => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn invalid<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Invalid(msg.into()))
}

#[derive(Parser)]
#[command(name = "probgsp", version, about = "Graph signal processing over random shift operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone, Debug)]
pub struct CommonArgs {
    /// TOML config; relative paths inside it resolve against its directory.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides `seed` in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (created if missing); overrides `out` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Distributional Fourier coefficients of a signal and the per-atom energy profile.
    Spectrum(CommonArgs),
    /// Frequency-mask denoising with a single operator, a mixture operator or the distributional filter.
    Denoise(CommonArgs),
    /// Apply a convolution filter to signals.
    Filter(CommonArgs),
    /// Sample on a uniqueness set and recover with error bounds.
    Sample(CommonArgs),
    /// Learn a distribution over the operator space (Gibbs posterior).
    Learn(CommonArgs),
    /// Transport measures or filters along a map between operator spaces.
    Basechange(CommonArgs),
    /// Infection source localization with and without tree rewiring.
    Infect(CommonArgs),
    /// Run the randomized invariant checks against the brute-force oracles.
    Selftest(CommonArgs),
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Spectrum(a) => commands::spectrum::run(&a),
        Command::Denoise(a) => commands::denoise::run(&a),
        Command::Filter(a) => commands::filter::run(&a),
        Command::Sample(a) => commands::sample::run(&a),
        Command::Learn(a) => commands::learn::run(&a),
        Command::Basechange(a) => commands::basechange::run(&a),
        Command::Infect(a) => commands::infect::run(&a),
        Command::Selftest(a) => commands::selftest::run(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
