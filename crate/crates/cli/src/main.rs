mod commands;
mod input;
mod render;
mod suite;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::input::GridSpec;

/// Cramér transform of Rademacher series: rate curves, verification, oracles and
/// large-deviation experiments.
#[derive(Debug, Parser)]
#[command(name = "cramer", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rate function by both solvers, side by side.
    Rate(Common),
    /// Run the property suite on random instances or on given weights.
    Verify(VerifyArgs),
    /// Chernoff checks and convergence of empirical-mean tails.
    Ldp(LdpArgs),
    /// Exact distribution, tails and grid conjugate.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Weights: an inline list ("1 2" or "1,2") or @path to a file.
    #[arg(long, value_name = "LIST|@FILE")]
    pub weights: Option<String>,
    /// Alpha grid as COUNT,COVERAGE (COUNT odd, COVERAGE in (0,1)).
    #[arg(long, value_name = "COUNT,COVERAGE")]
    pub alpha_grid: Option<GridSpec>,
    /// Explicit alpha; repeatable.
    #[arg(long = "alpha", value_name = "VALUE", allow_negative_numbers = true)]
    pub alphas: Vec<f64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Write the table or report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Solver setting override; repeatable.
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    pub tols: Vec<String>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Number of random instances when no weights are given.
    #[arg(long, default_value_t = 100)]
    pub instances: usize,
}

#[derive(Debug, Args)]
pub struct LdpArgs {
    #[command(flatten)]
    pub common: Common,
    /// Sample sizes N for the convergence table.
    #[arg(long, value_name = "N,N,...", default_value = "10,100,1000", value_parser = input::parse_schedule)]
    pub ns: std::vec::Vec<usize>,
    /// Fall back to tilted Monte Carlo where exact computation is too large.
    #[arg(long)]
    pub mc: bool,
    /// Monte Carlo samples per estimate.
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    /// Monte Carlo streams; part of the reproducibility key with the seed.
    #[arg(long, default_value_t = 4)]
    pub workers: usize,
    /// Largest exact convolution support.
    #[arg(long, default_value_t = 1 << 20)]
    pub max_support: usize,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub common: Common,
    /// Emit the exact distribution instead of the per-alpha table.
    #[arg(long)]
    pub distribution: bool,
}

/// Exit codes: 0 success, 1 verification or convergence failure, 2 input or size error.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<cramer_core::Error>() {
        Some(cramer_core::Error::NoConvergence { .. }) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Rate(args) => commands::rate(&args),
        Command::Verify(args) => commands::verify(&args),
        Command::Ldp(args) => commands::ldp(&args),
        Command::Oracle(args) => commands::oracle(&args),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
