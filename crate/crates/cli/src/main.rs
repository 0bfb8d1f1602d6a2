//! `cdfreg` command line: fit regularization paths on CSV data, run
//! simulation scenarios, and dump penalty/prox diagnostics.
//!
//! Exit codes: 0 success, 1 runtime/solver failure, 2 usage/validation error.

use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod plot;

use commands::{fit, penalty_table, prox_check, simulate};

#[derive(Debug, Parser)]
#[command(name = "cdfreg", version, about = "Sparse regression with the CDF penalty")]
struct Cli {
    /// Worker threads for simulation replicates (default: available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a regularization path on a CSV dataset.
    Fit(fit::FitArgs),
    /// Run a simulation scenario file and report MSE/FPR/TPR/AUC.
    Simulate(simulate::SimulateArgs),
    /// Tabulate penalty values and derivatives over a beta grid.
    PenaltyTable(penalty_table::PenaltyTableArgs),
    /// Tabulate proximal-operator outputs over an input grid.
    ProxCheck(prox_check::ProxCheckArgs),
}

/// Command failures, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, bad config, or unusable input data (exit 2).
    Usage(String),
    /// Failure while doing the work (exit 1).
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Runtime(msg) => f.write_str(msg),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Classify a library error raised while inputs were still being validated.
pub fn usage_err(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

/// Classify a library error that occurred mid-run.
pub fn runtime_err(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be >= 1");
            return ExitCode::from(2);
        }
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let outcome = match cli.command {
        Command::Fit(args) => fit::run(args),
        Command::Simulate(args) => simulate::run(args),
        Command::PenaltyTable(args) => penalty_table::run(args),
        Command::ProxCheck(args) => prox_check::run(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
