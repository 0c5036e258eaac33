//! `velgrad`: deterministic, config-driven reconstruction experiments.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

mod commands;
mod config;
mod output;
mod samples;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::CliError;

#[derive(Parser, Debug)]
#[command(name = "velgrad", version, about = "Velocity-gradient reconstruction experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// JSON config file; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = "VELGRAD_OUT_DIR", default_value = "velgrad-out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Observe seeded tensors, invert, and report errors.
    Roundtrip(commands::roundtrip::RoundtripArgs),
    /// Multiplicity-bound table for one rule.
    IdentTable(commands::ident_table::IdentTableArgs),
    /// Empirical per-irrep rank of the forward map for growing direction sets.
    RankProfile(commands::rank_profile::RankProfileArgs),
    /// Rotation audit of an estimator.
    Equivariance(commands::equivariance::EquivarianceArgs),
    /// Error statistics over a list of direction-noise levels.
    NoiseSweep(commands::noise_sweep::NoiseSweepArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Roundtrip(a) => commands::roundtrip::run(a),
        Command::IdentTable(a) => commands::ident_table::run(a),
        Command::RankProfile(a) => commands::rank_profile::run(a),
        Command::Equivariance(a) => commands::equivariance::run(a),
        Command::NoiseSweep(a) => commands::noise_sweep::run(a),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on malformed command lines.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("velgrad: {e}");
            if let CliError::Usage(_) = e {
                eprintln!("Run `velgrad --help` for usage.");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
