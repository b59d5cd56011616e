//! `calogero`: simulations, spectral curves, period checks and the
//! acceptance suite from one binary.
//!
//! Exit status is 0 when every check passes, 1 when one fails or a
//! computation errors, 2 for an invalid configuration.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunArgs;

#[derive(Debug, Parser)]
#[command(name = "calogero", version, about = "Elliptic Calogero-Moser toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate a sampled state; writes the trajectory and a conservation report.
    Simulate(RunArgs),
    /// Spectral curve of a sampled state: coefficients, Laurent exponents, H fit, census.
    Spectral(RunArgs),
    /// Periods of the integer differentials on an N = 2 curve and the degree check.
    Periods(RunArgs),
    /// Real-period differentials on the torus, their zeros and a traced leaf.
    Torus(RunArgs),
    /// Run every acceptance criterion and write report.json.
    Verify(RunArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, run): (&RunArgs, fn(&config::RunConfig) -> commands::Outcome) = match &cli.command {
        Command::Simulate(a) => (a, commands::simulate),
        Command::Spectral(a) => (a, commands::spectral),
        Command::Periods(a) => (a, commands::periods),
        Command::Torus(a) => (a, commands::torus),
        Command::Verify(a) => (a, commands::verify),
    };
    let cfg = match args.resolve(std::env::var("CM_SEED").ok()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&cfg) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
