//! `longmix` command-line interface.

mod cmd;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "longmix", version, about = "Mixed-effects and Bayesian models for longitudinal pCRH data")]
struct Cli {
    /// Seed for every random draw; runs with equal seeds are byte-identical.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory for output files (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a synthetic cohort and write it with its generating truth.
    Simulate(cmd::simulate::Args),
    /// Descriptive statistics of a cohort CSV.
    Describe(cmd::describe::Args),
    /// Fit a mixed model by REML/ML or by Gibbs sampling.
    Fit(cmd::fit::Args),
    /// Compare two models by likelihood-ratio test and optionally DIC.
    Compare(cmd::compare::Args),
    /// Percent-change interpretation of log-scale coefficients.
    Effects(cmd::effects::Args),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { output::EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let ctx = output::Context { seed: cli.seed, out_dir: cli.out_dir };
    let result = match &cli.command {
        Command::Simulate(a) => cmd::simulate::run(&ctx, a),
        Command::Describe(a) => cmd::describe::run(&ctx, a),
        Command::Fit(a) => cmd::fit::run(&ctx, a),
        Command::Compare(a) => cmd::compare::run(&ctx, a),
        Command::Effects(a) => cmd::effects::run(&ctx, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(output::exit_code(&e))
        }
    }
}
