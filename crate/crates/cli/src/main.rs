//! `rweno`: generate training data, train and select neural WENO3 models,
//! and run the 1D benchmarks.
//!
//! Exit codes: 0 on success, 1 when a run fails numerically (non-finite
//! state, diverged training), 2 for usage and configuration errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;

use config::{FileConfig, Global};
use rweno::Error;

#[derive(Debug, Parser)]
#[command(name = "rweno", version, about = "Neural WENO3 training and 1D benchmark pipeline")]
struct Cli {
    /// TOML config file; flags take precedence over its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for data generation and training [default: 0].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory [default: out].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for independent runs [default: 1].
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the exact training dataset.
    GenData(commands::GenDataArgs),
    /// Train one configuration or a hyperparameter sweep.
    Train(commands::TrainArgs),
    /// Pick a model from a registry manifest.
    Select(commands::SelectArgs),
    /// Run one benchmark problem.
    Solve(commands::SolveArgs),
    /// Grid-refinement study over several schemes.
    Converge(commands::ConvergeArgs),
    /// Approximate dispersion relation of several schemes.
    Adr(commands::AdrArgs),
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::NonFiniteState { .. } | Error::Diverged { .. } | Error::NonFiniteLoss { .. } => 1,
        _ => 2,
    }
}

fn run(cli: Cli) -> rweno::Result<()> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let global = Global {
        seed: cli.seed.or(file.seed).unwrap_or(0),
        out: cli.out.or_else(|| file.out.clone()).unwrap_or_else(|| PathBuf::from("out")),
        jobs: cli.jobs.or(file.jobs).unwrap_or(1),
    };
    if global.jobs == 0 {
        return Err(Error::Config("--jobs must be at least 1".into()));
    }
    match cli.command {
        Command::GenData(a) => commands::gen_data(&global, &file, a),
        Command::Train(a) => commands::train(&global, &file, a),
        Command::Select(a) => commands::select(&global, &file, a),
        Command::Solve(a) => commands::solve(&global, &file, a),
        Command::Converge(a) => commands::converge(&global, &file, a),
        Command::Adr(a) => commands::adr(&global, &file, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
