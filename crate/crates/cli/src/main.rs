//! `pikan`: train physics-informed KANs from TOML configs, evaluate
//! checkpoints and list the built-in problems.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{EvalArgs, TrainArgs};

#[derive(Parser)]
#[command(name = "pikan", version, about = "Adaptive physics-informed KAN training")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a training plan.
    Train {
        /// TOML run config, or a manifest.json of an earlier run.
        #[arg(long)]
        config: PathBuf,
        /// Resume from this training checkpoint.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Output directory; overrides `out` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// Evaluate a checkpoint on a lattice and export the field.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Config of the run, needed for constant overrides or a reference table.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Lattice points per axis.
        #[arg(long)]
        resolution: Option<usize>,
        /// Output directory; defaults to the checkpoint's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in problems and presets.
    List,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train {
            config,
            checkpoint,
            out,
            seed_override,
        } => commands::train(&TrainArgs {
            config,
            checkpoint,
            out,
            seed_override,
        }),
        Command::Eval {
            checkpoint,
            config,
            resolution,
            out,
        } => commands::eval(&EvalArgs {
            checkpoint,
            config,
            resolution,
            out,
        }),
        Command::List => commands::list(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pikan: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
