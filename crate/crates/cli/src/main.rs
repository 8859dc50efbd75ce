//! `mracrl`: train policies, evaluate wirings, sweep LOE levels and plot
//! rollouts from one JSON experiment config.

mod commands;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Overrides `output_dir` from the config file when set.
pub const OUTPUT_DIR_ENV: &str = "MRACRL_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "mracrl", version, about = "Adaptive inner loop for learned landing policies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train the nominal policy, or the domain-randomized one.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        domain_randomized: bool,
        /// Replaces the PPO seed from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate one wiring under the configured uncertainty.
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long)]
        condition: mracrl::harness::Condition,
        /// Replaces the episode count from the config.
        #[arg(long)]
        episodes: Option<usize>,
        /// Re-simulate episodes that already have records.
        #[arg(long)]
        force: bool,
    },
    /// Success table for every configured condition.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// RL against MRAC-RL across propeller effectiveness levels.
    SweepLoe {
        #[arg(long)]
        config: PathBuf,
        /// Remaining effectiveness of the faulty propeller, in (0, 1].
        #[arg(long, value_delimiter = ',', default_value = "0.9,0.75,0.5,0.25")]
        betas: Vec<f64>,
        #[arg(long)]
        force: bool,
    },
    /// Render trajectory CSVs as an SVG figure.
    Plot {
        #[arg(long, value_delimiter = ',', required = true)]
        trajectories: Vec<PathBuf>,
        /// Legend entries, one per trajectory; file stems by default.
        #[arg(long, value_delimiter = ',')]
        labels: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run_command(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("mracrl: error: {msg}");
            ExitCode::FAILURE
        }
    }
}
