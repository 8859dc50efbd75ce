//! Seeded evaluation of the RL, MRAC-RL and DR-RL wirings on the landing
//! task.

mod config;
mod episode;
mod experiment;
mod train;

use std::path::PathBuf;

use thiserror::Error;

use crate::quad::QuadError;
use crate::rl::RlError;

pub use config::{Condition, ExperimentConfig, PolicyKind, PolicyPaths};
pub use episode::{run_episode, trajectory_divergence, EpisodeRecord, Policies};
pub use experiment::{
    loe_sweep, read_summary_csv, success_table, summarize, write_atomic, write_summary_csv, Experiment, RecordStore,
    SummaryRow, SUMMARY_HEADER,
};
pub use train::train_policy;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("malformed data: {0}")]
    Format(String),
    #[error("policy file not found: {0}; run `mracrl train` first")]
    MissingPolicy(PathBuf),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Rl(#[from] RlError),
}
