//! Actor-critic networks, PPO, and tabular dynamic programming.
//!
//! Everything here is written in terms of costs, as the control side is; the
//! learners maximize the reward `−cost`.

mod gae;
mod mlp;
mod policy;
mod ppo;
mod tabular;
mod toy;

pub use gae::{gae_advantages, normalize_advantages};
pub use mlp::{mlp_forward, mlp_gradient, ForwardCache, Layer, Mlp, MlpGradient};
pub use policy::{gaussian_log_prob, policy_sample, ObsScaling, Policy, POLICY_FORMAT_VERSION};
pub use ppo::{
    collect_batch, episode_seed, evaluate_policy, recompute_log_probs, initial_policy, ppo_update, train_ppo, train_ppo_with, Batch, BatchLog, Environment,
    Optimizer, OptimizerKind, PpoConfig, Step, TrainOutcome, UpdateStats,
};
pub use tabular::{
    greedy_policy, q_learning, robbins_monro, sup_norm_diff, value_iteration, Exploration, LearningRate, QTable,
    TabularMdp,
};
pub use toy::DoubleIntegrator;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RlError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("environment returned a non-finite observation (episode {episode}, step {step})")]
    NonFiniteObservation { episode: u64, step: usize },
    #[error("malformed policy file: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(String),
}
