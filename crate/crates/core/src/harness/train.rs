use super::{ExperimentConfig, HarnessError};
use crate::quad::LandingEnv;
use crate::rl::{train_ppo_with, BatchLog, TrainOutcome};
use crate::seed::derive_seed;

/// Trains the nominal policy, or the domain-randomized one when
/// `domain_randomized` is set. The randomized run draws its PPO seed from a
/// separate stream of the configured seed so the two policies never share
/// rollouts.
pub fn train_policy(
    cfg: &ExperimentConfig,
    domain_randomized: bool,
    seed_override: Option<u64>,
    progress: impl FnMut(&BatchLog),
) -> Result<TrainOutcome, HarnessError> {
    cfg.validate()?;
    let mut ppo = cfg.ppo.clone();
    if let Some(seed) = seed_override {
        ppo.rng_seed = seed;
    }
    let mut env = if domain_randomized {
        ppo.rng_seed = derive_seed(ppo.rng_seed, 1);
        LandingEnv::randomized(cfg.task.clone(), cfg.domain_randomization_pct)?
    } else {
        LandingEnv::new(cfg.task.clone())?
    };
    Ok(train_ppo_with(&mut env, &ppo, None, progress)?)
}
