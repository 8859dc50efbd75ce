use serde::{Deserialize, Serialize};

use super::{Condition, ExperimentConfig, HarnessError, PolicyKind};
use crate::quad::{run_landing, Outcome, Scenario, Uncertainty, Wiring};
use crate::rl::Policy;
use crate::sim::Trajectory;

/// Trained policies an experiment can draw on.
#[derive(Debug, Clone, Default)]
pub struct Policies {
    pub nominal: Option<Policy>,
    pub randomized: Option<Policy>,
}

impl Policies {
    /// Loads the files needed by `conditions`.
    pub fn load(cfg: &ExperimentConfig, conditions: &[Condition]) -> Result<Self, HarnessError> {
        let mut out = Self::default();
        for kind in [PolicyKind::Nominal, PolicyKind::DomainRandomized] {
            if !conditions.iter().any(|c| c.policy() == kind) {
                continue;
            }
            let path = cfg.policy_path(kind);
            if !path.exists() {
                return Err(HarnessError::MissingPolicy(path));
            }
            let policy = Policy::load(&path)?;
            match kind {
                PolicyKind::Nominal => out.nominal = Some(policy),
                PolicyKind::DomainRandomized => out.randomized = Some(policy),
            }
        }
        Ok(out)
    }

    pub fn get(&self, kind: PolicyKind) -> Result<&Policy, HarnessError> {
        let p = match kind {
            PolicyKind::Nominal => &self.nominal,
            PolicyKind::DomainRandomized => &self.randomized,
        };
        p.as_ref().ok_or_else(|| HarnessError::Config(format!("no {} policy loaded", kind.default_file())))
    }
}

/// One evaluated landing episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeRecord {
    pub seed: u64,
    pub condition: Condition,
    pub uncertainty: Uncertainty,
    pub outcome: Outcome,
    pub success_time: Option<f64>,
    /// Mean position distance from the same wiring's zero-uncertainty run.
    pub divergence: f64,
    pub fault: Option<String>,
    pub trajectory: Trajectory,
}

/// Mean Euclidean distance between the position components of `a` and `b`
/// over their shared samples.
pub fn trajectory_divergence(a: &Trajectory, b: &Trajectory) -> Result<f64, HarnessError> {
    let n = a.len().min(b.len());
    if n == 0 {
        return Err(HarnessError::Config("trajectories share no samples".into()));
    }
    if a.state_dim() < 3 || b.state_dim() < 3 {
        return Err(HarnessError::Config("trajectories need at least three position components".into()));
    }
    let total: f64 = a.states()[..n]
        .iter()
        .zip(&b.states()[..n])
        .map(|(p, q)| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt())
        .sum();
    Ok(total / n as f64)
}

pub fn run_episode(
    cfg: &ExperimentConfig,
    policies: &Policies,
    condition: Condition,
    uncertainty: Uncertainty,
    seed: u64,
) -> Result<EpisodeRecord, HarnessError> {
    let policy = policies.get(condition.policy())?;
    let wiring = match condition {
        Condition::Rl | Condition::DrRl => Wiring::Direct(policy),
        Condition::MracRl => Wiring::MracRl(policy, &cfg.mrac),
    };
    let run = run_landing(&cfg.task, Scenario::sample(&cfg.task, seed, &uncertainty)?, wiring)?;
    let divergence = if uncertainty == Uncertainty::None {
        0.0
    } else {
        let baseline = run_landing(&cfg.task, Scenario::sample(&cfg.task, seed, &Uncertainty::None)?, wiring)?;
        trajectory_divergence(&run.trajectory, &baseline.trajectory)?
    };
    Ok(EpisodeRecord {
        seed,
        condition,
        uncertainty,
        outcome: run.outcome,
        success_time: run.success_time,
        divergence,
        fault: run.fault,
        trajectory: run.trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(offset_z: f64, n: usize) -> Trajectory {
        let mut t = Trajectory::with_capacity(n);
        t.push_sample(0.0, vec![1.0, 2.0, 3.0 + offset_z]);
        for k in 1..n {
            t.push_interval(vec![0.0], k as f64, vec![1.0 + k as f64, 2.0, 3.0 + offset_z]);
        }
        t
    }

    #[test]
    fn divergence_examples() {
        assert_eq!(trajectory_divergence(&line(0.0, 5), &line(0.0, 5)).unwrap(), 0.0);
        assert!((trajectory_divergence(&line(0.0, 5), &line(1.0, 8)).unwrap() - 1.0).abs() < 1e-15);
        assert!(trajectory_divergence(&line(0.0, 5), &Trajectory::default()).is_err());
    }
}
