use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::quad::{InnerLoopConfig, TaskConfig, Uncertainty};
use crate::rl::PpoConfig;

/// Controller wiring under evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    /// Nominal policy applied directly.
    Rl,
    /// Nominal policy driving the reference model, adaptive inner loop.
    MracRl,
    /// Domain-randomized policy applied directly.
    DrRl,
}

impl Condition {
    pub const ALL: [Condition; 3] = [Condition::Rl, Condition::MracRl, Condition::DrRl];

    pub fn label(self) -> &'static str {
        match self {
            Condition::Rl => "RL",
            Condition::MracRl => "MRAC-RL",
            Condition::DrRl => "DR-RL",
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            Condition::Rl => "rl",
            Condition::MracRl => "mrac-rl",
            Condition::DrRl => "dr-rl",
        }
    }

    pub fn policy(self) -> PolicyKind {
        match self {
            Condition::Rl | Condition::MracRl => PolicyKind::Nominal,
            Condition::DrRl => PolicyKind::DomainRandomized,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Condition {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Condition::ALL
            .into_iter()
            .find(|c| c.slug().eq_ignore_ascii_case(s) || c.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| HarnessError::Config(format!("unknown condition {s:?}; expected rl, mrac-rl or dr-rl")))
    }
}

/// Which trained policy a condition needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    Nominal,
    DomainRandomized,
}

impl PolicyKind {
    pub fn default_file(self) -> &'static str {
        match self {
            PolicyKind::Nominal => "rl_policy.json",
            PolicyKind::DomainRandomized => "dr_rl_policy.json",
        }
    }
}

/// Policy file locations; unset entries live in the output directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyPaths {
    pub rl: Option<PathBuf>,
    pub dr_rl: Option<PathBuf>,
}

/// One experiment, fully specified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: TaskConfig,
    pub mrac: InnerLoopConfig,
    pub ppo: PpoConfig,
    pub episodes: usize,
    pub seed_base: u64,
    pub conditions: Vec<Condition>,
    pub output_dir: PathBuf,
    pub policies: PolicyPaths,
    /// Half-width of the uniform parameter draw used to train the DR-RL policy.
    pub domain_randomization_pct: f64,
    /// Worker threads for episode evaluation.
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            task: TaskConfig::default(),
            mrac: InnerLoopConfig::default(),
            ppo: PpoConfig::default(),
            episodes: 100,
            seed_base: 1_000_000,
            conditions: Condition::ALL.to_vec(),
            output_dir: PathBuf::from("runs/default"),
            policies: PolicyPaths::default(),
            domain_randomization_pct: 0.25,
            threads: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        self.task.validate()?;
        self.ppo.validate()?;
        if self.episodes == 0 {
            return Err(HarnessError::Config("episodes must be at least 1".into()));
        }
        if self.conditions.is_empty() {
            return Err(HarnessError::Config("condition list must not be empty".into()));
        }
        if !(0.0..1.0).contains(&self.domain_randomization_pct) {
            return Err(HarnessError::Config(format!(
                "domain_randomization_pct must lie in [0, 1), got {}",
                self.domain_randomization_pct
            )));
        }
        if self.threads == 0 {
            return Err(HarnessError::Config("threads must be at least 1".into()));
        }
        for gains in [&self.mrac.lateral, &self.mrac.vertical, &self.mrac.yaw] {
            gains.validate().map_err(|e| HarnessError::Config(format!("mrac: {e}")))?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String, HarnessError> {
        serde_json::to_string_pretty(self).map_err(|e| HarnessError::Format(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn policy_path(&self, kind: PolicyKind) -> PathBuf {
        let set = match kind {
            PolicyKind::Nominal => &self.policies.rl,
            PolicyKind::DomainRandomized => &self.policies.dr_rl,
        };
        set.clone().unwrap_or_else(|| self.output_dir.join(kind.default_file()))
    }

    /// Uncertainty for `eval` and `compare`: the LOE block when it removes
    /// thrust, otherwise the parametric spread.
    pub fn evaluation_uncertainty(&self) -> Uncertainty {
        let loe = &self.task.loe;
        if loe.beta < 1.0 {
            Uncertainty::Loe { beta: loe.beta, index: loe.index, onset: loe.onset }
        } else if self.task.uncertainty_pct > 0.0 {
            Uncertainty::Parametric { pct: self.task.uncertainty_pct }
        } else {
            Uncertainty::None
        }
    }

    /// LOE with the configured propeller and onset at effectiveness `beta`.
    pub fn loe(&self, beta: f64) -> Uncertainty {
        Uncertainty::Loe { beta, index: self.task.loe.index, onset: self.task.loe.onset }
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.episodes as u64).map(|k| self.seed_base + k)
    }
}
