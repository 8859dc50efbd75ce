use std::f64::consts::PI;
use std::path::Path;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::mlp::{LayerRecord, Mlp};
use super::RlError;

pub const POLICY_FORMAT_VERSION: u32 = 1;

/// Fixed affine observation normalization, `(obs − offset) ⊙ scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObsScaling {
    pub offset: Vec<f64>,
    pub scale: Vec<f64>,
}

impl ObsScaling {
    pub fn identity(dim: usize) -> Self {
        Self { offset: vec![0.0; dim], scale: vec![1.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.scale.len()
    }

    pub fn apply(&self, obs: &[f64]) -> Vec<f64> {
        obs.iter().zip(&self.offset).zip(&self.scale).map(|((o, c), s)| (o - c) * s).collect()
    }
}

/// Diagonal-Gaussian actor with a separate value network.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub actor: Mlp,
    pub critic: Mlp,
    pub log_std: DVector<f64>,
    pub scaling: ObsScaling,
}

/// Log density of `N(mean, diag(exp(log_std))²)` at `action`.
pub fn gaussian_log_prob(mean: &[f64], log_std: &[f64], action: &[f64]) -> f64 {
    let d = mean.len() as f64;
    let quad: f64 = mean
        .iter()
        .zip(log_std)
        .zip(action)
        .map(|((m, ls), a)| {
            let z = (a - m) * (-ls).exp();
            0.5 * z * z + ls
        })
        .sum();
    -quad - 0.5 * d * (2.0 * PI).ln()
}

impl Policy {
    pub fn new(actor: Mlp, critic: Mlp, log_std: DVector<f64>, scaling: ObsScaling) -> Result<Self, RlError> {
        if actor.output_dim() != log_std.len() {
            return Err(RlError::Shape(format!("actor emits {} actions but log_std has {}", actor.output_dim(), log_std.len())));
        }
        if critic.output_dim() != 1 {
            return Err(RlError::Shape("critic must output a scalar".into()));
        }
        if actor.input_dim() != critic.input_dim() || scaling.dim() != actor.input_dim() || scaling.offset.len() != scaling.dim()
        {
            return Err(RlError::Shape("actor, critic and observation scaling disagree on observation size".into()));
        }
        Ok(Self { actor, critic, log_std, scaling })
    }

    /// Random initialization with tanh hidden layers of the given widths.
    pub fn random<R: Rng + ?Sized>(
        scaling: ObsScaling,
        action_dim: usize,
        hidden: &[usize],
        init_log_std: f64,
        rng: &mut R,
    ) -> Result<Self, RlError> {
        let obs_dim = scaling.dim();
        let widths = |out: usize| {
            let mut v = vec![obs_dim];
            v.extend_from_slice(hidden);
            v.push(out);
            v
        };
        let actor = Mlp::random(&widths(action_dim), 0.01, rng)?;
        let critic = Mlp::random(&widths(1), 1.0, rng)?;
        Self::new(actor, critic, DVector::from_element(action_dim, init_log_std), scaling)
    }

    pub fn obs_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.log_std.len()
    }

    fn normalized(&self, obs: &[f64]) -> Result<Vec<f64>, RlError> {
        if obs.len() != self.obs_dim() {
            return Err(RlError::Dimension { expected: self.obs_dim(), got: obs.len() });
        }
        Ok(self.scaling.apply(obs))
    }

    /// Deterministic (evaluation) action.
    pub fn mean_action(&self, obs: &[f64]) -> Result<DVector<f64>, RlError> {
        self.actor.forward(&self.normalized(obs)?)
    }

    pub fn value(&self, obs: &[f64]) -> Result<f64, RlError> {
        Ok(self.critic.forward(&self.normalized(obs)?)?[0])
    }

    pub fn log_prob(&self, obs: &[f64], action: &[f64]) -> Result<f64, RlError> {
        if action.len() != self.action_dim() {
            return Err(RlError::Dimension { expected: self.action_dim(), got: action.len() });
        }
        let mean = self.mean_action(obs)?;
        Ok(gaussian_log_prob(mean.as_slice(), self.log_std.as_slice(), action))
    }

    pub fn sample<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> Result<(DVector<f64>, f64), RlError> {
        let mean = self.mean_action(obs)?;
        let action = DVector::from_fn(mean.len(), |i, _| {
            let eps: f64 = rng.sample(StandardNormal);
            mean[i] + self.log_std[i].exp() * eps
        });
        let lp = gaussian_log_prob(mean.as_slice(), self.log_std.as_slice(), action.as_slice());
        Ok((action, lp))
    }

    pub fn param_count(&self) -> usize {
        self.actor.param_count() + self.critic.param_count() + self.log_std.len()
    }

    /// Actor parameters, then critic, then `log_std`.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.param_count());
        self.actor.flatten_into(&mut v);
        self.critic.flatten_into(&mut v);
        v.extend(self.log_std.iter());
        v
    }

    pub fn set_flat_params(&mut self, params: &[f64]) -> Result<(), RlError> {
        if params.len() != self.param_count() {
            return Err(RlError::Shape(format!("{} parameters for a {}-parameter policy", params.len(), self.param_count())));
        }
        let a = self.actor.load_flat(params)?;
        let c = self.critic.load_flat(&params[a..])?;
        self.log_std.copy_from_slice(&params[a + c..]);
        Ok(())
    }

    pub fn to_json(&self) -> Result<String, RlError> {
        if !self.flat_params().iter().chain(&self.scaling.offset).chain(&self.scaling.scale).all(|v| v.is_finite()) {
            return Err(RlError::NonFinite("policy parameters".into()));
        }
        let file = PolicyFile {
            format_version: POLICY_FORMAT_VERSION,
            observation_scaling: self.scaling.clone(),
            actor: self.actor.to_records(),
            critic: self.critic.to_records(),
            log_std: self.log_std.as_slice().to_vec(),
        };
        serde_json::to_string_pretty(&file).map_err(|e| RlError::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, RlError> {
        let file: PolicyFile = serde_json::from_str(text).map_err(|e| RlError::Format(e.to_string()))?;
        if file.format_version != POLICY_FORMAT_VERSION {
            return Err(RlError::Format(format!("unsupported policy format version {}", file.format_version)));
        }
        Self::new(
            Mlp::from_records(&file.actor)?,
            Mlp::from_records(&file.critic)?,
            DVector::from_vec(file.log_std),
            file.observation_scaling,
        )
    }

    pub fn save(&self, path: &Path) -> Result<(), RlError> {
        std::fs::write(path, self.to_json()?).map_err(|e| RlError::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, RlError> {
        let text = std::fs::read_to_string(path).map_err(|e| RlError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

pub fn policy_sample<R: Rng + ?Sized>(policy: &Policy, obs: &[f64], rng: &mut R) -> Result<(DVector<f64>, f64), RlError> {
    policy.sample(obs, rng)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyFile {
    format_version: u32,
    observation_scaling: ObsScaling,
    actor: Vec<LayerRecord>,
    critic: Vec<LayerRecord>,
    log_std: Vec<f64>,
}
