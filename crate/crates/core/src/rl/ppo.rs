use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gae::{gae_advantages, normalize_advantages};
use super::policy::{gaussian_log_prob, ObsScaling, Policy};
use super::RlError;
use crate::seed::{derive_seed, stream_rng};

/// Outcome of one environment transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub obs: Vec<f64>,
    /// Task cost of the transition.
    pub cost: f64,
    /// Training-only reward term added on top of `−cost` (zero unless the
    /// environment shapes its reward). Never enters reported costs.
    pub shaping: f64,
    pub done: bool,
}

impl Step {
    /// The quantity PPO maximizes.
    pub fn reward(&self) -> f64 {
        -self.cost + self.shaping
    }
}

/// Episodic environment seen by [`train_ppo`].
pub trait Environment {
    fn observation_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    fn observation_scaling(&self) -> ObsScaling {
        ObsScaling::identity(self.observation_dim())
    }
    fn reset(&mut self, seed: u64) -> Vec<f64>;
    fn step(&mut self, action: &[f64]) -> Step;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub learning_rate: f64,
    pub gamma: f64,
    pub clip_range: f64,
    pub gae_lambda: f64,
    pub epochs_per_batch: usize,
    pub minibatch_size: usize,
    pub steps_per_batch: usize,
    pub total_steps: usize,
    pub value_loss_coefficient: f64,
    pub entropy_coefficient: f64,
    pub rng_seed: u64,
    pub optimizer: OptimizerKind,
    pub max_grad_norm: Option<f64>,
    pub hidden_sizes: Vec<usize>,
    pub init_log_std: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            gamma: 0.99,
            clip_range: 0.2,
            gae_lambda: 0.95,
            epochs_per_batch: 10,
            minibatch_size: 256,
            steps_per_batch: 4096,
            total_steps: 2_000_000,
            value_loss_coefficient: 0.5,
            entropy_coefficient: 0.0,
            rng_seed: 0,
            optimizer: OptimizerKind::Sgd,
            max_grad_norm: None,
            hidden_sizes: vec![64, 64],
            init_log_std: 0.0,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), RlError> {
        let fail = |m: String| Err(RlError::Config(m));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return fail(format!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        if !(self.gae_lambda > 0.0 && self.gae_lambda <= 1.0) {
            return fail(format!("gae_lambda must lie in (0, 1], got {}", self.gae_lambda));
        }
        if !(self.clip_range > 0.0) {
            return fail(format!("clip_range must be positive, got {}", self.clip_range));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.epochs_per_batch == 0 || self.minibatch_size == 0 || self.steps_per_batch == 0 {
            return fail("epochs_per_batch, minibatch_size and steps_per_batch must be positive".into());
        }
        if self.hidden_sizes.contains(&0) {
            return fail("hidden layer widths must be positive".into());
        }
        if let Some(g) = self.max_grad_norm {
            if !(g > 0.0) {
                return fail(format!("max_grad_norm must be positive, got {g}"));
            }
        }
        if self.value_loss_coefficient < 0.0 || self.entropy_coefficient < 0.0 {
            return fail("loss coefficients must be nonnegative".into());
        }
        Ok(())
    }
}

/// Gradient-descent state over the flat policy parameter vector.
#[derive(Debug, Clone)]
pub enum Optimizer {
    Sgd { lr: f64 },
    Adam { lr: f64, m: Vec<f64>, v: Vec<f64>, t: u64 },
}

impl Optimizer {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    pub fn new(kind: OptimizerKind, lr: f64, n_params: usize) -> Self {
        match kind {
            OptimizerKind::Sgd => Self::Sgd { lr },
            OptimizerKind::Adam => Self::Adam { lr, m: vec![0.0; n_params], v: vec![0.0; n_params], t: 0 },
        }
    }

    /// Moves `params` against `grad`.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        match self {
            Self::Sgd { lr } => params.iter_mut().zip(grad).for_each(|(p, g)| *p -= *lr * g),
            Self::Adam { lr, m, v, t } => {
                *t += 1;
                let c1 = 1.0 - Self::BETA1.powi(*t as i32);
                let c2 = 1.0 - Self::BETA2.powi(*t as i32);
                for i in 0..params.len() {
                    m[i] = Self::BETA1 * m[i] + (1.0 - Self::BETA1) * grad[i];
                    v[i] = Self::BETA2 * v[i] + (1.0 - Self::BETA2) * grad[i] * grad[i];
                    params[i] -= *lr * (m[i] / c1) / ((v[i] / c2).sqrt() + Self::EPS);
                }
            }
        }
    }
}

/// Rollout data for one update; observations are raw (unscaled), one per
/// column.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub obs: DMatrix<f64>,
    pub actions: DMatrix<f64>,
    pub old_log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub value_targets: Vec<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.old_log_probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.old_log_probs.is_empty()
    }

    fn check(&self, policy: &Policy) -> Result<(), RlError> {
        let n = self.len();
        if self.obs.nrows() != policy.obs_dim() {
            return Err(RlError::Dimension { expected: policy.obs_dim(), got: self.obs.nrows() });
        }
        if self.actions.nrows() != policy.action_dim() {
            return Err(RlError::Dimension { expected: policy.action_dim(), got: self.actions.nrows() });
        }
        for len in [self.obs.ncols(), self.actions.ncols(), self.advantages.len(), self.value_targets.len()] {
            if len != n {
                return Err(RlError::Dimension { expected: n, got: len });
            }
        }
        Ok(())
    }
}

/// Averages over the minibatches of one [`ppo_update`] call.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    /// True when a non-finite loss or gradient forced the update to be rolled
    /// back.
    pub discarded: bool,
}

struct Minibatch {
    loss_terms: [f64; 5],
    grad: Vec<f64>,
}

fn scale_columns(policy: &Policy, obs: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = obs.clone();
    for (r, (c, s)) in policy.scaling.offset.iter().zip(&policy.scaling.scale).enumerate() {
        out.row_mut(r).apply(|v| *v = (*v - c) * s);
    }
    out
}

fn minibatch_gradient(
    policy: &Policy,
    obs: &DMatrix<f64>,
    batch: &Batch,
    idx: &[usize],
    cfg: &PpoConfig,
) -> Result<Minibatch, RlError> {
    let b = idx.len() as f64;
    let d = policy.action_dim();
    let x = obs.select_columns(idx);
    let actor = policy.actor.forward_batch(&x)?;
    let critic = policy.critic.forward_batch(&x)?;
    let mean = actor.output();
    let values = critic.output();

    let inv_var: Vec<f64> = policy.log_std.iter().map(|ls| (-2.0 * ls).exp()).collect();
    let mut mean_j = vec![0.0; d];
    let mut action_j = vec![0.0; d];
    let eps = cfg.clip_range;

    let mut up_actor = DMatrix::zeros(d, idx.len());
    let mut up_critic = DMatrix::zeros(1, idx.len());
    let mut g_log_std = vec![0.0; d];
    let (mut pg, mut vl, mut kl, mut clipped) = (0.0, 0.0, 0.0, 0.0);

    for (j, &k) in idx.iter().enumerate() {
        for i in 0..d {
            mean_j[i] = mean[(i, j)];
            action_j[i] = batch.actions[(i, k)];
        }
        let log_prob = gaussian_log_prob(&mean_j, policy.log_std.as_slice(), &action_j);
        let log_ratio = log_prob - batch.old_log_probs[k];
        let ratio = log_ratio.exp();
        let adv = batch.advantages[k];
        let unclipped = ratio * adv;
        let clipped_obj = ratio.clamp(1.0 - eps, 1.0 + eps) * adv;
        pg -= unclipped.min(clipped_obj) / b;
        kl -= log_ratio / b;
        if (ratio - 1.0).abs() > eps {
            clipped += 1.0 / b;
        }
        // The min picks the unclipped branch whenever it is the smaller one;
        // otherwise the objective is flat in the parameters.
        let g_lp = if unclipped <= clipped_obj { -unclipped / b } else { 0.0 };
        if g_lp != 0.0 {
            for i in 0..d {
                let diff = batch.actions[(i, k)] - mean[(i, j)];
                up_actor[(i, j)] = g_lp * diff * inv_var[i];
                g_log_std[i] += g_lp * (diff * diff * inv_var[i] - 1.0);
            }
        }
        let err = values[(0, j)] - batch.value_targets[k];
        vl += err * err / b;
        up_critic[(0, j)] = cfg.value_loss_coefficient * 2.0 * err / b;
    }

    let entropy = policy.log_std.sum() + 0.5 * d as f64 * (1.0 + (2.0 * std::f64::consts::PI).ln());
    g_log_std.iter_mut().for_each(|g| *g -= cfg.entropy_coefficient);

    let mut grad = Vec::with_capacity(policy.param_count());
    policy.actor.backward(&actor, &up_actor)?.flatten_into(&mut grad);
    policy.critic.backward(&critic, &up_critic)?.flatten_into(&mut grad);
    grad.extend(g_log_std);
    let total = pg + cfg.value_loss_coefficient * vl - cfg.entropy_coefficient * entropy;
    if !total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(RlError::NonFinite("PPO loss".into()));
    }
    Ok(Minibatch { loss_terms: [pg, vl, entropy, kl, clipped], grad })
}

/// Log-probabilities of the batch actions under `policy`, computed the way
/// [`ppo_update`] computes them.
pub fn recompute_log_probs(policy: &Policy, batch: &Batch) -> Result<Vec<f64>, RlError> {
    batch.check(policy)?;
    let cache = policy.actor.forward_batch(&scale_columns(policy, &batch.obs))?;
    let mean = cache.output();
    Ok((0..batch.len())
        .map(|k| {
            let m: Vec<f64> = mean.column(k).iter().copied().collect();
            let a: Vec<f64> = batch.actions.column(k).iter().copied().collect();
            gaussian_log_prob(&m, policy.log_std.as_slice(), &a)
        })
        .collect())
}

/// Collects one batch with `policy` from a fresh run seeded by `seed`, as the
/// first batch of [`train_ppo`] would.
pub fn collect_batch<E: Environment + ?Sized>(
    env: &mut E,
    policy: &Policy,
    cfg: &PpoConfig,
) -> Result<Batch, RlError> {
    let mut rollout = Rollout::new(env, cfg.rng_seed)?;
    Ok(rollout.collect(policy, cfg.steps_per_batch, cfg)?.0)
}

/// Clipped-surrogate PPO epochs over one batch.
///
/// Advantages are used as given; [`train_ppo`] normalizes them beforehand.
/// If any minibatch produces a non-finite loss or gradient the policy and
/// optimizer are restored to their state on entry and the returned stats are
/// flagged `discarded`.
pub fn ppo_update(
    policy: &mut Policy,
    batch: &Batch,
    cfg: &PpoConfig,
    optimizer: &mut Optimizer,
    rng: &mut ChaCha8Rng,
) -> Result<UpdateStats, RlError> {
    batch.check(policy)?;
    if batch.is_empty() {
        return Ok(UpdateStats::default());
    }
    let obs = scale_columns(policy, &batch.obs);
    let saved_policy = policy.clone();
    let saved_opt = optimizer.clone();
    let mut params = policy.flat_params();
    let mut order: Vec<usize> = (0..batch.len()).collect();
    let mut sums = [0.0; 5];
    let mut count = 0usize;

    for _ in 0..cfg.epochs_per_batch {
        order.shuffle(rng);
        for idx in order.chunks(cfg.minibatch_size) {
            let mb = match minibatch_gradient(policy, &obs, batch, idx, cfg) {
                Ok(mb) => mb,
                Err(RlError::NonFinite(_)) => {
                    *policy = saved_policy;
                    *optimizer = saved_opt;
                    return Ok(UpdateStats { discarded: true, ..UpdateStats::default() });
                }
                Err(e) => return Err(e),
            };
            let mut grad = mb.grad;
            if let Some(max_norm) = cfg.max_grad_norm {
                let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
                if norm > max_norm {
                    grad.iter_mut().for_each(|g| *g *= max_norm / norm);
                }
            }
            optimizer.step(&mut params, &grad);
            policy.set_flat_params(&params)?;
            sums.iter_mut().zip(mb.loss_terms).for_each(|(s, v)| *s += v);
            count += 1;
        }
    }
    let n = count as f64;
    Ok(UpdateStats {
        policy_loss: sums[0] / n,
        value_loss: sums[1] / n,
        entropy: sums[2] / n,
        approx_kl: sums[3] / n,
        clip_fraction: sums[4] / n,
        discarded: false,
    })
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchLog {
    pub batch: usize,
    pub total_steps: usize,
    pub episodes_completed: usize,
    /// Mean summed task cost over episodes that ended inside this batch.
    pub mean_episode_cost: Option<f64>,
    pub stats: UpdateStats,
    pub discarded_batches: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub policy: Policy,
    pub log: Vec<BatchLog>,
}

/// Seed of episode `k` in a training run with base seed `seed`.
pub fn episode_seed(seed: u64, k: u64) -> u64 {
    derive_seed(seed, 1_000 + k)
}

fn check_obs(obs: &[f64], dim: usize, episode: u64, step: usize) -> Result<(), RlError> {
    if obs.len() != dim {
        return Err(RlError::Dimension { expected: dim, got: obs.len() });
    }
    if obs.iter().any(|v| !v.is_finite()) {
        return Err(RlError::NonFiniteObservation { episode, step });
    }
    Ok(())
}

struct Rollout<'a, E: ?Sized> {
    env: &'a mut E,
    seed: u64,
    episode: u64,
    episode_step: usize,
    episode_cost: f64,
    obs: Vec<f64>,
    noise: ChaCha8Rng,
}

impl<'a, E: Environment + ?Sized> Rollout<'a, E> {
    fn new(env: &'a mut E, seed: u64) -> Result<Self, RlError> {
        let s0 = episode_seed(seed, 0);
        let obs = env.reset(s0);
        check_obs(&obs, env.observation_dim(), 0, 0)?;
        Ok(Self { env, seed, episode: 0, episode_step: 0, episode_cost: 0.0, obs, noise: stream_rng(s0, 1) })
    }

    fn next_episode(&mut self) -> Result<(), RlError> {
        self.episode += 1;
        let s = episode_seed(self.seed, self.episode);
        self.obs = self.env.reset(s);
        self.noise = stream_rng(s, 1);
        self.episode_step = 0;
        self.episode_cost = 0.0;
        check_obs(&self.obs, self.env.observation_dim(), self.episode, 0)
    }

    /// Collects `n` transitions; returns the batch and the summed costs of
    /// episodes that finished inside it.
    fn collect(&mut self, policy: &Policy, n: usize, cfg: &PpoConfig) -> Result<(Batch, Vec<f64>), RlError> {
        let od = policy.obs_dim();
        let ad = policy.action_dim();
        let mut obs = DMatrix::zeros(od, n);
        let mut actions = DMatrix::zeros(ad, n);
        let mut old_log_probs = Vec::with_capacity(n);
        let mut rewards = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n + 1);
        let mut dones = Vec::with_capacity(n);
        let mut finished = Vec::new();
        for t in 0..n {
            let (a, lp) = policy.sample(&self.obs, &mut self.noise)?;
            values.push(policy.value(&self.obs)?);
            obs.set_column(t, &nalgebra::DVector::from_column_slice(&self.obs));
            actions.set_column(t, &a);
            old_log_probs.push(lp);
            let step = self.env.step(a.as_slice());
            self.episode_step += 1;
            check_obs(&step.obs, od, self.episode, self.episode_step)?;
            rewards.push(step.reward());
            dones.push(step.done);
            self.episode_cost += step.cost;
            if step.done {
                finished.push(self.episode_cost);
                self.next_episode()?;
            } else {
                self.obs = step.obs;
            }
        }
        values.push(policy.value(&self.obs)?);
        let (mut advantages, value_targets) = gae_advantages(&rewards, &values, &dones, cfg.gamma, cfg.gae_lambda)?;
        normalize_advantages(&mut advantages);
        Ok((Batch { obs, actions, old_log_probs, advantages, value_targets }, finished))
    }
}

/// Initial policy for a run: seeded from `cfg.rng_seed` and shaped by the
/// environment.
pub fn initial_policy<E: Environment + ?Sized>(env: &E, cfg: &PpoConfig) -> Result<Policy, RlError> {
    let mut rng = stream_rng(cfg.rng_seed, 0);
    Policy::random(env.observation_scaling(), env.action_dim(), &cfg.hidden_sizes, cfg.init_log_std, &mut rng)
}

/// Rollout, GAE, and update, repeated for `total_steps / steps_per_batch`
/// batches. `progress` sees every log line as it is produced.
pub fn train_ppo_with<E: Environment + ?Sized>(
    env: &mut E,
    cfg: &PpoConfig,
    initial: Option<Policy>,
    mut progress: impl FnMut(&BatchLog),
) -> Result<TrainOutcome, RlError> {
    cfg.validate()?;
    let mut policy = match initial {
        Some(p) => p,
        None => initial_policy(env, cfg)?,
    };
    if policy.obs_dim() != env.observation_dim() || policy.action_dim() != env.action_dim() {
        return Err(RlError::Shape("policy does not fit the environment".into()));
    }
    let n_batches = cfg.total_steps / cfg.steps_per_batch;
    let mut log = Vec::with_capacity(n_batches);
    if n_batches == 0 {
        return Ok(TrainOutcome { policy, log });
    }
    let mut optimizer = Optimizer::new(cfg.optimizer, cfg.learning_rate, policy.param_count());
    let mut shuffle = stream_rng(cfg.rng_seed, 2);
    let mut rollout = Rollout::new(env, cfg.rng_seed)?;
    let mut discarded = 0;
    for k in 0..n_batches {
        let (batch, finished) = rollout.collect(&policy, cfg.steps_per_batch, cfg)?;
        let stats = ppo_update(&mut policy, &batch, cfg, &mut optimizer, &mut shuffle)?;
        if stats.discarded {
            discarded += 1;
        }
        let line = BatchLog {
            batch: k,
            total_steps: (k + 1) * cfg.steps_per_batch,
            episodes_completed: finished.len(),
            mean_episode_cost: (!finished.is_empty()).then(|| finished.iter().sum::<f64>() / finished.len() as f64),
            stats,
            discarded_batches: discarded,
        };
        progress(&line);
        log.push(line);
    }
    Ok(TrainOutcome { policy, log })
}

pub fn train_ppo<E: Environment + ?Sized>(env: &mut E, cfg: &PpoConfig) -> Result<TrainOutcome, RlError> {
    train_ppo_with(env, cfg, None, |_| {})
}

/// Summed task cost of one mean-action episode per seed, capped at
/// `max_steps` transitions each.
pub fn evaluate_policy<E: Environment + ?Sized>(
    env: &mut E,
    policy: &Policy,
    seeds: &[u64],
    max_steps: usize,
) -> Result<Vec<f64>, RlError> {
    seeds
        .iter()
        .map(|&s| {
            let mut obs = env.reset(s);
            let mut total = 0.0;
            for _ in 0..max_steps {
                let a = policy.mean_action(&obs)?;
                let step = env.step(a.as_slice());
                total += step.cost;
                if step.done {
                    break;
                }
                obs = step.obs;
            }
            Ok(total)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rl::mlp::{Layer, Mlp};
    use nalgebra::DVector;
    use rand::SeedableRng;

    /// Scalar policy: mean = w·obs + b, fixed zero critic.
    fn toy(w: f64, b: f64, log_std: f64) -> Policy {
        let actor = Mlp::new(vec![Layer {
            weights: DMatrix::from_element(1, 1, w),
            bias: DVector::from_element(1, b),
        }])
        .unwrap();
        Policy::new(actor, Mlp::zeros(&[1, 1]).unwrap(), DVector::from_element(1, log_std), ObsScaling::identity(1))
            .unwrap()
    }

    fn one_sample(policy: &Policy, obs: f64, action: f64, ratio: f64, adv: f64) -> Batch {
        let lp = policy.log_prob(&[obs], &[action]).unwrap();
        Batch {
            obs: DMatrix::from_element(1, 1, obs),
            actions: DMatrix::from_element(1, 1, action),
            old_log_probs: vec![lp - ratio.ln()],
            advantages: vec![adv],
            value_targets: vec![0.0],
        }
    }

    fn sgd_cfg(lr: f64) -> PpoConfig {
        PpoConfig { learning_rate: lr, epochs_per_batch: 1, minibatch_size: 8, ..PpoConfig::default() }
    }

    fn run(policy: &mut Policy, batch: &Batch, cfg: &PpoConfig) -> UpdateStats {
        let mut opt = Optimizer::new(cfg.optimizer, cfg.learning_rate, policy.param_count());
        ppo_update(policy, batch, cfg, &mut opt, &mut ChaCha8Rng::seed_from_u64(0)).unwrap()
    }

    #[test]
    fn hand_computed_single_step() {
        // obs = 0 leaves only the bias b as a live parameter. With σ = 1 and
        // a − μ = 1: ∂log π/∂b = 1, ∂log π/∂log σ = (a−μ)² − 1 = 0.
        // ratio 1.1 is inside the clip range, so ∂L/∂b = −ratio·A = −2.2.
        let mut p = toy(0.5, 0.3, 0.0);
        let batch = one_sample(&p, 0.0, 1.3, 1.1, 2.0);
        let cfg = sgd_cfg(0.01);
        run(&mut p, &batch, &cfg);
        let layer = &p.actor.layers()[0];
        assert!((layer.bias[0] - (0.3 + 0.01 * 2.2)).abs() < 1e-8);
        assert_eq!(layer.weights[(0, 0)], 0.5);
        assert!(p.log_std[0].abs() < 1e-12);
    }

    #[test]
    fn clipped_sample_has_zero_gradient() {
        for (ratio, adv) in [(1.35, 1.0), (0.6, -1.0)] {
            let mut p = toy(0.5, 0.3, 0.0);
            let before = p.clone();
            let batch = one_sample(&p, 1.0, 0.2, ratio, adv);
            let stats = run(&mut p, &batch, &sgd_cfg(0.1));
            assert_eq!(p, before);
            assert_eq!(stats.clip_fraction, 1.0);
        }
    }

    #[test]
    fn zero_advantage_exact_values_leave_policy_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut p = Policy::random(ObsScaling::identity(3), 2, &[5], -0.3, &mut rng).unwrap();
        let obs = DMatrix::from_fn(3, 6, |r, c| (r * c) as f64 * 0.1 - 0.4);
        let mut actions = DMatrix::zeros(2, 6);
        let mut old = Vec::new();
        let mut targets = Vec::new();
        for c in 0..6 {
            let o: Vec<f64> = obs.column(c).iter().copied().collect();
            let (a, lp) = p.sample(&o, &mut rng).unwrap();
            actions.set_column(c, &a);
            old.push(lp);
            targets.push(p.value(&o).unwrap());
        }
        let batch = Batch { obs, actions, old_log_probs: old, advantages: vec![0.0; 6], value_targets: targets };
        let before = p.clone();
        let stats = run(&mut p, &batch, &PpoConfig { epochs_per_batch: 3, minibatch_size: 4, ..PpoConfig::default() });
        assert_eq!(p, before);
        assert_eq!(stats.approx_kl, 0.0);
        assert_eq!(stats.clip_fraction, 0.0);
    }

    #[test]
    fn non_finite_batch_is_rolled_back() {
        let mut p = toy(0.5, 0.3, 0.0);
        let mut batch = one_sample(&p, 1.0, 0.2, 1.0, 1.0);
        batch.advantages[0] = f64::NAN;
        let before = p.clone();
        assert!(run(&mut p, &batch, &sgd_cfg(0.1)).discarded);
        assert_eq!(p, before);
    }

    #[test]
    fn adam_first_step_moves_by_learning_rate() {
        let mut opt = Optimizer::new(OptimizerKind::Adam, 0.1, 2);
        let mut x = vec![1.0, -1.0];
        opt.step(&mut x, &[3.0, -0.5]);
        assert!((x[0] - 0.9).abs() < 1e-7);
        assert!((x[1] + 0.9).abs() < 1e-7);
    }

    #[test]
    fn config_validation() {
        assert!(PpoConfig::default().validate().is_ok());
        for bad in [
            PpoConfig { gamma: 1.0, ..PpoConfig::default() },
            PpoConfig { gae_lambda: 0.0, ..PpoConfig::default() },
            PpoConfig { clip_range: 0.0, ..PpoConfig::default() },
            PpoConfig { steps_per_batch: 0, ..PpoConfig::default() },
        ] {
            assert!(bad.validate().is_err());
        }
        let parsed: PpoConfig = serde_json::from_str(r#"{"optimizer": "adam", "total_steps": 10}"#).unwrap();
        assert_eq!(parsed.optimizer, OptimizerKind::Adam);
        assert_eq!(parsed.learning_rate, 1e-4);
        assert!(serde_json::from_str::<PpoConfig>(r#"{"learning_rat": 1}"#).is_err());
    }
}
