use super::config::{Actuation, TaskConfig};
use super::episode::{observation_scaling, potential, LandingSim, Scenario, Uncertainty, ACTION_DIM, OBS_DIM};
use super::QuadError;
use crate::rl::{Environment, ObsScaling, Step};

/// The landing task as a PPO environment. Rewards carry the shaping term
/// `Φ(s′) − Φ(s)` on top of the ternary cost; the cost itself is reported
/// unchanged. Summed over an episode the shaping equals `Φ(s_T) − Φ(s_0)`.
#[derive(Debug, Clone)]
pub struct LandingEnv {
    task: TaskConfig,
    actuation: Actuation,
    uncertainty: Uncertainty,
    sim: Option<LandingSim>,
    phi: f64,
}

impl LandingEnv {
    /// Nominal-parameter training environment.
    pub fn new(task: TaskConfig) -> Result<Self, QuadError> {
        Self::with_uncertainty(task, Uncertainty::None)
    }

    /// Domain-randomized environment: airframe parameters redrawn within
    /// `±pct` each episode.
    pub fn randomized(task: TaskConfig, pct: f64) -> Result<Self, QuadError> {
        Self::with_uncertainty(task, Uncertainty::Parametric { pct })
    }

    pub fn with_uncertainty(task: TaskConfig, uncertainty: Uncertainty) -> Result<Self, QuadError> {
        task.validate()?;
        Scenario::sample(&task, 0, &uncertainty)?;
        let actuation = Actuation::new(&task)?;
        Ok(Self { task, actuation, uncertainty, sim: None, phi: 0.0 })
    }

    pub fn task(&self) -> &TaskConfig {
        &self.task
    }

    pub fn sim(&self) -> Option<&LandingSim> {
        self.sim.as_ref()
    }
}

impl Environment for LandingEnv {
    fn observation_dim(&self) -> usize {
        OBS_DIM
    }

    fn action_dim(&self) -> usize {
        ACTION_DIM
    }

    fn observation_scaling(&self) -> ObsScaling {
        observation_scaling(&self.task)
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let scenario = Scenario::sample(&self.task, seed, &self.uncertainty).expect("uncertainty validated at construction");
        let sim = LandingSim::new(&self.task, scenario).expect("task validated at construction");
        self.phi = potential(&self.task, sim.state(), &sim.scenario.platform, 0.0);
        let obs = sim.observation().to_vec();
        self.sim = Some(sim);
        obs
    }

    fn step(&mut self, action: &[f64]) -> Step {
        let sim = self.sim.as_mut().expect("reset before step");
        let u = self.actuation.from_action(action);
        let tr = sim.advance(&u).expect("step after episode end");
        let done = tr.outcome.is_some();
        let phi_next = potential(&self.task, sim.state(), &sim.scenario.platform, sim.time());
        let shaping = phi_next - self.phi;
        self.phi = phi_next;
        Step { obs: sim.observation().to_vec(), cost: tr.cost, shaping, done }
    }
}
