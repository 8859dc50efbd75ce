use rand::Rng;

use super::ppo::{Environment, Step};
use crate::seed::stream_rng;

/// Point mass on a line, `p̈ = a`, regulated to the origin under a quadratic
/// cost `(p² + v² + 0.1 a²)·dt` per step. Episodes have a fixed length.
#[derive(Debug, Clone)]
pub struct DoubleIntegrator {
    pub dt: f64,
    pub horizon: usize,
    pub max_force: f64,
    state: [f64; 2],
    t: usize,
}

impl Default for DoubleIntegrator {
    fn default() -> Self {
        Self { dt: 0.1, horizon: 50, max_force: 2.0, state: [0.0; 2], t: 0 }
    }
}

impl DoubleIntegrator {
    pub fn state(&self) -> [f64; 2] {
        self.state
    }
}

impl Environment for DoubleIntegrator {
    fn observation_dim(&self) -> usize {
        2
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = stream_rng(seed, 0);
        self.state = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        self.t = 0;
        self.state.to_vec()
    }

    fn step(&mut self, action: &[f64]) -> Step {
        let a = action[0].clamp(-self.max_force, self.max_force);
        let [p, v] = self.state;
        let cost = (p * p + v * v + 0.1 * a * a) * self.dt;
        self.state = [p + v * self.dt + 0.5 * a * self.dt * self.dt, v + a * self.dt];
        self.t += 1;
        Step { obs: self.state.to_vec(), cost, shaping: 0.0, done: self.t >= self.horizon }
    }
}
