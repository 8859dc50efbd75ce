//! Two-loop control toolkit: a reinforcement-learned policy drives a nominal
//! reference model while a model-reference adaptive controller makes the
//! real plant follow it.
//!
//! - [`sim`]: canonical-form plants, RK4 with zero-order hold.
//! - [`mrac`]: Hurwitz target design, Lyapunov solver, adaptive law.
//! - [`rl`]: MLP actor-critic, PPO with GAE, tabular Q-learning.
//! - [`quad`]: quadrotor dynamics and the moving-platform landing task.
//! - [`harness`]: seeded experiments, success tables, LOE sweeps.


pub mod harness;
pub mod mrac;
pub mod quad;
pub mod rl;
pub mod seed;
pub mod sim;
