//! Continuous-time plants in controllable-canonical form and a fixed-step
//! RK4 integrator with zero-order-hold control.

mod integrate;
mod plant;
mod trajectory;

pub use integrate::{rk4_step, rk4_step_at, simulate, simulate_with, Command, Controller, IntegratorConfig, OdeState, SimOutcome};
pub use plant::{canonical_derivative, pendulum_plant, CanonicalPlant, Nonlinearity};
pub use trajectory::Trajectory;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("non-finite state derivative at RK4 stage {stage}")]
    NonFinite { stage: usize },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("invalid integrator configuration: {0}")]
    Config(String),
}
