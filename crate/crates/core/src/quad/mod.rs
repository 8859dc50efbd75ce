//! Quadrotor landing on a moving platform: mixer, rigid-body and hover
//! linearized models, the landing envelope and ternary cost, uncertainty
//! injection, the PPO environment and the composed MRAC-RL controller.

mod config;
mod controller;
mod dynamics;
mod env;
mod episode;
mod landing;
mod params;

pub use config::{ActionMap, Actuation, LoeConfig, ObservationScale, ShapingWeights, TaskConfig};
pub use controller::{
    run_controller, run_landing, ChainLoop, DirectPolicy, FeatureSet, InnerLoop, InnerLoopConfig, LandingRun, MracRlController,
    QuadController, Wiring,
};
pub use dynamics::{
    idx, inverse_mixer, linearized_derivative, linearized_subsystems, mixer, mixer_matrix, quad_derivative, wrap_angle,
    wrap_attitude, Axis, InverseMixer, Propellers, QuadState, Subsystem, Wrench,
};
pub use env::LandingEnv;
pub use episode::{
    observation_scaling, observe, potential, Airframe, LandingSim, Scenario, Transition, Uncertainty, VehicleModel, ACTION_DIM,
    OBS_DIM,
};
pub use landing::{box_predicate, classify, landing_cost, BoxThresholds, InitialBounds, LandingSpec, Outcome, Platform, PlatformBounds};
pub use params::{apply_loe, sample_uncertain_params, QuadrotorParams};

use thiserror::Error;

use crate::mrac::MracError;
use crate::rl::RlError;
use crate::sim::SimError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error(transparent)]
    Sim(SimError),
    #[error(transparent)]
    Mrac(MracError),
    #[error(transparent)]
    Rl(RlError),
}
