//! Inner-loop model-reference adaptive control.
//!
//! The reference model is driven by an outer-loop policy through `u_r`; the
//! adaptive law turns `u_r` into a plant input so that the plant state tracks
//! the reference state despite unknown `α` and `b`.

mod analysis;
mod hurwitz;
mod law;
mod lyapunov;
mod tracker;

pub use analysis::{lyapunov_value, matching_params, MatchingParams};
pub use hurwitz::{build_hurwitz, default_sigma, HurwitzTarget};
pub use law::{compute_xi, mrac_control, mrac_update, AdaptiveLoopState, MracConfig};
pub use lyapunov::solve_lyapunov;
pub use tracker::{MracTracker, TrackingSample};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MracError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("eigenvalue {0} does not have negative real part")]
    NotStable(String),
    #[error("complex eigenvalues must come in conjugate pairs")]
    NotConjugate,
    #[error("matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(&'static str),
    #[error("Lyapunov equation has no stabilizing solution: {0}")]
    Stability(String),
    #[error("non-finite value in adaptive update")]
    Adaptation,
    #[error("invalid parameter: {0}")]
    Parameter(String),
}
