//! Quantities the controller never sees: ideal gains from the matching
//! conditions and the Lyapunov function built on them. Used to check the
//! closed loop from the outside.

use nalgebra::{DMatrix, DVector};

use super::MracError;

#[derive(Debug, Clone, PartialEq)]
pub struct MatchingParams {
    pub k_star: DVector<f64>,
    pub k_star_xi: f64,
    /// `b / b_r`
    pub lambda: f64,
}

/// Ideal gains satisfying `α + λ b_r K* = α_r` and `λ k* b_r = b_r`.
pub fn matching_params(
    alpha: &DVector<f64>,
    alpha_r: &DVector<f64>,
    b_r: f64,
    lambda: f64,
) -> Result<MatchingParams, MracError> {
    if !(lambda > 0.0) {
        return Err(MracError::Parameter(format!("lambda must be positive, got {lambda}")));
    }
    if b_r == 0.0 {
        return Err(MracError::Parameter("b_r must be nonzero".into()));
    }
    if alpha.len() != alpha_r.len() {
        return Err(MracError::Dimension { expected: alpha_r.len(), got: alpha.len() });
    }
    Ok(MatchingParams { k_star: (alpha_r - alpha) / (lambda * b_r), k_star_xi: 1.0 / lambda, lambda })
}

/// `V = e_xᵀ P e_x + λ K̃ᵀ Γ⁻¹ K̃ + λ k̃² / γ_ξ`
pub fn lyapunov_value(
    e_x: &DVector<f64>,
    k_tilde: &DVector<f64>,
    k_tilde_xi: f64,
    p: &DMatrix<f64>,
    gamma_zeta: &DMatrix<f64>,
    gamma_xi: f64,
    lambda: f64,
) -> f64 {
    let tracking = (e_x.transpose() * p * e_x)[(0, 0)];
    let gamma_inv_k = gamma_zeta
        .clone()
        .cholesky()
        .expect("Gamma_zeta is positive definite")
        .solve(k_tilde);
    tracking + lambda * k_tilde.dot(&gamma_inv_k) + lambda * k_tilde_xi * k_tilde_xi / gamma_xi
}
