use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{build_hurwitz, default_sigma, HurwitzTarget, MracError};
use crate::sim::CanonicalPlant;

/// Hyperparameters of one adaptive loop. Field names follow the experiment
/// config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MracConfig {
    /// Base closed-loop eigenvalue; loop `i` uses `sigma − 0.01 i`.
    pub sigma: f64,
    #[serde(rename = "Q_scale")]
    pub q_scale: f64,
    #[serde(rename = "Gamma_scale")]
    pub gamma_scale: f64,
    pub gamma_xi: f64,
}

impl Default for MracConfig {
    fn default() -> Self {
        Self { sigma: -2.0, q_scale: 1.0, gamma_scale: 10.0, gamma_xi: 10.0 }
    }
}

impl MracConfig {
    pub fn validate(&self) -> Result<(), MracError> {
        if !(self.sigma < 0.0) {
            return Err(MracError::NotStable(format!("sigma = {}", self.sigma)));
        }
        for (name, v) in [("Q_scale", self.q_scale), ("Gamma_scale", self.gamma_scale), ("gamma_xi", self.gamma_xi)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(MracError::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Builds a loop around `reference` with gains at their initial values.
    pub fn build_loop(&self, reference: CanonicalPlant) -> Result<AdaptiveLoopState, MracError> {
        self.validate()?;
        let n = reference.dim();
        let p = reference.feature_dim();
        let q = DMatrix::identity(n, n) * self.q_scale;
        let target = build_hurwitz(reference.delta(), &default_sigma(self.sigma, n), &q)?;
        AdaptiveLoopState::new(reference, target, DMatrix::identity(p, p) * self.gamma_scale, self.gamma_xi)
    }
}

/// Adaptive gains plus the fixed design quantities of one loop.
#[derive(Debug, Clone)]
pub struct AdaptiveLoopState {
    pub k_zeta: DVector<f64>,
    pub k_xi: f64,
    gamma_zeta: DMatrix<f64>,
    gamma_xi: f64,
    target: HurwitzTarget,
    reference: CanonicalPlant,
    /// `P B_r`, cached.
    pb: DVector<f64>,
}

impl AdaptiveLoopState {
    pub fn new(
        reference: CanonicalPlant,
        target: HurwitzTarget,
        gamma_zeta: DMatrix<f64>,
        gamma_xi: f64,
    ) -> Result<Self, MracError> {
        let n = reference.dim();
        let p = reference.feature_dim();
        if target.dim() != n {
            return Err(MracError::Dimension { expected: n, got: target.dim() });
        }
        if gamma_zeta.nrows() != p || gamma_zeta.ncols() != p {
            return Err(MracError::Dimension { expected: p, got: gamma_zeta.nrows() });
        }
        if (&gamma_zeta - gamma_zeta.transpose()).amax() > 1e-12 * gamma_zeta.amax().max(1.0)
            || gamma_zeta.clone().cholesky().is_none()
        {
            return Err(MracError::NotPositiveDefinite("Gamma_zeta"));
        }
        if !(gamma_xi > 0.0) {
            return Err(MracError::Parameter(format!("gamma_xi must be positive, got {gamma_xi}")));
        }
        let pb = target.p.column(n - 1) * reference.b();
        Ok(Self { k_zeta: DVector::zeros(p), k_xi: 1.0, gamma_zeta, gamma_xi, target, reference, pb })
    }

    /// Gains back to `K̂ = 0`, `k̂ = 1`, under which the loop passes `u_r`
    /// through unchanged when the plant sits on the reference.
    pub fn reset_gains(&mut self) {
        self.k_zeta.fill(0.0);
        self.k_xi = 1.0;
    }

    pub fn target(&self) -> &HurwitzTarget {
        &self.target
    }

    pub fn reference(&self) -> &CanonicalPlant {
        &self.reference
    }

    pub fn gamma_zeta(&self) -> &DMatrix<f64> {
        &self.gamma_zeta
    }

    pub fn gamma_xi(&self) -> f64 {
        self.gamma_xi
    }

    /// `B_r = [0, …, 0, b_r]ᵀ`
    pub fn b_r_vector(&self) -> DVector<f64> {
        let n = self.reference.dim();
        let mut b = DVector::zeros(n);
        b[n - 1] = self.reference.b();
        b
    }

    /// `ξ` for this loop's reference model.
    pub fn xi(&self, u_r: f64, e_zeta: &DVector<f64>, e_x: &DVector<f64>) -> Result<f64, MracError> {
        compute_xi(u_r, e_zeta, e_x, self.reference.alpha(), self.reference.b(), &self.target.alpha_h)
    }
}

/// `ξ = u_r − α_rᵀ e_ζ / b_r + α_Hᵀ e_x / b_r`
pub fn compute_xi(
    u_r: f64,
    e_zeta: &DVector<f64>,
    e_x: &DVector<f64>,
    alpha_r: &DVector<f64>,
    b_r: f64,
    alpha_h: &DVector<f64>,
) -> Result<f64, MracError> {
    if b_r == 0.0 {
        return Err(MracError::Parameter("b_r must be nonzero".into()));
    }
    if e_zeta.len() != alpha_r.len() {
        return Err(MracError::Dimension { expected: alpha_r.len(), got: e_zeta.len() });
    }
    if e_x.len() != alpha_h.len() {
        return Err(MracError::Dimension { expected: alpha_h.len(), got: e_x.len() });
    }
    Ok(u_r - alpha_r.dot(e_zeta) / b_r + alpha_h.dot(e_x) / b_r)
}

/// `u = K̂ᵀ ζ + k̂ ξ`
pub fn mrac_control(state: &AdaptiveLoopState, zeta: &DVector<f64>, xi: f64) -> f64 {
    state.k_zeta.dot(zeta) + state.k_xi * xi
}

/// One explicit-Euler step of
/// `dK̂/dt = −Γ ζ (e_xᵀ P B_r)`, `dk̂/dt = −γ ξ (e_xᵀ P B_r)`.
///
/// Leaves the gains untouched and reports an error if anything non-finite
/// shows up.
pub fn mrac_update(
    state: &mut AdaptiveLoopState,
    zeta: &DVector<f64>,
    xi: f64,
    e_x: &DVector<f64>,
    dt: f64,
) -> Result<(), MracError> {
    if e_x.len() != state.pb.len() {
        return Err(MracError::Dimension { expected: state.pb.len(), got: e_x.len() });
    }
    if zeta.len() != state.k_zeta.len() {
        return Err(MracError::Dimension { expected: state.k_zeta.len(), got: zeta.len() });
    }
    let s = e_x.dot(&state.pb);
    let dk_zeta = &state.gamma_zeta * zeta * (-dt * s);
    let dk_xi = -dt * state.gamma_xi * xi * s;
    if !s.is_finite() || !dk_xi.is_finite() || dk_zeta.iter().any(|v| !v.is_finite()) {
        return Err(MracError::Adaptation);
    }
    state.k_zeta += dk_zeta;
    state.k_xi += dk_xi;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::pendulum_plant;

    fn scalar_loop(b_r: f64) -> AdaptiveLoopState {
        let reference = CanonicalPlant::linear(vec![], DVector::from_element(1, 0.0), b_r).unwrap();
        let target = HurwitzTarget {
            a_h: DMatrix::from_element(1, 1, -0.5),
            alpha_h: DVector::from_element(1, -0.5),
            sigma: vec![],
            p: DMatrix::from_element(1, 1, 1.0),
            q: DMatrix::from_element(1, 1, 1.0),
        };
        AdaptiveLoopState::new(reference, target, DMatrix::identity(1, 1), 1.0).unwrap()
    }

    #[test]
    fn xi_reduces_to_reference_input() {
        let z = DVector::zeros(2);
        let xi = compute_xi(0.7, &z, &z, &DVector::from_vec(vec![1.0, 2.0]), 3.0, &DVector::from_vec(vec![-1.0, -1.0]))
            .unwrap();
        assert_eq!(xi, 0.7);
    }

    #[test]
    fn xi_hand_substitution() {
        let xi = compute_xi(
            0.0,
            &DVector::from_vec(vec![2.0, 5.0]),
            &DVector::from_vec(vec![1.0, 0.0]),
            &DVector::from_vec(vec![1.0, 0.0]),
            2.0,
            &DVector::from_vec(vec![-2.0, -3.0]),
        )
        .unwrap();
        assert_eq!(xi, -2.0);
    }

    #[test]
    fn xi_correction_scales_with_inverse_b_r() {
        let e_z = DVector::from_vec(vec![0.3, -1.2]);
        let e_x = DVector::from_vec(vec![0.4, 0.1]);
        let a_r = DVector::from_vec(vec![1.5, -0.5]);
        let a_h = DVector::from_vec(vec![-4.0, -4.0]);
        let c1 = compute_xi(0.0, &e_z, &e_x, &a_r, 1.5, &a_h).unwrap();
        let c2 = compute_xi(0.0, &e_z, &e_x, &a_r, 3.0, &a_h).unwrap();
        assert!((c2 - 0.5 * c1).abs() < 1e-15);
    }

    #[test]
    fn xi_dimension_checked() {
        let v2 = DVector::zeros(2);
        let v3 = DVector::zeros(3);
        assert!(compute_xi(0.0, &v3, &v2, &v2, 1.0, &v2).is_err());
        assert!(compute_xi(0.0, &v2, &v2, &v2, 0.0, &v2).is_err());
    }

    #[test]
    fn control_law() {
        let mut state = MracConfig::default().build_loop(pendulum_plant(1.0, 1.0, 0.1, 9.81).unwrap()).unwrap();
        let zeta = DVector::from_vec(vec![2.0, 3.0]);
        assert_eq!(mrac_control(&state, &zeta, 0.37), 0.37);
        assert_eq!(mrac_control(&state, &DVector::zeros(2), 0.0), 0.0);
        state.k_zeta = DVector::from_vec(vec![1.0, -1.0]);
        state.k_xi = 2.0;
        assert_eq!(mrac_control(&state, &zeta, 0.5), 0.0);
    }

    #[test]
    fn update_vanishes_without_error_or_excitation() {
        let mut state = MracConfig::default().build_loop(pendulum_plant(1.0, 1.0, 0.1, 9.81).unwrap()).unwrap();
        state.k_zeta = DVector::from_vec(vec![0.2, -0.4]);
        state.k_xi = 1.3;
        let before = (state.k_zeta.clone(), state.k_xi);
        mrac_update(&mut state, &DVector::from_vec(vec![1.0, 2.0]), 0.8, &DVector::zeros(2), 0.05).unwrap();
        assert_eq!((state.k_zeta.clone(), state.k_xi), before);
        mrac_update(&mut state, &DVector::zeros(2), 0.0, &DVector::from_vec(vec![0.3, 0.1]), 0.05).unwrap();
        assert_eq!((state.k_zeta.clone(), state.k_xi), before);
    }

    #[test]
    fn update_scalar_substitution() {
        let mut state = scalar_loop(2.0);
        mrac_update(&mut state, &DVector::from_element(1, 3.0), 0.0, &DVector::from_element(1, 0.5), 0.1).unwrap();
        assert!((state.k_zeta[0] + 0.3).abs() < 1e-15);
        assert_eq!(state.k_xi, 1.0);
    }

    #[test]
    fn update_rejects_non_finite() {
        let mut state = scalar_loop(2.0);
        let err = mrac_update(&mut state, &DVector::from_element(1, f64::NAN), 0.0, &DVector::from_element(1, 0.5), 0.1);
        assert_eq!(err, Err(MracError::Adaptation));
        assert_eq!(state.k_zeta[0], 0.0);
    }

    #[test]
    fn b_r_vector_has_single_entry() {
        let state = MracConfig::default().build_loop(pendulum_plant(2.0, 0.5, 0.1, 9.81).unwrap()).unwrap();
        let b = state.b_r_vector();
        assert_eq!(b.as_slice(), &[0.0, 2.0]);
    }

    #[test]
    fn config_validation() {
        assert!(MracConfig { sigma: 0.5, ..Default::default() }.validate().is_err());
        assert!(MracConfig { gamma_xi: 0.0, ..Default::default() }.validate().is_err());
        let parsed: MracConfig = serde_json::from_str(r#"{"Gamma_scale": 3.0}"#).unwrap();
        assert_eq!(parsed.gamma_scale, 3.0);
        assert_eq!(parsed.sigma, -2.0);
        assert!(serde_json::from_str::<MracConfig>(r#"{"gamma": 3.0}"#).is_err());
    }
}
