use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use super::SimError;

/// Feature map ζ(x). Must be deterministic.
pub type Nonlinearity = Arc<dyn Fn(&[f64]) -> DVector<f64> + Send + Sync>;

/// A plant of the form
///
/// ```text
/// ẋ_i = δ_i x_{i+1}          i < n
/// ẋ_n = αᵀ ζ(x) + b u
/// ```
///
/// The feature vector ζ(x) usually has n entries, but any length matching
/// `alpha` is accepted so that bias features can be carried alongside the
/// state.
#[derive(Clone)]
pub struct CanonicalPlant {
    delta: Vec<f64>,
    alpha: DVector<f64>,
    b: f64,
    zeta: Nonlinearity,
}

impl fmt::Debug for CanonicalPlant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CanonicalPlant")
            .field("delta", &self.delta)
            .field("alpha", &self.alpha.as_slice())
            .field("b", &self.b)
            .finish_non_exhaustive()
    }
}

impl CanonicalPlant {
    pub fn new(
        delta: Vec<f64>,
        alpha: DVector<f64>,
        b: f64,
        zeta: Nonlinearity,
    ) -> Result<Self, SimError> {
        if let Some(i) = delta.iter().position(|d| *d == 0.0 || !d.is_finite()) {
            return Err(SimError::Parameter(format!("chain gain delta[{i}] must be finite and nonzero")));
        }
        if b == 0.0 || !b.is_finite() {
            return Err(SimError::Parameter("input gain b must be finite and nonzero".into()));
        }
        if alpha.iter().any(|a| !a.is_finite()) {
            return Err(SimError::Parameter("alpha must be finite".into()));
        }
        Ok(Self { delta, alpha, b, zeta })
    }

    /// Linear plant with ζ(x) = x.
    pub fn linear(delta: Vec<f64>, alpha: DVector<f64>, b: f64) -> Result<Self, SimError> {
        let n = delta.len() + 1;
        if alpha.len() != n {
            return Err(SimError::Dimension { expected: n, got: alpha.len() });
        }
        Self::new(delta, alpha, b, Arc::new(|x: &[f64]| DVector::from_column_slice(x)))
    }

    pub fn dim(&self) -> usize {
        self.delta.len() + 1
    }

    pub fn feature_dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.zeta
    }

    /// Same structure and ζ, different α and b.
    pub fn with_parameters(&self, alpha: DVector<f64>, b: f64) -> Result<Self, SimError> {
        if alpha.len() != self.alpha.len() {
            return Err(SimError::Dimension { expected: self.alpha.len(), got: alpha.len() });
        }
        Self::new(self.delta.clone(), alpha, b, self.zeta.clone())
    }

    pub fn zeta(&self, x: &[f64]) -> Result<DVector<f64>, SimError> {
        if x.len() != self.dim() {
            return Err(SimError::Dimension { expected: self.dim(), got: x.len() });
        }
        let z = (self.zeta)(x);
        if z.len() != self.alpha.len() {
            return Err(SimError::Dimension { expected: self.alpha.len(), got: z.len() });
        }
        Ok(z)
    }

    /// Infallible form of [`canonical_derivative`] for integrator closures.
    ///
    /// Panics if `x` does not have dimension `n`.
    pub fn derivative(&self, x: &DVector<f64>, u: f64) -> DVector<f64> {
        canonical_derivative(self, x.as_slice(), u).expect("state dimension checked by caller")
    }
}

pub fn canonical_derivative(plant: &CanonicalPlant, x: &[f64], u: f64) -> Result<DVector<f64>, SimError> {
    let n = plant.dim();
    let zeta = plant.zeta(x)?;
    let mut dx = DVector::zeros(n);
    for (i, d) in plant.delta.iter().enumerate() {
        dx[i] = d * x[i + 1];
    }
    dx[n - 1] = plant.alpha.dot(&zeta) + plant.b * u;
    Ok(dx)
}

/// Inverted pendulum `m l² θ̈ = m g l sin θ − μ θ̇ + u` with state `[θ, θ̇]`.
pub fn pendulum_plant(m: f64, l: f64, mu: f64, g: f64) -> Result<CanonicalPlant, SimError> {
    if !(m > 0.0) || !(l > 0.0) {
        return Err(SimError::Parameter(format!("pendulum mass and length must be positive (m={m}, l={l})")));
    }
    if !(mu >= 0.0) {
        return Err(SimError::Parameter(format!("friction must be nonnegative (mu={mu})")));
    }
    let ml2 = m * l * l;
    CanonicalPlant::new(
        vec![1.0],
        DVector::from_vec(vec![g / l, -mu / ml2]),
        1.0 / ml2,
        Arc::new(|x: &[f64]| DVector::from_vec(vec![x[0].sin(), x[1]])),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn unit_pendulum() -> CanonicalPlant {
        pendulum_plant(1.0, 1.0, 0.0, 9.81).unwrap()
    }

    #[test]
    fn pendulum_equilibrium() {
        let dx = canonical_derivative(&unit_pendulum(), &[0.0, 0.0], 0.0).unwrap();
        assert_eq!(dx.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn pendulum_horizontal() {
        let dx = canonical_derivative(&unit_pendulum(), &[FRAC_PI_2, 0.0], 0.0).unwrap();
        assert_eq!(dx[0], 0.0);
        assert!((dx[1] - 9.81).abs() < 1e-12);
    }

    #[test]
    fn pendulum_input_only() {
        let dx = canonical_derivative(&unit_pendulum(), &[0.0, 0.0], 2.0).unwrap();
        assert_eq!(dx.as_slice(), &[0.0, 2.0]);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let err = canonical_derivative(&unit_pendulum(), &[0.0, 0.0, 0.0], 0.0).unwrap_err();
        assert_eq!(err, SimError::Dimension { expected: 2, got: 3 });
    }

    #[test]
    fn pendulum_mapping() {
        let p = unit_pendulum();
        assert_eq!(p.alpha().as_slice(), &[9.81, 0.0]);
        assert_eq!(p.b(), 1.0);
        assert_eq!(p.delta(), &[1.0]);

        let heavy = pendulum_plant(2.0, 1.0, 0.0, 9.81).unwrap();
        assert_eq!(heavy.alpha().as_slice(), &[9.81, 0.0]);
        assert_eq!(heavy.b(), 0.5);

        for m in [0.3, 1.0, 7.0] {
            assert_eq!(pendulum_plant(m, 0.8, 0.0, 9.81).unwrap().alpha()[1], 0.0);
        }
        let damped = pendulum_plant(2.0, 0.5, 0.1, 9.81).unwrap();
        assert!((damped.alpha()[1] + 0.1 / 0.5).abs() < 1e-15);
    }

    #[test]
    fn pendulum_rejects_bad_parameters() {
        assert!(matches!(pendulum_plant(0.0, 1.0, 0.0, 9.81), Err(SimError::Parameter(_))));
        assert!(matches!(pendulum_plant(1.0, -1.0, 0.0, 9.81), Err(SimError::Parameter(_))));
        assert!(matches!(pendulum_plant(1.0, 1.0, -0.1, 9.81), Err(SimError::Parameter(_))));
    }

    #[test]
    fn zero_chain_gain_rejected() {
        assert!(CanonicalPlant::linear(vec![1.0, 0.0], DVector::zeros(3), 1.0).is_err());
        assert!(CanonicalPlant::linear(vec![1.0], DVector::zeros(2), 0.0).is_err());
    }

    #[test]
    fn input_only_moves_last_component() {
        let p = pendulum_plant(1.3, 0.7, 0.2, 9.81).unwrap();
        let x = [0.4, -1.1];
        let a = canonical_derivative(&p, &x, 0.0).unwrap();
        let b = canonical_derivative(&p, &x, 3.5).unwrap();
        assert_eq!(a[0], b[0]);
        assert!(((b[1] - a[1]) - 3.5 * p.b()).abs() < 1e-12);
    }
}
