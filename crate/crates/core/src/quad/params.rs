use rand::Rng;
use serde::{Deserialize, Serialize};

use super::QuadError;

/// Physical constants of the airframe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadrotorParams {
    pub m: f64,
    #[serde(rename = "I_x")]
    pub i_x: f64,
    #[serde(rename = "I_y")]
    pub i_y: f64,
    #[serde(rename = "I_z")]
    pub i_z: f64,
    #[serde(rename = "L")]
    pub l: f64,
    /// Yaw moment per unit thrust.
    pub mu: f64,
    /// Thrust per squared propeller speed, one per propeller.
    pub kappa: [f64; 4],
    pub g: f64,
}

impl Default for QuadrotorParams {
    fn default() -> Self {
        Self { m: 1.2, i_x: 0.22, i_y: 0.22, i_z: 0.44, l: 0.30, mu: 0.1, kappa: [1.0; 4], g: 9.81 }
    }
}

impl QuadrotorParams {
    pub fn validate(&self) -> Result<(), QuadError> {
        let named = [("m", self.m), ("I_x", self.i_x), ("I_y", self.i_y), ("I_z", self.i_z), ("L", self.l)];
        for (name, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return Err(QuadError::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(k) = self.kappa.iter().find(|k| !(**k > 0.0 && k.is_finite())) {
            return Err(QuadError::Parameter(format!("kappa entries must be positive, got {k}")));
        }
        if !(self.mu.is_finite() && self.g.is_finite()) {
            return Err(QuadError::Parameter("mu and g must be finite".into()));
        }
        Ok(())
    }

    /// Squared propeller speeds that hold level hover, equal thrust on all four.
    pub fn hover_speed_sq(&self) -> [f64; 4] {
        let f = self.m * self.g / 4.0;
        self.kappa.map(|k| f / k)
    }
}

/// Redraws `m`, `I_x`, `I_y`, `I_z` and `L`, each uniformly and independently
/// within `±pct` of nominal.
pub fn sample_uncertain_params<R: Rng + ?Sized>(
    nominal: &QuadrotorParams,
    pct: f64,
    rng: &mut R,
) -> Result<QuadrotorParams, QuadError> {
    if !(0.0..1.0).contains(&pct) {
        return Err(QuadError::Parameter(format!("uncertainty fraction must lie in [0, 1), got {pct}")));
    }
    if pct == 0.0 {
        return Ok(nominal.clone());
    }
    let mut draw = |v: f64| v * rng.random_range((1.0 - pct)..=(1.0 + pct));
    Ok(QuadrotorParams {
        m: draw(nominal.m),
        i_x: draw(nominal.i_x),
        i_y: draw(nominal.i_y),
        i_z: draw(nominal.i_z),
        l: draw(nominal.l),
        ..nominal.clone()
    })
}

/// Scales propeller `index` (1-based) by `beta`.
pub fn apply_loe(params: &QuadrotorParams, beta: f64, index: usize) -> Result<QuadrotorParams, QuadError> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(QuadError::Parameter(format!("effectiveness beta must lie in (0, 1], got {beta}")));
    }
    if !(1..=4).contains(&index) {
        return Err(QuadError::Parameter(format!("propeller index must be 1..=4, got {index}")));
    }
    let mut out = params.clone();
    out.kappa[index - 1] *= beta;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::stream_rng;

    #[test]
    fn zero_pct_is_nominal() {
        let p = QuadrotorParams::default();
        assert_eq!(sample_uncertain_params(&p, 0.0, &mut stream_rng(1, 0)).unwrap(), p);
    }

    #[test]
    fn draws_stay_in_bounds() {
        let p = QuadrotorParams::default();
        let mut rng = stream_rng(2, 0);
        let within = |v: f64, nominal: f64| v >= 0.75 * nominal && v <= 1.25 * nominal;
        for _ in 0..10_000 {
            let s = sample_uncertain_params(&p, 0.25, &mut rng).unwrap();
            assert!(within(s.m, p.m) && within(s.i_x, p.i_x) && within(s.i_y, p.i_y));
            assert!(within(s.i_z, p.i_z) && within(s.l, p.l));
            assert_eq!((s.kappa, s.mu, s.g), (p.kappa, p.mu, p.g));
        }
    }

    #[test]
    fn fixed_seed_repeats() {
        let p = QuadrotorParams::default();
        let a = sample_uncertain_params(&p, 0.25, &mut stream_rng(3, 0)).unwrap();
        let b = sample_uncertain_params(&p, 0.25, &mut stream_rng(3, 0)).unwrap();
        assert_eq!(a, b);
        assert!(sample_uncertain_params(&p, 1.0, &mut stream_rng(3, 0)).is_err());
    }

    #[test]
    fn loe_scales_one_propeller() {
        let p = QuadrotorParams { kappa: [1.0, 2.0, 3.0, 4.0], ..QuadrotorParams::default() };
        assert_eq!(apply_loe(&p, 1.0, 4).unwrap(), p);
        assert_eq!(apply_loe(&p, 0.5, 4).unwrap().kappa, [1.0, 2.0, 3.0, 2.0]);
        assert_eq!(apply_loe(&p, 0.25, 4).unwrap().kappa[3], 1.0);
        assert!(apply_loe(&p, 0.0, 4).is_err());
        assert!(apply_loe(&p, 1.5, 4).is_err());
        assert!(apply_loe(&p, 0.5, 0).is_err());
    }

    #[test]
    fn json_keys_follow_symbols() {
        let p: QuadrotorParams = serde_json::from_str(r#"{"m": 2.0, "I_x": 0.3, "L": 0.25}"#).unwrap();
        assert_eq!((p.m, p.i_x, p.l, p.i_z), (2.0, 0.3, 0.25, 0.44));
        assert!(serde_json::from_str::<QuadrotorParams>(r#"{"mass": 2.0}"#).is_err());
        assert!(QuadrotorParams { l: 0.0, ..p }.validate().is_err());
    }
}
