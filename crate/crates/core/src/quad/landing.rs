use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dynamics::{idx, QuadState};
use super::QuadError;

/// Landing envelope. All comparisons are inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoxThresholds {
    pub z_max: f64,
    pub l_max: f64,
    pub phi_max: f64,
    pub theta_max: f64,
    pub v_l_max: f64,
    pub v_z_max: f64,
}

impl Default for BoxThresholds {
    fn default() -> Self {
        Self { z_max: 0.10, l_max: 0.25, phi_max: 0.15, theta_max: 0.15, v_l_max: 0.5, v_z_max: 0.5 }
    }
}

impl BoxThresholds {
    pub fn validate(&self) -> Result<(), QuadError> {
        let named = [
            ("z_max", self.z_max),
            ("l_max", self.l_max),
            ("phi_max", self.phi_max),
            ("theta_max", self.theta_max),
            ("v_l_max", self.v_l_max),
            ("v_z_max", self.v_z_max),
        ];
        for (name, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return Err(QuadError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Platform moving in a straight line at constant inertial velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Platform {
    pub position: [f64; 3],
    pub velocity: [f64; 3],
}

impl Platform {
    pub fn stationary(position: [f64; 3]) -> Self {
        Self { position, velocity: [0.0; 3] }
    }

    pub fn position_at(&self, t: f64) -> [f64; 3] {
        std::array::from_fn(|i| self.position[i] + self.velocity[i] * t)
    }

    pub fn lateral_speed(&self) -> f64 {
        self.velocity[0].hypot(self.velocity[1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandingSpec {
    pub platform: Platform,
    pub thresholds: BoxThresholds,
    pub t_max: f64,
}

impl LandingSpec {
    pub fn new(platform: Platform, thresholds: BoxThresholds, t_max: f64) -> Result<Self, QuadError> {
        thresholds.validate()?;
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(QuadError::Config(format!("T_max must be positive, got {t_max}")));
        }
        Ok(Self { platform, thresholds, t_max })
    }

    /// `(Δx, Δy, Δz)` from the platform to the vehicle at time `t`.
    pub fn offset(&self, x: &QuadState, t: f64) -> [f64; 3] {
        let p = self.platform.position_at(t);
        [x[idx::X] - p[0], x[idx::Y] - p[1], x[idx::Z] - p[2]]
    }
}

pub fn box_predicate(x: &QuadState, spec: &LandingSpec, t: f64) -> bool {
    let b = &spec.thresholds;
    let [dx, dy, dz] = spec.offset(x, t);
    dz.abs() <= b.z_max
        && dx.hypot(dy) <= b.l_max
        && x[idx::PHI].abs() <= b.phi_max
        && x[idx::THETA].abs() <= b.theta_max
        && x[idx::VX].hypot(x[idx::VY]) <= b.v_l_max
        && x[idx::VZ].abs() <= b.v_z_max
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Crash,
    Timeout,
}

/// Ternary cost and whether the episode ends here.
pub fn landing_cost(x: &QuadState, spec: &LandingSpec, t: f64) -> (f64, bool) {
    match classify(x, spec, t) {
        Some(Outcome::Success) => (-1.0, true),
        Some(_) => (1.0, true),
        None => (0.0, false),
    }
}

/// Terminal event at `(x, t)`, if any. Success is checked before crash and
/// timeout.
pub fn classify(x: &QuadState, spec: &LandingSpec, t: f64) -> Option<Outcome> {
    if box_predicate(x, spec, t) {
        Some(Outcome::Success)
    } else if spec.offset(x, t)[2] <= 0.0 {
        Some(Outcome::Crash)
    } else if t >= spec.t_max - 1e-9 {
        Some(Outcome::Timeout)
    } else {
        None
    }
}

/// Per-episode platform motion: starts at the origin on the ground, constant
/// lateral velocity with a uniform speed and heading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlatformBounds {
    pub speed_min: f64,
    pub speed_max: f64,
}

impl Default for PlatformBounds {
    fn default() -> Self {
        Self { speed_min: 0.0, speed_max: 1.0 }
    }
}

impl PlatformBounds {
    pub fn validate(&self) -> Result<(), QuadError> {
        if !(self.speed_min >= 0.0 && self.speed_max >= self.speed_min && self.speed_max.is_finite()) {
            return Err(QuadError::Config(format!(
                "platform speed bounds must satisfy 0 <= min <= max, got [{}, {}]",
                self.speed_min, self.speed_max
            )));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Platform {
        let speed = self.speed_min + (self.speed_max - self.speed_min) * rng.random::<f64>();
        let heading = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        Platform { position: [0.0; 3], velocity: [speed * heading.cos(), speed * heading.sin(), 0.0] }
    }
}

/// Initial conditions relative to the platform's starting point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialBounds {
    /// Half-width of the lateral square.
    pub lateral: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub attitude: f64,
    pub velocity: f64,
    pub rate: f64,
}

impl Default for InitialBounds {
    fn default() -> Self {
        Self { lateral: 2.0, z_min: 2.0, z_max: 6.0, attitude: 0.1, velocity: 0.5, rate: 0.0 }
    }
}

impl InitialBounds {
    pub fn validate(&self) -> Result<(), QuadError> {
        let nonneg = [("lateral", self.lateral), ("attitude", self.attitude), ("velocity", self.velocity), ("rate", self.rate)];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(QuadError::Config(format!("initial {name} bound must be nonnegative, got {v}")));
            }
        }
        if !(self.z_min > 0.0 && self.z_max >= self.z_min && self.z_max.is_finite()) {
            return Err(QuadError::Config(format!(
                "initial altitude bounds must satisfy 0 < z_min <= z_max, got [{}, {}]",
                self.z_min, self.z_max
            )));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, platform: &Platform, rng: &mut R) -> QuadState {
        let mut sym = |h: f64| if h > 0.0 { rng.random_range(-h..=h) } else { 0.0 };
        let mut x = QuadState::zeros();
        x[idx::X] = platform.position[0] + sym(self.lateral);
        x[idx::Y] = platform.position[1] + sym(self.lateral);
        for i in [idx::VX, idx::VY, idx::VZ] {
            x[i] = sym(self.velocity);
        }
        for i in idx::ANGLES {
            x[i] = sym(self.attitude);
        }
        for i in [idx::P, idx::Q, idx::R] {
            x[i] = sym(self.rate);
        }
        x[idx::Z] = platform.position[2] + rng.random_range(self.z_min..=self.z_max);
        x
    }
}
