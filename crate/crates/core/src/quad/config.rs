use serde::{Deserialize, Serialize};

use super::dynamics::{InverseMixer, Propellers, Wrench};
use super::landing::{BoxThresholds, InitialBounds, PlatformBounds};
use super::{QuadError, QuadrotorParams};
use crate::sim::IntegratorConfig;

/// Partial loss of effectiveness of one propeller, from `onset` seconds on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoeConfig {
    pub beta: f64,
    /// 1-based propeller number.
    pub index: usize,
    pub onset: f64,
}

impl Default for LoeConfig {
    fn default() -> Self {
        Self { beta: 1.0, index: 4, onset: 0.0 }
    }
}

/// Maps a policy action to propeller commands. The action is read in
/// hover-centred wrench coordinates,
/// `f_z = m g (1 + thrust_scale a₀)`, `τ_φ = torque_scale a₁`,
/// `τ_θ = torque_scale a₂`, `τ_ψ = yaw_scale a₃`,
/// then passed through the nominal inverse mixer and clamped per propeller to
/// `[0, u_max_factor · hover]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActionMap {
    pub thrust_scale: f64,
    pub torque_scale: f64,
    pub yaw_scale: f64,
    pub u_max_factor: f64,
}

impl Default for ActionMap {
    fn default() -> Self {
        Self { thrust_scale: 0.5, torque_scale: 0.5, yaw_scale: 0.2, u_max_factor: 3.0 }
    }
}

/// Weights of the shaping potential
/// `Φ = −(lateral ‖Δxy‖ + vertical |Δz| + lateral_speed ‖v_xy‖ + climb |v_z| + attitude ‖(φ, θ)‖ + rate ‖ω‖)`,
/// each term measured past its box threshold where it has one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapingWeights {
    pub lateral: f64,
    pub vertical: f64,
    pub lateral_speed: f64,
    pub climb: f64,
    pub attitude: f64,
    pub rate: f64,
}

impl Default for ShapingWeights {
    fn default() -> Self {
        Self { lateral: 1.0, vertical: 0.5, lateral_speed: 0.2, climb: 0.5, attitude: 1.0, rate: 0.1 }
    }
}

impl ShapingWeights {
    pub fn zero() -> Self {
        Self { lateral: 0.0, vertical: 0.0, lateral_speed: 0.0, climb: 0.0, attitude: 0.0, rate: 0.0 }
    }

    fn values(&self) -> [f64; 6] {
        [self.lateral, self.vertical, self.lateral_speed, self.climb, self.attitude, self.rate]
    }
}

/// Fixed observation scale factors, one per physical group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObservationScale {
    pub position: f64,
    pub velocity: f64,
    pub angle: f64,
    pub rate: f64,
}

impl Default for ObservationScale {
    fn default() -> Self {
        Self { position: 0.25, velocity: 0.5, angle: 2.0, rate: 0.5 }
    }
}

/// Everything that defines the landing task and its uncertainty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskConfig {
    pub nominal: QuadrotorParams,
    #[serde(rename = "box")]
    pub thresholds: BoxThresholds,
    #[serde(rename = "T_max")]
    pub t_max: f64,
    pub integrator: IntegratorConfig,
    pub platform: PlatformBounds,
    pub initial: InitialBounds,
    pub uncertainty_pct: f64,
    pub loe: LoeConfig,
    pub action: ActionMap,
    pub shaping: ShapingWeights,
    pub observation: ObservationScale,
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self {
            nominal: QuadrotorParams::default(),
            thresholds: BoxThresholds::default(),
            t_max: 20.0,
            integrator: IntegratorConfig::default(),
            platform: PlatformBounds::default(),
            initial: InitialBounds::default(),
            uncertainty_pct: 0.25,
            loe: LoeConfig::default(),
            action: ActionMap::default(),
            shaping: ShapingWeights::default(),
            observation: ObservationScale::default(),
        }
    }
}

impl TaskConfig {
    pub fn validate(&self) -> Result<(), QuadError> {
        self.nominal.validate()?;
        self.thresholds.validate()?;
        self.platform.validate()?;
        self.initial.validate()?;
        self.integrator.validate().map_err(QuadError::Sim)?;
        InverseMixer::new(&self.nominal)?;
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(QuadError::Config(format!("T_max must be positive, got {}", self.t_max)));
        }
        if !(0.0..1.0).contains(&self.uncertainty_pct) {
            return Err(QuadError::Config(format!("uncertainty_pct must lie in [0, 1), got {}", self.uncertainty_pct)));
        }
        if !(self.loe.beta > 0.0 && self.loe.beta <= 1.0) || !(1..=4).contains(&self.loe.index) {
            return Err(QuadError::Config(format!(
                "LOE needs beta in (0, 1] and index in 1..=4, got beta {} index {}",
                self.loe.beta, self.loe.index
            )));
        }
        if !(self.loe.onset >= 0.0 && self.loe.onset.is_finite()) {
            return Err(QuadError::Config(format!("LOE onset must be nonnegative, got {}", self.loe.onset)));
        }
        let a = &self.action;
        for (name, v) in [
            ("thrust_scale", a.thrust_scale),
            ("torque_scale", a.torque_scale),
            ("yaw_scale", a.yaw_scale),
            ("u_max_factor", a.u_max_factor),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(QuadError::Config(format!("action.{name} must be positive, got {v}")));
            }
        }
        if a.u_max_factor < 1.0 {
            return Err(QuadError::Config("action.u_max_factor below 1 cannot hold hover".into()));
        }
        let s = &self.shaping;
        if s.values().iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(QuadError::Config("shaping weights must be nonnegative".into()));
        }
        let o = &self.observation;
        if [o.position, o.velocity, o.angle, o.rate].iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(QuadError::Config("observation scales must be positive".into()));
        }
        Ok(())
    }

    /// Largest squared speed each propeller may be commanded.
    pub fn u_max(&self) -> Propellers {
        Propellers::from(self.nominal.hover_speed_sq()) * self.action.u_max_factor
    }
}

/// Action-to-propeller map bound to the nominal airframe.
#[derive(Debug, Clone)]
pub struct Actuation {
    inverse: InverseMixer,
    u_max: Propellers,
    hover_thrust: f64,
    map: ActionMap,
}

impl Actuation {
    pub fn new(task: &TaskConfig) -> Result<Self, QuadError> {
        Ok(Self {
            inverse: InverseMixer::new(&task.nominal)?,
            u_max: task.u_max(),
            hover_thrust: task.nominal.m * task.nominal.g,
            map: task.action.clone(),
        })
    }

    pub fn hover_thrust(&self) -> f64 {
        self.hover_thrust
    }

    pub fn action_wrench(&self, a: &[f64]) -> Wrench {
        Wrench {
            f_z: self.hover_thrust * (1.0 + self.map.thrust_scale * a[0]),
            tau_phi: self.map.torque_scale * a[1],
            tau_theta: self.map.torque_scale * a[2],
            tau_psi: self.map.yaw_scale * a[3],
        }
    }

    /// Inverse mixer followed by the actuator clamp.
    pub fn propellers(&self, w: &Wrench) -> Propellers {
        self.inverse.solve(w).zip_map(&self.u_max, |v, hi| v.clamp(0.0, hi))
    }

    pub fn from_action(&self, a: &[f64]) -> Propellers {
        self.propellers(&self.action_wrench(a))
    }
}
