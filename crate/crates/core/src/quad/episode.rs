use std::fmt;

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use super::config::TaskConfig;
use super::dynamics::{idx, mixer_matrix, quad_derivative, wrap_attitude, Propellers, QuadState, Wrench};
use super::landing::{classify, LandingSpec, Outcome, Platform};
use super::params::{apply_loe, sample_uncertain_params};
use super::{QuadError, QuadrotorParams};
use crate::rl::ObsScaling;
use crate::seed::stream_rng;
use crate::sim::{rk4_step_at, IntegratorConfig, Trajectory};

/// Length of the policy observation.
pub const OBS_DIM: usize = 14;
pub const ACTION_DIM: usize = 4;

/// Which model error is injected into an episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Uncertainty {
    None,
    /// `m`, `I_x`, `I_y`, `I_z`, `L` redrawn within `±pct`.
    Parametric { pct: f64 },
    /// Propeller `index` keeps a fraction `beta` of its thrust from `onset`.
    Loe { beta: f64, index: usize, onset: f64 },
}

impl fmt::Display for Uncertainty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Uncertainty::None => write!(f, "none"),
            Uncertainty::Parametric { pct } => write!(f, "parametric_{}pct", percent(*pct)),
            Uncertainty::Loe { beta, index, .. } => write!(f, "loe_{}pct_prop{index}", percent(1.0 - beta)),
        }
    }
}

/// Fraction as a percentage, rounded to 1e-6 % so that `1 − 0.9` prints as 10.
fn percent(v: f64) -> f64 {
    (v * 1e8).round() / 1e6
}

/// Airframe with its mixer cached.
#[derive(Debug, Clone)]
pub struct Airframe {
    pub params: QuadrotorParams,
    mix: Matrix4<f64>,
}

impl Airframe {
    pub fn new(params: QuadrotorParams) -> Result<Self, QuadError> {
        params.validate()?;
        let mix = mixer_matrix(&params);
        Ok(Self { params, mix })
    }

    pub fn wrench(&self, u: &Propellers) -> Wrench {
        Wrench::from_vector(&(self.mix * u))
    }

    pub fn derivative(&self, x: &QuadState, u: &Propellers) -> QuadState {
        quad_derivative(x, &self.wrench(u), &self.params)
    }
}

/// The simulated vehicle, possibly switching to a degraded airframe mid-run.
#[derive(Debug, Clone)]
pub struct VehicleModel {
    pub healthy: Airframe,
    pub fault: Option<(Airframe, f64)>,
}

impl VehicleModel {
    pub fn fixed(params: QuadrotorParams) -> Result<Self, QuadError> {
        Ok(Self { healthy: Airframe::new(params)?, fault: None })
    }

    pub fn at(&self, t: f64) -> &Airframe {
        match &self.fault {
            Some((faulty, onset)) if t >= *onset - 1e-12 => faulty,
            _ => &self.healthy,
        }
    }

    /// Holds `u` over one control interval starting at `t0`.
    pub fn advance(&self, t0: f64, x: &QuadState, u: &Propellers, cfg: &IntegratorConfig) -> Result<QuadState, QuadError> {
        let n = cfg.substeps();
        let mut x = *x;
        for k in 0..n {
            let t = t0 + k as f64 * cfg.dt_int;
            let mut next = rk4_step_at(|s, x: &QuadState, u: &Propellers| self.at(s).derivative(x, u), t, &x, u, cfg.dt_int)
                .map_err(QuadError::Sim)?;
            if next.iter().any(|v| !v.is_finite()) {
                return Err(QuadError::NonFinite(format!("vehicle state at t = {}", t + cfg.dt_int)));
            }
            wrap_attitude(&mut next);
            x = next;
        }
        Ok(x)
    }
}

/// Everything drawn from an episode seed.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub seed: u64,
    pub x0: QuadState,
    pub platform: Platform,
    pub vehicle: VehicleModel,
}

impl Scenario {
    /// Streams of `seed`: 0 initial state, 1 platform, 2 parameters.
    pub fn sample(task: &TaskConfig, seed: u64, uncertainty: &Uncertainty) -> Result<Self, QuadError> {
        let platform = task.platform.sample(&mut stream_rng(seed, 1));
        let x0 = task.initial.sample(&platform, &mut stream_rng(seed, 0));
        let vehicle = match *uncertainty {
            Uncertainty::None => VehicleModel::fixed(task.nominal.clone())?,
            Uncertainty::Parametric { pct } => {
                VehicleModel::fixed(sample_uncertain_params(&task.nominal, pct, &mut stream_rng(seed, 2))?)?
            }
            Uncertainty::Loe { beta, index, onset } => {
                if !(onset >= 0.0 && onset.is_finite()) {
                    return Err(QuadError::Config(format!("LOE onset must be nonnegative, got {onset}")));
                }
                let faulty = Airframe::new(apply_loe(&task.nominal, beta, index)?)?;
                VehicleModel { healthy: Airframe::new(task.nominal.clone())?, fault: Some((faulty, onset)) }
            }
        };
        Ok(Self { seed, x0, platform, vehicle })
    }

    pub fn landing_spec(&self, task: &TaskConfig) -> Result<LandingSpec, QuadError> {
        LandingSpec::new(self.platform, task.thresholds.clone(), task.t_max)
    }
}

/// Raw observation: platform-relative position and velocity, attitude,
/// body rates, and the platform's lateral velocity.
pub fn observe(x: &QuadState, platform: &Platform, t: f64) -> [f64; OBS_DIM] {
    let p = platform.position_at(t);
    let v = platform.velocity;
    [
        x[idx::X] - p[0],
        x[idx::Y] - p[1],
        x[idx::Z] - p[2],
        x[idx::VX] - v[0],
        x[idx::VY] - v[1],
        x[idx::VZ] - v[2],
        x[idx::PHI],
        x[idx::THETA],
        x[idx::PSI],
        x[idx::P],
        x[idx::Q],
        x[idx::R],
        v[0],
        v[1],
    ]
}

pub fn observation_scaling(task: &TaskConfig) -> ObsScaling {
    let o = &task.observation;
    let mut scale = vec![o.position; 3];
    scale.extend([o.velocity; 3]);
    scale.extend([o.angle; 3]);
    scale.extend([o.rate; 3]);
    scale.extend([o.velocity; 2]);
    ObsScaling { offset: vec![0.0; OBS_DIM], scale }
}

/// Shaping potential, zero anywhere inside the landing box.
pub fn potential(task: &TaskConfig, x: &QuadState, platform: &Platform, t: f64) -> f64 {
    let w = &task.shaping;
    let b = &task.thresholds;
    let o = observe(x, platform, t);
    let excess = |v: f64, limit: f64| (v - limit).max(0.0);
    let rates = (o[9] * o[9] + o[10] * o[10] + o[11] * o[11]).sqrt();
    -(w.lateral * excess(o[0].hypot(o[1]), b.l_max)
        + w.vertical * excess(o[2].abs(), b.z_max)
        + w.lateral_speed * excess(x[idx::VX].hypot(x[idx::VY]), b.v_l_max)
        + w.climb * excess(x[idx::VZ].abs(), b.v_z_max)
        + w.attitude * excess(o[6].abs(), b.phi_max)
        + w.attitude * excess(o[7].abs(), b.theta_max)
        + w.rate * rates)
}

/// Result of one control interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub cost: f64,
    pub outcome: Option<Outcome>,
}

/// The true vehicle stepping through one landing episode at the control
/// cadence, with the cost evaluated at every boundary after the first.
#[derive(Debug, Clone)]
pub struct LandingSim {
    pub scenario: Scenario,
    pub spec: LandingSpec,
    cfg: IntegratorConfig,
    x: QuadState,
    step: usize,
    outcome: Option<Outcome>,
    trajectory: Trajectory,
}

impl LandingSim {
    pub fn new(task: &TaskConfig, scenario: Scenario) -> Result<Self, QuadError> {
        let spec = scenario.landing_spec(task)?;
        let x = scenario.x0;
        let steps = (task.t_max / task.integrator.dt_ctrl).ceil() as usize + 2;
        let mut trajectory = Trajectory::with_capacity(steps);
        trajectory.push_sample(0.0, x.as_slice().to_vec());
        Ok(Self { scenario, spec, cfg: task.integrator, x, step: 0, outcome: None, trajectory })
    }

    pub fn state(&self) -> &QuadState {
        &self.x
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.cfg.dt_ctrl
    }

    pub fn steps(&self) -> usize {
        self.step
    }

    pub fn outcome(&self) -> Option<Outcome> {
        self.outcome
    }

    pub fn observation(&self) -> [f64; OBS_DIM] {
        observe(&self.x, &self.scenario.platform, self.time())
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    pub fn into_trajectory(self) -> Trajectory {
        self.trajectory
    }

    /// Marks the episode as crashed without advancing, as after a controller
    /// fault.
    pub fn fail(&mut self) -> Transition {
        self.outcome = Some(Outcome::Crash);
        Transition { cost: 1.0, outcome: self.outcome }
    }

    /// Holds `u` for one control interval, then evaluates the cost.
    pub fn advance(&mut self, u: &Propellers) -> Result<Transition, QuadError> {
        if self.outcome.is_some() {
            return Err(QuadError::Config("episode already ended".into()));
        }
        let t0 = self.time();
        match self.scenario.vehicle.advance(t0, &self.x, u, &self.cfg) {
            Ok(next) => self.x = next,
            Err(_) => return Ok(self.fail()),
        }
        self.step += 1;
        let t = self.time();
        self.trajectory.push_interval(u.as_slice().to_vec(), t, self.x.as_slice().to_vec());
        self.outcome = classify(&self.x, &self.spec, t);
        let cost = match self.outcome {
            Some(Outcome::Success) => -1.0,
            Some(_) => 1.0,
            None => 0.0,
        };
        Ok(Transition { cost, outcome: self.outcome })
    }

    /// Success time when the episode ended in the box.
    pub fn success_time(&self) -> Option<f64> {
        (self.outcome == Some(Outcome::Success)).then(|| self.time())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::dynamics::Propellers;

    #[test]
    fn scenario_draws_are_seeded_and_paired() {
        let task = TaskConfig::default();
        let a = Scenario::sample(&task, 11, &Uncertainty::Parametric { pct: 0.25 }).unwrap();
        let b = Scenario::sample(&task, 11, &Uncertainty::Parametric { pct: 0.25 }).unwrap();
        let c = Scenario::sample(&task, 11, &Uncertainty::None).unwrap();
        assert_eq!(a.x0, b.x0);
        assert_eq!(a.vehicle.healthy.params, b.vehicle.healthy.params);
        assert_eq!((a.x0, a.platform), (c.x0, c.platform));
        assert_ne!(a.vehicle.healthy.params, c.vehicle.healthy.params);
        let d = Scenario::sample(&task, 12, &Uncertainty::None).unwrap();
        assert_ne!(a.x0, d.x0);
    }

    #[test]
    fn loe_switches_at_onset() {
        let task = TaskConfig::default();
        let s = Scenario::sample(&task, 1, &Uncertainty::Loe { beta: 0.5, index: 4, onset: 1.0 }).unwrap();
        assert_eq!(s.vehicle.at(0.5).params.kappa[3], 1.0);
        assert_eq!(s.vehicle.at(1.0).params.kappa[3], 0.5);
    }

    #[test]
    fn hover_at_altitude_holds_for_ten_seconds() {
        let task = TaskConfig::default();
        let model = VehicleModel::fixed(task.nominal.clone()).unwrap();
        let mut x = QuadState::zeros();
        x[idx::Z] = 3.0;
        let x0 = x;
        let u = Propellers::from(task.nominal.hover_speed_sq());
        for k in 0..200 {
            x = model.advance(k as f64 * 0.05, &x, &u, &task.integrator).unwrap();
        }
        assert!((x - x0).amax() < 1e-9, "drift {}", (x - x0).amax());
    }

    #[test]
    fn free_fall_ends_in_crash_with_unit_cost() {
        let task = TaskConfig::default();
        let scenario = Scenario::sample(&task, 3, &Uncertainty::None).unwrap();
        let mut sim = LandingSim::new(&task, scenario).unwrap();
        let mut last = None;
        for _ in 0..400 {
            let tr = sim.advance(&Propellers::zeros()).unwrap();
            if tr.outcome.is_some() {
                last = Some(tr);
                break;
            }
            assert_eq!(tr.cost, 0.0);
        }
        let tr = last.unwrap();
        assert_eq!((tr.cost, tr.outcome), (1.0, Some(Outcome::Crash)));
        assert!(sim.advance(&Propellers::zeros()).is_err());
        assert_eq!(sim.trajectory().len(), sim.steps() + 1);
    }

    #[test]
    fn observation_is_platform_relative() {
        let platform = Platform { position: [1.0, 0.0, 0.0], velocity: [0.5, 0.0, 0.0] };
        let mut x = QuadState::zeros();
        x[idx::X] = 2.0;
        x[idx::VX] = 0.5;
        let o = observe(&x, &platform, 2.0);
        assert_eq!(o[0], 0.0);
        assert_eq!(o[3], 0.0);
        assert_eq!(o[12], 0.5);
    }

    #[test]
    fn uncertainty_labels() {
        assert_eq!(Uncertainty::Parametric { pct: 0.25 }.to_string(), "parametric_25pct");
        assert_eq!(Uncertainty::Loe { beta: 0.75, index: 4, onset: 0.0 }.to_string(), "loe_25pct_prop4");
        assert_eq!(Uncertainty::Loe { beta: 0.9, index: 4, onset: 0.0 }.to_string(), "loe_10pct_prop4");
        assert_eq!(Uncertainty::Parametric { pct: 0.125 }.to_string(), "parametric_12.5pct");
        let u: Uncertainty = serde_json::from_str(r#"{"kind": "loe", "beta": 0.5, "index": 4, "onset": 0.0}"#).unwrap();
        assert_eq!(u, Uncertainty::Loe { beta: 0.5, index: 4, onset: 0.0 });
    }
}
