use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::config::{Actuation, TaskConfig};
use super::dynamics::{linearized_subsystems, Axis, Propellers, QuadState, Subsystem, Wrench};
use super::episode::{observe, Airframe, LandingSim, Scenario, VehicleModel};
use super::landing::{Outcome, Platform};
use super::QuadError;
use crate::mrac::{mrac_control, mrac_update, AdaptiveLoopState, MracConfig};
use crate::rl::Policy;
use crate::sim::{CanonicalPlant, IntegratorConfig, Nonlinearity, Trajectory};

/// Regressor used by each adaptive loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    /// `ζ = [1]`: one adaptive offset per loop.
    #[default]
    Bias,
    /// `ζ = [x_sub, 1]`.
    StateBias,
    /// `ζ = x_sub`.
    State,
}

impl FeatureSet {
    fn map(self) -> Nonlinearity {
        match self {
            FeatureSet::Bias => Arc::new(|_: &[f64]| DVector::from_element(1, 1.0)),
            FeatureSet::StateBias => Arc::new(|x: &[f64]| DVector::from_iterator(x.len() + 1, x.iter().copied().chain([1.0]))),
            FeatureSet::State => Arc::new(|x: &[f64]| DVector::from_column_slice(x)),
        }
    }

    fn dim(self, n: usize) -> usize {
        match self {
            FeatureSet::Bias => 1,
            FeatureSet::StateBias => n + 1,
            FeatureSet::State => n,
        }
    }
}

/// Inner-loop settings for the quadrotor: one gain set per chain type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InnerLoopConfig {
    /// The x and y chains.
    pub lateral: MracConfig,
    pub vertical: MracConfig,
    pub yaw: MracConfig,
    pub features: FeatureSet,
    /// With the inner loop off, the reference command is applied as is.
    pub enabled: bool,
}

impl Default for InnerLoopConfig {
    fn default() -> Self {
        let gains = MracConfig { gamma_scale: 50.0, gamma_xi: 50.0, ..MracConfig::default() };
        Self {
            lateral: gains.clone(),
            vertical: gains.clone(),
            yaw: gains,
            features: FeatureSet::default(),
            enabled: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChainLoop {
    pub subsystem: Subsystem,
    pub state: AdaptiveLoopState,
}

/// The four decoupled adaptive loops acting on wrench components.
#[derive(Debug, Clone)]
pub struct InnerLoop {
    loops: Vec<ChainLoop>,
    hover_thrust: f64,
    dt: f64,
}

impl InnerLoop {
    /// Loops designed on the hover linearization of `nominal`.
    pub fn new(task: &TaskConfig, cfg: &InnerLoopConfig) -> Result<Self, QuadError> {
        let subsystems = linearized_subsystems(&task.nominal)?;
        let loops = subsystems
            .into_iter()
            .map(|sub| {
                let gains = match sub.axis {
                    Axis::Thrust => &cfg.vertical,
                    Axis::Yaw => &cfg.yaw,
                    Axis::Roll | Axis::Pitch => &cfg.lateral,
                };
                let n = sub.dim();
                let p = cfg.features.dim(n);
                let design = CanonicalPlant::new(sub.plant.delta().to_vec(), DVector::zeros(p), sub.plant.b(), cfg.features.map())
                    .map_err(QuadError::Sim)?;
                let state = gains.build_loop(design).map_err(QuadError::Mrac)?;
                Ok(ChainLoop { subsystem: sub, state })
            })
            .collect::<Result<Vec<_>, QuadError>>()?;
        Ok(Self { loops, hover_thrust: task.nominal.m * task.nominal.g, dt: task.integrator.dt_ctrl })
    }

    pub fn loops(&self) -> &[ChainLoop] {
        &self.loops
    }

    /// Adapted wrench for plant state `x`, reference state `x_r` and
    /// reference wrench `w_r`. Gains take one explicit-Euler step afterwards.
    pub fn wrench(&mut self, x: &QuadState, x_r: &QuadState, w_r: &Wrench) -> Result<Wrench, QuadError> {
        let mut w = *w_r;
        for chain in &mut self.loops {
            let sub = &chain.subsystem;
            let reference = chain.state.reference();
            let x_sub = sub.slice(x);
            let e_x = sub.error(x, x_r);
            let zeta = reference.zeta(x_sub.as_slice()).map_err(QuadError::Sim)?;
            let zeta_r = reference.zeta(sub.slice(x_r).as_slice()).map_err(QuadError::Sim)?;
            let u_r = match sub.axis {
                Axis::Thrust => w_r.f_z - self.hover_thrust,
                axis => w_r.get(axis),
            };
            let xi = chain.state.xi(u_r, &(&zeta - &zeta_r), &e_x).map_err(QuadError::Mrac)?;
            let v = mrac_control(&chain.state, &zeta, xi);
            if !v.is_finite() {
                return Err(QuadError::NonFinite(format!("{} loop command", sub.name)));
            }
            mrac_update(&mut chain.state, &zeta, xi, &e_x, self.dt).map_err(QuadError::Mrac)?;
            match sub.axis {
                Axis::Thrust => w.f_z = self.hover_thrust + v,
                axis => w.set(axis, v),
            }
        }
        Ok(w)
    }
}

/// Propeller commands from a control law, queried once per boundary.
pub trait QuadController {
    fn command(&mut self, t: f64, x: &QuadState) -> Result<Propellers, QuadError>;
}

/// The policy applied directly to the measured state.
pub struct DirectPolicy<'a> {
    policy: &'a Policy,
    actuation: Actuation,
    platform: Platform,
}

impl<'a> DirectPolicy<'a> {
    pub fn new(policy: &'a Policy, task: &TaskConfig, platform: Platform) -> Result<Self, QuadError> {
        Ok(Self { policy, actuation: Actuation::new(task)?, platform })
    }
}

impl QuadController for DirectPolicy<'_> {
    fn command(&mut self, t: f64, x: &QuadState) -> Result<Propellers, QuadError> {
        let a = self.policy.mean_action(&observe(x, &self.platform, t)).map_err(QuadError::Rl)?;
        let u = self.actuation.from_action(a.as_slice());
        if u.iter().any(|v| !v.is_finite()) {
            return Err(QuadError::NonFinite("policy command".into()));
        }
        Ok(u)
    }
}

/// Policy driving a nominal reference vehicle, with the adaptive inner loop
/// making the true vehicle follow it.
pub struct MracRlController<'a> {
    policy: &'a Policy,
    actuation: Actuation,
    nominal: Airframe,
    reference_model: VehicleModel,
    cfg: IntegratorConfig,
    platform: Platform,
    inner: InnerLoop,
    enabled: bool,
    x_r: QuadState,
    u_r: Option<(f64, Propellers)>,
    reference: Trajectory,
}

impl<'a> MracRlController<'a> {
    /// The reference starts at `x0`, the true initial state.
    pub fn new(
        policy: &'a Policy,
        task: &TaskConfig,
        inner: &InnerLoopConfig,
        x0: QuadState,
        platform: Platform,
    ) -> Result<Self, QuadError> {
        let mut reference = Trajectory::with_capacity((task.t_max / task.integrator.dt_ctrl).ceil() as usize + 2);
        reference.push_sample(0.0, x0.as_slice().to_vec());
        Ok(Self {
            policy,
            actuation: Actuation::new(task)?,
            nominal: Airframe::new(task.nominal.clone())?,
            reference_model: VehicleModel::fixed(task.nominal.clone())?,
            cfg: task.integrator,
            platform,
            inner: InnerLoop::new(task, inner)?,
            enabled: inner.enabled,
            x_r: x0,
            u_r: None,
            reference,
        })
    }

    pub fn reference_state(&self) -> &QuadState {
        &self.x_r
    }

    pub fn inner_loop(&self) -> &InnerLoop {
        &self.inner
    }

    pub fn reference_trajectory(&self) -> &Trajectory {
        &self.reference
    }

    pub fn into_reference_trajectory(self) -> Trajectory {
        self.reference
    }
}

impl QuadController for MracRlController<'_> {
    fn command(&mut self, t: f64, x: &QuadState) -> Result<Propellers, QuadError> {
        if let Some((t_prev, u_prev)) = self.u_r {
            self.x_r = self.reference_model.advance(t_prev, &self.x_r, &u_prev, &self.cfg)?;
            self.reference.push_interval(u_prev.as_slice().to_vec(), t, self.x_r.as_slice().to_vec());
        }
        let a = self.policy.mean_action(&observe(&self.x_r, &self.platform, t)).map_err(QuadError::Rl)?;
        let u_r = self.actuation.from_action(a.as_slice());
        if u_r.iter().any(|v| !v.is_finite()) {
            return Err(QuadError::NonFinite("reference command".into()));
        }
        self.u_r = Some((t, u_r));
        if !self.enabled {
            return Ok(u_r);
        }
        let w_r = self.nominal.wrench(&u_r);
        let w = self.inner.wrench(x, &self.x_r, &w_r)?;
        let u = self.actuation.propellers(&w);
        if u.iter().any(|v| !v.is_finite()) {
            return Err(QuadError::NonFinite("adapted command".into()));
        }
        Ok(u)
    }
}

/// How the policy is wired to the vehicle.
#[derive(Debug, Clone, Copy)]
pub enum Wiring<'a> {
    Direct(&'a Policy),
    MracRl(&'a Policy, &'a InnerLoopConfig),
}

/// Finished landing episode.
#[derive(Debug, Clone)]
pub struct LandingRun {
    pub outcome: Outcome,
    pub success_time: Option<f64>,
    pub trajectory: Trajectory,
    /// Reference-vehicle trajectory of the MRAC-RL wiring.
    pub reference: Option<Trajectory>,
    /// Controller fault that ended the episode, if any.
    pub fault: Option<String>,
}

/// Runs `controller` on `sim` until a terminal event.
pub fn run_controller<C: QuadController + ?Sized>(sim: &mut LandingSim, controller: &mut C) -> Result<Option<String>, QuadError> {
    while sim.outcome().is_none() {
        match controller.command(sim.time(), sim.state()) {
            Ok(u) => {
                sim.advance(&u)?;
            }
            Err(e) => {
                sim.fail();
                return Ok(Some(e.to_string()));
            }
        }
    }
    Ok(None)
}

pub fn run_landing(task: &TaskConfig, scenario: Scenario, wiring: Wiring<'_>) -> Result<LandingRun, QuadError> {
    let x0 = scenario.x0;
    let platform = scenario.platform;
    let mut sim = LandingSim::new(task, scenario)?;
    let (fault, reference) = match wiring {
        Wiring::Direct(policy) => {
            let mut c = DirectPolicy::new(policy, task, platform)?;
            (run_controller(&mut sim, &mut c)?, None)
        }
        Wiring::MracRl(policy, inner) => {
            let mut c = MracRlController::new(policy, task, inner, x0, platform)?;
            let fault = run_controller(&mut sim, &mut c)?;
            (fault, Some(c.into_reference_trajectory()))
        }
    };
    let outcome = sim.outcome().expect("loop runs to a terminal event");
    let success_time = sim.success_time();
    Ok(LandingRun { outcome, success_time, trajectory: sim.into_trajectory(), reference, fault })
}
