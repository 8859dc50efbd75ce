use nalgebra::{DVector, SVector};
use serde::{Deserialize, Serialize};

use super::{SimError, Trajectory};

/// Vector-space operations the integrator needs from a state type.
pub trait OdeState: Clone {
    /// `self + h * k`
    fn scaled_add(&self, h: f64, k: &Self) -> Self;
    fn is_finite(&self) -> bool;
    fn components(&self) -> Vec<f64>;
}

impl OdeState for f64 {
    fn scaled_add(&self, h: f64, k: &Self) -> Self {
        self + h * k
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn components(&self) -> Vec<f64> {
        vec![*self]
    }
}

impl OdeState for DVector<f64> {
    fn scaled_add(&self, h: f64, k: &Self) -> Self {
        self + k * h
    }
    fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
    fn components(&self) -> Vec<f64> {
        self.as_slice().to_vec()
    }
}

impl<const N: usize> OdeState for SVector<f64, N> {
    fn scaled_add(&self, h: f64, k: &Self) -> Self {
        self + k * h
    }
    fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
    fn components(&self) -> Vec<f64> {
        self.as_slice().to_vec()
    }
}

/// One classical RK4 step with the input held constant over all four stages.
pub fn rk4_step<S, U, F>(mut f: F, x: &S, u: &U, dt: f64) -> Result<S, SimError>
where
    S: OdeState,
    F: FnMut(&S, &U) -> S,
{
    rk4_step_at(|_, x: &S, u: &U| f(x, u), 0.0, x, u, dt)
}

/// RK4 for a time-varying right-hand side `f(t, x, u)`; stages are evaluated
/// at `t`, `t + dt/2` (twice) and `t + dt`.
pub fn rk4_step_at<S, U, F>(mut f: F, t: f64, x: &S, u: &U, dt: f64) -> Result<S, SimError>
where
    S: OdeState,
    F: FnMut(f64, &S, &U) -> S,
{
    let check = |k: S, stage: usize| if k.is_finite() { Ok(k) } else { Err(SimError::NonFinite { stage }) };
    let mid = t + 0.5 * dt;
    let k1 = check(f(t, x, u), 1)?;
    let k2 = check(f(mid, &x.scaled_add(0.5 * dt, &k1), u), 2)?;
    let k3 = check(f(mid, &x.scaled_add(0.5 * dt, &k2), u), 3)?;
    let k4 = check(f(t + dt, &x.scaled_add(dt, &k3), u), 4)?;
    let h = dt / 6.0;
    Ok(x.scaled_add(h, &k1)
        .scaled_add(2.0 * h, &k2)
        .scaled_add(2.0 * h, &k3)
        .scaled_add(h, &k4))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dt_int: f64,
    pub dt_ctrl: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { dt_int: 1e-3, dt_ctrl: 0.05 }
    }
}

impl IntegratorConfig {
    pub fn new(dt_int: f64, dt_ctrl: f64) -> Result<Self, SimError> {
        let cfg = Self { dt_int, dt_ctrl };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.dt_int > 0.0) || !self.dt_int.is_finite() {
            return Err(SimError::Config(format!("dt_int must be positive, got {}", self.dt_int)));
        }
        if !(self.dt_ctrl > 0.0) || !self.dt_ctrl.is_finite() {
            return Err(SimError::Config(format!("dt_ctrl must be positive, got {}", self.dt_ctrl)));
        }
        let ratio = self.dt_ctrl / self.dt_int;
        if ratio.round() < 1.0 || (ratio - ratio.round()).abs() > 1e-9 * ratio {
            return Err(SimError::Config(format!(
                "dt_ctrl ({}) must be a positive integer multiple of dt_int ({})",
                self.dt_ctrl, self.dt_int
            )));
        }
        Ok(())
    }

    /// Integration steps per control interval.
    pub fn substeps(&self) -> usize {
        (self.dt_ctrl / self.dt_int).round() as usize
    }
}

pub enum Command<U> {
    Apply(U),
    Stop,
}

/// Queried once per control boundary with the current time and state.
pub trait Controller<S, U> {
    fn command(&mut self, t: f64, x: &S) -> Command<U>;
}

impl<S, U, F> Controller<S, U> for F
where
    F: FnMut(f64, &S) -> Command<U>,
{
    fn command(&mut self, t: f64, x: &S) -> Command<U> {
        self(t, x)
    }
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub trajectory: Trajectory,
    /// Set when a non-finite state stopped the run early.
    pub aborted: Option<SimError>,
    /// The controller asked to stop before the horizon.
    pub stopped: bool,
}

/// Fixed-step simulation with zero-order-hold control.
///
/// The controller is queried at every `dt_ctrl` boundary on the current state
/// and its output is held over the `dt_ctrl / dt_int` substeps that follow.
/// Every substep is recorded.
pub fn simulate<S, U, F, C>(
    mut plant: F,
    controller: &mut C,
    x0: S,
    horizon: f64,
    cfg: &IntegratorConfig,
) -> Result<SimOutcome, SimError>
where
    S: OdeState,
    U: OdeState,
    F: FnMut(&S, &U) -> S,
    C: Controller<S, U> + ?Sized,
{
    simulate_with(|_, x: &S, u: &U| plant(x, u), controller, x0, horizon, cfg, |_: &mut S| {})
}

/// [`simulate`] for a time-varying plant `f(t, x, u)`, with `project` applied
/// to the state after every integration step (for example to wrap angles).
pub fn simulate_with<S, U, F, C, P>(
    mut plant: F,
    controller: &mut C,
    x0: S,
    horizon: f64,
    cfg: &IntegratorConfig,
    mut project: P,
) -> Result<SimOutcome, SimError>
where
    S: OdeState,
    U: OdeState,
    F: FnMut(f64, &S, &U) -> S,
    C: Controller<S, U> + ?Sized,
    P: FnMut(&mut S),
{
    cfg.validate()?;
    if !(horizon > 0.0) {
        return Err(SimError::Config(format!("horizon must be positive, got {horizon}")));
    }
    let substeps = cfg.substeps();
    let total = (horizon / cfg.dt_int).round() as usize;
    let mut traj = Trajectory::with_capacity(total + 1);
    let mut x = x0;
    traj.push_sample(0.0, x.components());

    let mut held: Option<U> = None;
    let mut aborted = None;
    let mut stopped = false;
    for k in 0..total {
        let t = k as f64 * cfg.dt_int;
        if k % substeps == 0 {
            match controller.command(t, &x) {
                Command::Apply(u) => held = Some(u),
                Command::Stop => {
                    stopped = true;
                    break;
                }
            }
        }
        let u = held.as_ref().expect("control is set at k = 0");
        match rk4_step_at(&mut plant, t, &x, u, cfg.dt_int) {
            Ok(mut next) if next.is_finite() => {
                project(&mut next);
                x = next;
            }
            Ok(_) => {
                aborted = Some(SimError::NonFinite { stage: 4 });
                break;
            }
            Err(e) => {
                aborted = Some(e);
                break;
            }
        }
        traj.push_interval(u.components(), (k + 1) as f64 * cfg.dt_int, x.components());
    }
    Ok(SimOutcome { trajectory: traj, aborted, stopped })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay(x: &f64, _: &f64) -> f64 {
        -x
    }

    #[test]
    fn rk4_exponential_decay() {
        let x = rk4_step(decay, &1.0, &0.0, 0.1).unwrap();
        let h: f64 = 0.1;
        let taylor = 1.0 - h + h * h / 2.0 - h.powi(3) / 6.0 + h.powi(4) / 24.0;
        assert!((x - taylor).abs() < 1e-15);
        assert!((x - 0.904_837_5).abs() < 1e-15);
    }

    #[test]
    fn rk4_constant_dynamics() {
        for dt in [1e-3, 0.5, 3.0] {
            assert_eq!(rk4_step(|_: &f64, _: &f64| 0.0, &2.5, &0.0, dt).unwrap(), 2.5);
        }
        let x = rk4_step(|_: &f64, _: &f64| 1.0, &0.0, &0.0, 0.05).unwrap();
        assert!((x - 0.05).abs() < 1e-16);
    }

    #[test]
    fn rk4_reports_failing_stage() {
        // Finite at x = 1, blows up once the stage point moves.
        let f = |x: &f64, _: &f64| if *x == 1.0 { -1.0 } else { f64::NAN };
        assert_eq!(rk4_step(f, &1.0, &0.0, 0.1), Err(SimError::NonFinite { stage: 2 }));
    }

    #[test]
    fn rk4_fourth_order_convergence() {
        let global_error = |dt: f64| {
            let steps = (1.0 / dt).round() as usize;
            let mut x = 1.0;
            for _ in 0..steps {
                x = rk4_step(decay, &x, &0.0, dt).unwrap();
            }
            (x - (-1.0f64).exp()).abs()
        };
        let levels = [0.2, 0.1, 0.05, 0.025];
        let errs: Vec<f64> = levels.iter().map(|&h| global_error(h)).collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((14.0..=18.0).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn config_requires_integer_ratio() {
        assert!(IntegratorConfig::new(1e-3, 0.05).is_ok());
        assert_eq!(IntegratorConfig::new(1e-3, 0.05).unwrap().substeps(), 50);
        assert!(IntegratorConfig::new(1e-3, 1e-3).is_ok());
        assert!(IntegratorConfig::new(0.02, 0.05).is_err());
        assert!(IntegratorConfig::new(0.0, 0.05).is_err());
        assert!(IntegratorConfig::new(0.1, 0.05).is_err());
    }

    #[test]
    fn simulate_zero_dynamics() {
        let cfg = IntegratorConfig::new(1e-3, 0.05).unwrap();
        let mut ctrl = |_t: f64, _x: &f64| Command::Apply(3.0);
        let out = simulate(|_: &f64, _: &f64| 0.0, &mut ctrl, 0.7, 1.0, &cfg).unwrap();
        assert_eq!(out.trajectory.len(), 1001);
        assert!(out.trajectory.states().iter().all(|s| s[0] == 0.7));
        assert!(out.aborted.is_none());
    }

    #[test]
    fn simulate_exponential_decay() {
        let cfg = IntegratorConfig::new(1e-3, 0.05).unwrap();
        let mut ctrl = |_t: f64, _x: &f64| Command::Apply(0.0);
        let out = simulate(decay, &mut ctrl, 1.0, 1.0, &cfg).unwrap();
        let last = out.trajectory.final_state().unwrap()[0];
        assert!((last - (-1.0f64).exp()).abs() < 1e-9);
        assert!((out.trajectory.times().last().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn simulate_immediate_stop() {
        let cfg = IntegratorConfig::default();
        let mut ctrl = |_t: f64, _x: &f64| Command::<f64>::Stop;
        let out = simulate(decay, &mut ctrl, 1.0, 5.0, &cfg).unwrap();
        assert!(out.stopped);
        assert_eq!(out.trajectory.len(), 1);
        assert!(out.trajectory.controls().is_empty());
    }

    #[test]
    fn simulate_holds_control_between_boundaries() {
        let cfg = IntegratorConfig::new(1e-3, 0.05).unwrap();
        let mut queries = Vec::new();
        let mut ctrl = |t: f64, x: &f64| {
            queries.push(t);
            Command::Apply(-x)
        };
        let out = simulate(|_: &f64, u: &f64| *u, &mut ctrl, 1.0, 0.5, &cfg).unwrap();
        assert_eq!(queries.len(), 10);
        for interval in out.trajectory.controls().chunks(50) {
            assert!(interval.iter().all(|u| u == &interval[0]));
        }
        assert_ne!(out.trajectory.controls()[0], out.trajectory.controls()[50]);
    }

    #[test]
    fn simulate_aborts_on_divergence() {
        let cfg = IntegratorConfig::new(0.1, 0.1).unwrap();
        let mut ctrl = |_t: f64, _x: &f64| Command::Apply(0.0);
        let out = simulate(|x: &f64, _: &f64| x * x * 1e5, &mut ctrl, 1.0, 10.0, &cfg).unwrap();
        assert!(out.aborted.is_some());
        assert!(out.trajectory.len() < 101);
        assert!(out.trajectory.states().iter().all(|s| s[0].is_finite()));
    }

    #[test]
    fn simulate_is_deterministic() {
        let cfg = IntegratorConfig::new(1e-3, 0.05).unwrap();
        let run = || {
            let mut ctrl = |t: f64, x: &DVector<f64>| Command::Apply((3.0 * t).sin() - x[0]);
            let f = |x: &DVector<f64>, u: &f64| DVector::from_vec(vec![x[1], -x[0].sin() + u]);
            simulate(f, &mut ctrl, DVector::from_vec(vec![0.3, 0.0]), 2.0, &cfg).unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.trajectory.states(), b.trajectory.states());
        assert_eq!(a.trajectory.controls(), b.trajectory.controls());
    }
}
