use nalgebra::DVector;

use super::{mrac_control, mrac_update, AdaptiveLoopState, MracError};
use crate::sim::{rk4_step, Command, Controller, IntegratorConfig};

/// Per-control-step record of the loop's internals.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingSample {
    pub t: f64,
    pub x_r: DVector<f64>,
    pub e_x: DVector<f64>,
    pub zeta: DVector<f64>,
    pub k_zeta: DVector<f64>,
    pub k_xi: f64,
    pub xi: f64,
    pub u_r: f64,
    pub u: f64,
}

/// Single-input MRAC-RL controller for a canonical plant.
///
/// The reference model is integrated in lockstep with the plant (same RK4
/// step, `u_r` held between boundaries) and starts on the plant's initial
/// state. `policy` maps `(t, x_r)` to `u_r`.
pub struct MracTracker<P> {
    state: AdaptiveLoopState,
    policy: P,
    cfg: IntegratorConfig,
    x_r: Option<DVector<f64>>,
    u_r: f64,
    history: Vec<TrackingSample>,
    fault: Option<MracError>,
}

impl<P> MracTracker<P>
where
    P: FnMut(f64, &DVector<f64>) -> f64,
{
    pub fn new(state: AdaptiveLoopState, policy: P, cfg: IntegratorConfig) -> Self {
        Self { state, policy, cfg, x_r: None, u_r: 0.0, history: Vec::new(), fault: None }
    }

    pub fn state(&self) -> &AdaptiveLoopState {
        &self.state
    }

    pub fn history(&self) -> &[TrackingSample] {
        &self.history
    }

    pub fn fault(&self) -> Option<&MracError> {
        self.fault.as_ref()
    }

    fn advance_reference(&mut self, x: &DVector<f64>) -> Result<DVector<f64>, MracError> {
        let Some(x_r) = self.x_r.take() else {
            return Ok(x.clone());
        };
        let reference = self.state.reference();
        let mut x_r = x_r;
        for _ in 0..self.cfg.substeps() {
            x_r = rk4_step(|s: &DVector<f64>, u: &f64| reference.derivative(s, *u), &x_r, &self.u_r, self.cfg.dt_int)
                .map_err(|_| MracError::Adaptation)?;
        }
        Ok(x_r)
    }

    fn step(&mut self, t: f64, x: &DVector<f64>) -> Result<f64, MracError> {
        let n = self.state.reference().dim();
        if x.len() != n {
            return Err(MracError::Dimension { expected: n, got: x.len() });
        }
        let x_r = self.advance_reference(x)?;
        let u_r = (self.policy)(t, &x_r);
        let reference = self.state.reference();
        let zeta = reference.zeta(x.as_slice()).map_err(|_| MracError::Dimension { expected: n, got: x.len() })?;
        let zeta_r = reference.zeta(x_r.as_slice()).map_err(|_| MracError::Dimension { expected: n, got: n })?;
        let e_x = x - &x_r;
        let xi = self.state.xi(u_r, &(&zeta - &zeta_r), &e_x)?;
        let u = mrac_control(&self.state, &zeta, xi);
        if !u.is_finite() {
            return Err(MracError::Adaptation);
        }
        self.history.push(TrackingSample {
            t,
            x_r: x_r.clone(),
            e_x: e_x.clone(),
            zeta: zeta.clone(),
            k_zeta: self.state.k_zeta.clone(),
            k_xi: self.state.k_xi,
            xi,
            u_r,
            u,
        });
        mrac_update(&mut self.state, &zeta, xi, &e_x, self.cfg.dt_ctrl)?;
        self.x_r = Some(x_r);
        self.u_r = u_r;
        Ok(u)
    }
}

impl<P> Controller<DVector<f64>, f64> for MracTracker<P>
where
    P: FnMut(f64, &DVector<f64>) -> f64,
{
    fn command(&mut self, t: f64, x: &DVector<f64>) -> Command<f64> {
        match self.step(t, x) {
            Ok(u) => Command::Apply(u),
            Err(e) => {
                self.fault = Some(e);
                Command::Stop
            }
        }
    }
}
