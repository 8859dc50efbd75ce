use std::f64::consts::PI;

use nalgebra::{DVector, Matrix4, SVector, Vector4};

use super::{QuadError, QuadrotorParams};
use crate::sim::CanonicalPlant;

/// `[x, y, z, ẋ, ẏ, ż, φ, θ, ψ, φ̇, θ̇, ψ̇]`, inertial position and velocity,
/// Euler angles and their rates.
pub type QuadState = SVector<f64, 12>;

/// Squared propeller speeds.
pub type Propellers = SVector<f64, 4>;

pub mod idx {
    pub const X: usize = 0;
    pub const Y: usize = 1;
    pub const Z: usize = 2;
    pub const VX: usize = 3;
    pub const VY: usize = 4;
    pub const VZ: usize = 5;
    pub const PHI: usize = 6;
    pub const THETA: usize = 7;
    pub const PSI: usize = 8;
    pub const P: usize = 9;
    pub const Q: usize = 10;
    pub const R: usize = 11;
    pub const ANGLES: [usize; 3] = [PHI, THETA, PSI];
}

/// Body vertical force and the three body moments.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Wrench {
    pub f_z: f64,
    pub tau_phi: f64,
    pub tau_theta: f64,
    pub tau_psi: f64,
}

impl Wrench {
    pub fn to_vector(self) -> Vector4<f64> {
        Vector4::new(self.f_z, self.tau_phi, self.tau_theta, self.tau_psi)
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Self { f_z: v[0], tau_phi: v[1], tau_theta: v[2], tau_psi: v[3] }
    }

    pub fn get(&self, axis: Axis) -> f64 {
        match axis {
            Axis::Thrust => self.f_z,
            Axis::Roll => self.tau_phi,
            Axis::Pitch => self.tau_theta,
            Axis::Yaw => self.tau_psi,
        }
    }

    pub fn set(&mut self, axis: Axis, v: f64) {
        match axis {
            Axis::Thrust => self.f_z = v,
            Axis::Roll => self.tau_phi = v,
            Axis::Pitch => self.tau_theta = v,
            Axis::Yaw => self.tau_psi = v,
        }
    }
}

/// Wrench component driving a subsystem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Thrust,
    Roll,
    Pitch,
    Yaw,
}

/// `M · diag(κ)`.
pub fn mixer_matrix(params: &QuadrotorParams) -> Matrix4<f64> {
    let (l, mu) = (params.l, params.mu);
    #[rustfmt::skip]
    let m = Matrix4::new(
        1.0, 1.0, 1.0, 1.0,
        l, 0.0, -l, 0.0,
        0.0, l, 0.0, -l,
        mu, -mu, mu, -mu,
    );
    m * Matrix4::from_diagonal(&Vector4::from(params.kappa))
}

pub fn mixer(params: &QuadrotorParams, u: &Propellers) -> Result<Wrench, QuadError> {
    if let Some(v) = u.iter().find(|v| !(**v >= 0.0)) {
        return Err(QuadError::Parameter(format!("squared propeller speed must be nonnegative, got {v}")));
    }
    Ok(Wrench::from_vector(&(mixer_matrix(params) * u)))
}

/// Precomputed inverse of the nominal mixer.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseMixer {
    inverse: Matrix4<f64>,
}

impl InverseMixer {
    pub fn new(nominal: &QuadrotorParams) -> Result<Self, QuadError> {
        let inverse = mixer_matrix(nominal)
            .try_inverse()
            .ok_or_else(|| QuadError::Config("nominal mixer is singular (need L, mu, kappa nonzero)".into()))?;
        Ok(Self { inverse })
    }

    /// Unclamped solution of `M diag(κ) u = w`.
    pub fn solve(&self, w: &Wrench) -> Propellers {
        self.inverse * w.to_vector()
    }

    pub fn apply(&self, w: &Wrench) -> Propellers {
        self.solve(w).map(|v| v.max(0.0))
    }
}

pub fn inverse_mixer(nominal: &QuadrotorParams, w: &Wrench) -> Result<Propellers, QuadError> {
    Ok(InverseMixer::new(nominal)?.apply(w))
}

/// Wraps to `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

pub fn wrap_attitude(x: &mut QuadState) {
    for i in idx::ANGLES {
        x[i] = wrap_angle(x[i]);
    }
}

/// Rigid-body model: translational acceleration from the tilted thrust,
/// Euler-angle accelerations from the gyroscopic coupling plus the applied
/// moments.
pub fn quad_derivative(x: &QuadState, w: &Wrench, p: &QuadrotorParams) -> QuadState {
    let (sphi, cphi) = x[idx::PHI].sin_cos();
    let (stheta, ctheta) = x[idx::THETA].sin_cos();
    let (spsi, cpsi) = x[idx::PSI].sin_cos();
    let thrust = w.f_z / p.m;
    let (rp, rq, rr) = (x[idx::P], x[idx::Q], x[idx::R]);
    let mut d = QuadState::zeros();
    d[idx::X] = x[idx::VX];
    d[idx::Y] = x[idx::VY];
    d[idx::Z] = x[idx::VZ];
    d[idx::VX] = (cphi * stheta * cpsi + sphi * spsi) * thrust;
    d[idx::VY] = (cphi * stheta * spsi - sphi * cpsi) * thrust;
    d[idx::VZ] = cphi * ctheta * thrust - p.g;
    d[idx::PHI] = rp;
    d[idx::THETA] = rq;
    d[idx::PSI] = rr;
    d[idx::P] = rq * rr * (p.i_y - p.i_z) / p.i_x + p.l / p.i_x * w.tau_phi;
    d[idx::Q] = rp * rr * (p.i_z - p.i_x) / p.i_y + p.l / p.i_y * w.tau_theta;
    d[idx::R] = rp * rq * (p.i_x - p.i_y) / p.i_z + w.tau_psi / p.i_z;
    d
}

/// One hover-linearized chain and where it lives in the full state.
#[derive(Debug, Clone)]
pub struct Subsystem {
    pub name: &'static str,
    pub indices: Vec<usize>,
    pub axis: Axis,
    pub plant: CanonicalPlant,
}

impl Subsystem {
    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    /// The chain's slice of `x`.
    pub fn slice(&self, x: &QuadState) -> DVector<f64> {
        DVector::from_iterator(self.indices.len(), self.indices.iter().map(|&i| x[i]))
    }

    /// The chain's slice of `x − x_r`, with angle differences wrapped.
    pub fn error(&self, x: &QuadState, x_r: &QuadState) -> DVector<f64> {
        DVector::from_iterator(
            self.indices.len(),
            self.indices.iter().map(|&i| {
                let e = x[i] - x_r[i];
                if idx::ANGLES.contains(&i) {
                    wrap_angle(e)
                } else {
                    e
                }
            }),
        )
    }
}

/// The four decoupled chains around hover, in the canonical form with linear
/// features and zero `α`:
///
/// | chain | states | δ | input | b |
/// |---|---|---|---|---|
/// | x | x, ẋ, θ, θ̇ | 1, g, 1 | τ_θ | L/I_y |
/// | y | y, ẏ, φ, φ̇ | 1, −g, 1 | τ_φ | L/I_x |
/// | z | z, ż | 1 | f_z − m g | 1/m |
/// | ψ | ψ, ψ̇ | 1 | τ_ψ | 1/I_z |
pub fn linearized_subsystems(p: &QuadrotorParams) -> Result<[Subsystem; 4], QuadError> {
    let chain = |name, indices: Vec<usize>, axis, delta: Vec<f64>, b: f64| -> Result<Subsystem, QuadError> {
        let n = indices.len();
        let plant = CanonicalPlant::linear(delta, DVector::zeros(n), b).map_err(QuadError::Sim)?;
        Ok(Subsystem { name, indices, axis, plant })
    };
    use idx::*;
    Ok([
        chain("x", vec![X, VX, THETA, Q], Axis::Pitch, vec![1.0, p.g, 1.0], p.l / p.i_y)?,
        chain("y", vec![Y, VY, PHI, P], Axis::Roll, vec![1.0, -p.g, 1.0], p.l / p.i_x)?,
        chain("z", vec![Z, VZ], Axis::Thrust, vec![1.0], 1.0 / p.m)?,
        chain("psi", vec![PSI, R], Axis::Yaw, vec![1.0], 1.0 / p.i_z)?,
    ])
}

/// Derivative of the stacked linear subsystems, scattered back into the full
/// state layout. `w` is the full wrench; thrust enters as `f_z − m g`.
pub fn linearized_derivative(subsystems: &[Subsystem], p: &QuadrotorParams, x: &QuadState, w: &Wrench) -> QuadState {
    let mut d = QuadState::zeros();
    for s in subsystems {
        let input = match s.axis {
            Axis::Thrust => w.f_z - p.m * p.g,
            axis => w.get(axis),
        };
        let ds = s.plant.derivative(&s.slice(x), input);
        for (k, &i) in s.indices.iter().enumerate() {
            d[i] = ds[k];
        }
    }
    d
}
