//! Six-degree-of-freedom rigid-body dynamics.
//!
//! `M ν̇ + C(ν)ν + D(ν)ν + g(η) = τ` with `M = diag(m, m, m, Ixx, Iyy, Izz)`
//! (no added mass), diagonal linear plus quadratic damping, an optional
//! rigid-body Coriolis term and the hydrostatic restoring wrench. All wrench
//! helpers here return the force *acting on* the vehicle, so the right-hand
//! side is simply their sum with the thruster wrench.

use nalgebra::{Vector3, Vector6};
use thiserror::Error;

use crate::allocation::{AllocationError, AllocationMatrix};
use crate::frames::{euler_kinematics, BodyVelocity, GeneralizedForce, Pose, SingularityError, ThrustVector};
use crate::params::{Integrator, VehicleParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Singularity(#[from] SingularityError),
    #[error("divergence at t = {t:.3} s: {what}")]
    Divergence { t: f64, what: String },
    #[error("time step {0} s out of range (0, 0.05]")]
    BadStep(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VehicleState {
    pub pose: Pose,
    pub nu: BodyVelocity,
    pub t: f64,
}

impl VehicleState {
    pub fn at_rest(pose: Pose) -> Self {
        Self {
            pose,
            nu: BodyVelocity::default(),
            t: 0.0,
        }
    }

    /// ½ (m |v|² + Σ I_i ω_i²).
    pub fn kinetic_energy(&self, params: &VehicleParams) -> f64 {
        let m = params.total_mass();
        let lin = self.nu.linear().norm_squared();
        let [ix, iy, iz] = params.inertia;
        0.5 * (m * lin + ix * self.nu.p.powi(2) + iy * self.nu.q.powi(2) + iz * self.nu.r.powi(2))
    }
}

/// Parameters plus the allocation matrix built from them.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleModel {
    pub params: VehicleParams,
    pub allocation: AllocationMatrix,
    pub integrator: Integrator,
}

impl VehicleModel {
    pub fn new(params: VehicleParams) -> Result<Self, AllocationError> {
        let allocation = AllocationMatrix::new(params.lever_arms)?;
        Ok(Self {
            params,
            allocation,
            integrator: Integrator::Rk4,
        })
    }

    pub fn with_integrator(mut self, integrator: Integrator) -> Self {
        self.integrator = integrator;
        self
    }

    pub fn step(&self, state: &VehicleState, thrusts: &ThrustVector, dt: f64) -> Result<VehicleState, DynamicsError> {
        step(state, thrusts, self, dt)
    }
}

/// Weight at `r_cg` and buoyancy at `r_cb`, expressed in the body frame.
///
/// Buoyancy acts along world −z; the returned wrench is `−g(η)`.
pub fn restoring_force(pose: &Pose, params: &VehicleParams) -> GeneralizedForce {
    let r_t = pose.rotation().transpose();
    let f_weight = r_t * Vector3::new(0.0, 0.0, params.weight());
    let f_buoy = r_t * Vector3::new(0.0, 0.0, -params.buoyancy());
    let r_cg = Vector3::from(params.r_cg);
    let r_cb = Vector3::from(params.r_cb);
    let moment = r_cg.cross(&f_weight) + r_cb.cross(&f_buoy);
    GeneralizedForce::from_parts(f_weight + f_buoy, moment)
}

/// `−(d_lin + d_quad |ν_i|) ν_i` per axis.
pub fn damping_force(nu: &BodyVelocity, params: &VehicleParams) -> GeneralizedForce {
    let v = nu.as_vector();
    let out = Vector6::from_fn(|i, _| -(params.d_lin[i] + params.d_quad[i] * v[i].abs()) * v[i]);
    GeneralizedForce::from_vector(&out)
}

/// `−C_RB(ν) ν` for a diagonal mass matrix; zero when disabled.
pub fn coriolis_force(nu: &BodyVelocity, params: &VehicleParams) -> GeneralizedForce {
    if !params.coriolis_enabled {
        return GeneralizedForce::ZERO;
    }
    let m = params.total_mass();
    let v = nu.linear();
    let w = nu.angular();
    let inertia = Vector3::from(params.inertia);
    let iw = w.component_mul(&inertia);
    GeneralizedForce::from_parts(-(w.cross(&v) * m), -w.cross(&iw))
}

fn derivative(
    pose: &Pose,
    nu: &BodyVelocity,
    tau_thrust: &Vector6<f64>,
    params: &VehicleParams,
) -> Result<([f64; 6], Vector6<f64>), SingularityError> {
    let eta_dot = euler_kinematics(pose, nu)?.0;
    let tau = tau_thrust
        + restoring_force(pose, params).as_vector()
        + damping_force(nu, params).as_vector()
        + coriolis_force(nu, params).as_vector();
    let m = params.total_mass();
    let [ix, iy, iz] = params.inertia;
    let inv = Vector6::new(1.0 / m, 1.0 / m, 1.0 / m, 1.0 / ix, 1.0 / iy, 1.0 / iz);
    Ok((eta_dot, tau.component_mul(&inv)))
}

fn advance(pose: &Pose, nu: &BodyVelocity, k: &([f64; 6], Vector6<f64>), h: f64) -> (Pose, BodyVelocity) {
    let mut eta = pose.as_array();
    for (e, d) in eta.iter_mut().zip(k.0) {
        *e += h * d;
    }
    (Pose::from_array(eta), BodyVelocity::from_vector(&(nu.as_vector() + k.1 * h)))
}

/// Advances the state by one fixed step with the thruster forces held constant.
pub fn step(
    state: &VehicleState,
    thrusts: &ThrustVector,
    model: &VehicleModel,
    dt: f64,
) -> Result<VehicleState, DynamicsError> {
    if !(dt > 0.0 && dt <= 0.05) {
        return Err(DynamicsError::BadStep(dt));
    }
    let params = &model.params;
    let tau = model.allocation.forward(thrusts).as_vector();
    let (pose0, nu0) = (state.pose, state.nu);

    let (pose, nu) = match model.integrator {
        Integrator::Euler => {
            let k = derivative(&pose0, &nu0, &tau, params)?;
            advance(&pose0, &nu0, &k, dt)
        }
        Integrator::Rk4 => {
            let k1 = derivative(&pose0, &nu0, &tau, params)?;
            let (p2, n2) = advance(&pose0, &nu0, &k1, dt / 2.0);
            let k2 = derivative(&p2, &n2, &tau, params)?;
            let (p3, n3) = advance(&pose0, &nu0, &k2, dt / 2.0);
            let k3 = derivative(&p3, &n3, &tau, params)?;
            let (p4, n4) = advance(&pose0, &nu0, &k3, dt);
            let k4 = derivative(&p4, &n4, &tau, params)?;
            let mut eta_dot = [0.0; 6];
            for i in 0..6 {
                eta_dot[i] = (k1.0[i] + 2.0 * k2.0[i] + 2.0 * k3.0[i] + k4.0[i]) / 6.0;
            }
            let nu_dot = (k1.1 + k2.1 * 2.0 + k3.1 * 2.0 + k4.1) / 6.0;
            advance(&pose0, &nu0, &(eta_dot, nu_dot), dt)
        }
    };

    let t = state.t + dt;
    crate::frames::check_pitch(pose.theta)?;
    if !nu.is_finite() || !pose.as_array().iter().all(|x| x.is_finite()) {
        return Err(DynamicsError::Divergence {
            t,
            what: "non-finite state".into(),
        });
    }
    let lin = nu.linear().amax();
    let ang = nu.angular().amax();
    if lin > params.velocity_limit {
        return Err(DynamicsError::Divergence {
            t,
            what: format!("linear speed {lin:.3} m/s exceeds {}", params.velocity_limit),
        });
    }
    if ang > params.rate_limit {
        return Err(DynamicsError::Divergence {
            t,
            what: format!("angular rate {ang:.3} rad/s exceeds {}", params.rate_limit),
        });
    }
    Ok(VehicleState {
        pose: pose.wrapped(),
        nu,
        t,
    })
}
