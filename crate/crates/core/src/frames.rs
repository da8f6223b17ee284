//! Reference frames and the vehicle state vectors.
//!
//! World frame is north-east-down with `z` positive down, so depth is `z`.
//! Attitude uses Z-Y-X Euler angles (yaw, then pitch, then roll).

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::{Matrix3, Vector3, Vector6};
use thiserror::Error;

/// Pitch is fenced this far from ±π/2.
pub const PITCH_MARGIN: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("pitch {theta} rad outside the non-singular band (|theta| < pi/2 - {PITCH_MARGIN})")]
pub struct SingularityError {
    pub theta: f64,
}

/// Wraps an angle to (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

pub fn check_pitch(theta: f64) -> Result<(), SingularityError> {
    if theta.abs() < FRAC_PI_2 - PITCH_MARGIN {
        Ok(())
    } else {
        Err(SingularityError { theta })
    }
}

/// World-frame position and attitude.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, z: f64, phi: f64, theta: f64, psi: f64) -> Self {
        Self {
            x,
            y,
            z,
            phi,
            theta,
            psi,
        }
    }

    pub fn position(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    /// Same pose with roll and yaw wrapped to (−π, π].
    pub fn wrapped(mut self) -> Self {
        self.phi = wrap_angle(self.phi);
        self.psi = wrap_angle(self.psi);
        self
    }

    /// Body-to-world rotation `R = Rz(psi) Ry(theta) Rx(phi)`.
    pub fn rotation(&self) -> Matrix3<f64> {
        rotation_zyx(self.phi, self.theta, self.psi)
    }

    pub fn as_array(&self) -> [f64; 6] {
        [self.x, self.y, self.z, self.phi, self.theta, self.psi]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self::new(a[0], a[1], a[2], a[3], a[4], a[5])
    }
}

pub fn rotation_zyx(phi: f64, theta: f64, psi: f64) -> Matrix3<f64> {
    let (sphi, cphi) = phi.sin_cos();
    let (sth, cth) = theta.sin_cos();
    let (spsi, cpsi) = psi.sin_cos();
    Matrix3::new(
        cpsi * cth,
        -spsi * cphi + cpsi * sth * sphi,
        spsi * sphi + cpsi * cphi * sth,
        spsi * cth,
        cpsi * cphi + sphi * sth * spsi,
        -cpsi * sphi + sth * spsi * cphi,
        -sth,
        cth * sphi,
        cth * cphi,
    )
}

/// Body-frame linear and angular velocity `[u v w p q r]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BodyVelocity {
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

impl BodyVelocity {
    pub fn new(u: f64, v: f64, w: f64, p: f64, q: f64, r: f64) -> Self {
        Self { u, v, w, p, q, r }
    }

    pub fn linear(&self) -> Vector3<f64> {
        Vector3::new(self.u, self.v, self.w)
    }

    pub fn angular(&self) -> Vector3<f64> {
        Vector3::new(self.p, self.q, self.r)
    }

    pub fn as_vector(&self) -> Vector6<f64> {
        Vector6::new(self.u, self.v, self.w, self.p, self.q, self.r)
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3], v[4], v[5])
    }

    pub fn is_finite(&self) -> bool {
        self.as_vector().iter().all(|x| x.is_finite())
    }
}

/// Six-axis wrench `[tau_x tau_y tau_z tau_phi tau_theta tau_psi]` in the body frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GeneralizedForce {
    pub tau_x: f64,
    pub tau_y: f64,
    pub tau_z: f64,
    pub tau_phi: f64,
    pub tau_theta: f64,
    pub tau_psi: f64,
}

impl GeneralizedForce {
    pub const ZERO: Self = Self {
        tau_x: 0.0,
        tau_y: 0.0,
        tau_z: 0.0,
        tau_phi: 0.0,
        tau_theta: 0.0,
        tau_psi: 0.0,
    };

    pub fn new(tau_x: f64, tau_y: f64, tau_z: f64, tau_phi: f64, tau_theta: f64, tau_psi: f64) -> Self {
        Self {
            tau_x,
            tau_y,
            tau_z,
            tau_phi,
            tau_theta,
            tau_psi,
        }
    }

    pub fn from_parts(force: Vector3<f64>, moment: Vector3<f64>) -> Self {
        Self::new(force.x, force.y, force.z, moment.x, moment.y, moment.z)
    }

    pub fn as_vector(&self) -> Vector6<f64> {
        Vector6::new(
            self.tau_x,
            self.tau_y,
            self.tau_z,
            self.tau_phi,
            self.tau_theta,
            self.tau_psi,
        )
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3], v[4], v[5])
    }

    pub fn as_array(&self) -> [f64; 6] {
        self.as_vector().into()
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self::new(a[0], a[1], a[2], a[3], a[4], a[5])
    }
}

impl std::ops::Add for GeneralizedForce {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self::from_vector(&(self.as_vector() + rhs.as_vector()))
    }
}

/// Individual thruster forces T1..T8 (newtons): 1,2 surge; 3,4 sway; 5..8 heave.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ThrustVector(pub [f64; 8]);

impl ThrustVector {
    pub const ZERO: Self = Self([0.0; 8]);

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, t| m.max(t.abs()))
    }

    pub fn is_saturated_within(&self, t_max: f64) -> bool {
        self.max_abs() <= t_max
    }
}

/// World-frame rate of the pose, `[xdot ydot zdot phidot thetadot psidot]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PoseRate(pub [f64; 6]);

/// Z-Y-X Euler kinematics: maps body velocities to the world-frame pose rate.
pub fn euler_kinematics(pose: &Pose, nu: &BodyVelocity) -> Result<PoseRate, SingularityError> {
    check_pitch(pose.theta)?;
    let lin = pose.rotation() * nu.linear();
    let (sphi, cphi) = pose.phi.sin_cos();
    let cth = pose.theta.cos();
    let tth = pose.theta.tan();
    let phi_dot = nu.p + sphi * tth * nu.q + cphi * tth * nu.r;
    let theta_dot = cphi * nu.q - sphi * nu.r;
    let psi_dot = (sphi * nu.q + cphi * nu.r) / cth;
    Ok(PoseRate([lin.x, lin.y, lin.z, phi_dot, theta_dot, psi_dot]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wrap_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert_eq!(wrap_angle(0.0), 0.0);
    }

    #[test]
    fn aligned_frames_kinematics() {
        let rate = euler_kinematics(&Pose::default(), &BodyVelocity::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0)).unwrap();
        assert_eq!(rate.0, [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn yawed_ninety_degrees_moves_east() {
        let pose = Pose::new(0.0, 0.0, 0.0, 0.0, 0.0, FRAC_PI_2);
        let rate = euler_kinematics(&pose, &BodyVelocity::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0)).unwrap();
        assert!(rate.0[0].abs() < 1e-15);
        assert!((rate.0[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn singular_pitch_rejected() {
        let pose = Pose::new(0.0, 0.0, 0.0, 0.0, FRAC_PI_2 - 0.005, 0.0);
        assert!(euler_kinematics(&pose, &BodyVelocity::default()).is_err());
        assert!(check_pitch(-FRAC_PI_2 + 0.02).is_ok());
    }

    proptest! {
        #[test]
        fn wrap_is_periodic(a in -100.0f64..100.0) {
            let d = wrap_angle(a + TAU) - wrap_angle(a);
            // Both sides may land on opposite ends of the cut at ±π.
            prop_assert!(d.abs() < 1e-12 || (d.abs() - TAU).abs() < 1e-12);
            let w = wrap_angle(a);
            prop_assert!(w > -PI && w <= PI);
        }

        #[test]
        fn rotation_is_orthonormal(
            phi in -PI..PI,
            theta in (-FRAC_PI_2 + PITCH_MARGIN)..(FRAC_PI_2 - PITCH_MARGIN),
            psi in -PI..PI,
        ) {
            let r = rotation_zyx(phi, theta, psi);
            let err = (r.transpose() * r - Matrix3::identity()).abs().max();
            prop_assert!(err < 1e-12);
            prop_assert!((r.determinant() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn kinematics_linear_part_preserves_speed(
            phi in -PI..PI,
            theta in -1.5f64..1.5,
            psi in -PI..PI,
            u in -2.0f64..2.0, v in -2.0f64..2.0, w in -2.0f64..2.0,
        ) {
            let pose = Pose::new(0.0, 0.0, 0.0, phi, theta, psi);
            let nu = BodyVelocity::new(u, v, w, 0.0, 0.0, 0.0);
            let rate = euler_kinematics(&pose, &nu).unwrap();
            let world = (rate.0[0].powi(2) + rate.0[1].powi(2) + rate.0[2].powi(2)).sqrt();
            prop_assert!((world - nu.linear().norm()).abs() < 1e-12);
        }
    }
}
