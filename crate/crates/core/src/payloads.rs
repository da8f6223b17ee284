//! Marker dropper, torpedo launcher and grabber.
//!
//! Released payloads are point masses in the world NED frame with quadratic
//! drag and a constant net vertical force (buoyancy minus weight).

use std::f64::consts::PI;

use nalgebra::Vector3;
use thiserror::Error;

use crate::dynamics::VehicleState;
use crate::params::WATER_DENSITY;

pub const MARKER_CAPACITY: u8 = 2;
pub const MAX_EXTENSION: f64 = 0.30;
/// Object counts as grabbed when this close to the fingers, m.
pub const GRAB_RADIUS: f64 = 0.06;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PayloadError {
    #[error("dropper is empty")]
    Empty,
    #[error("muzzle speed must be > 0, got {0}")]
    MuzzleSpeed(f64),
    #[error("extension {0} m is outside [0, {MAX_EXTENSION}]")]
    Extension(f64),
    #[error("torpedo tubes are empty")]
    NoTorpedo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectileKind {
    Marker,
    Torpedo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectileSpec {
    pub diameter: f64,
    pub mass: f64,
    pub drag_coeff: f64,
    /// Buoyancy minus weight, N; negative sinks.
    pub net_lift: f64,
}

impl ProjectileSpec {
    pub const MARKER: Self = Self {
        diameter: 0.045,
        mass: 0.046,
        drag_coeff: 0.47,
        net_lift: -0.05,
    };
    pub const TORPEDO: Self = Self {
        diameter: 0.04,
        mass: 0.25,
        drag_coeff: 0.10,
        net_lift: 0.1,
    };

    pub fn area(&self) -> f64 {
        PI * (self.diameter / 2.0).powi(2)
    }

    /// Closed-form vertical terminal speed under the net vertical force.
    pub fn terminal_speed(&self) -> f64 {
        (2.0 * self.net_lift.abs() / (WATER_DENSITY * self.drag_coeff * self.area())).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projectile {
    pub kind: ProjectileKind,
    pub spec: ProjectileSpec,
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    /// Horizontal unit direction the velocity is held to (fin-stabilized).
    pub axis: Option<Vector3<f64>>,
    pub t: f64,
}

impl Projectile {
    fn accel(&self, v: &Vector3<f64>) -> Vector3<f64> {
        let s = &self.spec;
        let drag = 0.5 * WATER_DENSITY * s.drag_coeff * s.area() * v.norm() * v;
        (Vector3::new(0.0, 0.0, -s.net_lift) - drag) / s.mass
    }

    /// Kinetic energy plus potential of the net vertical force (NED z down).
    pub fn mechanical_energy(&self) -> f64 {
        0.5 * self.spec.mass * self.velocity.norm_squared() + self.spec.net_lift * self.position.z
    }

    fn constrain(&self, v: Vector3<f64>) -> Vector3<f64> {
        match self.axis {
            Some(a) => {
                let along = v.x * a.x + v.y * a.y;
                Vector3::new(along * a.x, along * a.y, v.z)
            }
            None => v,
        }
    }
}

/// One RK4 step of `m v̇ = F_net − ½ρ Cd A |v| v`.
pub fn projectile_step(p: &Projectile, dt: f64) -> Projectile {
    assert!(dt > 0.0, "dt must be positive");
    let v0 = p.velocity;
    let k1v = p.accel(&v0);
    let k1x = v0;
    let v1 = v0 + k1v * (dt / 2.0);
    let k2v = p.accel(&v1);
    let k2x = v1;
    let v2 = v0 + k2v * (dt / 2.0);
    let k3v = p.accel(&v2);
    let k3x = v2;
    let v3 = v0 + k3v * dt;
    let k4v = p.accel(&v3);
    let k4x = v3;
    let mut next = *p;
    next.velocity = p.constrain(v0 + (k1v + 2.0 * k2v + 2.0 * k3v + k4v) * (dt / 6.0));
    next.position = p.position + (k1x + 2.0 * k2x + 2.0 * k3x + k4x) * (dt / 6.0);
    next.t = p.t + dt;
    next
}

/// Integrates until the projectile crosses the plane `n·(x − x0) = 0` from the
/// negative side; returns the linearly interpolated crossing point and time.
pub fn fly_to_plane(
    p: &Projectile,
    point: &Vector3<f64>,
    normal: &Vector3<f64>,
    dt: f64,
    max_t: f64,
) -> Option<(Vector3<f64>, f64)> {
    let side = |q: &Projectile| normal.dot(&(q.position - point));
    let mut cur = *p;
    if side(&cur) >= 0.0 {
        return Some((cur.position, cur.t));
    }
    while cur.t - p.t < max_t {
        let next = projectile_step(&cur, dt);
        let (a, b) = (side(&cur), side(&next));
        if b >= 0.0 {
            let f = a / (a - b);
            return Some((cur.position + (next.position - cur.position) * f, cur.t + f * dt));
        }
        cur = next;
    }
    None
}

/// Landing point on a horizontal floor at depth `floor_z`.
pub fn landing_point(p: &Projectile, floor_z: f64, dt: f64, max_t: f64) -> Option<Vector3<f64>> {
    fly_to_plane(p, &Vector3::new(0.0, 0.0, floor_z), &Vector3::z(), dt, max_t).map(|(x, _)| x)
}

/// World position and velocity of a body-fixed point on the vehicle.
fn body_point(state: &VehicleState, offset: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let r = state.pose.rotation();
    let pos = state.pose.position() + r * offset;
    let vel = r * (state.nu.linear() + state.nu.angular().cross(offset));
    (pos, vel)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropperState {
    pub balls_remaining: u8,
    pub servo_angle: f64,
}

impl Default for DropperState {
    fn default() -> Self {
        Self {
            balls_remaining: MARKER_CAPACITY,
            servo_angle: 0.0,
        }
    }
}

/// Servo positions releasing the first and second ball.
const SERVO_POSITIONS: [f64; 2] = [PI / 4.0, -PI / 4.0];

/// Releases exactly one marker from the body-frame `offset`.
pub fn drop(
    state: &DropperState,
    vehicle: &VehicleState,
    offset: &Vector3<f64>,
    spec: &ProjectileSpec,
) -> Result<(DropperState, Projectile), PayloadError> {
    if state.balls_remaining == 0 {
        return Err(PayloadError::Empty);
    }
    let released = (MARKER_CAPACITY - state.balls_remaining) as usize;
    let next = DropperState {
        balls_remaining: state.balls_remaining - 1,
        servo_angle: SERVO_POSITIONS[released.min(1)],
    };
    let (position, velocity) = body_point(vehicle, offset);
    Ok((
        next,
        Projectile {
            kind: ProjectileKind::Marker,
            spec: *spec,
            position,
            velocity,
            axis: None,
            t: vehicle.t,
        },
    ))
}

/// Fires along body +x from `offset`, adding `muzzle_speed` to the vehicle velocity.
pub fn launch_torpedo(
    vehicle: &VehicleState,
    offset: &Vector3<f64>,
    muzzle_speed: f64,
    spec: &ProjectileSpec,
) -> Result<Projectile, PayloadError> {
    if !(muzzle_speed > 0.0 && muzzle_speed.is_finite()) {
        return Err(PayloadError::MuzzleSpeed(muzzle_speed));
    }
    let r = vehicle.pose.rotation();
    let (position, base) = body_point(vehicle, offset);
    let forward = r * Vector3::x();
    let horizontal = Vector3::new(forward.x, forward.y, 0.0);
    let axis = (horizontal.norm() > 1e-9).then(|| horizontal.normalize());
    Ok(Projectile {
        kind: ProjectileKind::Torpedo,
        spec: *spec,
        position,
        velocity: base + forward * muzzle_speed,
        axis,
        t: vehicle.t,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fingers {
    Open,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GrabberCommand {
    Extend(f64),
    Retract,
    Open,
    Close,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrabberState {
    pub extension: f64,
    pub fingers: Fingers,
    pub holding: bool,
    /// Command in flight and the time it completes.
    pub pending: Option<(GrabberCommand, f64)>,
}

impl Default for GrabberState {
    fn default() -> Self {
        Self {
            extension: 0.0,
            fingers: Fingers::Open,
            holding: false,
            pending: None,
        }
    }
}

impl GrabberState {
    pub fn busy(&self) -> bool {
        self.pending.is_some()
    }
}

/// Queues a command that completes `delay` seconds after `now`.
pub fn grabber_command(
    state: &GrabberState,
    cmd: GrabberCommand,
    now: f64,
    delay: f64,
) -> Result<GrabberState, PayloadError> {
    if let GrabberCommand::Extend(x) = cmd {
        if !(0.0..=MAX_EXTENSION).contains(&x) {
            return Err(PayloadError::Extension(x));
        }
    }
    Ok(GrabberState {
        pending: Some((cmd, now + delay)),
        ..*state
    })
}

/// Completes a due command. `object_distance` is the gap between the
/// fingers and the nearest grabbable object, if any.
pub fn grabber_update(state: &GrabberState, now: f64, object_distance: Option<f64>) -> GrabberState {
    let mut s = *state;
    if let Some((cmd, due)) = state.pending {
        if now + 1e-9 >= due {
            s.pending = None;
            match cmd {
                GrabberCommand::Extend(x) => s.extension = x,
                GrabberCommand::Retract => s.extension = 0.0,
                GrabberCommand::Open => {
                    s.fingers = Fingers::Open;
                    s.holding = false;
                }
                GrabberCommand::Close => {
                    s.fingers = Fingers::Closed;
                    s.holding = object_distance.is_some_and(|d| d <= GRAB_RADIUS);
                }
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{BodyVelocity, Pose};
    use proptest::prelude::*;

    fn vehicle_at(x: f64, y: f64, z: f64, psi: f64, u: f64) -> VehicleState {
        VehicleState {
            pose: Pose::new(x, y, z, 0.0, 0.0, psi),
            nu: BodyVelocity::new(u, 0.0, 0.0, 0.0, 0.0, 0.0),
            t: 0.0,
        }
    }

    fn marker_at_rest() -> Projectile {
        drop(
            &DropperState::default(),
            &vehicle_at(0.0, 0.0, 1.0, 0.0, 0.0),
            &Vector3::new(0.0, 0.0, 0.15),
            &ProjectileSpec::MARKER,
        )
        .unwrap()
        .1
    }

    #[test]
    fn dropper_sequence() {
        let v = vehicle_at(0.0, 0.0, 1.0, 0.0, 0.0);
        let off = Vector3::new(0.1, 0.0, 0.15);
        let (s1, p1) = drop(&DropperState::default(), &v, &off, &ProjectileSpec::MARKER).unwrap();
        assert_eq!(s1.balls_remaining, 1);
        assert_eq!(p1.position, Vector3::new(0.1, 0.0, 1.15));
        let (s2, _) = drop(&s1, &v, &off, &ProjectileSpec::MARKER).unwrap();
        assert_eq!(s2.balls_remaining, 0);
        assert_ne!(s1.servo_angle, s2.servo_angle);
        assert_eq!(drop(&s2, &v, &off, &ProjectileSpec::MARKER), Err(PayloadError::Empty));
    }

    #[test]
    fn marker_inherits_vehicle_velocity() {
        let v = vehicle_at(0.0, 0.0, 1.0, std::f64::consts::FRAC_PI_2, 0.4);
        let (_, p) = drop(&DropperState::default(), &v, &Vector3::zeros(), &ProjectileSpec::MARKER).unwrap();
        assert!((p.velocity - Vector3::new(0.0, 0.4, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn marker_sinks_to_terminal_speed() {
        let mut p = marker_at_rest();
        let p1 = projectile_step(&p, 0.01);
        assert!(p1.velocity.z > 0.0);
        for _ in 0..2000 {
            p = projectile_step(&p, 0.005);
        }
        let vt = (2.0 * 0.05 / (1000.0 * 0.47 * PI * 0.0225 * 0.0225)).sqrt();
        assert!((p.velocity.z - vt).abs() / vt < 0.01, "{} vs {vt}", p.velocity.z);
        assert!((ProjectileSpec::MARKER.terminal_speed() - vt).abs() < 1e-12);
    }

    #[test]
    fn torpedo_rises_while_slowing() {
        let v = vehicle_at(0.0, 0.0, 2.0, 0.3, 0.0);
        let mut p = launch_torpedo(&v, &Vector3::zeros(), 3.0, &ProjectileSpec::TORPEDO).unwrap();
        assert!((p.velocity.norm() - 3.0).abs() < 1e-12);
        let heading = Vector3::new(0.3f64.cos(), 0.3f64.sin(), 0.0);
        assert!((p.velocity.normalize() - heading).norm() < 1e-12);
        let speed0 = p.velocity.norm();
        for _ in 0..50 {
            p = projectile_step(&p, 0.01);
        }
        assert!(p.position.z < 2.0, "torpedo should rise");
        let horiz = Vector3::new(p.velocity.x, p.velocity.y, 0.0);
        assert!(horiz.norm() < speed0);
        // Fins hold the horizontal path on the launch axis.
        assert!(horiz.normalize().cross(&heading).norm() < 1e-9);
        assert_eq!(
            launch_torpedo(&v, &Vector3::zeros(), 0.0, &ProjectileSpec::TORPEDO),
            Err(PayloadError::MuzzleSpeed(0.0))
        );
    }

    #[test]
    fn torpedo_hits_target_two_meters_ahead() {
        let v = vehicle_at(0.0, 0.0, 2.0, 0.0, 0.0);
        let p = launch_torpedo(&v, &Vector3::zeros(), 3.0, &ProjectileSpec::TORPEDO).unwrap();
        let plane = Vector3::new(2.0, 0.0, 0.0);
        let (hit, t) = fly_to_plane(&p, &plane, &Vector3::x(), 0.01, 10.0).unwrap();
        let (fine, _) = fly_to_plane(&p, &plane, &Vector3::x(), 0.0001, 10.0).unwrap();
        assert!((hit - fine).norm() < 1e-4);
        assert!(t > 0.6 && t < 1.5, "{t}");
        let radius = 0.15;
        assert!((hit - Vector3::new(2.0, 0.0, 2.0)).norm() < radius, "{hit:?}");
    }

    #[test]
    fn landing_matches_fine_reference() {
        let v = vehicle_at(1.0, -2.0, 1.0, 0.7, 0.3);
        let (_, p) = drop(&DropperState::default(), &v, &Vector3::new(0.0, 0.0, 0.15), &ProjectileSpec::MARKER).unwrap();
        let coarse = landing_point(&p, 4.0, 0.01, 120.0).unwrap();
        let fine = landing_point(&p, 4.0, 0.0001, 120.0).unwrap();
        let path = (fine - p.position).norm();
        assert!((coarse - fine).norm() <= 0.05 * path);
        assert!((coarse.z - 4.0).abs() < 1e-12);
    }

    #[test]
    fn grabber_timing_and_limits() {
        let g = GrabberState::default();
        let g = grabber_command(&g, GrabberCommand::Extend(0.30), 0.0, 1.0).unwrap();
        assert_eq!(grabber_update(&g, 0.5, None).extension, 0.0);
        let g = grabber_update(&g, 1.0, None);
        assert_eq!(g.extension, 0.30);
        assert!(!g.busy());
        assert_eq!(
            grabber_command(&g, GrabberCommand::Extend(0.35), 1.0, 1.0),
            Err(PayloadError::Extension(0.35))
        );
        let g = grabber_command(&g, GrabberCommand::Close, 1.0, 1.0).unwrap();
        let held = grabber_update(&g, 2.0, Some(0.05));
        assert!(held.holding && held.fingers == Fingers::Closed);
        let missed = grabber_update(&g, 2.0, Some(0.07));
        assert!(!missed.holding && missed.fingers == Fingers::Closed);
        let opened = grabber_update(&grabber_command(&held, GrabberCommand::Open, 2.0, 1.0).unwrap(), 3.0, None);
        assert!(!opened.holding);
    }

    proptest! {
        #[test]
        fn energy_non_increasing(
            vx in -2.0f64..2.0, vy in -2.0f64..2.0, vz in -2.0f64..2.0,
            torpedo in any::<bool>(),
        ) {
            let spec = if torpedo { ProjectileSpec::TORPEDO } else { ProjectileSpec::MARKER };
            let mut p = Projectile {
                kind: ProjectileKind::Marker,
                spec,
                position: Vector3::new(0.0, 0.0, 2.0),
                velocity: Vector3::new(vx, vy, vz),
                axis: None,
                t: 0.0,
            };
            let mut e = p.mechanical_energy();
            for _ in 0..300 {
                p = projectile_step(&p, 0.01);
                let e2 = p.mechanical_energy();
                prop_assert!(e2 <= e + 1e-9);
                e = e2;
            }
        }

        #[test]
        fn holding_implies_closed(cmds in prop::collection::vec(0u8..4, 1..12), d in 0.0f64..0.2) {
            let mut g = GrabberState::default();
            let mut t = 0.0;
            for c in cmds {
                let cmd = match c {
                    0 => GrabberCommand::Extend(0.2),
                    1 => GrabberCommand::Retract,
                    2 => GrabberCommand::Open,
                    _ => GrabberCommand::Close,
                };
                g = grabber_command(&g, cmd, t, 1.0).unwrap();
                t += 1.0;
                g = grabber_update(&g, t, Some(d));
                prop_assert!(!g.holding || g.fingers == Fingers::Closed);
                prop_assert!((0.0..=MAX_EXTENSION).contains(&g.extension));
            }
        }
    }
}
