//! Motion library: six independent PID loops, one per degree of freedom.
//!
//! Position errors are rotated into the current body frame so the surge, sway
//! and heave loops drive body axes; attitude errors are shortest signed angle
//! differences.

use crate::config::{ConfigError, Section};
use crate::frames::{wrap_angle, GeneralizedForce, Pose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Surge,
    Sway,
    Heave,
    Roll,
    Pitch,
    Yaw,
}

impl Axis {
    pub const ALL: [Axis; 6] = [
        Axis::Surge,
        Axis::Sway,
        Axis::Heave,
        Axis::Roll,
        Axis::Pitch,
        Axis::Yaw,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::Surge => "surge",
            Axis::Sway => "sway",
            Axis::Heave => "heave",
            Axis::Roll => "roll",
            Axis::Pitch => "pitch",
            Axis::Yaw => "yaw",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub out_min: f64,
    pub out_max: f64,
    pub i_min: f64,
    pub i_max: f64,
}

impl PidGains {
    /// Symmetric output and integral limits.
    pub fn new(kp: f64, ki: f64, kd: f64, out_limit: f64, i_limit: f64) -> Self {
        Self {
            kp,
            ki,
            kd,
            out_min: -out_limit,
            out_max: out_limit,
            i_min: -i_limit,
            i_max: i_limit,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.out_min < self.out_max) {
            return Err(format!("out_min {} must be < out_max {}", self.out_min, self.out_max));
        }
        if !(self.i_min <= 0.0 && 0.0 <= self.i_max) {
            return Err(format!("integral clamp [{}, {}] must contain 0", self.i_min, self.i_max));
        }
        if ![self.kp, self.ki, self.kd].iter().all(|g| g.is_finite()) {
            return Err("gains must be finite".into());
        }
        Ok(())
    }
}

/// Shipped per-axis gains for the default vehicle, indexed by [`Axis`].
pub fn default_gains() -> [PidGains; 6] {
    [
        PidGains::new(40.0, 1.0, 45.0, 30.0, 2.0),
        PidGains::new(40.0, 1.0, 45.0, 30.0, 2.0),
        PidGains::new(120.0, 10.0, 60.0, 70.0, 0.5),
        PidGains::new(10.0, 0.5, 4.0, 5.0, 1.0),
        PidGains::new(10.0, 0.5, 4.0, 5.0, 1.0),
        PidGains::new(8.0, 0.5, 4.0, 5.0, 2.0),
    ]
}

/// Applies `pid.<axis>.{kp,ki,kd,out_limit,i_limit}` overrides from `section`.
pub fn gains_from_section(section: &Section, mut gains: [PidGains; 6]) -> Result<[PidGains; 6], ConfigError> {
    for e in &section.entries {
        let parts: Vec<&str> = e.key.split('.').collect();
        let bad = || ConfigError::UnknownKey {
            line: e.line,
            section: section.name.clone(),
            key: e.key.clone(),
        };
        let [pid, axis, field] = parts.as_slice() else {
            return Err(bad());
        };
        if *pid != "pid" {
            return Err(bad());
        }
        let axis = Axis::from_name(axis).ok_or_else(bad)?;
        let value: f64 = section.require(&e.key)?;
        let g = &mut gains[axis.index()];
        match *field {
            "kp" => g.kp = value,
            "ki" => g.ki = value,
            "kd" => g.kd = value,
            "out_limit" => {
                g.out_min = -value;
                g.out_max = value;
            }
            "i_limit" => {
                g.i_min = -value;
                g.i_max = value;
            }
            _ => return Err(bad()),
        }
        g.validate().map_err(|msg| ConfigError::Value {
            line: e.line,
            key: e.key.clone(),
            msg,
        })?;
    }
    Ok(gains)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PidState {
    pub integral: f64,
    pub prev_error: f64,
    pub initialized: bool,
}

/// One discrete PID update.
///
/// The integral is accumulated then clamped; the derivative is a backward
/// difference on the error and is zero on the first call.
pub fn pid_step(gains: &PidGains, state: &PidState, error: f64, dt: f64) -> (f64, PidState) {
    debug_assert!(dt > 0.0);
    let integral = (state.integral + error * dt).clamp(gains.i_min, gains.i_max);
    let derivative = if state.initialized {
        (error - state.prev_error) / dt
    } else {
        0.0
    };
    let raw = gains.kp * error + gains.ki * integral + gains.kd * derivative;
    let out = raw.clamp(gains.out_min, gains.out_max);
    (
        out,
        PidState {
            integral,
            prev_error: error,
            initialized: true,
        },
    )
}

/// Target pose in the world frame plus per-axis enable switches (indexed by [`Axis`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionGoal {
    pub target: Pose,
    pub enabled: [bool; 6],
}

impl MotionGoal {
    pub fn all(target: Pose) -> Self {
        Self {
            target,
            enabled: [true; 6],
        }
    }

    /// Holds the given pose on every axis.
    pub fn hold(pose: Pose) -> Self {
        Self::all(Pose { phi: 0.0, theta: 0.0, ..pose })
    }

    pub fn with_axis(mut self, axis: Axis, on: bool) -> Self {
        self.enabled[axis.index()] = on;
        self
    }
}

/// Per-axis errors: body-frame position error and wrapped attitude error.
/// Disabled axes report zero.
pub fn compute_errors(current: &Pose, goal: &MotionGoal) -> [f64; 6] {
    let world = goal.target.position() - current.position();
    let body = current.rotation().transpose() * world;
    let raw = [
        body.x,
        body.y,
        body.z,
        wrap_angle(goal.target.phi - current.phi),
        wrap_angle(goal.target.theta - current.theta),
        wrap_angle(goal.target.psi - current.psi),
    ];
    let mut out = [0.0; 6];
    for i in 0..6 {
        if goal.enabled[i] {
            out[i] = raw[i];
        }
    }
    out
}

/// Runs all six loops on the same tick.
pub fn control_step(
    goal: &MotionGoal,
    gains: &[PidGains; 6],
    states: &[PidState; 6],
    pose: &Pose,
    dt: f64,
) -> (GeneralizedForce, [PidState; 6]) {
    let errors = compute_errors(pose, goal);
    let mut out = [0.0; 6];
    let mut next = *states;
    for i in 0..6 {
        let (o, s) = pid_step(&gains[i], &states[i], errors[i], dt);
        out[i] = o;
        next[i] = s;
    }
    (GeneralizedForce::from_array(out), next)
}

/// Gains plus loop state, owned by whoever runs the control tick.
#[derive(Debug, Clone, PartialEq)]
pub struct Controller {
    pub gains: [PidGains; 6],
    pub states: [PidState; 6],
}

impl Default for Controller {
    fn default() -> Self {
        Self::new(default_gains())
    }
}

impl Controller {
    pub fn new(gains: [PidGains; 6]) -> Self {
        Self {
            gains,
            states: [PidState::default(); 6],
        }
    }

    pub fn step(&mut self, goal: &MotionGoal, pose: &Pose, dt: f64) -> GeneralizedForce {
        let (tau, states) = control_step(goal, &self.gains, &self.states, pose, dt);
        self.states = states;
        tau
    }

    pub fn reset(&mut self) {
        self.states = [PidState::default(); 6];
    }
}
