//! Task handler layer: one state machine per task plus the transit motions
//! that precede it.
//!
//! Every task runs SEARCH → ALIGN → ACT → DONE. ALIGN may fall back to
//! SEARCH when the target is lost; any phase fails on timeout.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::Vector3;

use crate::acoustics::Bearing;
use crate::control::MotionGoal;
use crate::frames::{wrap_angle, Pose};
use crate::payloads::{GrabberCommand, GrabberState, MAX_EXTENSION};
use crate::vision::Detection;

use super::plan::{Motion, TaskKind, TaskSpec, TransitStep};
use super::world::{CameraId, CameraModel};

/// Half-width of the search sweep, rad.
pub const SWEEP_LIMIT: f64 = PI / 4.0;
/// Search sweep rate, rad/s.
pub const SWEEP_RATE: f64 = 0.1;
/// Horizontal pixel tolerance for a centered target.
pub const CENTER_TOLERANCE: f64 = 10.0;
/// Consecutive centered observations required before acting.
pub const STEADY_FRAMES: u32 = 3;
/// Camera-to-object range at which the extended grabber closes on it, m.
pub const GRAB_REACH: f64 = MAX_EXTENSION + 0.03;
/// Horizontal-to-slant ratio below which the pinger counts as underneath.
pub const PINGER_OVERHEAD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    Search,
    Align,
    Act,
    Done,
    Failed,
}

impl Phase {
    pub fn is_terminal(self) -> bool {
        matches!(self, Phase::Done | Phase::Failed)
    }

    pub fn name(self) -> &'static str {
        match self {
            Phase::Search => "SEARCH",
            Phase::Align => "ALIGN",
            Phase::Act => "ACT",
            Phase::Done => "DONE",
            Phase::Failed => "FAILED",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What a task needs sensed this tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sensing {
    None,
    Camera(CameraId),
    Acoustic,
}

pub fn sensing(kind: TaskKind, phase: Phase) -> Sensing {
    if !matches!(phase, Phase::Search | Phase::Align) {
        return Sensing::None;
    }
    match kind {
        TaskKind::Gate | TaskKind::Buoy | TaskKind::Torpedo => Sensing::Camera(CameraId::Front),
        TaskKind::MarkerDrop | TaskKind::Grab => Sensing::Camera(CameraId::Bottom),
        TaskKind::Pinger => Sensing::Acoustic,
    }
}

/// Approach geometry per task kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Approach {
    /// Range the ALIGN phase closes to, m.
    pub standoff: f64,
    /// ACT starts once the range is below `standoff + margin`.
    pub margin: f64,
    /// Ranges used for the two-point size calibration, m.
    pub calibration: (f64, f64),
}

impl Approach {
    pub fn for_task(spec: &TaskSpec) -> Self {
        let (standoff, margin) = match spec.kind {
            TaskKind::Gate => (2.5, 0.5),
            TaskKind::Buoy => (0.5, 0.3),
            TaskKind::Torpedo => (2.0, 0.5),
            TaskKind::MarkerDrop => (1.5, 0.3),
            TaskKind::Grab => (0.45, 0.1),
            TaskKind::Pinger => (0.0, 0.0),
        };
        let standoff = spec.standoff.unwrap_or(standoff);
        let act = standoff + margin;
        Self {
            standoff,
            margin,
            calibration: ((0.75 * act).max(0.2), (1.5 * act).max(0.4)),
        }
    }

    pub fn act_range(&self) -> f64 {
        self.standoff + self.margin
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PayloadCommand {
    DropMarker,
    FireTorpedo,
    Grabber(GrabberCommand),
}

/// Latest perception result for the task's sensor, with its timestamp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observation<'a> {
    /// A processed frame and whatever it found.
    Frame(f64, Option<&'a Detection>),
    Heading(f64, &'a Bearing),
}

impl Observation<'_> {
    pub fn timestamp(&self) -> f64 {
        match *self {
            Observation::Frame(t, _) | Observation::Heading(t, _) => t,
        }
    }
}

/// Read-only snapshot the task handler sees each tick.
#[derive(Debug, Clone, Copy)]
pub struct TaskContext<'a> {
    pub t: f64,
    pub dt: f64,
    /// Navigation estimate, not truth.
    pub pose: Pose,
    pub observation: Option<Observation<'a>>,
    pub camera: CameraModel,
    pub markers_left: u8,
    pub grabber: GrabberState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskState {
    pub phase: Phase,
    /// Time since the task handler took over, s.
    pub elapsed: f64,
    pub phase_time: f64,
    /// Pose at the start of the current phase.
    pub anchor: Pose,
    /// Current sweep offset from the anchor heading, rad.
    pub sweep: f64,
    pub sweep_dir: f64,
    /// Time the target was last seen.
    pub last_seen: f64,
    /// Timestamp of the last observation consumed.
    pub last_obs: f64,
    pub steady: u32,
    /// Last estimated range to the target, m.
    pub range: f64,
    pub stage: u8,
    pub stage_time: f64,
    /// Payload actions issued so far.
    pub issued: u8,
    pub goal: Pose,
    pub note: Option<String>,
}

impl TaskState {
    pub fn start(pose: Pose, t: f64) -> Self {
        let level = level(pose);
        Self {
            phase: Phase::Search,
            elapsed: 0.0,
            phase_time: 0.0,
            anchor: level,
            sweep: 0.0,
            sweep_dir: 1.0,
            last_seen: t,
            last_obs: f64::NEG_INFINITY,
            steady: 0,
            range: 0.0,
            stage: 0,
            stage_time: 0.0,
            issued: 0,
            goal: level,
            note: None,
        }
    }

    fn enter(&mut self, phase: Phase, pose: Pose) {
        self.phase = phase;
        self.phase_time = 0.0;
        self.anchor = level(pose);
        self.stage = 0;
        self.stage_time = 0.0;
        self.steady = 0;
        if phase == Phase::Search {
            self.sweep = 0.0;
            self.sweep_dir = 1.0;
        }
    }

    fn fail(&mut self, pose: Pose, why: &str) {
        self.enter(Phase::Failed, pose);
        self.goal = self.anchor;
        self.note = Some(why.to_string());
    }
}

fn level(pose: Pose) -> Pose {
    Pose {
        phi: 0.0,
        theta: 0.0,
        ..pose
    }
}

/// Pose displaced by `(forward, right, down)` in the heading frame of `psi`.
fn offset(base: &Pose, psi: f64, forward: f64, right: f64, down: f64) -> Pose {
    let (s, c) = psi.sin_cos();
    Pose {
        x: base.x + c * forward - s * right,
        y: base.y + s * forward + c * right,
        z: base.z + down,
        phi: 0.0,
        theta: 0.0,
        psi: base.psi,
    }
}

/// Signed progress from `from` along heading `psi`, m.
fn progress(from: &Pose, to: &Pose, psi: f64) -> f64 {
    (to.x - from.x) * psi.cos() + (to.y - from.y) * psi.sin()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskOutput {
    pub goal: MotionGoal,
    pub command: Option<PayloadCommand>,
}

/// How long a target may go unseen before ALIGN falls back to SEARCH, s.
fn lost_after(kind: TaskKind) -> f64 {
    if kind == TaskKind::Pinger {
        3.5
    } else {
        2.0
    }
}

/// One task-handler tick.
pub fn task_step(spec: &TaskSpec, approach: &Approach, state: &TaskState, ctx: &TaskContext) -> (TaskState, TaskOutput) {
    let mut s = state.clone();
    let mut command = None;
    let pose = ctx.pose;
    if !s.phase.is_terminal() {
        s.elapsed += ctx.dt;
        s.phase_time += ctx.dt;
        s.stage_time += ctx.dt;
        let fresh = ctx.observation.filter(|o| o.timestamp() > s.last_obs);
        if let Some(o) = fresh {
            s.last_obs = o.timestamp();
        }
        if s.elapsed > spec.timeout + 1e-9 {
            s.fail(pose, "timeout");
        } else {
            match s.phase {
                Phase::Search => search(spec, approach, &mut s, ctx, fresh),
                Phase::Align => align(spec, approach, &mut s, ctx, fresh),
                Phase::Act => command = act(spec, &mut s, ctx),
                Phase::Done | Phase::Failed => {}
            }
        }
    }
    let mut goal = MotionGoal::all(s.goal);
    for (e, on) in goal.enabled.iter_mut().zip(spec.switches) {
        *e &= on;
    }
    (s, TaskOutput { goal, command })
}

fn sees_target(o: &Observation) -> bool {
    match o {
        Observation::Frame(_, d) => d.is_some(),
        Observation::Heading(..) => true,
    }
}

fn search(spec: &TaskSpec, approach: &Approach, s: &mut TaskState, ctx: &TaskContext, fresh: Option<Observation>) {
    if let Some(o) = fresh.filter(sees_target) {
        s.enter(Phase::Align, ctx.pose);
        s.last_seen = ctx.t;
        align(spec, approach, s, ctx, Some(o));
        return;
    }
    s.sweep += s.sweep_dir * SWEEP_RATE * ctx.dt;
    if s.sweep.abs() >= SWEEP_LIMIT {
        s.sweep = s.sweep.clamp(-SWEEP_LIMIT, SWEEP_LIMIT);
        s.sweep_dir = -s.sweep_dir;
    }
    s.goal = Pose {
        psi: wrap_angle(s.anchor.psi + s.sweep),
        ..s.anchor
    };
}

fn align(spec: &TaskSpec, approach: &Approach, s: &mut TaskState, ctx: &TaskContext, fresh: Option<Observation>) {
    match fresh {
        Some(Observation::Frame(_, Some(det))) => {
            s.last_seen = ctx.t;
            align_vision(spec, approach, s, ctx, det);
        }
        Some(Observation::Heading(_, b)) => {
            s.last_seen = ctx.t;
            align_acoustic(s, ctx, b);
        }
        _ => {}
    }
    if s.phase == Phase::Align && ctx.t - s.last_seen > lost_after(spec.kind) {
        s.enter(Phase::Search, ctx.pose);
        s.goal = s.anchor;
    }
}

fn align_vision(spec: &TaskSpec, approach: &Approach, s: &mut TaskState, ctx: &TaskContext, det: &Detection) {
    let Some(d) = det.distance else { return };
    let pose = ctx.pose;
    let (cx0, cy0) = ctx.camera.center();
    let (du, dv) = (det.center.0 - cx0, det.center.1 - cy0);
    let scale = d / ctx.camera.focal;
    s.range = d;
    let heading = s.anchor.psi;
    let base = Pose { psi: heading, ..pose };
    let bottom = matches!(spec.kind, TaskKind::MarkerDrop | TaskKind::Grab);
    s.goal = if bottom {
        let forward = (-dv * scale).clamp(-1.0, 1.0);
        let right = (du * scale).clamp(-1.0, 1.0);
        let down = (d - approach.standoff).clamp(-0.5, 0.5);
        offset(&base, heading, forward, right, down)
    } else {
        let forward = (d - approach.standoff).clamp(-0.5, 1.0);
        let right = (du * scale).clamp(-1.0, 1.0);
        let down = (dv * scale).clamp(-0.5, 0.5);
        offset(&base, heading, forward, right, down)
    };
    let centered = du.abs() < CENTER_TOLERANCE && dv.abs() < CENTER_TOLERANCE;
    if centered && d < approach.act_range() {
        s.steady += 1;
    } else {
        s.steady = 0;
    }
    if s.steady >= STEADY_FRAMES {
        let range = s.range;
        s.enter(Phase::Act, pose);
        s.anchor.psi = heading;
        s.range = range;
        s.goal = s.anchor;
    }
}

fn align_acoustic(s: &mut TaskState, ctx: &TaskContext, b: &Bearing) {
    let pose = ctx.pose;
    let horizontal = b.cosines.norm();
    let psi = wrap_angle(pose.psi + b.azimuth);
    s.range = horizontal;
    if horizontal < PINGER_OVERHEAD {
        s.enter(Phase::Act, pose);
        s.goal = s.anchor;
        return;
    }
    let forward = if b.azimuth.abs() < 20f64.to_radians() { 1.0 } else { 0.0 };
    let base = Pose {
        z: s.anchor.z,
        ..pose
    };
    let mut goal = offset(&base, psi, forward, 0.0, 0.0);
    goal.psi = psi;
    s.goal = goal;
}

/// Runs the ACT phase; returns a payload command when one is due.
fn act(spec: &TaskSpec, s: &mut TaskState, ctx: &TaskContext) -> Option<PayloadCommand> {
    let pose = ctx.pose;
    let heading = s.anchor.psi;
    let next_stage = |s: &mut TaskState| {
        s.stage += 1;
        s.stage_time = 0.0;
    };
    match spec.kind {
        TaskKind::Gate => {
            // Drive through: the posts are `range` ahead, clear them by 1.5 m.
            let run = s.range + 1.5;
            s.goal = offset(&s.anchor, heading, run, 0.0, 0.0);
            if progress(&s.anchor, &pose, heading) >= run - 0.2 {
                s.enter(Phase::Done, pose);
                s.goal = s.anchor;
            }
            None
        }
        TaskKind::Buoy => {
            if s.stage == 0 {
                let ram = s.range + 0.2;
                s.goal = offset(&s.anchor, heading, ram, 0.0, 0.0);
                if progress(&s.anchor, &pose, heading) >= s.range - 0.05 {
                    next_stage(s);
                }
            } else {
                s.goal = offset(&s.anchor, heading, -0.5, 0.0, 0.0);
                if progress(&s.anchor, &pose, heading) <= -0.3 {
                    s.enter(Phase::Done, pose);
                    s.goal = s.anchor;
                }
            }
            None
        }
        TaskKind::Torpedo => {
            s.goal = s.anchor;
            if s.stage == 0 && s.stage_time >= 1.0 {
                next_stage(s);
                s.issued += 1;
                return Some(PayloadCommand::FireTorpedo);
            }
            if s.stage == 1 && s.stage_time >= 1.0 {
                s.enter(Phase::Done, pose);
                s.goal = s.anchor;
            }
            None
        }
        TaskKind::MarkerDrop => {
            s.goal = s.anchor;
            if s.stage_time < 1.0 {
                return None;
            }
            if s.issued < spec.count && ctx.markers_left > 0 {
                s.stage_time = 0.0;
                s.issued += 1;
                return Some(PayloadCommand::DropMarker);
            }
            if s.issued == 0 {
                s.fail(pose, "dropper empty");
            } else {
                s.enter(Phase::Done, pose);
                s.goal = s.anchor;
            }
            None
        }
        TaskKind::Grab => {
            // Settle so the extended fingertip ends just inside the object.
            s.goal = s.anchor;
            s.goal.z += (s.range - GRAB_REACH).clamp(-0.3, 0.3);
            if ctx.grabber.busy() || s.stage_time < if s.stage == 0 { 2.0 } else { 0.2 } {
                return None;
            }
            let cmd = match s.stage {
                0 => GrabberCommand::Extend(MAX_EXTENSION),
                1 => GrabberCommand::Close,
                2 if !ctx.grabber.holding => {
                    s.fail(pose, "missed object");
                    return None;
                }
                2 => GrabberCommand::Retract,
                _ => {
                    s.enter(Phase::Done, pose);
                    s.goal = s.anchor;
                    return None;
                }
            };
            next_stage(s);
            Some(PayloadCommand::Grabber(cmd))
        }
        TaskKind::Pinger => {
            s.goal = s.anchor;
            if s.phase_time >= 3.0 {
                s.enter(Phase::Done, pose);
                s.goal = s.anchor;
            }
            None
        }
    }
}

/// Progress through a task's transit motions.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitState {
    pub index: usize,
    pub elapsed: f64,
    pub goal: Option<Pose>,
}

/// Position tolerance for a transit step, m.
const TRANSIT_POS_TOL: f64 = 0.15;
const TRANSIT_DEPTH_TOL: f64 = 0.05;
const TRANSIT_YAW_TOL: f64 = 3.0 * PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransitEvent {
    Reached(usize),
    TimedOut(usize),
}

impl TransitState {
    pub fn new() -> Self {
        Self {
            index: 0,
            elapsed: 0.0,
            goal: None,
        }
    }

    pub fn finished(&self, steps: &[TransitStep]) -> bool {
        self.index >= steps.len()
    }
}

impl Default for TransitState {
    fn default() -> Self {
        Self::new()
    }
}

/// Goal a transit step holds, built from the pose at the step's start.
pub fn transit_goal(step: &TransitStep, start: &Pose) -> Pose {
    let base = level(*start);
    match step.motion {
        Motion::Surge => offset(&base, base.psi, step.setpoint, 0.0, 0.0),
        Motion::Sway => offset(&base, base.psi, 0.0, step.setpoint, 0.0),
        Motion::Heave => Pose { z: step.setpoint, ..base },
        Motion::Yaw => Pose {
            psi: wrap_angle(step.setpoint.to_radians()),
            ..base
        },
    }
}

fn transit_reached(goal: &Pose, pose: &Pose) -> bool {
    let horizontal = (goal.x - pose.x).hypot(goal.y - pose.y);
    horizontal < TRANSIT_POS_TOL
        && (goal.z - pose.z).abs() < TRANSIT_DEPTH_TOL
        && wrap_angle(goal.psi - pose.psi).abs() < TRANSIT_YAW_TOL
}

/// One transit tick. Returns `None` for the goal once every step is over.
pub fn transit_step(
    steps: &[TransitStep],
    state: &TransitState,
    pose: &Pose,
    dt: f64,
) -> (TransitState, Option<Pose>, Option<TransitEvent>) {
    let mut s = state.clone();
    let Some(step) = steps.get(s.index) else {
        return (s, None, None);
    };
    let goal = *s.goal.get_or_insert_with(|| transit_goal(step, pose));
    s.elapsed += dt;
    let event = if transit_reached(&goal, pose) {
        Some(TransitEvent::Reached(s.index))
    } else if s.elapsed >= step.timeout {
        Some(TransitEvent::TimedOut(s.index))
    } else {
        None
    };
    if event.is_some() {
        s.index += 1;
        s.elapsed = 0.0;
        s.goal = None;
    }
    (s, Some(goal), event)
}

/// Body-frame target direction from a world position, for acoustic synthesis.
pub fn body_vector(pose: &Pose, world: &Vector3<f64>) -> Vector3<f64> {
    pose.rotation().transpose() * (world - pose.position())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::payloads::GrabberState;
    use nalgebra::Vector2;
    use proptest::prelude::*;

    fn ctx<'a>(t: f64, pose: Pose, obs: Option<Observation<'a>>) -> TaskContext<'a> {
        TaskContext {
            t,
            dt: 0.01,
            pose,
            observation: obs,
            camera: CameraModel::default(),
            markers_left: 2,
            grabber: GrabberState::default(),
        }
    }

    fn detection(cx: f64, cy: f64, d: f64) -> Detection {
        Detection {
            center: (cx, cy),
            blob_dim: 40.0,
            area: 1000,
            bbox: (0, 0, 10, 10),
            lines: Vec::new(),
            distance: Some(d),
        }
    }

    fn origin() -> Pose {
        Pose::new(0.0, 0.0, 1.5, 0.0, 0.0, 0.0)
    }

    #[test]
    fn search_sweeps_until_seen() {
        let spec = TaskSpec::new(TaskKind::Buoy);
        let ap = Approach::for_task(&spec);
        let mut s = TaskState::start(origin(), 0.0);
        let mut max_sweep: f64 = 0.0;
        for k in 0..2000 {
            let (n, out) = task_step(&spec, &ap, &s, &ctx(k as f64 * 0.01, origin(), None));
            assert_eq!(n.phase, Phase::Search);
            max_sweep = max_sweep.max(out.goal.target.psi.abs());
            assert!(out.goal.target.psi.abs() <= SWEEP_LIMIT + 1e-9);
            s = n;
        }
        // 20 s at 0.1 rad/s reaches the ±45° limit.
        assert!((max_sweep - SWEEP_LIMIT).abs() < 1e-9);
    }

    #[test]
    fn fresh_detection_moves_to_align() {
        let spec = TaskSpec::new(TaskKind::Buoy);
        let ap = Approach::for_task(&spec);
        let s = TaskState::start(origin(), 0.0);
        let det = detection(250.0, 119.5, 3.0);
        let (n, out) = task_step(&spec, &ap, &s, &ctx(0.1, origin(), Some(Observation::Frame(0.1, Some(&det)))));
        assert_eq!(n.phase, Phase::Align);
        // Target right of center: goal moves right (east at zero heading) and forward.
        assert!(out.goal.target.y > 0.0);
        assert!(out.goal.target.x > 0.0);
    }

    #[test]
    fn empty_frame_keeps_searching() {
        let spec = TaskSpec::new(TaskKind::Buoy);
        let ap = Approach::for_task(&spec);
        let s = TaskState::start(origin(), 0.0);
        let (n, _) = task_step(&spec, &ap, &s, &ctx(0.1, origin(), Some(Observation::Frame(0.1, None))));
        assert_eq!(n.phase, Phase::Search);
    }

    #[test]
    fn centered_and_close_enters_act() {
        let spec = TaskSpec::new(TaskKind::Buoy);
        let ap = Approach::for_task(&spec);
        let cam = CameraModel::default();
        let (cx, cy) = cam.center();
        let det = detection(cx + 9.0, cy - 9.0, ap.act_range() - 0.05);
        let mut s = TaskState::start(origin(), 0.0);
        for k in 1..=STEADY_FRAMES as usize {
            let t = k as f64 * 0.1;
            s = task_step(&spec, &ap, &s, &ctx(t, origin(), Some(Observation::Frame(t, Some(&det))))).0;
        }
        assert_eq!(s.phase, Phase::Act);
    }

    #[test]
    fn off_center_or_far_stays_in_align() {
        let spec = TaskSpec::new(TaskKind::Buoy);
        let ap = Approach::for_task(&spec);
        let (cx, cy) = CameraModel::default().center();
        for det in [detection(cx + 11.0, cy, 0.6), detection(cx, cy, ap.act_range() + 0.1)] {
            let mut s = TaskState::start(origin(), 0.0);
            for k in 1..=10 {
                let t = k as f64 * 0.1;
                s = task_step(&spec, &ap, &s, &ctx(t, origin(), Some(Observation::Frame(t, Some(&det))))).0;
            }
            assert_eq!(s.phase, Phase::Align);
        }
    }

    #[test]
    fn lost_target_returns_to_search() {
        let spec = TaskSpec::new(TaskKind::Buoy);
        let ap = Approach::for_task(&spec);
        let det = detection(100.0, 100.0, 3.0);
        let s = TaskState::start(origin(), 0.0);
        let (mut s, _) = task_step(&spec, &ap, &s, &ctx(0.0, origin(), Some(Observation::Frame(0.0, Some(&det)))));
        assert_eq!(s.phase, Phase::Align);
        for k in 1..=250 {
            let t = k as f64 * 0.01;
            s = task_step(&spec, &ap, &s, &ctx(t, origin(), Some(Observation::Frame(t, None)))).0;
        }
        assert_eq!(s.phase, Phase::Search);
    }

    #[test]
    fn timeout_fails_the_task() {
        let mut spec = TaskSpec::new(TaskKind::Gate);
        spec.timeout = 1.0;
        let ap = Approach::for_task(&spec);
        let mut s = TaskState::start(origin(), 0.0);
        for k in 0..101 {
            s = task_step(&spec, &ap, &s, &ctx(k as f64 * 0.01, origin(), None)).0;
        }
        assert_eq!(s.phase, Phase::Failed);
        assert_eq!(s.note.as_deref(), Some("timeout"));
        // Terminal states stay put.
        let (n, _) = task_step(&spec, &ap, &s, &ctx(2.0, origin(), None));
        assert_eq!(n, s);
    }

    #[test]
    fn pinger_uses_heading() {
        let spec = TaskSpec::new(TaskKind::Pinger);
        let ap = Approach::for_task(&spec);
        assert_eq!(sensing(TaskKind::Pinger, Phase::Search), Sensing::Acoustic);
        let b = Bearing {
            azimuth: 0.3,
            cosines: Vector2::new(0.3f64.cos(), 0.3f64.sin()) * 0.9,
            delays: [0.0; 2],
        };
        let s = TaskState::start(origin(), 0.0);
        let (n, out) = task_step(&spec, &ap, &s, &ctx(1.0, origin(), Some(Observation::Heading(1.0, &b))));
        assert_eq!(n.phase, Phase::Align);
        assert!((out.goal.target.psi - 0.3).abs() < 1e-12);
        // Nearly overhead: act.
        let above = Bearing {
            cosines: Vector2::new(0.2, 0.1),
            ..b
        };
        let (n, _) = task_step(&spec, &ap, &n, &ctx(2.0, origin(), Some(Observation::Heading(2.0, &above))));
        assert_eq!(n.phase, Phase::Act);
    }

    #[test]
    fn marker_drop_releases_count_markers() {
        let spec = TaskSpec::new(TaskKind::MarkerDrop);
        let ap = Approach::for_task(&spec);
        let mut s = TaskState::start(origin(), 0.0);
        s.enter(Phase::Act, origin());
        let mut drops = 0;
        let mut left = 2u8;
        for k in 0..500 {
            let mut c = ctx(k as f64 * 0.01, origin(), None);
            c.markers_left = left;
            let (n, out) = task_step(&spec, &ap, &s, &c);
            if out.command == Some(PayloadCommand::DropMarker) {
                drops += 1;
                left -= 1;
            }
            s = n;
        }
        assert_eq!(drops, 2);
        assert_eq!(s.phase, Phase::Done);
    }

    #[test]
    fn switches_mask_axes() {
        let mut spec = TaskSpec::new(TaskKind::Gate);
        spec.switches = [true, false, true, false, false, true];
        let ap = Approach::for_task(&spec);
        let s = TaskState::start(origin(), 0.0);
        let (_, out) = task_step(&spec, &ap, &s, &ctx(0.0, origin(), None));
        assert_eq!(out.goal.enabled, spec.switches);
    }

    #[test]
    fn transit_goals() {
        let start = Pose::new(1.0, 2.0, 0.5, 0.1, 0.0, PI / 2.0);
        let step = |motion, setpoint| TransitStep {
            motion,
            setpoint,
            timeout: 10.0,
        };
        let g = transit_goal(&step(Motion::Surge, 2.0), &start);
        assert!((g.x - 1.0).abs() < 1e-12 && (g.y - 4.0).abs() < 1e-12 && g.phi == 0.0);
        let g = transit_goal(&step(Motion::Sway, 1.0), &start);
        assert!((g.x - 0.0).abs() < 1e-12 && (g.y - 2.0).abs() < 1e-12);
        let g = transit_goal(&step(Motion::Heave, 2.5), &start);
        assert_eq!(g.z, 2.5);
        let g = transit_goal(&step(Motion::Yaw, -90.0), &start);
        assert!((g.psi + PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn transit_times_out_and_advances() {
        let steps = [TransitStep {
            motion: Motion::Surge,
            setpoint: 5.0,
            timeout: 0.05,
        }];
        let mut s = TransitState::new();
        let mut events = Vec::new();
        for _ in 0..10 {
            let (n, _, e) = transit_step(&steps, &s, &origin(), 0.01);
            events.extend(e);
            s = n;
        }
        assert_eq!(events, vec![TransitEvent::TimedOut(0)]);
        assert!(s.finished(&steps));
    }

    proptest! {
        #[test]
        fn phases_only_move_forward_or_retry(
            frames in prop::collection::vec((0.0f64..320.0, 0.0f64..240.0, 0.3f64..5.0, any::<bool>()), 1..200),
        ) {
            let spec = TaskSpec::new(TaskKind::Buoy);
            let ap = Approach::for_task(&spec);
            let mut s = TaskState::start(origin(), 0.0);
            for (k, (cx, cy, d, seen)) in frames.into_iter().enumerate() {
                let t = k as f64 * 0.1;
                let det = detection(cx, cy, d);
                let obs = Observation::Frame(t, seen.then_some(&det));
                let mut c = ctx(t, origin(), Some(obs));
                c.dt = 0.1;
                let (n, _) = task_step(&spec, &ap, &s, &c);
                let retry = s.phase == Phase::Align && n.phase == Phase::Search;
                prop_assert!(n.phase >= s.phase || retry, "{:?} -> {:?}", s.phase, n.phase);
                s = n;
            }
        }
    }
}
