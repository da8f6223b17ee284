//! The simulation loop behind [`run_mission`] and the report it produces.

use std::fmt::Write as _;

use nalgebra::Vector3;

use crate::acoustics::ping_bearing;
use crate::control::{Controller, MotionGoal};
use crate::dynamics::{VehicleModel, VehicleState};
use crate::frames::{Pose, ThrustVector};
use crate::payloads::{
    self, fly_to_plane, grabber_command, grabber_update, landing_point, DropperState, GrabberState, ProjectileSpec,
};
use crate::power::{Consumer, PowerSystem};
use crate::rng::{stream, stream_rng};
use crate::sensors::SensorSuite;
use crate::telemetry::TelemetryRow;
use crate::vision::{blue_filter, degrade, detect, BlueFilterConfig, Calibration, DegradeConfig};

use super::bus::{topic, Bus, Payload};
use super::plan::{MissionPlan, TaskKind, TaskSpec};
use super::task::{
    body_vector, sensing, task_step, transit_step, Approach, Observation, PayloadCommand, Phase, Sensing,
    TaskContext, TaskState, TransitEvent, TransitState,
};
use super::world::{
    CameraId, EventKind, Scenario, Target, TargetKind, DROPPER_OFFSET, GRABBER_OFFSET, NOSE_OFFSET,
    TORPEDO_OFFSET,
};
use super::MissionError;

/// Integration step for released projectiles, s.
const PROJECTILE_DT: f64 = 1e-3;
/// Frames older than this are ignored by the task handler, s.
const FRAME_MAX_AGE: f64 = 0.5;
/// Sensor readings older than this are treated as missing, s.
const READING_MAX_AGE: f64 = 0.5;

fn vec3(a: [f64; 3]) -> Vector3<f64> {
    Vector3::new(a[0], a[1], a[2])
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Done,
    Failed(String),
    NotRun,
}

impl Outcome {
    pub fn label(&self) -> String {
        match self {
            Outcome::Done => "DONE".into(),
            Outcome::Failed(why) => format!("FAILED ({why})"),
            Outcome::NotRun => "NOT RUN".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskReport {
    pub kind: TaskKind,
    pub target: String,
    pub outcome: Outcome,
    /// When the task's transit started and when the task ended, s.
    pub start: Option<f64>,
    pub end: Option<f64>,
    /// World-truth checks, e.g. `passed = yes`.
    pub checks: Vec<(String, String)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MissionStatus {
    Complete,
    TimeLimit,
    HardKill(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionReport {
    pub plan: String,
    pub seed: u64,
    pub status: MissionStatus,
    pub tasks: Vec<TaskReport>,
    pub final_state: VehicleState,
    pub markers_spawned: u8,
    pub torpedoes_fired: u8,
    pub steps: usize,
}

impl MissionReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let status = match self.status {
            MissionStatus::Complete => "complete".to_string(),
            MissionStatus::TimeLimit => "time limit reached".to_string(),
            MissionStatus::HardKill(t) => format!("aborted by hard kill at {t:.3} s"),
        };
        let _ = writeln!(s, "plan: {}", self.plan);
        let _ = writeln!(s, "seed: {}", self.seed);
        let _ = writeln!(s, "status: {status}");
        let _ = writeln!(s, "steps: {}", self.steps);
        for (i, t) in self.tasks.iter().enumerate() {
            let time = |v: Option<f64>| v.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into());
            let _ = write!(
                s,
                "task {} {} [{}]: {} start {} end {}",
                i + 1,
                t.kind,
                t.target,
                t.outcome.label(),
                time(t.start),
                time(t.end)
            );
            for (k, v) in &t.checks {
                let _ = write!(s, " {k}={v}");
            }
            s.push('\n');
        }
        let st = &self.final_state;
        let p = st.pose;
        let _ = writeln!(
            s,
            "final: t {:.3} pose {:.3} {:.3} {:.3} {:.4} {:.4} {:.4} velocity {:.3} {:.3} {:.3}",
            st.t, p.x, p.y, p.z, p.phi, p.theta, p.psi, st.nu.u, st.nu.v, st.nu.w
        );
        let _ = writeln!(s, "markers spawned: {}", self.markers_spawned);
        let _ = writeln!(s, "torpedoes fired: {}", self.torpedoes_fired);
        s
    }
}

#[derive(Debug, Clone)]
pub struct MissionOutput {
    pub report: MissionReport,
    pub telemetry: Vec<TelemetryRow>,
}

/// Dead reckoning: attitude from the IMU, depth from the pressure sensor,
/// horizontal position from integrated DVL velocity.
#[derive(Debug, Clone, Copy)]
struct Nav {
    pose: Pose,
    velocity: Vector3<f64>,
}

impl Nav {
    fn update(&mut self, bus: &Bus, t: f64, dt: f64) {
        if let Some(Payload::Imu(r)) = bus.fresh(topic::IMU, t, READING_MAX_AGE).map(|m| &m.payload) {
            self.pose.phi = r.roll;
            self.pose.theta = r.pitch;
            self.pose.psi = r.yaw;
        }
        self.velocity = match bus.fresh(topic::DVL, t, READING_MAX_AGE).map(|m| &m.payload) {
            Some(Payload::Dvl(r)) => Vector3::new(r.u, r.v, r.w),
            _ => Vector3::zeros(),
        };
        let world = self.pose.rotation() * self.velocity;
        self.pose.x += world.x * dt;
        self.pose.y += world.y * dt;
        match bus.fresh(topic::DEPTH, t, READING_MAX_AGE).map(|m| &m.payload) {
            Some(Payload::Depth(r)) => self.pose.z = r.depth,
            _ => self.pose.z += world.z * dt,
        }
    }
}

/// Per-task world-truth bookkeeping.
#[derive(Debug, Clone, Default)]
struct Tracker {
    plane_side: Option<f64>,
    crossing: Option<(f64, f64)>,
    min_gap: f64,
    landings: Vec<(f64, f64, bool)>,
    torpedo: Option<(bool, f64)>,
}

impl Tracker {
    fn new() -> Self {
        Self {
            min_gap: f64::INFINITY,
            ..Default::default()
        }
    }

    fn observe(&mut self, target: &Target, state: &VehicleState) {
        let pos = state.pose.position();
        match target.kind {
            TargetKind::Gate => {
                let rel = pos - target.position;
                let side = rel.dot(&target.normal());
                if let Some(prev) = self.plane_side {
                    if prev < 0.0 && side >= 0.0 && self.crossing.is_none() {
                        self.crossing = Some((rel.dot(&target.lateral()), rel.z));
                    }
                }
                self.plane_side = Some(side);
            }
            TargetKind::Buoy => {
                let nose = pos + state.pose.rotation() * vec3(NOSE_OFFSET);
                let gap = (nose - target.position).norm() - target.size;
                self.min_gap = self.min_gap.min(gap);
            }
            _ => {}
        }
    }

    fn checks(&self, target: &Target, state: &VehicleState, grabber: &GrabberState) -> Vec<(String, String)> {
        let yes = |b: bool| if b { "yes" } else { "no" }.to_string();
        let mut out = Vec::new();
        match target.kind {
            TargetKind::Gate => {
                let passed = self.crossing.is_some_and(|(lat, vert)| {
                    lat.abs() < target.size / 2.0 - target.detail && vert.abs() < target.height / 2.0
                });
                out.push(("passed".into(), yes(passed)));
                if let Some((lat, vert)) = self.crossing {
                    out.push(("offset".into(), format!("{lat:.3},{vert:.3}")));
                }
            }
            TargetKind::Buoy => {
                out.push(("touched".into(), yes(self.min_gap <= 0.02)));
                out.push(("min_gap".into(), format!("{:.3}", self.min_gap)));
            }
            TargetKind::Bin => {
                let hits = self.landings.iter().filter(|l| l.2).count();
                out.push(("markers".into(), self.landings.len().to_string()));
                out.push(("in_bin".into(), hits.to_string()));
                for (i, (x, y, _)) in self.landings.iter().enumerate() {
                    out.push((format!("landing{}", i + 1), format!("{x:.3},{y:.3}")));
                }
            }
            TargetKind::Board => match self.torpedo {
                Some((hit, miss)) => {
                    out.push(("hit".into(), yes(hit)));
                    out.push(("miss_distance".into(), format!("{miss:.3}")));
                }
                None => out.push(("hit".into(), "no".into())),
            },
            TargetKind::Pinger => {
                let p = state.pose.position();
                let d = (p.x - target.position.x).hypot(p.y - target.position.y);
                out.push(("horizontal_distance".into(), format!("{d:.3}")));
            }
            TargetKind::Object => out.push(("holding".into(), yes(grabber.holding))),
        }
        out
    }
}

fn expected_target(kind: TaskKind) -> TargetKind {
    match kind {
        TaskKind::Gate => TargetKind::Gate,
        TaskKind::Buoy => TargetKind::Buoy,
        TaskKind::MarkerDrop => TargetKind::Bin,
        TaskKind::Torpedo => TargetKind::Board,
        TaskKind::Pinger => TargetKind::Pinger,
        TaskKind::Grab => TargetKind::Object,
    }
}

/// Resolves each task's target and its range calibration.
fn prepare(plan: &MissionPlan, scenario: &Scenario) -> Result<Vec<(Target, Approach, Option<Calibration>)>, MissionError> {
    plan.validate()?;
    plan.tasks
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let target = scenario.world.targets.get(&spec.target).ok_or_else(|| {
                MissionError::Reference(format!("task {} ({}) needs [{}]", i + 1, spec.kind, spec.target))
            })?;
            if target.kind != expected_target(spec.kind) {
                return Err(MissionError::Reference(format!(
                    "task {} ({}) cannot use [{}] as its target",
                    i + 1,
                    spec.kind,
                    spec.target
                )));
            }
            let approach = Approach::for_task(spec);
            let calib = match target.kind.camera() {
                None => None,
                Some(_) => Some(target.calibration(&scenario.world.camera, approach.calibration).ok_or_else(|| {
                    MissionError::Reference(format!("[{}] is not visible enough to calibrate", spec.target))
                })?),
            };
            Ok((target.clone(), approach, calib))
        })
        .collect()
}

enum Mode {
    Transit(TransitState),
    Task(TaskState),
}

/// Runs `plan` in `scenario` until every task ends, time runs out or a hard kill.
pub fn run_mission(plan: &MissionPlan, scenario: &Scenario) -> Result<MissionOutput, MissionError> {
    let prepared = prepare(plan, scenario)?;
    let sim = scenario.sim;
    sim.validate()?;
    let dt = sim.dt;
    let steps = sim.steps();
    let model = VehicleModel::new(scenario.params.clone())?.with_integrator(sim.integrator);
    let world = &scenario.world;

    let mut state = VehicleState::at_rest(scenario.start);
    let mut nav = Nav {
        pose: scenario.start,
        velocity: Vector3::zeros(),
    };
    let mut sensors = SensorSuite::new(scenario.noise, sim.seed);
    let mut acoustic_rng = stream_rng(sim.seed, stream::ACOUSTICS);
    let mut power: PowerSystem = scenario.power.clone();
    let mut bus = Bus::standard();
    let mut controller = Controller::new(scenario.gains);
    let mut dropper = DropperState::default();
    let mut grabber = GrabberState::default();
    let mut torpedoes_fired = 0u8;
    let mut markers_spawned = 0u8;

    let mut reports: Vec<TaskReport> = plan
        .tasks
        .iter()
        .map(|t| TaskReport {
            kind: t.kind,
            target: t.target.clone(),
            outcome: Outcome::NotRun,
            start: None,
            end: None,
            checks: Vec::new(),
        })
        .collect();
    let mut current = 0usize;
    let mut mode = Mode::Transit(TransitState::new());
    reports[0].start = Some(0.0);
    let mut tracker = Tracker::new();
    let mut next_event = 0usize;
    let mut next_ping = 0.0f64;
    let mut last_applied = ThrustVector::ZERO;
    let mut rows = Vec::new();
    let mut status = MissionStatus::TimeLimit;
    let mut steps_run = 0usize;

    for k in 0..steps {
        let t = k as f64 * dt;
        state.t = t;
        let mut events: Vec<String> = Vec::new();

        // Scheduled switches and pod changes.
        let mut switched = false;
        while let Some(ev) = scenario.events.get(next_event).filter(|e| e.t <= t + 1e-9) {
            match ev.kind {
                EventKind::HardKill => power.kill.hard_kill = true,
                EventKind::SoftKill => power.kill.soft_kill = true,
                EventKind::SoftKillClear => power.kill.soft_kill = false,
                EventKind::PodRemove(i) => power.remove_pod(i),
                EventKind::PodInsert(i) => power.insert_pod(i),
            }
            events.push(ev.label());
            next_event += 1;
            switched = true;
        }
        if switched {
            power.refresh(&last_applied.0);
        }
        if !power.feeds(Consumer::Computer) {
            status = MissionStatus::HardKill(t);
            if let Outcome::NotRun = reports[current].outcome {
                reports[current].outcome = Outcome::Failed("computer lost power".into());
                reports[current].end = Some(t);
            }
            rows.push(row(&state, &ThrustVector::ZERO, &power, None, &events));
            steps_run = k;
            break;
        }

        // Sensors → bus.
        if power.feeds(Consumer::Imu) {
            if let Some(r) = sensors.imu(&state) {
                bus.publish(topic::IMU, t, Payload::Imu(r))?;
            }
        }
        let mut depth_reading = None;
        if power.feeds(Consumer::DepthSensor) {
            let r = sensors.depth(&state);
            depth_reading = Some(r.depth);
            bus.publish(topic::DEPTH, t, Payload::Depth(r))?;
        }
        if power.feeds(Consumer::Dvl) {
            if let Some(r) = sensors.dvl(&state) {
                bus.publish(topic::DVL, t, Payload::Dvl(r))?;
            }
        }
        bus.publish(topic::POWER, t, Payload::Power(power.rails))?;
        nav.update(&bus, t, dt);

        // Perception, then the active layer.
        let spec: &TaskSpec = &plan.tasks[current];
        let (target, approach, calib) = &prepared[current];
        let mut goal = MotionGoal::hold(nav.pose);
        let mut command = None;
        let mut start_task = false;
        match &mut mode {
            Mode::Transit(ts) => {
                let (next, g, ev) = transit_step(&spec.transit, ts, &nav.pose, dt);
                if let Some(ev) = ev {
                    events.push(match ev {
                        TransitEvent::Reached(i) => format!("task{}:transit{}:reached", current + 1, i + 1),
                        TransitEvent::TimedOut(i) => format!("task{}:transit{}:timeout", current + 1, i + 1),
                    });
                }
                if let Some(g) = g {
                    goal = MotionGoal::all(g);
                    for (e, on) in goal.enabled.iter_mut().zip(spec.switches) {
                        *e &= on;
                    }
                }
                start_task = next.finished(&spec.transit);
                *ts = next;
            }
            Mode::Task(ts) => {
                let observation = match sensing(spec.kind, ts.phase) {
                    Sensing::Camera(cam) => {
                        if k % scenario.vision_every == 0 && power.feeds(Consumer::Cameras) {
                            let det = perceive(scenario, cam, &state, target, calib)?;
                            let name = camera_topic(cam);
                            bus.publish(name, t, Payload::Vision(det))?;
                        }
                        match bus.fresh(camera_topic(cam), t, FRAME_MAX_AGE).map(|m| (m.timestamp, &m.payload)) {
                            Some((ts, Payload::Vision(d))) => Some(Observation::Frame(ts, d.as_ref())),
                            _ => None,
                        }
                    }
                    Sensing::Acoustic => {
                        if t + 1e-9 >= next_ping && power.feeds(Consumer::Hydrophones) {
                            next_ping = t + scenario.acoustics.ping.interval;
                            let rel = body_vector(&state.pose, &target.position);
                            match ping_bearing(&scenario.acoustics, &rel, &mut acoustic_rng) {
                                Ok(b) => bus.publish(topic::HEADING, t, Payload::Heading(b))?,
                                Err(_) => events.push("ping_unresolved".into()),
                            }
                        }
                        match bus
                            .fresh(topic::HEADING, t, scenario.acoustics.ping.interval * 1.5)
                            .map(|m| (m.timestamp, &m.payload))
                        {
                            Some((ts, Payload::Heading(b))) => Some(Observation::Heading(ts, b)),
                            _ => None,
                        }
                    }
                    Sensing::None => None,
                };
                let ctx = TaskContext {
                    t,
                    dt,
                    pose: nav.pose,
                    observation,
                    camera: world.camera,
                    markers_left: dropper.balls_remaining,
                    grabber,
                };
                let (next, out) = task_step(spec, approach, ts, &ctx);
                if next.phase != ts.phase {
                    events.push(format!("task{}:{}:{}", current + 1, spec.kind, next.phase));
                }
                goal = out.goal;
                command = out.command;
                *ts = next;
            }
        }
        if start_task {
            mode = Mode::Task(TaskState::start(nav.pose, t));
            events.push(format!("task{}:{}:{}", current + 1, spec.kind, Phase::Search));
        }

        // Payloads.
        if let Some(cmd) = command {
            execute(
                cmd,
                scenario,
                target,
                &state,
                &power,
                &mut dropper,
                &mut grabber,
                &mut tracker,
                &mut events,
                &mut markers_spawned,
                &mut torpedoes_fired,
            )?;
        }
        let object_gap = world
            .targets
            .values()
            .filter(|o| o.kind == TargetKind::Object)
            .map(|o| {
                let tip = state.pose.position()
                    + state.pose.rotation() * (vec3(GRABBER_OFFSET) + Vector3::new(0.0, 0.0, grabber.extension));
                ((tip - o.position).norm() - o.size).max(0.0)
            })
            .fold(None, |acc: Option<f64>, g| Some(acc.map_or(g, |a| a.min(g))));
        grabber = grabber_update(&grabber, t, object_gap);

        // Control → allocation → dynamics → power.
        let tau = controller.step(&goal, &nav.pose, dt);
        let (thrusts, _) = model.allocation.allocate(&tau, model.params.t_max)?;
        let applied = if power.feeds(Consumer::Thrusters) {
            thrusts
        } else {
            ThrustVector::ZERO
        };
        let mut next_state = model.step(&state, &applied, dt)?;
        next_state.t = (k + 1) as f64 * dt;
        power.step(&applied.0, dt);
        last_applied = applied;

        if k % scenario.log_every == 0 || !events.is_empty() {
            rows.push(row(&state, &applied, &power, depth_reading, &events));
        }
        state = next_state;
        tracker.observe(target, &state);
        steps_run = k + 1;

        // Task bookkeeping.
        if let Mode::Task(ts) = &mode {
            if ts.phase.is_terminal() {
                let r = &mut reports[current];
                r.outcome = match ts.phase {
                    Phase::Done => Outcome::Done,
                    _ => Outcome::Failed(ts.note.clone().unwrap_or_else(|| "failed".into())),
                };
                r.end = Some(state.t);
                r.checks = tracker.checks(target, &state, &grabber);
                current += 1;
                if current == plan.tasks.len() {
                    status = MissionStatus::Complete;
                    break;
                }
                reports[current].start = Some(state.t);
                mode = Mode::Transit(TransitState::new());
                tracker = Tracker::new();
            }
        }
    }

    if let MissionStatus::TimeLimit = status {
        if current < plan.tasks.len() {
            let r = &mut reports[current];
            r.outcome = Outcome::Failed("mission time limit".into());
            r.end = Some(state.t);
            r.checks = tracker.checks(&prepared[current].0, &state, &grabber);
        }
    }
    Ok(MissionOutput {
        report: MissionReport {
            plan: plan.name.clone(),
            seed: sim.seed,
            status,
            tasks: reports,
            final_state: state,
            markers_spawned,
            torpedoes_fired,
            steps: steps_run,
        },
        telemetry: rows,
    })
}

fn camera_topic(cam: CameraId) -> &'static str {
    match cam {
        CameraId::Front => topic::FRONT_CAMERA,
        CameraId::Bottom => topic::BOTTOM_CAMERA,
    }
}

/// Renders the camera view from the true pose and runs detection.
fn perceive(
    scenario: &Scenario,
    cam: CameraId,
    state: &VehicleState,
    target: &Target,
    calib: &Option<Calibration>,
) -> Result<Option<crate::vision::Detection>, MissionError> {
    let world = &scenario.world;
    let mut img = world.render(cam, &state.pose);
    if scenario.turbid {
        let range = (target.position - state.pose.position()).norm();
        img = degrade(&img, &DegradeConfig::at_distance(range))?;
        img = blue_filter(&img, &BlueFilterConfig::default())?;
    }
    let det = detect(&img, &target.detect_config())?;
    Ok(match (det, calib) {
        (Some(d), Some(c)) => Some(d.with_distance(c)),
        (d, _) => d,
    })
}

#[allow(clippy::too_many_arguments)]
fn execute(
    cmd: PayloadCommand,
    scenario: &Scenario,
    target: &Target,
    state: &VehicleState,
    power: &PowerSystem,
    dropper: &mut DropperState,
    grabber: &mut GrabberState,
    tracker: &mut Tracker,
    events: &mut Vec<String>,
    markers_spawned: &mut u8,
    torpedoes_fired: &mut u8,
) -> Result<(), MissionError> {
    match cmd {
        PayloadCommand::DropMarker => {
            if !power.feeds(Consumer::Dropper) {
                events.push("marker_drop:no_power".into());
                return Ok(());
            }
            match payloads::drop(dropper, state, &vec3(DROPPER_OFFSET), &ProjectileSpec::MARKER) {
                Ok((next, p)) => {
                    *dropper = next;
                    *markers_spawned += 1;
                    events.push("marker_drop".into());
                    if let Some(land) = landing_point(&p, scenario.world.floor, PROJECTILE_DT, 60.0) {
                        let half = target.size / 2.0;
                        let inside = (land.x - target.position.x).abs() <= half && (land.y - target.position.y).abs() <= half;
                        tracker.landings.push((land.x, land.y, inside));
                        events.push(format!("marker_land:{:.3}:{:.3}", land.x, land.y));
                    }
                }
                Err(_) => events.push("marker_drop:empty".into()),
            }
        }
        PayloadCommand::FireTorpedo => {
            if !power.feeds(Consumer::Pneumatics) {
                events.push("torpedo:no_power".into());
                return Ok(());
            }
            let p = payloads::launch_torpedo(
                state,
                &vec3(TORPEDO_OFFSET),
                scenario.payloads.muzzle_speed,
                &ProjectileSpec::TORPEDO,
            )
            .map_err(|e| MissionError::Reference(e.to_string()))?;
            *torpedoes_fired += 1;
            events.push("torpedo_fire".into());
            let result = fly_to_plane(&p, &target.position, &target.normal(), PROJECTILE_DT, 20.0).map(|(hit, _)| {
                let miss = (hit - target.position).norm();
                (miss <= target.detail, miss)
            });
            match result {
                Some((hit, miss)) => {
                    tracker.torpedo = Some((hit, miss));
                    events.push(format!("torpedo_{}:{miss:.3}", if hit { "hit" } else { "miss" }));
                }
                None => {
                    tracker.torpedo = Some((false, f64::INFINITY));
                    events.push("torpedo_lost".into());
                }
            }
        }
        PayloadCommand::Grabber(c) => {
            if !power.feeds(Consumer::Grabber) {
                events.push("grabber:no_power".into());
                return Ok(());
            }
            *grabber = grabber_command(grabber, c, state.t, scenario.payloads.grabber_delay)
                .map_err(|e| MissionError::Reference(e.to_string()))?;
            events.push(format!("grabber:{c:?}").to_lowercase().replace(['(', ')'], ""));
        }
    }
    Ok(())
}

fn row(
    state: &VehicleState,
    thrust: &ThrustVector,
    power: &PowerSystem,
    depth_reading: Option<f64>,
    events: &[String],
) -> TelemetryRow {
    let nu = state.nu;
    TelemetryRow {
        t: state.t,
        pose: state.pose.as_array(),
        velocity: [nu.u, nu.v, nu.w, nu.p, nu.q, nu.r],
        thrust: thrust.0,
        rails: TelemetryRow::rails_from(&power.rails),
        depth_reading,
        event: events.join(";"),
    }
}
