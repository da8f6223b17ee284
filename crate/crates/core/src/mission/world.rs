//! Scenario files: simulation settings, vehicle overrides, the arena and its
//! targets, scheduled events, and the camera model used to render them.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::Vector3;

use crate::acoustics::AcousticsConfig;
use crate::config::{ConfigDoc, ConfigError, Section};
use crate::control::{default_gains, gains_from_section, PidGains};
use crate::frames::Pose;
use crate::params::{SimConfig, VehicleParams};
use crate::power::PowerSystem;
use crate::sensors::NoiseConfig;
use crate::vision::render::rasterize;
use crate::vision::{calibrate, detect, Calibration, DetectConfig, DetectMode, Image, SceneSpec, Shape, ThresholdRange};

/// Front camera position in the body frame (at the nose), m.
pub const FRONT_CAMERA: [f64; 3] = [0.35, 0.0, 0.0];
/// Bottom camera position in the body frame, m.
pub const BOTTOM_CAMERA: [f64; 3] = [0.0, 0.0, 0.15];
pub const DROPPER_OFFSET: [f64; 3] = [0.0, 0.0, 0.15];
pub const TORPEDO_OFFSET: [f64; 3] = [0.3, 0.0, 0.1];
/// Grabber root; the fingers sit `extension` below it.
pub const GRABBER_OFFSET: [f64; 3] = [0.0, 0.0, 0.15];
/// Forward-most hull point used for contact checks, m.
pub const NOSE_OFFSET: [f64; 3] = [0.35, 0.0, 0.0];

/// Nearest point a camera resolves, m.
const NEAR_PLANE: f64 = 0.05;

fn vec3(a: [f64; 3]) -> Vector3<f64> {
    Vector3::new(a[0], a[1], a[2])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CameraId {
    Front,
    Bottom,
}

/// Pinhole model shared by both cameras.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    pub width: usize,
    pub height: usize,
    /// Focal length, px.
    pub focal: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            width: 320,
            height: 240,
            focal: 160.0,
        }
    }
}

impl CameraModel {
    /// `(u, v, range)` of a point given in the camera's own frame
    /// (optical axis first, then image-right, then image-down).
    fn pixel(&self, c: &Vector3<f64>) -> Option<(f64, f64, f64)> {
        if c.x < NEAR_PLANE {
            return None;
        }
        let u = (self.width as f64 - 1.0) / 2.0 + self.focal * c.y / c.x;
        let v = (self.height as f64 - 1.0) / 2.0 + self.focal * c.z / c.x;
        Some((u, v, c.x))
    }

    /// Image center, px.
    pub fn center(&self) -> (f64, f64) {
        ((self.width as f64 - 1.0) / 2.0, (self.height as f64 - 1.0) / 2.0)
    }

    /// Projects a world point through the given camera on a vehicle at `pose`.
    pub fn project(&self, cam: CameraId, pose: &Pose, world: &Vector3<f64>) -> Option<(f64, f64, f64)> {
        let body = pose.rotation().transpose() * (world - pose.position());
        self.pixel(&camera_frame(cam, &body))
    }
}

/// Body-frame point to camera-frame coordinates.
///
/// The front camera looks along body +x with image-right = +y, image-down = +z.
/// The bottom camera looks along body +z with image-right = +y and image-up = +x.
pub fn camera_frame(cam: CameraId, body: &Vector3<f64>) -> Vector3<f64> {
    match cam {
        CameraId::Front => body - vec3(FRONT_CAMERA),
        CameraId::Bottom => {
            let r = body - vec3(BOTTOM_CAMERA);
            Vector3::new(r.z, r.y, -r.x)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetKind {
    Gate,
    Buoy,
    Bin,
    Board,
    Pinger,
    Object,
}

impl TargetKind {
    fn from_section_name(name: &str) -> Option<Self> {
        match name.split('.').next()? {
            "gate" => Some(Self::Gate),
            "buoy" => Some(Self::Buoy),
            "bin" => Some(Self::Bin),
            "torpedo_target" => Some(Self::Board),
            "pinger" => Some(Self::Pinger),
            "object" => Some(Self::Object),
            _ => None,
        }
    }

    pub fn camera(self) -> Option<CameraId> {
        match self {
            Self::Gate | Self::Buoy | Self::Board => Some(CameraId::Front),
            Self::Bin | Self::Object => Some(CameraId::Bottom),
            Self::Pinger => None,
        }
    }

    fn defaults(self) -> ([u8; 3], &'static str) {
        match self {
            Self::Gate => ([255, 120, 0], "15 45 0.6 1 100 255"),
            Self::Buoy => ([230, 40, 30], "330 10 0.6 1 100 255"),
            Self::Bin => ([230, 200, 20], "45 65 0.6 1 100 255"),
            Self::Board => ([40, 200, 60], "110 150 0.5 1 80 255"),
            Self::Object => ([200, 60, 200], "285 315 0.5 1 80 255"),
            Self::Pinger => ([0, 0, 0], "0 360 0 1 0 255"),
        }
    }
}

/// One arena element. Positions are world NED, yaw angles are the heading
/// a vehicle faces when looking squarely at the target.
#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    pub name: String,
    pub kind: TargetKind,
    pub position: Vector3<f64>,
    pub yaw: f64,
    /// Gate/board width, bin side, buoy/object radius, m.
    pub size: f64,
    /// Gate/board height, m.
    pub height: f64,
    /// Gate post width or board hole radius, m.
    pub detail: f64,
    pub color: [u8; 3],
    pub threshold: ThresholdRange,
}

impl Target {
    /// Unit vector across the target face, pointing to the viewer's right.
    pub fn lateral(&self) -> Vector3<f64> {
        Vector3::new(-self.yaw.sin(), self.yaw.cos(), 0.0)
    }

    /// Unit vector along the approach direction.
    pub fn normal(&self) -> Vector3<f64> {
        Vector3::new(self.yaw.cos(), self.yaw.sin(), 0.0)
    }

    pub fn detect_config(&self) -> DetectConfig {
        let mode = if self.kind == TargetKind::Gate {
            DetectMode::Hough
        } else {
            DetectMode::Contour
        };
        let mut cfg = DetectConfig::new(self.threshold, mode);
        cfg.min_area = 30;
        cfg
    }

    /// Shapes this target contributes to a frame, with their range for depth sorting.
    fn shapes(&self, cam: CameraId, model: &CameraModel, pose: &Pose, background: [u8; 3]) -> Vec<(f64, Shape)> {
        let f = model.focal;
        let project = |p: &Vector3<f64>| model.project(cam, pose, p);
        let mut out = Vec::new();
        match (self.kind, cam) {
            (TargetKind::Buoy, CameraId::Front) | (TargetKind::Object, CameraId::Bottom) => {
                if let Some((u, v, r)) = project(&self.position) {
                    out.push((
                        r,
                        Shape::Disk {
                            cx: u,
                            cy: v,
                            r: f * self.size / r,
                            color: self.color,
                        },
                    ));
                }
            }
            (TargetKind::Gate, CameraId::Front) => {
                let off = self.size / 2.0 - self.detail / 2.0;
                for side in [-1.0, 1.0] {
                    let post = self.position + self.lateral() * (side * off);
                    if let Some((u, v, r)) = project(&post) {
                        out.push((
                            r,
                            Shape::Rect {
                                cx: u,
                                cy: v,
                                w: f * self.detail / r,
                                h: f * self.height / r,
                                color: self.color,
                            },
                        ));
                    }
                }
            }
            (TargetKind::Board, CameraId::Front) => {
                if let Some((u, v, r)) = project(&self.position) {
                    out.push((
                        r,
                        Shape::Rect {
                            cx: u,
                            cy: v,
                            w: f * self.size / r,
                            h: f * self.height / r,
                            color: self.color,
                        },
                    ));
                    out.push((
                        r - 1e-6,
                        Shape::Disk {
                            cx: u,
                            cy: v,
                            r: f * self.detail / r,
                            color: background,
                        },
                    ));
                }
            }
            (TargetKind::Bin, CameraId::Bottom) => {
                if let Some((u, v, r)) = project(&self.position) {
                    let side = f * self.size / r;
                    out.push((
                        r,
                        Shape::Rect {
                            cx: u,
                            cy: v,
                            w: side,
                            h: side,
                            color: self.color,
                        },
                    ));
                }
            }
            _ => {}
        }
        out
    }

    /// Fits the blob-size range model from two synthetic views on the optical axis.
    pub fn calibration(&self, model: &CameraModel, ranges: (f64, f64)) -> Option<Calibration> {
        let cam = self.kind.camera()?;
        let mut points = Vec::new();
        for d in [ranges.0, ranges.1] {
            let pose = viewing_pose(self, cam, d);
            let mut alone = World::empty(*model);
            alone.targets.insert(self.name.clone(), self.clone());
            let img = alone.render(cam, &pose);
            let det = detect(&img, &self.detect_config()).ok()??;
            points.push((det.blob_dim, d));
        }
        calibrate(&points).ok()
    }
}

/// Vehicle pose placing `target` dead ahead of (or below) the camera at range `d`.
pub fn viewing_pose(target: &Target, cam: CameraId, d: f64) -> Pose {
    match cam {
        CameraId::Front => {
            let cam_pos = target.position - target.normal() * d;
            let nose = target.normal() * FRONT_CAMERA[0];
            let p = cam_pos - nose;
            Pose::new(p.x, p.y, p.z, 0.0, 0.0, target.yaw)
        }
        CameraId::Bottom => {
            let p = target.position - Vector3::new(0.0, 0.0, d + BOTTOM_CAMERA[2]);
            Pose::new(p.x, p.y, p.z, 0.0, 0.0, target.yaw)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    /// Floor depth, m.
    pub floor: f64,
    pub water_color: [u8; 3],
    pub floor_color: [u8; 3],
    pub camera: CameraModel,
    pub targets: BTreeMap<String, Target>,
}

impl World {
    pub fn empty(camera: CameraModel) -> Self {
        Self {
            floor: 4.0,
            water_color: [20, 70, 100],
            floor_color: [70, 90, 100],
            camera,
            targets: BTreeMap::new(),
        }
    }

    /// Scene for one camera, nearest shapes drawn last.
    pub fn scene(&self, cam: CameraId, pose: &Pose) -> SceneSpec {
        let m = &self.camera;
        let background = match cam {
            CameraId::Front => self.water_color,
            CameraId::Bottom => self.floor_color,
        };
        let mut shapes: Vec<(f64, Shape)> = self
            .targets
            .values()
            .flat_map(|t| t.shapes(cam, m, pose, background))
            .collect();
        // Far to near; a board's hole sits just in front of the board.
        shapes.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut spec = SceneSpec::new(m.width, m.height, background);
        spec.shapes = shapes
            .into_iter()
            .map(|(_, s)| s)
            .filter(|s| shape_is_sane(s, m))
            .collect();
        spec
    }

    pub fn render(&self, cam: CameraId, pose: &Pose) -> Image {
        rasterize(&self.scene(cam, pose))
    }
}

/// Drops shapes too large to rasterize sensibly (camera inside the target).
fn shape_is_sane(s: &Shape, m: &CameraModel) -> bool {
    let limit = 50.0 * (m.width.max(m.height) as f64);
    match *s {
        Shape::Disk { r, .. } => r.is_finite() && r < limit,
        Shape::Rect { w, h, .. } => w.is_finite() && h.is_finite() && w < limit && h < limit,
        Shape::Gate { width, height, .. } => width < limit && height < limit,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    HardKill,
    SoftKill,
    SoftKillClear,
    PodRemove(usize),
    PodInsert(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduledEvent {
    pub t: f64,
    pub kind: EventKind,
}

impl ScheduledEvent {
    pub fn label(&self) -> String {
        match self.kind {
            EventKind::HardKill => "hard_kill".into(),
            EventKind::SoftKill => "soft_kill".into(),
            EventKind::SoftKillClear => "soft_kill_clear".into(),
            EventKind::PodRemove(i) => format!("pod_remove:{i}"),
            EventKind::PodInsert(i) => format!("pod_insert:{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayloadConfig {
    /// Torpedo launch speed relative to the vehicle, m/s.
    pub muzzle_speed: f64,
    /// Grabber actuation time per command, s.
    pub grabber_delay: f64,
}

impl Default for PayloadConfig {
    fn default() -> Self {
        Self {
            muzzle_speed: 3.0,
            grabber_delay: 1.0,
        }
    }
}

/// Everything a mission run needs besides the plan.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub sim: SimConfig,
    /// Telemetry row every N ticks.
    pub log_every: usize,
    /// Camera frames processed every N ticks.
    pub vision_every: usize,
    /// Degrade frames by water attenuation and run the enhancement pipeline.
    pub turbid: bool,
    pub params: VehicleParams,
    pub noise: NoiseConfig,
    pub gains: [PidGains; 6],
    pub acoustics: AcousticsConfig,
    pub power: PowerSystem,
    pub payloads: PayloadConfig,
    pub start: Pose,
    pub world: World,
    /// Sorted by time.
    pub events: Vec<ScheduledEvent>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            sim: SimConfig::default(),
            log_every: 10,
            vision_every: 10,
            turbid: false,
            params: VehicleParams::default(),
            noise: NoiseConfig::default(),
            gains: default_gains(),
            acoustics: AcousticsConfig::default(),
            power: PowerSystem::default(),
            payloads: PayloadConfig::default(),
            start: Pose::new(0.0, 0.0, 0.5, 0.0, 0.0, 0.0),
            world: World::empty(CameraModel::default()),
            events: Vec::new(),
        }
    }
}

const SCENARIO_SECTIONS: &[&str] = &[
    "sim",
    "vehicle",
    "noise",
    "control",
    "acoustics",
    "power",
    "payloads",
    "camera",
    "start",
    "world",
    "events",
    "gate",
    "buoy",
    "bin",
    "pinger",
    "torpedo_target",
    "object",
];

fn color(section: &Section, key: &str, default: [u8; 3]) -> Result<[u8; 3], ConfigError> {
    match section.float_array::<3>(key)? {
        None => Ok(default),
        Some(c) => {
            if c.iter().any(|v| !(0.0..=255.0).contains(v) || v.fract() != 0.0) {
                let line = section.get(key).map(|e| e.line).unwrap_or(section.line);
                return Err(ConfigError::Value {
                    line,
                    key: key.into(),
                    msg: "colors are three integers in 0..=255".into(),
                });
            }
            Ok([c[0] as u8, c[1] as u8, c[2] as u8])
        }
    }
}

fn positive(section: &Section, key: &str, default: f64) -> Result<f64, ConfigError> {
    let v = section.f64_or(key, default)?;
    if !(v > 0.0 && v.is_finite()) {
        let line = section.get(key).map(|e| e.line).unwrap_or(section.line);
        return Err(ConfigError::Value {
            line,
            key: key.into(),
            msg: format!("must be > 0, got {v}"),
        });
    }
    Ok(v)
}

fn parse_target(section: &Section, kind: TargetKind, floor: f64) -> Result<Target, ConfigError> {
    section.check_keys(&[
        "x", "y", "z", "yaw", "width", "height", "post", "radius", "size", "hole", "color", "threshold",
    ])?;
    let (default_color, default_threshold) = kind.defaults();
    let (size_key, size, height, detail_key, detail, default_z) = match kind {
        TargetKind::Gate => ("width", 2.0, 1.2, "post", 0.1, 1.5),
        TargetKind::Buoy => ("radius", 0.2, 0.0, "", 0.0, 1.5),
        TargetKind::Bin => ("size", 0.6, 0.0, "", 0.0, floor),
        TargetKind::Board => ("width", 0.6, 0.6, "hole", 0.15, 1.5),
        TargetKind::Pinger => ("", 0.0, 0.0, "", 0.0, floor),
        TargetKind::Object => ("radius", 0.05, 0.0, "", 0.0, floor - 0.05),
    };
    let size = if size_key.is_empty() {
        size
    } else {
        positive(section, size_key, size)?
    };
    let height = if height > 0.0 {
        positive(section, "height", height)?
    } else {
        0.0
    };
    let detail = if detail_key.is_empty() {
        detail
    } else {
        positive(section, detail_key, detail)?
    };
    if kind == TargetKind::Gate && 2.0 * detail >= size {
        return Err(ConfigError::Validation(format!("[{}] posts wider than the gate", section.name)));
    }
    if kind == TargetKind::Board && 2.0 * detail >= size.min(height) {
        return Err(ConfigError::Validation(format!("[{}] hole larger than the board", section.name)));
    }
    let threshold = match section.get("threshold") {
        Some(_) => section.require("threshold")?,
        None => default_threshold.parse().expect("built-in thresholds are valid"),
    };
    Ok(Target {
        name: section.name.clone(),
        kind,
        position: Vector3::new(
            section.require("x")?,
            section.require("y")?,
            section.f64_or("z", default_z)?,
        ),
        yaw: section.f64_or("yaw", 0.0)? * PI / 180.0,
        size,
        height,
        detail,
        color: color(section, "color", default_color)?,
        threshold,
    })
}

fn parse_events(section: &Section) -> Result<Vec<ScheduledEvent>, ConfigError> {
    section.check_keys(&["hard_kill_at", "soft_kill_at", "soft_kill_clear_at", "pod_remove_at", "pod_insert_at"])?;
    let mut out = Vec::new();
    for (key, kind) in [
        ("hard_kill_at", EventKind::HardKill),
        ("soft_kill_at", EventKind::SoftKill),
        ("soft_kill_clear_at", EventKind::SoftKillClear),
    ] {
        if let Some(t) = section.parse::<f64>(key)? {
            out.push(ScheduledEvent { t, kind });
        }
    }
    for key in ["pod_remove_at", "pod_insert_at"] {
        if let Some(v) = section.floats(key)? {
            let line = section.get(key).map(|e| e.line).unwrap_or(section.line);
            let [t, pod] = <[f64; 2]>::try_from(v.as_slice()).map_err(|_| ConfigError::Value {
                line,
                key: key.into(),
                msg: "expected `time pod_index`".into(),
            })?;
            if pod != 0.0 && pod != 1.0 {
                return Err(ConfigError::Value {
                    line,
                    key: key.into(),
                    msg: format!("pod index must be 0 or 1, got {pod}"),
                });
            }
            let i = pod as usize;
            let kind = if key == "pod_remove_at" {
                EventKind::PodRemove(i)
            } else {
                EventKind::PodInsert(i)
            };
            out.push(ScheduledEvent { t, kind });
        }
    }
    if out.iter().any(|e| !(e.t >= 0.0 && e.t.is_finite())) {
        return Err(ConfigError::Validation("event times must be >= 0".into()));
    }
    out.sort_by(|a, b| a.t.total_cmp(&b.t));
    Ok(out)
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let doc = ConfigDoc::parse(text)?;
        doc.check_sections(SCENARIO_SECTIONS)?;
        if let Some(e) = doc.root().entries.first() {
            return Err(ConfigError::Parse {
                line: e.line,
                msg: format!("key `{}` outside of a section", e.key),
            });
        }
        let mut sc = Self::default();
        if let Some(s) = doc.section("sim") {
            s.check_keys(&["dt", "duration", "seed", "integrator", "log_every", "vision_every"])?;
            sc.sim.dt = s.f64_or("dt", sc.sim.dt)?;
            sc.sim.duration = s.f64_or("duration", sc.sim.duration)?;
            sc.sim.seed = s.parse("seed")?.unwrap_or(sc.sim.seed);
            sc.sim.integrator = s.parse("integrator")?.unwrap_or(sc.sim.integrator);
            sc.log_every = s.parse("log_every")?.unwrap_or(sc.log_every);
            sc.vision_every = s.parse("vision_every")?.unwrap_or(sc.vision_every);
            if sc.log_every == 0 || sc.vision_every == 0 {
                return Err(ConfigError::Validation("log_every and vision_every must be >= 1".into()));
            }
        }
        sc.sim.validate()?;
        if let Some(s) = doc.section("vehicle") {
            sc.params = sc.params.apply_section(s)?;
        }
        sc.params.validate()?;
        if let Some(s) = doc.section("noise") {
            sc.noise = NoiseConfig::from_section(s)?;
        }
        if let Some(s) = doc.section("control") {
            sc.gains = gains_from_section(s, sc.gains)?;
        }
        if let Some(s) = doc.section("acoustics") {
            sc.acoustics = AcousticsConfig::from_section(s)?;
        }
        if let Some(s) = doc.section("power") {
            sc.power = PowerSystem::from_section(s)?;
        }
        if let Some(s) = doc.section("payloads") {
            s.check_keys(&["muzzle_speed", "grabber_delay"])?;
            sc.payloads.muzzle_speed = positive(s, "muzzle_speed", sc.payloads.muzzle_speed)?;
            sc.payloads.grabber_delay = positive(s, "grabber_delay", sc.payloads.grabber_delay)?;
        }
        if let Some(s) = doc.section("camera") {
            s.check_keys(&["width", "height", "focal"])?;
            let c = &mut sc.world.camera;
            c.width = s.parse("width")?.unwrap_or(c.width);
            c.height = s.parse("height")?.unwrap_or(c.height);
            c.focal = positive(s, "focal", c.focal)?;
            if c.width < 16 || c.height < 16 {
                return Err(ConfigError::Validation("camera must be at least 16 x 16 px".into()));
            }
        }
        if let Some(s) = doc.section("world") {
            s.check_keys(&["floor", "water_color", "floor_color", "turbid"])?;
            sc.world.floor = positive(s, "floor", sc.world.floor)?;
            sc.world.water_color = color(s, "water_color", sc.world.water_color)?;
            sc.world.floor_color = color(s, "floor_color", sc.world.floor_color)?;
            sc.turbid = s.flag("turbid")?.unwrap_or(false);
        }
        if let Some(s) = doc.section("start") {
            s.check_keys(&["x", "y", "z", "yaw"])?;
            sc.start = Pose::new(
                s.f64_or("x", 0.0)?,
                s.f64_or("y", 0.0)?,
                s.f64_or("z", sc.start.z)?,
                0.0,
                0.0,
                s.f64_or("yaw", 0.0)? * PI / 180.0,
            );
        }
        if let Some(s) = doc.section("events") {
            sc.events = parse_events(s)?;
        }
        for s in &doc.sections[1..] {
            if let Some(kind) = TargetKind::from_section_name(&s.name) {
                let t = parse_target(s, kind, sc.world.floor)?;
                sc.world.targets.insert(s.name.clone(), t);
            }
        }
        Ok(sc)
    }
}
