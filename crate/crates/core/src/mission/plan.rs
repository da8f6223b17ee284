//! Mission plan files: an ordered list of `[task.N]` sections.
//!
//! ```text
//! [task.1]
//! kind = gate
//! timeout = 90
//! transit = heave 1.5 10; surge 2 20
//! switches = surge sway heave yaw
//! ```
//!
//! `transit` is a `;`-separated list of `motion setpoint timeout` steps run
//! before the task itself. Surge and sway setpoints are displacements in
//! metres along the current heading, heave is an absolute depth in metres and
//! yaw an absolute heading in degrees. `switches` lists the motion axes the
//! controller may drive; omitted axes are left free.

use std::fmt;
use std::str::FromStr;

use crate::config::{ConfigDoc, ConfigError, Section};
use crate::control::Axis;

pub const DEFAULT_TIMEOUT: f64 = 120.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskKind {
    Gate,
    Buoy,
    MarkerDrop,
    Torpedo,
    Pinger,
    Grab,
}

impl TaskKind {
    pub const ALL: [TaskKind; 6] = [
        TaskKind::Gate,
        TaskKind::Buoy,
        TaskKind::MarkerDrop,
        TaskKind::Torpedo,
        TaskKind::Pinger,
        TaskKind::Grab,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Gate => "gate",
            TaskKind::Buoy => "buoy",
            TaskKind::MarkerDrop => "marker_drop",
            TaskKind::Torpedo => "torpedo",
            TaskKind::Pinger => "pinger",
            TaskKind::Grab => "grab",
        }
    }

    /// Scenario section describing the target when the plan names none.
    pub fn default_target(self) -> &'static str {
        match self {
            TaskKind::Gate => "gate",
            TaskKind::Buoy => "buoy",
            TaskKind::MarkerDrop => "bin",
            TaskKind::Torpedo => "torpedo_target",
            TaskKind::Pinger => "pinger",
            TaskKind::Grab => "object",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown task kind `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Motion {
    Surge,
    Sway,
    Heave,
    Yaw,
}

impl FromStr for Motion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "surge" => Ok(Motion::Surge),
            "sway" => Ok(Motion::Sway),
            "heave" => Ok(Motion::Heave),
            "yaw" => Ok(Motion::Yaw),
            other => Err(format!("unknown transit motion `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitStep {
    pub motion: Motion,
    /// Metres for surge, sway and heave; degrees for yaw.
    pub setpoint: f64,
    pub timeout: f64,
}

impl FromStr for TransitStep {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split_whitespace().collect();
        let [motion, setpoint, timeout] = parts.as_slice() else {
            return Err(format!("transit step `{s}` must be `motion setpoint timeout`"));
        };
        let setpoint: f64 = setpoint.parse().map_err(|_| format!("bad setpoint `{setpoint}`"))?;
        let timeout: f64 = timeout.parse().map_err(|_| format!("bad timeout `{timeout}`"))?;
        if !setpoint.is_finite() {
            return Err("setpoint must be finite".into());
        }
        if !(timeout > 0.0 && timeout.is_finite()) {
            return Err(format!("transit timeout must be > 0, got {timeout}"));
        }
        Ok(Self {
            motion: motion.parse()?,
            setpoint,
            timeout,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub kind: TaskKind,
    /// Scenario section holding the target description.
    pub target: String,
    pub timeout: f64,
    pub transit: Vec<TransitStep>,
    /// Per-axis enables, indexed by [`Axis`].
    pub switches: [bool; 6],
    /// Overrides the kind's default approach standoff, m.
    pub standoff: Option<f64>,
    /// Markers to release (marker_drop only).
    pub count: u8,
}

impl TaskSpec {
    pub fn new(kind: TaskKind) -> Self {
        Self {
            kind,
            target: kind.default_target().to_string(),
            timeout: DEFAULT_TIMEOUT,
            transit: Vec::new(),
            switches: [true; 6],
            standoff: None,
            count: 2,
        }
    }

    fn from_section(section: &Section) -> Result<Self, ConfigError> {
        section.check_keys(&["kind", "target", "timeout", "transit", "switches", "standoff", "count"])?;
        let kind: TaskKind = section.require("kind")?;
        let mut spec = Self::new(kind);
        let value_err = |key: &str, msg: String| {
            let line = section.get(key).map(|e| e.line).unwrap_or(section.line);
            ConfigError::Value {
                line,
                key: key.to_string(),
                msg,
            }
        };
        if let Some(t) = section.parse::<String>("target")? {
            spec.target = t;
        }
        spec.timeout = section.f64_or("timeout", DEFAULT_TIMEOUT)?;
        if !(spec.timeout > 0.0 && spec.timeout.is_finite()) {
            return Err(value_err("timeout", format!("must be > 0, got {}", spec.timeout)));
        }
        if let Some(e) = section.get("transit") {
            spec.transit = e
                .value
                .split(';')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse())
                .collect::<Result<_, String>>()
                .map_err(|msg| value_err("transit", msg))?;
        }
        if let Some(e) = section.get("switches") {
            let mut on = [false; 6];
            for name in e.value.split_whitespace() {
                let axis = Axis::from_name(name).ok_or_else(|| value_err("switches", format!("unknown axis `{name}`")))?;
                on[axis.index()] = true;
            }
            spec.switches = on;
        }
        if let Some(s) = section.parse::<f64>("standoff")? {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(value_err("standoff", format!("must be >= 0, got {s}")));
            }
            spec.standoff = Some(s);
        }
        if let Some(c) = section.parse::<u8>("count")? {
            if c == 0 {
                return Err(value_err("count", "must be >= 1".into()));
            }
            spec.count = c;
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionPlan {
    pub name: String,
    pub tasks: Vec<TaskSpec>,
}

impl MissionPlan {
    pub fn new(tasks: Vec<TaskSpec>) -> Result<Self, ConfigError> {
        let plan = Self {
            name: "mission".into(),
            tasks,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.tasks.is_empty() {
            return Err(ConfigError::Validation("mission plan has no tasks".into()));
        }
        for (i, t) in self.tasks.iter().enumerate() {
            if !(t.timeout > 0.0 && t.timeout.is_finite()) {
                return Err(ConfigError::Validation(format!("task {} timeout must be > 0", i + 1)));
            }
        }
        Ok(())
    }

    /// Tasks are ordered by their numeric section suffix.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let doc = ConfigDoc::parse(text)?;
        doc.check_sections(&["task"])?;
        doc.root().check_keys(&["name"])?;
        let mut numbered = Vec::new();
        for s in doc.sections_with_prefix("task") {
            let suffix = &s.name["task.".len()..];
            let n: u32 = suffix.parse().map_err(|_| ConfigError::Parse {
                line: s.line,
                msg: format!("task section [{}] needs a numeric suffix", s.name),
            })?;
            numbered.push((n, TaskSpec::from_section(s)?));
        }
        numbered.sort_by_key(|(n, _)| *n);
        let plan = Self {
            name: doc.root().parse("name")?.unwrap_or_else(|| "mission".to_string()),
            tasks: numbered.into_iter().map(|(_, t)| t).collect(),
        };
        plan.validate()?;
        Ok(plan)
    }
}
