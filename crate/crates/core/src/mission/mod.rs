//! Master layer: runs a plan against a scenario, one cooperative tick at a time.
//!
//! Per tick: sensors publish to the bus, perception runs (decimated), the
//! active task handler produces a motion goal and payload commands, then
//! control, allocation, dynamics and the power model advance.

pub mod bus;
pub mod plan;
pub mod runner;
pub mod task;
pub mod world;

use thiserror::Error;

use crate::allocation::AllocationError;
use crate::config::ConfigError;
use crate::dynamics::DynamicsError;
use crate::vision::VisionError;

pub use bus::{Bus, BusMessage, Payload};
pub use plan::{MissionPlan, Motion, TaskKind, TaskSpec, TransitStep};
pub use runner::{run_mission, MissionOutput, MissionReport, MissionStatus, Outcome, TaskReport};
pub use task::{task_step, Phase, TaskState};
pub use world::{CameraId, CameraModel, Scenario, Target, TargetKind, World};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MissionError {
    #[error("bus: {0}")]
    Bus(String),
    #[error("scenario reference: {0}")]
    Reference(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Allocation(#[from] AllocationError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Vision(#[from] VisionError),
}
