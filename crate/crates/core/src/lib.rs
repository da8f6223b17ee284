//! Simulator and autonomy stack for a small eight-thruster AUV.
//!
//! The crate is layered bottom-up:
//!
//! - [`frames`], [`params`], [`config`]: state vectors, vehicle description, file dialect
//! - [`dynamics`], [`allocation`]: rigid-body model and thruster mixing
//! - [`control`]: six independent PID loops
//! - [`sensors`], [`acoustics`], [`vision`]: simulated perception
//! - [`power`], [`payloads`]: batteries, rails, kill switches, dropper, torpedo, grabber
//! - [`mission`], [`telemetry`]: the task-sequencing loop and its outputs

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod acoustics;
pub mod allocation;
pub mod config;
pub mod control;
pub mod dynamics;
pub mod frames;
pub mod mission;
pub mod params;
pub mod payloads;
pub mod power;
pub mod rng;
pub mod sensors;
pub mod telemetry;
pub mod vision;

pub use allocation::AllocationMatrix;
pub use dynamics::{VehicleModel, VehicleState};
pub use frames::{BodyVelocity, GeneralizedForce, Pose, ThrustVector};
pub use params::{load_params, SimConfig, VehicleParams};
