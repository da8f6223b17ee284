//! Synthetic camera pipeline: render, degrade, enhance, detect, range.

pub mod detect;
pub mod enhance;
pub mod image;
pub mod render;

use thiserror::Error;

pub use detect::{
    calibrate, detect, estimate_distance, Calibration, DetectConfig, DetectMode, Detection, ThresholdRange,
};
pub use enhance::{blue_filter, clahe, degrade, white_balance, BlueFilterConfig, ClaheConfig, DegradeConfig};
pub use image::Image;
pub use render::{render_scene, SceneSpec, Shape};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VisionError {
    #[error("image format: {0}")]
    Format(String),
    #[error("scene: {0}")]
    Scene(String),
    #[error("parameter: {0}")]
    Param(String),
    #[error("calibration: {0}")]
    Calibration(String),
}
