//! Behavioral models of the attitude/heading unit, the pressure depth sensor
//! and the Doppler velocity log.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::{ConfigError, Section};
use crate::dynamics::VehicleState;
use crate::frames::wrap_angle;
use crate::rng::{stream, stream_rng, SimRng};

/// Depth sensor resolution, m.
pub const DEPTH_RESOLUTION: f64 = 0.002;
const DEPTH_STEPS_PER_METER: f64 = 500.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuReading {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub timestamp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthReading {
    pub depth: f64,
    pub timestamp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DvlReading {
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub timestamp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    pub attitude_sigma: f64,
    pub rate_sigma: f64,
    /// Constant yaw offset from magnetic disturbance, rad.
    pub yaw_bias: f64,
    /// Applied before quantization, m.
    pub depth_sigma: f64,
    pub dvl_sigma: f64,
    /// Probability that any single read returns nothing.
    pub dropout: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            attitude_sigma: 0.005,
            rate_sigma: 0.002,
            yaw_bias: 0.0,
            depth_sigma: 0.001,
            dvl_sigma: 0.01,
            dropout: 0.0,
        }
    }
}

impl NoiseConfig {
    pub fn noiseless() -> Self {
        Self {
            attitude_sigma: 0.0,
            rate_sigma: 0.0,
            yaw_bias: 0.0,
            depth_sigma: 0.0,
            dvl_sigma: 0.0,
            dropout: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let sigmas = [self.attitude_sigma, self.rate_sigma, self.depth_sigma, self.dvl_sigma];
        if sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(ConfigError::Validation("noise sigmas must be >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ConfigError::Validation(format!(
                "dropout must be in [0, 1), got {}",
                self.dropout
            )));
        }
        if !self.yaw_bias.is_finite() {
            return Err(ConfigError::Validation("yaw_bias must be finite".into()));
        }
        Ok(())
    }

    /// Reads overrides from a `[noise]` section.
    pub fn from_section(section: &Section) -> Result<Self, ConfigError> {
        section.check_keys(&[
            "attitude_sigma",
            "rate_sigma",
            "yaw_bias",
            "depth_sigma",
            "dvl_sigma",
            "dropout",
        ])?;
        let d = Self::default();
        let cfg = Self {
            attitude_sigma: section.f64_or("attitude_sigma", d.attitude_sigma)?,
            rate_sigma: section.f64_or("rate_sigma", d.rate_sigma)?,
            yaw_bias: section.f64_or("yaw_bias", d.yaw_bias)?,
            depth_sigma: section.f64_or("depth_sigma", d.depth_sigma)?,
            dvl_sigma: section.f64_or("dvl_sigma", d.dvl_sigma)?,
            dropout: section.f64_or("dropout", d.dropout)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn gaussian(rng: &mut SimRng, sigma: f64) -> f64 {
    if sigma > 0.0 {
        let n: f64 = StandardNormal.sample(rng);
        sigma * n
    } else {
        0.0
    }
}

fn dropped(rng: &mut SimRng, p: f64) -> bool {
    p > 0.0 && rng.random::<f64>() < p
}

/// Truth plus Gaussian noise; yaw additionally offset by the magnetic bias.
/// `None` models a dropped read.
pub fn imu_read(state: &VehicleState, cfg: &NoiseConfig, rng: &mut SimRng) -> Option<ImuReading> {
    if dropped(rng, cfg.dropout) {
        return None;
    }
    let pose = &state.pose;
    let nu = &state.nu;
    Some(ImuReading {
        roll: wrap_angle(pose.phi + gaussian(rng, cfg.attitude_sigma)),
        pitch: pose.theta + gaussian(rng, cfg.attitude_sigma),
        yaw: wrap_angle(pose.psi + cfg.yaw_bias + gaussian(rng, cfg.attitude_sigma)),
        p: nu.p + gaussian(rng, cfg.rate_sigma),
        q: nu.q + gaussian(rng, cfg.rate_sigma),
        r: nu.r + gaussian(rng, cfg.rate_sigma),
        timestamp: state.t,
    })
}

/// Round-half-even onto the 2 mm grid. Pressure above the surface reads 0.
pub fn quantize_depth(z: f64) -> f64 {
    let steps = (z.max(0.0) * DEPTH_STEPS_PER_METER).round_ties_even();
    steps / DEPTH_STEPS_PER_METER
}

pub fn depth_read(z: f64, timestamp: f64, cfg: &NoiseConfig, rng: &mut SimRng) -> DepthReading {
    DepthReading {
        depth: quantize_depth(z + gaussian(rng, cfg.depth_sigma)),
        timestamp,
    }
}

pub fn dvl_read(state: &VehicleState, cfg: &NoiseConfig, rng: &mut SimRng) -> Option<DvlReading> {
    if dropped(rng, cfg.dropout) {
        return None;
    }
    Some(DvlReading {
        u: state.nu.u + gaussian(rng, cfg.dvl_sigma),
        v: state.nu.v + gaussian(rng, cfg.dvl_sigma),
        w: state.nu.w + gaussian(rng, cfg.dvl_sigma),
        timestamp: state.t,
    })
}

/// The three sensors with their own random streams.
#[derive(Debug, Clone)]
pub struct SensorSuite {
    pub noise: NoiseConfig,
    imu_rng: SimRng,
    depth_rng: SimRng,
    dvl_rng: SimRng,
}

impl SensorSuite {
    pub fn new(noise: NoiseConfig, seed: u64) -> Self {
        Self {
            noise,
            imu_rng: stream_rng(seed, stream::IMU),
            depth_rng: stream_rng(seed, stream::DEPTH),
            dvl_rng: stream_rng(seed, stream::DVL),
        }
    }

    pub fn imu(&mut self, state: &VehicleState) -> Option<ImuReading> {
        imu_read(state, &self.noise, &mut self.imu_rng)
    }

    pub fn depth(&mut self, state: &VehicleState) -> DepthReading {
        depth_read(state.pose.z, state.t, &self.noise, &mut self.depth_rng)
    }

    pub fn dvl(&mut self, state: &VehicleState) -> Option<DvlReading> {
        dvl_read(state, &self.noise, &mut self.dvl_rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{BodyVelocity, Pose};
    use proptest::prelude::*;

    fn state() -> VehicleState {
        VehicleState {
            pose: Pose::new(1.0, 2.0, 1.5, 0.1, -0.2, 3.1),
            nu: BodyVelocity::new(0.3, -0.1, 0.05, 0.01, 0.02, -0.03),
            t: 4.2,
        }
    }

    #[test]
    fn noiseless_imu_is_truth() {
        let mut rng = stream_rng(1, stream::IMU);
        let r = imu_read(&state(), &NoiseConfig::noiseless(), &mut rng).unwrap();
        let s = state();
        assert_eq!(
            [r.roll, r.pitch, r.yaw, r.p, r.q, r.r, r.timestamp],
            [s.pose.phi, s.pose.theta, s.pose.psi, s.nu.p, s.nu.q, s.nu.r, s.t]
        );
    }

    #[test]
    fn yaw_bias_is_a_wrapped_offset() {
        let cfg = NoiseConfig {
            yaw_bias: 0.05,
            ..NoiseConfig::noiseless()
        };
        let mut rng = stream_rng(1, stream::IMU);
        let r = imu_read(&state(), &cfg, &mut rng).unwrap();
        assert!((r.yaw - wrap_angle(3.1 + 0.05)).abs() < 1e-15);
        assert!(r.yaw < 0.0);
    }

    #[test]
    fn imu_noise_statistics() {
        let cfg = NoiseConfig {
            attitude_sigma: 0.01,
            ..NoiseConfig::noiseless()
        };
        let mut rng = stream_rng(99, stream::IMU);
        let n = 100_000;
        let truth = state().pose.phi;
        let samples: Vec<f64> = (0..n).map(|_| imu_read(&state(), &cfg, &mut rng).unwrap().roll).collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - truth).abs() < 3.0 * 0.01 / (n as f64).sqrt());
        assert!((var.sqrt() - 0.01).abs() < 0.05 * 0.01);
    }

    #[test]
    fn dvl_noise_statistics() {
        let cfg = NoiseConfig {
            dvl_sigma: 0.02,
            ..NoiseConfig::noiseless()
        };
        let mut rng = stream_rng(5, stream::DVL);
        let n = 100_000;
        let samples: Vec<f64> = (0..n).map(|_| dvl_read(&state(), &cfg, &mut rng).unwrap().u).collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - 0.3).abs() < 3.0 * 0.02 / (n as f64).sqrt());
        assert!((var.sqrt() - 0.02).abs() < 0.05 * 0.02);
    }

    #[test]
    fn depth_quantization_examples() {
        assert!((quantize_depth(1.2345) - 1.234).abs() < 1e-12);
        assert_eq!(quantize_depth(0.0), 0.0);
        // 0.003 / 0.002 = 1.5 ties to even -> 2 steps
        assert!((quantize_depth(0.003) - 0.004).abs() < 1e-12);
        // 0.001 / 0.002 = 0.5 ties to even -> 0
        assert_eq!(quantize_depth(0.001), 0.0);
    }

    #[test]
    fn noiseless_dvl_is_truth() {
        let mut rng = stream_rng(1, stream::DVL);
        let r = dvl_read(&state(), &NoiseConfig::noiseless(), &mut rng).unwrap();
        assert_eq!([r.u, r.v, r.w], [0.3, -0.1, 0.05]);
        let rest = VehicleState::default();
        let r = dvl_read(&rest, &NoiseConfig::noiseless(), &mut rng).unwrap();
        assert_eq!([r.u, r.v, r.w], [0.0; 3]);
    }

    #[test]
    fn dropout_yields_none() {
        let cfg = NoiseConfig {
            dropout: 0.5,
            ..NoiseConfig::noiseless()
        };
        let mut rng = stream_rng(3, stream::IMU);
        let misses = (0..1000).filter(|_| imu_read(&state(), &cfg, &mut rng).is_none()).count();
        assert!(misses > 400 && misses < 600);
        assert!(NoiseConfig { dropout: 1.0, ..cfg }.validate().is_err());
    }

    #[test]
    fn fixed_seed_reproduces_sequence() {
        let mut a = SensorSuite::new(NoiseConfig::default(), 11);
        let mut b = SensorSuite::new(NoiseConfig::default(), 11);
        for _ in 0..50 {
            assert_eq!(a.imu(&state()), b.imu(&state()));
            assert_eq!(a.depth(&state()), b.depth(&state()));
            assert_eq!(a.dvl(&state()), b.dvl(&state()));
        }
    }

    proptest! {
        #[test]
        fn depth_on_grid(z in 0.0f64..100.0, seed in any::<u64>()) {
            let mut rng = stream_rng(seed, stream::DEPTH);
            let d = depth_read(z, 0.0, &NoiseConfig::default(), &mut rng).depth;
            let steps = d * 500.0;
            prop_assert!((steps - steps.round()).abs() < 1e-9);
        }
    }
}
