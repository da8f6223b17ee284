//! Battery pods, distribution rails, rail monitoring and kill switches.
//!
//! Two hot-swappable pods feed a common bus through an ideal diode-OR. The
//! bus is regulated down to 5 V, 12 V and 19 V rails; the unregulated rail
//! tracks the bus. The onboard computer sits on the 19 V rail.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::{ConfigError, Section};

pub const ADC_MAX: u16 = 1023;
pub const ADC_REF: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rail {
    V5,
    V12,
    V19,
    Unregulated,
}

impl Rail {
    pub const ALL: [Rail; 4] = [Rail::V5, Rail::V12, Rail::V19, Rail::Unregulated];
    /// The rail kept alive by a soft kill.
    pub const COMPUTER: Rail = Rail::V19;

    pub fn index(self) -> usize {
        match self {
            Rail::V5 => 0,
            Rail::V12 => 1,
            Rail::V19 => 2,
            Rail::Unregulated => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Rail::V5 => "5v",
            Rail::V12 => "12v",
            Rail::V19 => "19v",
            Rail::Unregulated => "unreg",
        }
    }

    /// Regulated set-point; `None` for the unregulated rail.
    pub fn regulated_voltage(self) -> Option<f64> {
        match self {
            Rail::V5 => Some(5.0),
            Rail::V12 => Some(12.0),
            Rail::V19 => Some(19.0),
            Rail::Unregulated => None,
        }
    }

    /// Monitoring divider bringing the rail into the 0-5 V ADC range.
    pub fn divider(self) -> f64 {
        match self {
            Rail::V5 => 1.0,
            Rail::V12 => 0.4,
            Rail::V19 => 0.25,
            Rail::Unregulated => 0.19,
        }
    }
}

/// Which rail feeds which consumer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Consumer {
    Computer,
    Imu,
    DepthSensor,
    Dvl,
    Hydrophones,
    Cameras,
    Thrusters,
    Pneumatics,
    Dropper,
    Grabber,
}

impl Consumer {
    pub fn rail(self) -> Rail {
        match self {
            Consumer::Computer => Rail::V19,
            Consumer::Imu | Consumer::DepthSensor | Consumer::Hydrophones | Consumer::Dropper => Rail::V5,
            Consumer::Dvl | Consumer::Cameras | Consumer::Pneumatics | Consumer::Grabber => Rail::V12,
            Consumer::Thrusters => Rail::Unregulated,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryPod {
    pub present: bool,
    pub soc: f64,
    /// Ah.
    pub capacity: f64,
    pub v_full: f64,
    pub v_empty: f64,
}

impl Default for BatteryPod {
    fn default() -> Self {
        Self {
            present: true,
            soc: 1.0,
            capacity: 10.0,
            v_full: 25.2,
            v_empty: 19.8,
        }
    }
}

impl BatteryPod {
    pub fn voltage(&self) -> f64 {
        self.v_empty + self.soc * (self.v_full - self.v_empty)
    }

    pub fn can_supply(&self) -> bool {
        self.present && self.soc > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KillState {
    pub hard_kill: bool,
    pub soft_kill: bool,
}

impl KillState {
    pub fn allows(&self, rail: Rail) -> bool {
        !self.hard_kill && (!self.soft_kill || rail == Rail::COMPUTER)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RailReading {
    pub nominal: f64,
    pub voltage: f64,
    pub current: f64,
    pub powered: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RailState {
    pub rails: [RailReading; 4],
    pub bus_voltage: f64,
}

impl RailState {
    pub fn get(&self, rail: Rail) -> &RailReading {
        &self.rails[rail.index()]
    }

    pub fn powered(&self, rail: Rail) -> bool {
        self.get(rail).powered
    }

    pub fn feeds(&self, consumer: Consumer) -> bool {
        self.powered(consumer.rail())
    }
}

/// One power step. Loads on unpowered rails draw nothing.
pub fn step_power(pods: &[BatteryPod; 2], loads: &[f64; 4], kill: KillState, dt: f64) -> ([BatteryPod; 2], RailState) {
    assert!(dt > 0.0, "dt must be positive");
    let mut next = *pods;
    let live: Vec<usize> = (0..2).filter(|&i| pods[i].can_supply()).collect();
    let bus_up = !live.is_empty() && !kill.hard_kill;
    let bus_voltage = if live.is_empty() {
        0.0
    } else {
        live.iter().map(|&i| pods[i].voltage()).fold(0.0, f64::max)
    };

    let mut state = RailState {
        bus_voltage: if kill.hard_kill { 0.0 } else { bus_voltage },
        ..RailState::default()
    };
    let mut total = 0.0;
    for rail in Rail::ALL {
        let powered = bus_up && kill.allows(rail);
        let nominal = rail.regulated_voltage().unwrap_or(bus_voltage);
        let current = if powered { loads[rail.index()].max(0.0) } else { 0.0 };
        total += current;
        state.rails[rail.index()] = RailReading {
            nominal,
            voltage: if powered { nominal } else { 0.0 },
            current,
            powered,
        };
    }

    if total > 0.0 && bus_up {
        let charge = total * dt / 3600.0;
        let soc_sum: f64 = live.iter().map(|&i| pods[i].soc).sum();
        for &i in &live {
            let share = charge * pods[i].soc / soc_sum;
            next[i].soc = (pods[i].soc - share / pods[i].capacity).max(0.0);
        }
    }
    (next, state)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorConfig {
    /// Hall-sensor sensitivity, V/A.
    pub hall_sensitivity: f64,
    pub hall_offset: f64,
    /// Gaussian noise on the divided voltage and on the Hall output, V.
    pub noise_sigma: f64,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            hall_sensitivity: 0.1,
            hall_offset: 2.5,
            noise_sigma: 0.0,
        }
    }
}

fn code(volts: f64) -> u16 {
    (volts.clamp(0.0, ADC_REF) / ADC_REF * ADC_MAX as f64).round() as u16
}

/// 10-bit ADC codes `(v_code, i_code)` for one rail.
pub fn monitor<R: Rng + ?Sized>(rail: Rail, reading: &RailReading, cfg: &MonitorConfig, rng: &mut R) -> (u16, u16) {
    let mut noise = || {
        if cfg.noise_sigma > 0.0 {
            let z: f64 = StandardNormal.sample(rng);
            cfg.noise_sigma * z
        } else {
            0.0
        }
    };
    let v = reading.voltage * rail.divider() + noise();
    let i = reading.current * cfg.hall_sensitivity + cfg.hall_offset + noise();
    (code(v), code(i))
}

/// Per-rail quiescent loads plus thruster draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadModel {
    /// Base current per rail, A, indexed like [`Rail::ALL`].
    pub base: [f64; 4],
    /// Thruster current per newton of |thrust|, A/N.
    pub amps_per_newton: f64,
}

impl Default for LoadModel {
    fn default() -> Self {
        Self {
            base: [1.0, 1.5, 3.0, 0.0],
            amps_per_newton: 0.3,
        }
    }
}

impl LoadModel {
    pub fn loads(&self, thrusts: &[f64; 8]) -> [f64; 4] {
        let mut l = self.base;
        l[Rail::Unregulated.index()] += self.amps_per_newton * thrusts.iter().map(|t| t.abs()).sum::<f64>();
        l
    }
}

/// Owned power state: pods, kill switches and the last rail snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSystem {
    pub pods: [BatteryPod; 2],
    pub kill: KillState,
    pub loads: LoadModel,
    pub monitor: MonitorConfig,
    pub rails: RailState,
}

impl Default for PowerSystem {
    fn default() -> Self {
        let pods = [BatteryPod::default(); 2];
        let kill = KillState::default();
        // Snapshot at zero load so sensors see power before the first step.
        let (_, rails) = step_power(&pods, &[0.0; 4], kill, 1.0);
        Self {
            pods,
            kill,
            loads: LoadModel::default(),
            monitor: MonitorConfig::default(),
            rails,
        }
    }
}

impl PowerSystem {
    pub fn step(&mut self, thrusts: &[f64; 8], dt: f64) -> &RailState {
        let (pods, rails) = step_power(&self.pods, &self.loads.loads(thrusts), self.kill, dt);
        self.pods = pods;
        self.rails = rails;
        &self.rails
    }

    /// Recomputes the rail snapshot after a switch or pod change without draining the pods.
    pub fn refresh(&mut self, thrusts: &[f64; 8]) -> &RailState {
        let (_, rails) = step_power(&self.pods, &self.loads.loads(thrusts), self.kill, 1.0);
        self.rails = rails;
        &self.rails
    }

    pub fn remove_pod(&mut self, i: usize) {
        self.pods[i].present = false;
    }

    pub fn insert_pod(&mut self, i: usize) {
        self.pods[i].present = true;
    }

    pub fn feeds(&self, consumer: Consumer) -> bool {
        self.rails.feeds(consumer)
    }

    /// Reads overrides from a `[power]` section.
    pub fn from_section(section: &Section) -> Result<Self, ConfigError> {
        section.check_keys(&["soc1", "soc2", "capacity", "base_loads", "amps_per_newton", "monitor_noise"])?;
        let mut p = Self::default();
        let soc = [section.f64_or("soc1", 1.0)?, section.f64_or("soc2", 1.0)?];
        let capacity = section.f64_or("capacity", 10.0)?;
        for (pod, s) in p.pods.iter_mut().zip(soc) {
            if !(0.0..=1.0).contains(&s) {
                return Err(ConfigError::Validation(format!("pod soc must lie in [0, 1], got {s}")));
            }
            pod.soc = s;
            pod.capacity = capacity;
        }
        if !(capacity > 0.0) {
            return Err(ConfigError::Validation("capacity must be > 0".into()));
        }
        if let Some(b) = section.float_array::<4>("base_loads")? {
            if b.iter().any(|v| *v < 0.0) {
                return Err(ConfigError::Validation("base loads must be >= 0".into()));
            }
            p.loads.base = b;
        }
        p.loads.amps_per_newton = section.f64_or("amps_per_newton", p.loads.amps_per_newton)?;
        p.monitor.noise_sigma = section.f64_or("monitor_noise", 0.0)?;
        if p.loads.amps_per_newton < 0.0 || p.monitor.noise_sigma < 0.0 {
            return Err(ConfigError::Validation("amps_per_newton and monitor_noise must be >= 0".into()));
        }
        let (_, rails) = step_power(&p.pods, &[0.0; 4], p.kill, 1.0);
        p.rails = rails;
        Ok(p)
    }
}
