//! Vehicle parameters, simulation settings and their text form.

use std::fmt::Write as _;

use crate::config::{ConfigDoc, ConfigError, Section};

/// Gravitational acceleration, m/s².
pub const GRAVITY: f64 = 9.81;
/// Water density, kg/m³.
pub const WATER_DENSITY: f64 = 1000.0;

/// Physical description of the vehicle.
///
/// Masses are kept separately (dry hull, ballast, displaced water) so the
/// hydrostatic balance can be inspected with and without dead weights.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleParams {
    /// Dry mass in air, kg.
    pub mass: f64,
    /// Dead weights added to trim buoyancy, kg.
    pub ballast_mass: f64,
    /// Mass of water displaced by the hull, kg.
    pub displaced_mass: f64,
    /// Principal moments `[Ixx Iyy Izz]`, kg·m².
    pub inertia: [f64; 3],
    /// Center of gravity in the body frame, m.
    pub r_cg: [f64; 3],
    /// Center of buoyancy in the body frame, m.
    pub r_cb: [f64; 3],
    /// Linear damping per axis (N·s/m or N·m·s/rad).
    pub d_lin: [f64; 6],
    /// Quadratic damping per axis (N·s²/m² or N·m·s²/rad²).
    pub d_quad: [f64; 6],
    /// Thruster lever arms l1..l4, m.
    pub lever_arms: [f64; 4],
    /// Per-thruster force limit, N.
    pub t_max: f64,
    pub coriolis_enabled: bool,
    /// Divergence tripwire on |u|, |v|, |w|, m/s.
    pub velocity_limit: f64,
    /// Divergence tripwire on |p|, |q|, |r|, rad/s.
    pub rate_limit: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            mass: 26.4,
            // leaves +0.2 kg of net positive buoyancy
            ballast_mass: 8.4,
            displaced_mass: 35.0,
            inertia: [1.5, 1.5, 1.5],
            r_cg: [0.0, 0.0, 0.0],
            r_cb: [0.0, 0.0, -0.05],
            d_lin: [0.0; 6],
            // surge 10.8 N at 0.6 m/s, sway 6.02 N at 0.3 m/s
            d_quad: [30.0, 66.89, 66.89, 5.0, 5.0, 5.0],
            lever_arms: [0.25, 0.20, 0.30, 0.30],
            t_max: 20.0,
            coriolis_enabled: false,
            velocity_limit: 5.0,
            rate_limit: 5.0,
        }
    }
}

const VEHICLE_KEYS: &[&str] = &[
    "mass",
    "ballast_mass",
    "displaced_mass",
    "inertia",
    "r_cg",
    "r_cb",
    "d_lin",
    "d_quad",
    "l1",
    "l2",
    "l3",
    "l4",
    "t_max",
    "coriolis",
    "velocity_limit",
    "rate_limit",
];

impl VehicleParams {
    pub fn total_mass(&self) -> f64 {
        self.mass + self.ballast_mass
    }

    /// Weight of hull plus ballast, N.
    pub fn weight(&self) -> f64 {
        self.total_mass() * GRAVITY
    }

    pub fn buoyancy(&self) -> f64 {
        self.displaced_mass * GRAVITY
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: String| Err(ConfigError::Validation(msg));
        let positive = |name: &str, v: f64| -> Result<(), ConfigError> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::Validation(format!("{name} must be > 0, got {v}")))
            }
        };
        positive("mass", self.mass)?;
        positive("displaced_mass", self.displaced_mass)?;
        if !(self.ballast_mass >= 0.0) {
            return fail(format!("ballast_mass must be >= 0, got {}", self.ballast_mass));
        }
        for (i, v) in self.inertia.iter().enumerate() {
            positive(["inertia_xx", "inertia_yy", "inertia_zz"][i], *v)?;
        }
        for (i, v) in self.lever_arms.iter().enumerate() {
            positive(&format!("l{}", i + 1), *v)?;
        }
        positive("t_max", self.t_max)?;
        positive("velocity_limit", self.velocity_limit)?;
        positive("rate_limit", self.rate_limit)?;
        for (name, arr) in [("d_lin", &self.d_lin), ("d_quad", &self.d_quad)] {
            if arr.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
                return fail(format!("{name} coefficients must be finite and >= 0"));
            }
        }
        if self.r_cg.iter().chain(self.r_cb.iter()).any(|c| !c.is_finite()) {
            return fail("r_cg / r_cb must be finite".into());
        }
        Ok(())
    }

    /// Applies any keys present in `section` on top of `self`.
    pub fn apply_section(mut self, section: &Section) -> Result<Self, ConfigError> {
        section.check_keys(VEHICLE_KEYS)?;
        if let Some(v) = section.parse("mass")? {
            self.mass = v;
        }
        if let Some(v) = section.parse("ballast_mass")? {
            self.ballast_mass = v;
        }
        if let Some(v) = section.parse("displaced_mass")? {
            self.displaced_mass = v;
        }
        if let Some(v) = section.float_array("inertia")? {
            self.inertia = v;
        }
        if let Some(v) = section.float_array("r_cg")? {
            self.r_cg = v;
        }
        if let Some(v) = section.float_array("r_cb")? {
            self.r_cb = v;
        }
        if let Some(v) = section.float_array("d_lin")? {
            self.d_lin = v;
        }
        if let Some(v) = section.float_array("d_quad")? {
            self.d_quad = v;
        }
        for i in 0..4 {
            if let Some(v) = section.parse(&format!("l{}", i + 1))? {
                self.lever_arms[i] = v;
            }
        }
        if let Some(v) = section.parse("t_max")? {
            self.t_max = v;
        }
        if let Some(v) = section.flag("coriolis")? {
            self.coriolis_enabled = v;
        }
        if let Some(v) = section.parse("velocity_limit")? {
            self.velocity_limit = v;
        }
        if let Some(v) = section.parse("rate_limit")? {
            self.rate_limit = v;
        }
        Ok(self)
    }

    /// Writes the full `[vehicle]` section; [`load_params`] reads it back exactly.
    pub fn to_config_string(&self) -> String {
        fn join(values: &[f64]) -> String {
            values.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(" ")
        }
        let mut s = String::from("[vehicle]\n");
        let _ = writeln!(s, "mass = {}", self.mass);
        let _ = writeln!(s, "ballast_mass = {}", self.ballast_mass);
        let _ = writeln!(s, "displaced_mass = {}", self.displaced_mass);
        let _ = writeln!(s, "inertia = {}", join(&self.inertia));
        let _ = writeln!(s, "r_cg = {}", join(&self.r_cg));
        let _ = writeln!(s, "r_cb = {}", join(&self.r_cb));
        let _ = writeln!(s, "d_lin = {}", join(&self.d_lin));
        let _ = writeln!(s, "d_quad = {}", join(&self.d_quad));
        for (i, l) in self.lever_arms.iter().enumerate() {
            let _ = writeln!(s, "l{} = {}", i + 1, l);
        }
        let _ = writeln!(s, "t_max = {}", self.t_max);
        let _ = writeln!(s, "coriolis = {}", if self.coriolis_enabled { "on" } else { "off" });
        let _ = writeln!(s, "velocity_limit = {}", self.velocity_limit);
        let _ = writeln!(s, "rate_limit = {}", self.rate_limit);
        s
    }
}

/// Parses a vehicle parameter file. Keys absent from `[vehicle]` keep their
/// default-profile values; unknown keys are rejected.
pub fn load_params(config_text: &str) -> Result<VehicleParams, ConfigError> {
    let doc = ConfigDoc::parse(config_text)?;
    doc.check_sections(&["vehicle"])?;
    if !doc.root().entries.is_empty() {
        let e = &doc.root().entries[0];
        return Err(ConfigError::Parse {
            line: e.line,
            msg: format!("key `{}` outside of a [vehicle] section", e.key),
        });
    }
    let params = match doc.section("vehicle") {
        Some(section) => VehicleParams::default().apply_section(section)?,
        None => VehicleParams::default(),
    };
    params.validate()?;
    Ok(params)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    #[default]
    Rk4,
    Euler,
}

impl std::str::FromStr for Integrator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rk4" => Ok(Self::Rk4),
            "euler" => Ok(Self::Euler),
            other => Err(format!("unknown integrator `{other}` (expected rk4 or euler)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub duration: f64,
    pub seed: u64,
    pub integrator: Integrator,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            duration: 300.0,
            seed: 0,
            integrator: Integrator::Rk4,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.dt > 0.0 && self.dt <= 0.05) {
            return Err(ConfigError::Validation(format!(
                "dt must be in (0, 0.05], got {}",
                self.dt
            )));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(ConfigError::Validation(format!(
                "duration must be > 0, got {}",
                self.duration
            )));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }
}
