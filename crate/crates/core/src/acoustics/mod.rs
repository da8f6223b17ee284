//! Four-hydrophone pinger localization chain.
//!
//! A ping is synthesized at each hydrophone with a geometric delay and 1/r
//! spreading, passed through the amplifier / low-pass / re-amplifier chain,
//! digitized, and cross-correlated pairwise. The pair delays give a far-field
//! bearing in the body x-y plane.

pub mod filter;
pub mod xcorr;

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2, Vector3};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::config::{ConfigDoc, ConfigError, Section};
use filter::ButterworthLowpass;

/// Hydrophone pairs used for the bearing: (0,1) and (0,3).
pub const PAIRS: [(usize, usize); 2] = [(0, 1), (0, 3)];

/// Slack on `|c·Δt| <= d` before a delay is declared infeasible.
pub const FEASIBILITY_SLACK: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AcousticsError {
    #[error("array geometry: {0}")]
    Geometry(String),
    #[error("invalid trace: {0}")]
    Trace(String),
    #[error("traces differ: {0}")]
    Mismatch(String),
    #[error("cross-correlation has no peak (degenerate trace)")]
    NoPeak,
    #[error("infeasible delay on pair {pair:?}: c·Δt/d = {ratio:.3}")]
    Infeasible { pair: (usize, usize), ratio: f64 },
    #[error("{0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    /// Hydrophone positions in the body frame, m.
    pub positions: [Vector3<f64>; 4],
    pub sound_speed: f64,
}

impl Default for ArrayGeometry {
    fn default() -> Self {
        Self::square(0.2, 1500.0)
    }
}

impl ArrayGeometry {
    /// Square of side `side` in the body x-y plane, numbered counter-clockwise
    /// from the (+x, +y) corner.
    pub fn square(side: f64, sound_speed: f64) -> Self {
        let h = side / 2.0;
        Self {
            positions: [
                Vector3::new(h, h, 0.0),
                Vector3::new(-h, h, 0.0),
                Vector3::new(-h, -h, 0.0),
                Vector3::new(h, -h, 0.0),
            ],
            sound_speed,
        }
    }

    pub fn validate(&self) -> Result<(), AcousticsError> {
        if !(self.sound_speed > 0.0 && self.sound_speed.is_finite()) {
            return Err(AcousticsError::Geometry(format!(
                "sound speed must be > 0, got {}",
                self.sound_speed
            )));
        }
        for i in 0..4 {
            for j in i + 1..4 {
                if (self.positions[i] - self.positions[j]).norm() < 1e-6 {
                    return Err(AcousticsError::Geometry(format!("hydrophones {i} and {j} coincide")));
                }
            }
        }
        let b0 = self.baseline(PAIRS[0]);
        let b1 = self.baseline(PAIRS[1]);
        if (b0.x * b1.y - b0.y * b1.x).abs() < 1e-9 {
            return Err(AcousticsError::Geometry("bearing baselines are parallel".into()));
        }
        Ok(())
    }

    /// Horizontal baseline `p_a - p_b`.
    pub fn baseline(&self, (a, b): (usize, usize)) -> Vector2<f64> {
        let d = self.positions[a] - self.positions[b];
        Vector2::new(d.x, d.y)
    }

    /// Exact arrival-time difference `t_b - t_a` for a point source.
    pub fn true_delay(&self, source: &Vector3<f64>, (a, b): (usize, usize)) -> f64 {
        ((source - self.positions[b]).norm() - (source - self.positions[a]).norm()) / self.sound_speed
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub samples: Vec<f64>,
    pub fs: f64,
}

impl Trace {
    pub fn new(samples: Vec<f64>, fs: f64) -> Result<Self, AcousticsError> {
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(AcousticsError::Trace(format!("sample rate must be > 0, got {fs}")));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(AcousticsError::Trace(format!("sample {i} is not finite")));
        }
        Ok(Self { samples, fs })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        (self.samples.iter().map(|v| v * v).sum::<f64>() / self.samples.len() as f64).sqrt()
    }

    /// One sample per line, no header.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.samples.len() * 12);
        for v in &self.samples {
            out.push_str(&format!("{v}\n"));
        }
        out
    }

    pub fn from_text(text: &str, fs: f64) -> Result<Self, AcousticsError> {
        let mut samples = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let v = t
                .parse::<f64>()
                .map_err(|e| AcousticsError::Trace(format!("line {}: `{t}`: {e}", i + 1)))?;
            samples.push(v);
        }
        Self::new(samples, fs)
    }
}

/// Parses a trace sidecar holding `fs = <Hz>`.
pub fn parse_sidecar(text: &str) -> Result<f64, ConfigError> {
    let doc = ConfigDoc::parse(text)?;
    doc.check_sections(&[])?;
    doc.root().check_keys(&["fs"])?;
    doc.root().require::<f64>("fs")
}

pub fn sidecar_text(fs: f64) -> String {
    format!("fs = {fs}\n")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PingConfig {
    pub freq: f64,
    pub duration: f64,
    pub interval: f64,
    /// Peak amplitude 1 m from the source, V at the hydrophone.
    pub source_level: f64,
    /// Fraction of the ping spent in each cosine ramp (Tukey window); 0.5 is Hann.
    pub taper: f64,
    /// Ratio of the ping's peak sinusoid power to the noise variance. `None`
    /// disables noise.
    pub snr_db: Option<f64>,
}

impl Default for PingConfig {
    fn default() -> Self {
        Self {
            freq: 30_000.0,
            duration: 0.004,
            interval: 1.0,
            source_level: 0.1,
            taper: 0.05,
            snr_db: Some(20.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalogChainConfig {
    pub gain1: f64,
    pub lpf_order: usize,
    pub lpf_cutoff: f64,
    pub gain2: f64,
}

impl Default for AnalogChainConfig {
    fn default() -> Self {
        Self {
            gain1: 50.0,
            lpf_order: 6,
            lpf_cutoff: 37_500.0,
            gain2: 20.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdcConfig {
    pub bits: u32,
    pub full_scale: f64,
}

impl Default for AdcConfig {
    fn default() -> Self {
        Self {
            bits: 16,
            full_scale: 2.048,
        }
    }
}

impl AdcConfig {
    pub fn max_code(&self) -> i64 {
        (1i64 << (self.bits - 1)) - 1
    }

    pub fn lsb(&self) -> f64 {
        self.full_scale / self.max_code() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcousticsConfig {
    pub geometry: ArrayGeometry,
    pub ping: PingConfig,
    pub chain: AnalogChainConfig,
    pub adc: AdcConfig,
    pub fs: f64,
}

impl Default for AcousticsConfig {
    fn default() -> Self {
        Self {
            geometry: ArrayGeometry::default(),
            ping: PingConfig::default(),
            chain: AnalogChainConfig::default(),
            adc: AdcConfig::default(),
            fs: 1.0e6,
        }
    }
}

const ACOUSTICS_KEYS: &[&str] = &[
    "fs",
    "freq",
    "ping_duration",
    "ping_interval",
    "source_level",
    "taper",
    "snr_db",
    "gain1",
    "gain2",
    "lpf_order",
    "lpf_cutoff",
    "adc_bits",
    "adc_full_scale",
    "sound_speed",
    "array_side",
];

impl AcousticsConfig {
    pub fn validate(&self) -> Result<(), AcousticsError> {
        self.geometry.validate()?;
        let bad = |m: String| Err(AcousticsError::Config(m));
        if !(self.fs > 0.0 && self.fs.is_finite()) {
            return bad(format!("fs must be > 0, got {}", self.fs));
        }
        let c = &self.chain;
        if !(c.gain1 > 0.0 && c.gain2 > 0.0) {
            return bad("gains must be > 0".into());
        }
        if c.lpf_order < 2 || !c.lpf_order.is_multiple_of(2) {
            return bad(format!("lpf_order must be even and >= 2, got {}", c.lpf_order));
        }
        if !(c.lpf_cutoff > 0.0 && c.lpf_cutoff < self.fs / 2.0) {
            return bad(format!("lpf_cutoff {} must lie in (0, fs/2)", c.lpf_cutoff));
        }
        let p = &self.ping;
        if !(p.freq > 0.0 && p.freq < c.lpf_cutoff) {
            return bad(format!("ping frequency {} must lie below the filter cutoff", p.freq));
        }
        if !(p.duration > 0.0 && p.interval >= p.duration && p.source_level > 0.0) {
            return bad("ping duration, interval and source level must be positive".into());
        }
        if !(0.0..=0.5).contains(&p.taper) {
            return bad(format!("taper must lie in [0, 0.5], got {}", p.taper));
        }
        if let Some(s) = p.snr_db {
            if !s.is_finite() {
                return bad("snr_db must be finite or off".into());
            }
        }
        if !(2..=31).contains(&self.adc.bits) || !(self.adc.full_scale > 0.0) {
            return bad("adc_bits must be in 2..=31 and full scale > 0".into());
        }
        Ok(())
    }

    /// Reads overrides from an `[acoustics]` section.
    pub fn from_section(section: &Section) -> Result<Self, ConfigError> {
        section.check_keys(ACOUSTICS_KEYS)?;
        let d = Self::default();
        let snr_db = match section.get("snr_db") {
            None => d.ping.snr_db,
            Some(e) if e.value.eq_ignore_ascii_case("off") => None,
            Some(_) => section.parse::<f64>("snr_db")?,
        };
        let side = section.f64_or("array_side", 0.2)?;
        let cfg = Self {
            geometry: ArrayGeometry::square(side, section.f64_or("sound_speed", d.geometry.sound_speed)?),
            ping: PingConfig {
                freq: section.f64_or("freq", d.ping.freq)?,
                duration: section.f64_or("ping_duration", d.ping.duration)?,
                interval: section.f64_or("ping_interval", d.ping.interval)?,
                source_level: section.f64_or("source_level", d.ping.source_level)?,
                taper: section.f64_or("taper", d.ping.taper)?,
                snr_db,
            },
            chain: AnalogChainConfig {
                gain1: section.f64_or("gain1", d.chain.gain1)?,
                lpf_order: section.parse("lpf_order")?.unwrap_or(d.chain.lpf_order),
                lpf_cutoff: section.f64_or("lpf_cutoff", d.chain.lpf_cutoff)?,
                gain2: section.f64_or("gain2", d.chain.gain2)?,
            },
            adc: AdcConfig {
                bits: section.parse("adc_bits")?.unwrap_or(d.adc.bits),
                full_scale: section.f64_or("adc_full_scale", d.adc.full_scale)?,
            },
            fs: section.f64_or("fs", d.fs)?,
        };
        cfg.validate().map_err(|e| ConfigError::Validation(e.to_string()))?;
        Ok(cfg)
    }
}

/// Silence kept ahead of the earliest arrival, s.
const PRE_ROLL: f64 = 0.0005;
/// Silence kept after the latest ping ends, s.
const POST_ROLL: f64 = 0.0015;

/// Raw hydrophone voltages for one ping from `pinger_pos` (body frame, m).
///
/// The record starts `PRE_ROLL` before the earliest arrival. Each channel is a
/// Tukey-windowed tone of length `ping.duration`, delayed by its propagation
/// time and scaled by `source_level / r`.
pub fn synth_ping<R: Rng + ?Sized>(
    cfg: &AcousticsConfig,
    pinger_pos: &Vector3<f64>,
    rng: &mut R,
) -> Result<[Trace; 4], AcousticsError> {
    cfg.validate()?;
    let geom = &cfg.geometry;
    let mut ranges = [0.0; 4];
    for (i, p) in geom.positions.iter().enumerate() {
        let r = (pinger_pos - p).norm();
        if !(r > 1e-3) || !r.is_finite() {
            return Err(AcousticsError::Geometry(format!("pinger coincides with hydrophone {i}")));
        }
        ranges[i] = r;
    }
    let c = geom.sound_speed;
    let r_min = ranges.iter().copied().fold(f64::INFINITY, f64::min);
    let r_max = ranges.iter().copied().fold(0.0, f64::max);
    let p = &cfg.ping;
    let span = PRE_ROLL + (r_max - r_min) / c + p.duration + POST_ROLL;
    let n = (span * cfg.fs).ceil() as usize;

    let mean_amp = ranges.iter().map(|r| p.source_level / r).sum::<f64>() / 4.0;
    let sigma = p
        .snr_db
        .map(|snr| mean_amp / 2f64.sqrt() / 10f64.powf(snr / 20.0))
        .unwrap_or(0.0);

    let w = 2.0 * PI * p.freq;
    let traces = std::array::from_fn(|i| {
        let offset = PRE_ROLL + (ranges[i] - r_min) / c;
        let amp = p.source_level / ranges[i];
        let samples = (0..n)
            .map(|k| {
                let local = k as f64 / cfg.fs - offset;
                let clean = if (0.0..p.duration).contains(&local) {
                    amp * tukey(local / p.duration, p.taper) * (w * local).sin()
                } else {
                    0.0
                };
                let noise = if sigma > 0.0 {
                    let z: f64 = StandardNormal.sample(rng);
                    sigma * z
                } else {
                    0.0
                };
                clean + noise
            })
            .collect();
        Trace { samples, fs: cfg.fs }
    });
    Ok(traces)
}

/// Tukey window on `x ∈ [0, 1)` with ramp fraction `taper` per side.
fn tukey(x: f64, taper: f64) -> f64 {
    let edge = x.min(1.0 - x);
    if taper <= 0.0 || edge >= taper {
        1.0
    } else {
        (0.5 * PI * edge / taper).sin().powi(2)
    }
}

/// Amplifier, Butterworth low-pass and re-amplifier, from rest.
pub fn analog_chain(t: &Trace, cfg: &AnalogChainConfig) -> Trace {
    let lpf = ButterworthLowpass::new(cfg.lpf_order, cfg.lpf_cutoff, t.fs);
    let amplified: Vec<f64> = t.samples.iter().map(|v| v * cfg.gain1).collect();
    let samples = lpf.apply(&amplified).into_iter().map(|v| v * cfg.gain2).collect();
    Trace { samples, fs: t.fs }
}

/// Clips to `±full_scale` and rounds to signed codes in `±(2^(bits-1) - 1)`.
pub fn adc(t: &Trace, cfg: &AdcConfig) -> Vec<i64> {
    let max = cfg.max_code();
    t.samples
        .iter()
        .map(|v| {
            let x = v.clamp(-cfg.full_scale, cfg.full_scale) / cfg.full_scale;
            ((x * max as f64).round() as i64).clamp(-max, max)
        })
        .collect()
}

/// Codes back to volts.
pub fn reconstruct(codes: &[i64], cfg: &AdcConfig, fs: f64) -> Trace {
    let lsb = cfg.lsb();
    Trace {
        samples: codes.iter().map(|&c| c as f64 * lsb).collect(),
        fs,
    }
}

/// Arrival delay of `b` relative to `a`, s; positive when `b` lags.
pub fn tdoa(a: &Trace, b: &Trace) -> Result<f64, AcousticsError> {
    if a.fs != b.fs {
        return Err(AcousticsError::Mismatch(format!("sample rates {} and {}", a.fs, b.fs)));
    }
    if a.len() != b.len() {
        return Err(AcousticsError::Mismatch(format!("lengths {} and {}", a.len(), b.len())));
    }
    if a.samples.iter().all(|v| *v == 0.0) || b.samples.iter().all(|v| *v == 0.0) {
        return Err(AcousticsError::NoPeak);
    }
    let r = xcorr::cross_correlation(&a.samples, &b.samples);
    let idx = xcorr::refined_peak(&r).ok_or(AcousticsError::NoPeak)?;
    let lag = idx - (a.len() as f64 - 1.0);
    Ok(lag / a.fs)
}

/// Horizontal direction cosines `(kx, ky)` toward the source from the delays
/// on [`PAIRS`].
pub fn direction_cosines(delays: [f64; 2], geom: &ArrayGeometry) -> Result<Vector2<f64>, AcousticsError> {
    let mut rows = Matrix2::zeros();
    let mut rhs = Vector2::zeros();
    for (i, (&pair, &dt)) in PAIRS.iter().zip(delays.iter()).enumerate() {
        let b = geom.baseline(pair);
        let d = b.norm();
        let ratio = geom.sound_speed * dt / d;
        if !ratio.is_finite() || ratio.abs() > 1.0 + FEASIBILITY_SLACK {
            return Err(AcousticsError::Infeasible { pair, ratio });
        }
        let u = b / d;
        rows[(i, 0)] = u.x;
        rows[(i, 1)] = u.y;
        // sin(arcsin(s)) with s clamped into the physical range.
        rhs[i] = ratio.clamp(-1.0, 1.0);
    }
    rows.lu()
        .solve(&rhs)
        .ok_or_else(|| AcousticsError::Geometry("bearing baselines are parallel".into()))
}

/// Far-field azimuth in the body x-y plane, rad, measured from +x toward +y.
pub fn heading(delays: [f64; 2], geom: &ArrayGeometry) -> Result<f64, AcousticsError> {
    let k = direction_cosines(delays, geom)?;
    Ok(k.y.atan2(k.x))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bearing {
    pub azimuth: f64,
    pub cosines: Vector2<f64>,
    pub delays: [f64; 2],
}

/// TDOA on the bearing pairs of already-conditioned traces, then the heading.
pub fn locate(traces: &[Trace; 4], geom: &ArrayGeometry) -> Result<Bearing, AcousticsError> {
    let mut delays = [0.0; 2];
    for (d, &(a, b)) in delays.iter_mut().zip(PAIRS.iter()) {
        *d = tdoa(&traces[a], &traces[b])?;
    }
    let cosines = direction_cosines(delays, geom)?;
    Ok(Bearing {
        azimuth: cosines.y.atan2(cosines.x),
        cosines,
        delays,
    })
}

/// Raw hydrophone voltages through the analog chain and ADC, back to volts.
pub fn condition(raw: &[Trace; 4], cfg: &AcousticsConfig) -> [Trace; 4] {
    std::array::from_fn(|i| {
        let analog = analog_chain(&raw[i], &cfg.chain);
        reconstruct(&adc(&analog, &cfg.adc), &cfg.adc, analog.fs)
    })
}

/// One complete ping: synthesis, conditioning, digitization, bearing.
pub fn ping_bearing<R: Rng + ?Sized>(
    cfg: &AcousticsConfig,
    pinger_pos: &Vector3<f64>,
    rng: &mut R,
) -> Result<Bearing, AcousticsError> {
    let raw = synth_ping(cfg, pinger_pos, rng)?;
    locate(&condition(&raw, cfg), &cfg.geometry)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, stream_rng};
    use proptest::prelude::*;

    fn tone(freq: f64, fs: f64, n: usize, amp: f64) -> Trace {
        Trace {
            samples: (0..n).map(|k| amp * (2.0 * PI * freq * k as f64 / fs).sin()).collect(),
            fs,
        }
    }

    fn tail_rms(t: &Trace, skip: usize) -> f64 {
        let s = &t.samples[skip..];
        (s.iter().map(|v| v * v).sum::<f64>() / s.len() as f64).sqrt()
    }

    fn noiseless() -> AcousticsConfig {
        let mut cfg = AcousticsConfig::default();
        cfg.ping.snr_db = None;
        cfg
    }

    fn far(azimuth_deg: f64, range: f64) -> Vector3<f64> {
        let a = azimuth_deg.to_radians();
        Vector3::new(range * a.cos(), range * a.sin(), 0.0)
    }

    #[test]
    fn equidistant_source_gives_zero_delays() {
        let g = ArrayGeometry::default();
        let above = Vector3::new(0.0, 0.0, -3.0);
        for i in 1..4 {
            assert!(g.true_delay(&above, (0, i)).abs() < 1e-15);
        }
        let traces = synth_ping(&noiseless(), &above, &mut stream_rng(0, stream::ACOUSTICS)).unwrap();
        assert_eq!(traces[0].samples, traces[2].samples);
        assert_eq!(tdoa(&traces[0], &traces[1]).unwrap(), 0.0);
    }

    #[test]
    fn endfire_delay() {
        let g = ArrayGeometry::default();
        // Source far along +x: hydrophone 1 is 0.2 m further than hydrophone 0.
        let src = Vector3::new(1.0e4, 0.1, 0.0);
        let expected = 0.2 / 1500.0;
        assert!((g.true_delay(&src, (0, 1)) - expected).abs() < 1e-9);
        assert!((expected * 1e6 - 133.333).abs() < 1e-3);
    }

    #[test]
    fn synthetic_endfire_pair_recovered_within_one_microsecond() {
        let cfg = noiseless();
        let src = Vector3::new(100.0, 0.1, 0.0);
        let traces = synth_ping(&cfg, &src, &mut stream_rng(0, stream::ACOUSTICS)).unwrap();
        let truth = cfg.geometry.true_delay(&src, (0, 1));
        let got = tdoa(&traces[0], &traces[1]).unwrap();
        assert!((got - truth).abs() < 1e-6, "got {got}, truth {truth}");
    }

    #[test]
    fn amplitude_follows_inverse_range() {
        let cfg = noiseless();
        let peak = |r: f64| {
            let t = synth_ping(&cfg, &Vector3::new(0.0, 0.0, -r), &mut stream_rng(0, 4)).unwrap();
            t[0].samples.iter().fold(0.0f64, |m, v| m.max(v.abs()))
        };
        // Same geometry scaled: the overhead source keeps all channels aligned.
        let near = synth_ping(&cfg, &Vector3::new(0.0, 0.0, -5.0), &mut stream_rng(0, 4)).unwrap();
        let far = synth_ping(&cfg, &Vector3::new(0.0, 0.0, -10.0), &mut stream_rng(0, 4)).unwrap();
        let r_near = (Vector3::new(0.0, 0.0, -5.0) - cfg.geometry.positions[0]).norm();
        let r_far = (Vector3::new(0.0, 0.0, -10.0) - cfg.geometry.positions[0]).norm();
        for (a, b) in near[0].samples.iter().zip(&far[0].samples) {
            assert!((a * r_near - b * r_far).abs() < 1e-12);
        }
        assert!((peak(5.0) / peak(10.0) - 2.0).abs() < 0.01);
    }

    #[test]
    fn coincident_pinger_is_rejected() {
        let cfg = noiseless();
        let p = cfg.geometry.positions[2];
        assert!(matches!(
            synth_ping(&cfg, &p, &mut stream_rng(0, 4)),
            Err(AcousticsError::Geometry(_))
        ));
    }

    #[test]
    fn chain_passband_gain_and_stopband_attenuation() {
        let cfg = AnalogChainConfig::default();
        let fs = 1.0e6;
        let n = 200_000;
        let amp = 1e-3;
        let low = analog_chain(&tone(1_000.0, fs, n, amp), &cfg);
        let high = analog_chain(&tone(75_000.0, fs, n, amp), &cfg);
        let ideal = amp / 2f64.sqrt();
        let pass = tail_rms(&low, n / 2) / ideal;
        assert!((pass / (cfg.gain1 * cfg.gain2) - 1.0).abs() < 0.01);
        let atten_db = 20.0 * (tail_rms(&low, n / 2) / tail_rms(&high, n / 2)).log10();
        // Analog Butterworth: 10·log10(1 + 2^12).
        let analog = 10.0 * (1.0 + 2f64.powi(12)).log10();
        assert!((analog - 36.12).abs() < 0.01);
        assert!(atten_db >= 35.0, "attenuation {atten_db} dB");
        assert!((atten_db - analog).abs() < 1.0);
    }

    #[test]
    fn chain_zero_in_zero_out() {
        let z = Trace { samples: vec![0.0; 1000], fs: 1.0e6 };
        assert!(analog_chain(&z, &AnalogChainConfig::default()).samples.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn adc_endpoints_and_rms() {
        let cfg = AdcConfig::default();
        let t = Trace { samples: vec![0.0, cfg.full_scale, -cfg.full_scale, 10.0, -10.0], fs: 1.0 };
        assert_eq!(adc(&t, &cfg), vec![0, 32767, -32767, 32767, -32767]);

        let sine = tone(1_234.0, 1.0e6, 100_000, cfg.full_scale / 2.0);
        let back = reconstruct(&adc(&sine, &cfg), &cfg, sine.fs);
        assert!((back.rms() - sine.rms()).abs() < cfg.lsb());
    }

    #[test]
    fn tdoa_identity_and_integer_shift() {
        let cfg = noiseless();
        let traces = synth_ping(&cfg, &Vector3::new(0.0, 0.0, -3.0), &mut stream_rng(0, 4)).unwrap();
        let a = &traces[0];
        assert_eq!(tdoa(a, a).unwrap(), 0.0);
        let mut shifted = vec![0.0; a.len()];
        shifted[25..].copy_from_slice(&a.samples[..a.len() - 25]);
        let b = Trace { samples: shifted, fs: a.fs };
        let d = tdoa(a, &b).unwrap();
        assert!((d - 25.0e-6).abs() < 1e-9, "{d}");
        assert!((tdoa(&b, a).unwrap() + d).abs() < 1e-9);
    }

    #[test]
    fn tdoa_errors() {
        let z = Trace { samples: vec![0.0; 16], fs: 1.0e6 };
        let one = Trace { samples: vec![1.0; 16], fs: 1.0e6 };
        assert_eq!(tdoa(&z, &one), Err(AcousticsError::NoPeak));
        let short = Trace { samples: vec![1.0; 8], fs: 1.0e6 };
        assert!(matches!(tdoa(&one, &short), Err(AcousticsError::Mismatch(_))));
    }

    #[test]
    fn heading_examples() {
        let g = ArrayGeometry::default();
        assert_eq!(heading([0.0, 0.0], &g).unwrap(), 0.0);
        let d = 0.2 / 1500.0;
        assert!(matches!(heading([1.1 * d, 0.0], &g), Err(AcousticsError::Infeasible { .. })));
        // Slight overshoot from noise is clamped rather than rejected.
        assert!((heading([1.02 * d, 0.0], &g).unwrap()).abs() < 1e-12);
        // Plane wave from +y: hydrophone 3 lags hydrophone 0 by d/c.
        assert!((heading([0.0, d], &g).unwrap() - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn noiseless_bearing_at_thirty_degrees() {
        let cfg = noiseless();
        let b = ping_bearing(&cfg, &far(30.0, 100.0), &mut stream_rng(0, 4)).unwrap();
        assert!((b.azimuth.to_degrees() - 30.0).abs() < 0.5, "{}", b.azimuth.to_degrees());
    }

    #[test]
    fn noisy_bearing_at_thirty_degrees() {
        let cfg = AcousticsConfig::default();
        let mut rng = stream_rng(11, stream::ACOUSTICS);
        let n = 40;
        let mean_err = (0..n)
            .map(|_| {
                let b = ping_bearing(&cfg, &far(30.0, 100.0), &mut rng).unwrap();
                (b.azimuth.to_degrees() - 30.0).abs()
            })
            .sum::<f64>()
            / n as f64;
        assert!(mean_err < 2.0, "mean error {mean_err}");
    }

    #[test]
    fn deterministic_under_seed() {
        let cfg = AcousticsConfig::default();
        let a = synth_ping(&cfg, &far(10.0, 20.0), &mut stream_rng(3, 4)).unwrap();
        let b = synth_ping(&cfg, &far(10.0, 20.0), &mut stream_rng(3, 4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trace_text_round_trip() {
        let t = Trace { samples: vec![0.1, -2.5e-7, 3.0], fs: 1.0e6 };
        let back = Trace::from_text(&t.to_text(), parse_sidecar(&sidecar_text(t.fs)).unwrap()).unwrap();
        assert_eq!(back, t);
        assert!(Trace::from_text("1.0\nabc\n", 1.0).is_err());
    }

    #[test]
    fn config_section_overrides() {
        let doc = ConfigDoc::parse("[acoustics]\nfreq = 25000\nsnr_db = off\n").unwrap();
        let cfg = AcousticsConfig::from_section(doc.section("acoustics").unwrap()).unwrap();
        assert_eq!(cfg.ping.freq, 25_000.0);
        assert_eq!(cfg.ping.snr_db, None);
        let bad = ConfigDoc::parse("[acoustics]\nfreq = 40000\n").unwrap();
        assert!(AcousticsConfig::from_section(bad.section("acoustics").unwrap()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn tdoa_antisymmetric(az in -180.0f64..180.0, seed in 0u64..1000) {
            let cfg = AcousticsConfig::default();
            let raw = synth_ping(&cfg, &far(az, 30.0), &mut stream_rng(seed, 4)).unwrap();
            let ab = tdoa(&raw[0], &raw[1]).unwrap();
            let ba = tdoa(&raw[1], &raw[0]).unwrap();
            prop_assert!((ab + ba).abs() <= 1.0 / cfg.fs);
        }

        #[test]
        fn integer_shifts_recovered(shift in 0usize..200) {
            let cfg = noiseless();
            let raw = synth_ping(&cfg, &Vector3::new(0.0, 0.0, -2.0), &mut stream_rng(0, 4)).unwrap();
            let a = &raw[0];
            let mut s = vec![0.0; a.len() + 200];
            s[shift..shift + a.len()].copy_from_slice(&a.samples);
            let mut pad = a.samples.clone();
            pad.resize(s.len(), 0.0);
            let a2 = Trace { samples: pad, fs: a.fs };
            let b = Trace { samples: s, fs: a.fs };
            let d = tdoa(&a2, &b).unwrap() * a.fs;
            prop_assert!((d - shift as f64).abs() < 1e-6);
        }

        #[test]
        fn noiseless_heading_matches_geometry(az in -179.0f64..179.0) {
            let cfg = noiseless();
            let src = far(az, 200.0);
            let truth = [
                cfg.geometry.true_delay(&src, PAIRS[0]),
                cfg.geometry.true_delay(&src, PAIRS[1]),
            ];
            let h = heading(truth, &cfg.geometry).unwrap();
            let err = crate::frames::wrap_angle(h - az.to_radians()).abs();
            prop_assert!(err < 1e-3);
        }
    }
}
