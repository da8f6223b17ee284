//! Butterworth low-pass realized as cascaded biquads via the bilinear transform.

use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    /// Second-order low-pass section with quality factor `q`, cutoff prewarped
    /// so the digital response is exactly −3 dB·(section share) at `fc`.
    pub fn lowpass(fc: f64, fs: f64, q: f64) -> Self {
        let k = (PI * fc / fs).tan();
        let k2 = k * k;
        let norm = 1.0 / (1.0 + k / q + k2);
        let b0 = k2 * norm;
        Self {
            b0,
            b1: 2.0 * b0,
            b2: b0,
            a1: 2.0 * (k2 - 1.0) * norm,
            a2: (1.0 - k / q + k2) * norm,
        }
    }

    /// Magnitude response at `f` (Hz).
    pub fn magnitude(&self, f: f64, fs: f64) -> f64 {
        let w = 2.0 * PI * f / fs;
        let (s1, c1) = w.sin_cos();
        let (s2, c2) = (2.0 * w).sin_cos();
        let num_re = self.b0 + self.b1 * c1 + self.b2 * c2;
        let num_im = -(self.b1 * s1 + self.b2 * s2);
        let den_re = 1.0 + self.a1 * c1 + self.a2 * c2;
        let den_im = -(self.a1 * s1 + self.a2 * s2);
        (num_re.hypot(num_im)) / (den_re.hypot(den_im))
    }
}

/// Even-order Butterworth low-pass as a cascade of `order / 2` biquads.
#[derive(Debug, Clone, PartialEq)]
pub struct ButterworthLowpass {
    pub sections: Vec<Biquad>,
}

impl ButterworthLowpass {
    pub fn new(order: usize, fc: f64, fs: f64) -> Self {
        assert!(order >= 2 && order.is_multiple_of(2), "order must be even and >= 2");
        assert!(fc > 0.0 && fc < fs / 2.0, "cutoff must lie below Nyquist");
        let sections = (1..=order / 2)
            .map(|k| {
                let angle = (2 * k - 1) as f64 * PI / (2 * order) as f64;
                Biquad::lowpass(fc, fs, 1.0 / (2.0 * angle.sin()))
            })
            .collect();
        Self { sections }
    }

    pub fn magnitude(&self, f: f64, fs: f64) -> f64 {
        self.sections.iter().map(|s| s.magnitude(f, fs)).product()
    }

    /// Filters `x` from a zero initial state (transposed direct form II).
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for s in &self.sections {
            let (mut z1, mut z2) = (0.0, 0.0);
            for v in y.iter_mut() {
                let input = *v;
                let out = s.b0 * input + z1;
                z1 = s.b1 * input - s.a1 * out + z2;
                z2 = s.b2 * input - s.a2 * out;
                *v = out;
            }
        }
        y
    }
}
