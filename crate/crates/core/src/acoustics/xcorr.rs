//! FFT cross-correlation with parabolic peak refinement.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Full linear cross-correlation `r[k] = Σ a[n]·b[n+k]` for
/// `k = -(n-1) ..= n-1`, returned with lag `-(n-1)` at index 0.
pub fn cross_correlation(a: &[f64], b: &[f64]) -> Vec<f64> {
    assert_eq!(a.len(), b.len(), "traces must have equal length");
    let n = a.len();
    if n == 0 {
        return Vec::new();
    }
    let size = (2 * n - 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);

    let mut fa: Vec<Complex<f64>> = a.iter().map(|&x| Complex::new(x, 0.0)).collect();
    fa.resize(size, Complex::new(0.0, 0.0));
    let mut fb: Vec<Complex<f64>> = b.iter().map(|&x| Complex::new(x, 0.0)).collect();
    fb.resize(size, Complex::new(0.0, 0.0));
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    let mut prod: Vec<Complex<f64>> = fa.iter().zip(&fb).map(|(x, y)| x.conj() * y).collect();
    inv.process(&mut prod);

    let scale = 1.0 / size as f64;
    let mut out = Vec::with_capacity(2 * n - 1);
    // Negative lags wrap to the end of the circular result.
    for k in (1..n).rev() {
        out.push(prod[size - k].re * scale);
    }
    for k in 0..n {
        out.push(prod[k].re * scale);
    }
    out
}

/// Local maxima within this fraction of the global maximum compete on their
/// interpolated height.
const CANDIDATE_FRACTION: f64 = 0.9;

/// Fractional index of the correlation peak.
///
/// Narrowband pings give a comb of near-equal lobes one carrier period apart,
/// and an off-grid true peak can sample lower than its neighbour lobe. Each
/// strong local maximum is refined by a 3-point parabola and the highest
/// vertex wins.
pub fn refined_peak(r: &[f64]) -> Option<f64> {
    let (k_max, &peak) = r.iter().enumerate().max_by(|x, y| x.1.total_cmp(y.1))?;
    if !(peak > 0.0) {
        return None;
    }
    if r.len() < 3 {
        return Some(k_max as f64);
    }
    let mut best = (k_max as f64, peak);
    let mut best_height = f64::NEG_INFINITY;
    for k in 1..r.len() - 1 {
        let (l, c, rr) = (r[k - 1], r[k], r[k + 1]);
        if c < CANDIDATE_FRACTION * peak || c < l || c < rr {
            continue;
        }
        let (offset, height) = parabola_vertex(l, c, rr);
        if height > best_height {
            best_height = height;
            best = (k as f64 + offset, height);
        }
    }
    Some(best.0)
}

/// Vertex `(offset, height)` of the parabola through `(-1, l), (0, c), (1, r)`.
pub fn parabola_vertex(l: f64, c: f64, r: f64) -> (f64, f64) {
    let denom = l - 2.0 * c + r;
    if denom >= 0.0 {
        return (0.0, c);
    }
    let offset = (0.5 * (l - r) / denom).clamp(-0.5, 0.5);
    (offset, c - 0.25 * (l - r) * offset)
}
