//! Underwater degradation model and the blue-filter enhancement pipeline.

use super::{Image, VisionError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegradeConfig {
    /// Per-channel attenuation, 1/m (R, G, B).
    pub beta: [f64; 3],
    /// Ambient water color the scene fades into.
    pub backlight: [u8; 3],
    pub distance: f64,
}

impl DegradeConfig {
    /// Red fades fastest, blue slowest.
    pub const DEFAULT_BETA: [f64; 3] = [0.5, 0.12, 0.08];
    pub const DEFAULT_BACKLIGHT: [u8; 3] = [10, 90, 120];

    pub fn at_distance(distance: f64) -> Self {
        Self {
            beta: Self::DEFAULT_BETA,
            backlight: Self::DEFAULT_BACKLIGHT,
            distance,
        }
    }

    pub fn validate(&self) -> Result<(), VisionError> {
        if self.beta.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return Err(VisionError::Param("attenuation coefficients must be >= 0".into()));
        }
        if !(self.distance.is_finite() && self.distance >= 0.0) {
            return Err(VisionError::Param(format!("distance must be >= 0, got {}", self.distance)));
        }
        Ok(())
    }
}

/// `out = in·e^(−βd) + backlight·(1 − e^(−βd))` per channel, rounded.
/// Single-channel images use the first coefficient.
pub fn degrade(img: &Image, cfg: &DegradeConfig) -> Result<Image, VisionError> {
    cfg.validate()?;
    let luts: Vec<[u8; 256]> = (0..img.channels)
        .map(|c| {
            let t = (-cfg.beta[c] * cfg.distance).exp();
            let bl = cfg.backlight[c] as f64;
            let mut lut = [0u8; 256];
            for (v, out) in lut.iter_mut().enumerate() {
                *out = (v as f64 * t + bl * (1.0 - t)).round().clamp(0.0, 255.0) as u8;
            }
            lut
        })
        .collect();
    Ok(map_channels(img, &luts))
}

fn map_channels(img: &Image, luts: &[[u8; 256]]) -> Image {
    let mut out = img.clone();
    for (i, v) in out.data.iter_mut().enumerate() {
        *v = luts[i % img.channels][*v as usize];
    }
    out
}

/// Per-channel cuts `(low, high)` for a discard ratio; `None` when degenerate.
pub fn stretch_limits(hist: &[usize; 256], ratio: f64) -> Option<(u8, u8)> {
    let n: usize = hist.iter().sum();
    let budget = ratio * n as f64;
    let mut cum = 0usize;
    let mut low = None;
    for (v, &h) in hist.iter().enumerate() {
        cum += h;
        if cum as f64 > budget {
            low = Some(v);
            break;
        }
    }
    cum = 0;
    let mut high = None;
    for (v, &h) in hist.iter().enumerate().rev() {
        cum += h;
        if cum as f64 > budget {
            high = Some(v);
            break;
        }
    }
    match (low, high) {
        (Some(l), Some(h)) if h > l => Some((l as u8, h as u8)),
        _ => None,
    }
}

fn histogram(values: impl Iterator<Item = u8>) -> [usize; 256] {
    let mut hist = [0usize; 256];
    for v in values {
        hist[v as usize] += 1;
    }
    hist
}

/// Stretches each channel so the cut points map to 0 and 255, discarding at
/// most `discard_ratio` of the pixels at each end. Degenerate channels pass
/// through unchanged.
pub fn white_balance(img: &Image, discard_ratio: f64) -> Result<Image, VisionError> {
    if !(0.0..0.5).contains(&discard_ratio) {
        return Err(VisionError::Param(format!(
            "discard ratio must lie in [0, 0.5), got {discard_ratio}"
        )));
    }
    let luts: Vec<[u8; 256]> = (0..img.channels)
        .map(|c| {
            let mut lut = [0u8; 256];
            match stretch_limits(&histogram(img.channel(c)), discard_ratio) {
                None => lut.iter_mut().enumerate().for_each(|(v, o)| *o = v as u8),
                Some((lo, hi)) => {
                    let (lo, hi) = (lo as f64, hi as f64);
                    for (v, o) in lut.iter_mut().enumerate() {
                        *o = ((v as f64 - lo) * 255.0 / (hi - lo)).round().clamp(0.0, 255.0) as u8;
                    }
                }
            }
            lut
        })
        .collect();
    Ok(map_channels(img, &luts))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClaheConfig {
    /// Bin cap as a multiple of the mean bin count.
    pub clip_limit: f64,
    pub tiles: (usize, usize),
}

impl Default for ClaheConfig {
    fn default() -> Self {
        Self {
            clip_limit: 2.0,
            tiles: (8, 8),
        }
    }
}

/// Tile boundaries `floor(i·n/t)` for `i = 0..=t`.
fn tile_edges(n: usize, t: usize) -> Vec<usize> {
    (0..=t).map(|i| i * n / t).collect()
}

/// Clipped-histogram equalization map for one tile.
pub fn tile_mapping(values: &[u8], clip_limit: f64) -> [u8; 256] {
    let n = values.len();
    let mut lut = [0u8; 256];
    let hist = histogram(values.iter().copied());
    if hist.iter().filter(|h| **h > 0).count() <= 1 {
        lut.iter_mut().enumerate().for_each(|(v, o)| *o = v as u8);
        return lut;
    }
    let cap = clip_limit * n as f64 / 256.0;
    let mut clipped = [0f64; 256];
    let mut excess = 0.0;
    for (c, &h) in clipped.iter_mut().zip(hist.iter()) {
        let h = h as f64;
        *c = h.min(cap);
        excess += h - *c;
    }
    let share = excess / 256.0;
    let mut cum = 0.0;
    for (v, c) in clipped.iter().enumerate() {
        cum += c + share;
        lut[v] = (255.0 * cum / n as f64).round().clamp(0.0, 255.0) as u8;
    }
    lut
}

/// Contrast-limited adaptive histogram equalization on a single plane.
fn clahe_plane(plane: &[u8], width: usize, height: usize, cfg: &ClaheConfig) -> Vec<u8> {
    let (tx, ty) = cfg.tiles;
    let xs = tile_edges(width, tx);
    let ys = tile_edges(height, ty);
    let mut luts = vec![[0u8; 256]; tx * ty];
    let mut buf = Vec::new();
    for j in 0..ty {
        for i in 0..tx {
            buf.clear();
            for y in ys[j]..ys[j + 1] {
                buf.extend_from_slice(&plane[y * width + xs[i]..y * width + xs[i + 1]]);
            }
            luts[j * tx + i] = tile_mapping(&buf, cfg.clip_limit);
        }
    }
    let centers = |edges: &[usize]| -> Vec<f64> {
        edges.windows(2).map(|w| (w[0] + w[1]) as f64 / 2.0 - 0.5).collect()
    };
    let cx = centers(&xs);
    let cy = centers(&ys);
    // Neighbouring tile indices and the weight of the second one.
    let locate = |c: &[f64], p: f64| -> (usize, usize, f64) {
        if p <= c[0] {
            return (0, 0, 0.0);
        }
        let last = c.len() - 1;
        if p >= c[last] {
            return (last, last, 0.0);
        }
        let k = c.partition_point(|v| *v <= p) - 1;
        (k, k + 1, (p - c[k]) / (c[k + 1] - c[k]))
    };
    let col: Vec<_> = (0..width).map(|x| locate(&cx, x as f64)).collect();
    let mut out = vec![0u8; plane.len()];
    for y in 0..height {
        let (j0, j1, wy) = locate(&cy, y as f64);
        for x in 0..width {
            let (i0, i1, wx) = col[x];
            let v = plane[y * width + x] as usize;
            let m = |i: usize, j: usize| luts[j * tx + i][v] as f64;
            let top = m(i0, j0) * (1.0 - wx) + m(i1, j0) * wx;
            let bottom = m(i0, j1) * (1.0 - wx) + m(i1, j1) * wx;
            out[y * width + x] = (top * (1.0 - wy) + bottom * wy).round().clamp(0.0, 255.0) as u8;
        }
    }
    out
}

/// Full-range luma used for the luminance/chrominance split.
fn luma(rgb: &[u8]) -> f64 {
    0.299 * rgb[0] as f64 + 0.587 * rgb[1] as f64 + 0.114 * rgb[2] as f64
}

/// CLAHE. Color images are equalized on luma; the luma change is added to
/// all three channels, which leaves both chroma differences untouched.
pub fn clahe(img: &Image, cfg: &ClaheConfig) -> Result<Image, VisionError> {
    let (tx, ty) = cfg.tiles;
    if tx == 0 || ty == 0 || tx > img.width || ty > img.height {
        return Err(VisionError::Param(format!(
            "tiles {tx}x{ty} must be >= 1 and fit a {}x{} image",
            img.width, img.height
        )));
    }
    if !(cfg.clip_limit >= 1.0) {
        return Err(VisionError::Param(format!("clip limit must be >= 1, got {}", cfg.clip_limit)));
    }
    if img.channels == 1 {
        let data = clahe_plane(&img.data, img.width, img.height, cfg);
        return Image::from_raw(img.width, img.height, 1, data);
    }
    let y_plane: Vec<u8> = img
        .data
        .chunks_exact(3)
        .map(|px| luma(px).round().clamp(0.0, 255.0) as u8)
        .collect();
    let y_eq = clahe_plane(&y_plane, img.width, img.height, cfg);
    let mut out = img.clone();
    for (px, (&yq, &ye)) in out.data.chunks_exact_mut(3).zip(y_plane.iter().zip(&y_eq)) {
        let delta = ye as f64 - yq as f64;
        if delta != 0.0 {
            for c in px.iter_mut() {
                *c = (*c as f64 + delta).round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlueFilterConfig {
    pub discard_ratio: f64,
    pub clahe: ClaheConfig,
}

impl Default for BlueFilterConfig {
    fn default() -> Self {
        Self {
            discard_ratio: 0.005,
            clahe: ClaheConfig::default(),
        }
    }
}

/// White balance followed by CLAHE.
pub fn blue_filter(img: &Image, cfg: &BlueFilterConfig) -> Result<Image, VisionError> {
    let balanced = white_balance(img, cfg.discard_ratio)?;
    clahe(&balanced, &cfg.clahe)
}
