//! Color-threshold blob detection, Hough line fitting and blob-size ranging.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::str::FromStr;

use super::{Image, VisionError};

/// Inclusive HSV box. Hue in degrees; `hue_min > hue_max` wraps through 0.
/// Saturation in [0, 1], value in [0, 255].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdRange {
    pub hue_min: f64,
    pub hue_max: f64,
    pub sat_min: f64,
    pub sat_max: f64,
    pub val_min: f64,
    pub val_max: f64,
}

impl ThresholdRange {
    pub fn validate(&self) -> Result<(), VisionError> {
        let in_range = |v: f64, lo: f64, hi: f64| v.is_finite() && v >= lo && v <= hi;
        if !(in_range(self.hue_min, 0.0, 360.0) && in_range(self.hue_max, 0.0, 360.0)) {
            return Err(VisionError::Param("hue bounds must lie in [0, 360]".into()));
        }
        if !(in_range(self.sat_min, 0.0, 1.0) && in_range(self.sat_max, 0.0, 1.0) && self.sat_min <= self.sat_max) {
            return Err(VisionError::Param("saturation bounds must satisfy 0 <= min <= max <= 1".into()));
        }
        if !(in_range(self.val_min, 0.0, 255.0) && in_range(self.val_max, 0.0, 255.0) && self.val_min <= self.val_max)
        {
            return Err(VisionError::Param("value bounds must satisfy 0 <= min <= max <= 255".into()));
        }
        Ok(())
    }

    pub fn contains(&self, h: f64, s: f64, v: f64) -> bool {
        let hue_ok = if self.hue_min <= self.hue_max {
            h >= self.hue_min && h <= self.hue_max
        } else {
            h >= self.hue_min || h <= self.hue_max
        };
        hue_ok && s >= self.sat_min && s <= self.sat_max && v >= self.val_min && v <= self.val_max
    }
}

impl FromStr for ThresholdRange {
    type Err = VisionError;

    /// Six numbers: `h_min h_max s_min s_max v_min v_max`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let v: Vec<f64> = s
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| VisionError::Param(format!("threshold `{s}`: {e}")))?;
        let [hue_min, hue_max, sat_min, sat_max, val_min, val_max] = <[f64; 6]>::try_from(v.as_slice())
            .map_err(|_| VisionError::Param(format!("threshold `{s}` needs 6 numbers")))?;
        let r = Self {
            hue_min,
            hue_max,
            sat_min,
            sat_max,
            val_min,
            val_max,
        };
        r.validate()?;
        Ok(r)
    }
}

/// `(hue°, saturation, value)`; hue is 0 for grays.
pub fn rgb_to_hsv(rgb: &[u8]) -> (f64, f64, f64) {
    let (r, g, b) = (rgb[0] as f64, rgb[1] as f64, rgb[2] as f64);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    (h, s, max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectMode {
    Contour,
    Hough,
}

impl FromStr for DetectMode {
    type Err = VisionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "contour" => Ok(Self::Contour),
            "hough" => Ok(Self::Hough),
            other => Err(VisionError::Param(format!("unknown detect mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoughConfig {
    pub theta_step_deg: f64,
    pub min_votes: usize,
    pub max_lines: usize,
    /// Peaks closer than this in both angle and offset are suppressed.
    pub nms_theta_deg: f64,
    pub nms_rho: f64,
    /// Largest gap, px, bridged when splitting a line into a segment.
    pub max_gap: f64,
}

impl Default for HoughConfig {
    fn default() -> Self {
        Self {
            theta_step_deg: 1.0,
            min_votes: 20,
            max_lines: 4,
            nms_theta_deg: 10.0,
            nms_rho: 6.0,
            max_gap: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectConfig {
    pub range: ThresholdRange,
    /// Side of the square closing kernel, px (odd).
    pub kernel: usize,
    pub iterations: usize,
    pub min_area: usize,
    pub mode: DetectMode,
    pub hough: HoughConfig,
}

impl DetectConfig {
    pub fn new(range: ThresholdRange, mode: DetectMode) -> Self {
        Self {
            range,
            kernel: 5,
            iterations: 1,
            min_area: 50,
            mode,
            hough: HoughConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), VisionError> {
        self.range.validate()?;
        if self.kernel == 0 || self.kernel.is_multiple_of(2) {
            return Err(VisionError::Param(format!("kernel must be odd, got {}", self.kernel)));
        }
        if !(self.hough.theta_step_deg > 0.0 && self.hough.theta_step_deg <= 45.0) {
            return Err(VisionError::Param("hough angle step must lie in (0, 45]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: (f64, f64),
    pub b: (f64, f64),
}

impl Segment {
    pub fn length(&self) -> f64 {
        (self.b.0 - self.a.0).hypot(self.b.1 - self.a.1)
    }

    pub fn midpoint(&self) -> (f64, f64) {
        ((self.a.0 + self.b.0) / 2.0, (self.a.1 + self.b.1) / 2.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub center: (f64, f64),
    /// max(bounding-box width, height), px.
    pub blob_dim: f64,
    pub area: usize,
    /// Inclusive `(x0, y0, x1, y1)`.
    pub bbox: (usize, usize, usize, usize),
    pub lines: Vec<Segment>,
    pub distance: Option<f64>,
}

impl Detection {
    pub fn with_distance(mut self, calib: &Calibration) -> Self {
        self.distance = Some(estimate_distance(self.blob_dim, calib));
        self
    }

    /// `cx cy blob_dim distance_m`, `-` for an absent distance.
    pub fn report_line(&self) -> String {
        let d = self.distance.map(|d| format!("{d:.3}")).unwrap_or_else(|| "-".into());
        format!("{:.1} {:.1} {:.1} {d}", self.center.0, self.center.1, self.blob_dim)
    }
}

/// Binary mask of pixels inside the HSV box.
pub fn threshold(img: &Image, range: &ThresholdRange) -> Vec<bool> {
    if img.channels == 1 {
        return img
            .data
            .iter()
            .map(|&v| range.contains(0.0, 0.0, v as f64))
            .collect();
    }
    // Rendered frames are mostly long runs of one color.
    let mut last: Option<(&[u8], bool)> = None;
    img.data
        .chunks_exact(3)
        .map(|px| match last {
            Some((c, hit)) if c == px => hit,
            _ => {
                let (h, s, v) = rgb_to_hsv(px);
                let hit = range.contains(h, s, v);
                last = Some((px, hit));
                hit
            }
        })
        .collect()
}

/// Max (dilate) or min (erode) over a `k × k` window clipped to the image.
fn morph(mask: &[bool], w: usize, h: usize, k: usize, dilate: bool) -> Vec<bool> {
    let r = k / 2;
    // Dilation looks for any set pixel, erosion for any clear one.
    let target = dilate;
    // Separable passes keeping running counts of `target` pixels in the window.
    let mut rows = vec![false; mask.len()];
    for y in 0..h {
        let src = &mask[y * w..(y + 1) * w];
        let dst = &mut rows[y * w..(y + 1) * w];
        let mut count = src[..=r.min(w - 1)].iter().filter(|&&b| b == target).count();
        for x in 0..w {
            dst[x] = (count > 0) == target;
            if x + r + 1 < w && src[x + r + 1] == target {
                count += 1;
            }
            if x >= r && src[x - r] == target {
                count -= 1;
            }
        }
    }
    let mut counts = vec![0u32; w];
    for yy in 0..=r.min(h - 1) {
        for (c, &b) in counts.iter_mut().zip(&rows[yy * w..(yy + 1) * w]) {
            *c += (b == target) as u32;
        }
    }
    let mut out = vec![false; mask.len()];
    for y in 0..h {
        for (o, &c) in out[y * w..(y + 1) * w].iter_mut().zip(&counts) {
            *o = (c > 0) == target;
        }
        if y + r + 1 < h {
            let add = &rows[(y + r + 1) * w..(y + r + 2) * w];
            for (c, &b) in counts.iter_mut().zip(add) {
                *c += (b == target) as u32;
            }
        }
        if y >= r {
            let sub = &rows[(y - r) * w..(y - r + 1) * w];
            for (c, &b) in counts.iter_mut().zip(sub) {
                *c -= (b == target) as u32;
            }
        }
    }
    out
}

/// Dilate then erode, `iterations` times.
pub fn close(mask: &[bool], w: usize, h: usize, kernel: usize, iterations: usize) -> Vec<bool> {
    let mut m = mask.to_vec();
    for _ in 0..iterations {
        m = morph(&m, w, h, kernel, true);
        m = morph(&m, w, h, kernel, false);
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub pixels: Vec<usize>,
    pub bbox: (usize, usize, usize, usize),
}

/// 4-connected components in scan order of their first pixel.
pub fn components(mask: &[bool], w: usize, h: usize) -> Vec<Component> {
    let mut seen = vec![false; mask.len()];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut pixels = Vec::new();
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        while let Some(i) = queue.pop_front() {
            pixels.push(i);
            let (x, y) = (i % w, i / w);
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
            let mut visit = |j: usize| {
                if mask[j] && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        out.push(Component {
            pixels,
            bbox: (x0, y0, x1, y1),
        });
    }
    out
}

/// Threshold, close, label, then locate the target.
pub fn detect(img: &Image, cfg: &DetectConfig) -> Result<Option<Detection>, VisionError> {
    cfg.validate()?;
    let (w, h) = (img.width, img.height);
    let mask = close(&threshold(img, &cfg.range), w, h, cfg.kernel, cfg.iterations);
    let mut comps: Vec<Component> = components(&mask, w, h)
        .into_iter()
        .filter(|c| c.pixels.len() >= cfg.min_area)
        .collect();
    if comps.is_empty() {
        return Ok(None);
    }
    // Largest first; ties keep scan order.
    comps.sort_by_key(|c| std::cmp::Reverse(c.pixels.len()));
    match cfg.mode {
        DetectMode::Contour => Ok(Some(from_bbox(comps[0].bbox, comps[0].pixels.len(), Vec::new()))),
        DetectMode::Hough => {
            let bbox = comps.iter().skip(1).fold(comps[0].bbox, |b, c| {
                (b.0.min(c.bbox.0), b.1.min(c.bbox.1), b.2.max(c.bbox.2), b.3.max(c.bbox.3))
            });
            let area = comps.iter().map(|c| c.pixels.len()).sum();
            let mut keep = vec![false; mask.len()];
            for c in &comps {
                for &i in &c.pixels {
                    keep[i] = true;
                }
            }
            let edges = boundary(&keep, w, h);
            let lines = hough_segments(&edges, w, h, &cfg.hough);
            let mut det = from_bbox(bbox, area, Vec::new());
            let total: f64 = lines.iter().map(Segment::length).sum();
            if total > 0.0 {
                let (sx, sy) = lines.iter().fold((0.0, 0.0), |(sx, sy), s| {
                    let (mx, my) = s.midpoint();
                    (sx + s.length() * mx, sy + s.length() * my)
                });
                let cx = (sx / total).clamp(0.0, (w - 1) as f64);
                let cy = (sy / total).clamp(0.0, (h - 1) as f64);
                det.center = (cx, cy);
            }
            det.lines = lines;
            Ok(Some(det))
        }
    }
}

fn from_bbox(bbox: (usize, usize, usize, usize), area: usize, lines: Vec<Segment>) -> Detection {
    let (x0, y0, x1, y1) = bbox;
    Detection {
        center: ((x0 + x1) as f64 / 2.0, (y0 + y1) as f64 / 2.0),
        blob_dim: ((x1 - x0 + 1).max(y1 - y0 + 1)) as f64,
        area,
        bbox,
        lines,
        distance: None,
    }
}

/// Mask pixels with at least one 4-neighbour outside the mask (or the image).
pub fn boundary(mask: &[bool], w: usize, h: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !mask[i] {
                continue;
            }
            let inner = x > 0 && x + 1 < w && y > 0 && y + 1 < h
                && mask[i - 1]
                && mask[i + 1]
                && mask[i - w]
                && mask[i + w];
            if !inner {
                out.push((x, y));
            }
        }
    }
    out
}

/// Standard (ρ, θ) Hough transform over edge points, peak-picked with
/// non-maximum suppression, each line cut to its longest gap-bridged run.
pub fn hough_segments(edges: &[(usize, usize)], w: usize, h: usize, cfg: &HoughConfig) -> Vec<Segment> {
    if edges.is_empty() {
        return Vec::new();
    }
    let n_theta = (180.0 / cfg.theta_step_deg).round() as usize;
    let diag = ((w * w + h * h) as f64).sqrt().ceil() as i64;
    let n_rho = (2 * diag + 1) as usize;
    let trig: Vec<(f64, f64)> = (0..n_theta)
        .map(|k| (k as f64 * cfg.theta_step_deg * PI / 180.0).sin_cos())
        .map(|(s, c)| (c, s))
        .collect();
    let mut acc = vec![0usize; n_theta * n_rho];
    for &(x, y) in edges {
        for (k, &(c, s)) in trig.iter().enumerate() {
            let rho = (x as f64 * c + y as f64 * s).round() as i64 + diag;
            acc[k * n_rho + rho as usize] += 1;
        }
    }
    let mut cells: Vec<(usize, usize)> = acc
        .iter()
        .enumerate()
        .filter(|(_, v)| **v >= cfg.min_votes)
        .map(|(i, v)| (i, *v))
        .collect();
    cells.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

    let mut peaks: Vec<(usize, f64)> = Vec::new();
    for (i, _) in cells {
        if peaks.len() == cfg.max_lines {
            break;
        }
        let k = i / n_rho;
        let rho = (i % n_rho) as f64 - diag as f64;
        let theta = k as f64 * cfg.theta_step_deg;
        let near = peaks.iter().any(|&(pk, prho)| {
            let pt = pk as f64 * cfg.theta_step_deg;
            let dt = (theta - pt).abs();
            let dt = dt.min(180.0 - dt);
            // Lines near θ = 0 and θ = 180 are the same with ρ negated.
            let same_rho = if (theta - pt).abs() > 90.0 { (rho + prho).abs() } else { (rho - prho).abs() };
            dt < cfg.nms_theta_deg && same_rho < cfg.nms_rho
        });
        if !near {
            peaks.push((k, rho));
        }
    }

    peaks
        .into_iter()
        .filter_map(|(k, rho)| {
            let (c, s) = trig[k];
            let mut t: Vec<f64> = edges
                .iter()
                .filter(|&&(x, y)| (x as f64 * c + y as f64 * s - rho).abs() <= 1.0)
                .map(|&(x, y)| -(x as f64) * s + y as f64 * c)
                .collect();
            if t.len() < 2 {
                return None;
            }
            t.sort_by(f64::total_cmp);
            let (mut best, mut start) = ((t[0], t[0]), t[0]);
            for win in t.windows(2) {
                if win[1] - win[0] > cfg.max_gap {
                    start = win[1];
                }
                if win[1] - start > best.1 - best.0 {
                    best = (start, win[1]);
                }
            }
            let point = |tt: f64| (rho * c - tt * s, rho * s + tt * c);
            Some(Segment {
                a: point(best.0),
                b: point(best.1),
            })
        })
        .filter(|seg| seg.length() > 0.0)
        .collect()
}

/// Exponential size-to-range model `d = alpha·exp(−beta·dim)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub alpha: f64,
    pub beta: f64,
}

/// Least squares on `ln d = ln alpha − beta·dim`.
pub fn calibrate(points: &[(f64, f64)]) -> Result<Calibration, VisionError> {
    if points.len() < 2 {
        return Err(VisionError::Calibration("at least two points are required".into()));
    }
    if points.iter().any(|&(dim, d)| !(dim > 0.0 && d > 0.0 && dim.is_finite() && d.is_finite())) {
        return Err(VisionError::Calibration("dims and distances must be positive".into()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1.ln() - my)).sum();
    if sxx <= 1e-12 * mx.abs().max(1.0).powi(2) {
        return Err(VisionError::Calibration("blob dimensions must be distinct".into()));
    }
    let beta = -sxy / sxx;
    if !(beta > 0.0) {
        return Err(VisionError::Calibration("distance must fall as blob size grows".into()));
    }
    Ok(Calibration {
        alpha: (my + beta * mx).exp(),
        beta,
    })
}

pub fn estimate_distance(blob_dim: f64, calib: &Calibration) -> f64 {
    calib.alpha * (-calib.beta * blob_dim).exp()
}
