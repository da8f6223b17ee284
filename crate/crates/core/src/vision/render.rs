//! Flat synthetic scenes: disks (buoys), rectangles (bins) and gates.

use super::{Image, VisionError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// Filled disk; pixel (x, y) is inside when (x-cx)² + (y-cy)² <= r².
    Disk { cx: f64, cy: f64, r: f64, color: [u8; 3] },
    /// Axis-aligned rectangle centered at (cx, cy).
    Rect { cx: f64, cy: f64, w: f64, h: f64, color: [u8; 3] },
    /// Two vertical posts of width `post_w`, outer edges `width` apart.
    Gate {
        cx: f64,
        cy: f64,
        width: f64,
        height: f64,
        post_w: f64,
        color: [u8; 3],
    },
}

impl Shape {
    pub fn center(&self) -> (f64, f64) {
        match *self {
            Shape::Disk { cx, cy, .. } | Shape::Rect { cx, cy, .. } | Shape::Gate { cx, cy, .. } => (cx, cy),
        }
    }

    fn sizes_valid(&self) -> bool {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        match *self {
            Shape::Disk { r, .. } => ok(r),
            Shape::Rect { w, h, .. } => ok(w) && ok(h),
            Shape::Gate {
                width, height, post_w, ..
            } => ok(width) && ok(height) && ok(post_w) && 2.0 * post_w <= width,
        }
    }

    /// Rectangles (cx, cy, w, h) making up a gate or rect; empty for disks.
    fn rects(&self) -> Vec<(f64, f64, f64, f64)> {
        match *self {
            Shape::Disk { .. } => Vec::new(),
            Shape::Rect { cx, cy, w, h, .. } => vec![(cx, cy, w, h)],
            Shape::Gate {
                cx,
                cy,
                width,
                height,
                post_w,
                ..
            } => {
                let off = (width - post_w) / 2.0;
                vec![(cx - off, cy, post_w, height), (cx + off, cy, post_w, height)]
            }
        }
    }

    fn color(&self) -> [u8; 3] {
        match *self {
            Shape::Disk { color, .. } | Shape::Rect { color, .. } | Shape::Gate { color, .. } => color,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub background: [u8; 3],
    /// Drawn in order; later shapes cover earlier ones.
    pub shapes: Vec<Shape>,
}

impl SceneSpec {
    pub fn new(width: usize, height: usize, background: [u8; 3]) -> Self {
        Self {
            width,
            height,
            background,
            shapes: Vec::new(),
        }
    }

    pub fn with(mut self, shape: Shape) -> Self {
        self.shapes.push(shape);
        self
    }

    pub fn validate(&self) -> Result<(), VisionError> {
        if self.width == 0 || self.height == 0 {
            return Err(VisionError::Scene("canvas must be non-empty".into()));
        }
        for (i, s) in self.shapes.iter().enumerate() {
            if !s.sizes_valid() {
                return Err(VisionError::Scene(format!("shape {i} has invalid size")));
            }
            let (cx, cy) = s.center();
            if !(cx >= 0.0 && cy >= 0.0 && cx <= (self.width - 1) as f64 && cy <= (self.height - 1) as f64) {
                return Err(VisionError::Scene(format!("shape {i} centered at ({cx}, {cy}) lies off the canvas")));
            }
        }
        Ok(())
    }
}

/// Validated render: every shape must be centered on the canvas.
pub fn render_scene(spec: &SceneSpec) -> Result<Image, VisionError> {
    spec.validate()?;
    Ok(rasterize(spec))
}

/// Draws without validation, clipping anything that falls off the canvas.
pub fn rasterize(spec: &SceneSpec) -> Image {
    let mut img = Image::filled(spec.width, spec.height, &spec.background);
    let (w, h) = (spec.width as i64, spec.height as i64);
    let span = |lo: f64, hi: f64, n: i64| -> Option<(usize, usize)> {
        let a = lo.ceil().max(0.0);
        let b = hi.floor().min((n - 1) as f64);
        (a <= b).then_some((a as usize, b as usize))
    };
    for s in &spec.shapes {
        let color = s.color();
        if let Shape::Disk { cx, cy, r, .. } = *s {
            let Some((y0, y1)) = span(cy - r, cy + r, h) else { continue };
            for y in y0..=y1 {
                let dy = y as f64 - cy;
                let half = (r * r - dy * dy).max(0.0).sqrt();
                if let Some((x0, x1)) = span(cx - half, cx + half, w) {
                    for x in x0..=x1 {
                        let dx = x as f64 - cx;
                        if dx * dx + dy * dy <= r * r {
                            img.set_pixel(x, y, &color);
                        }
                    }
                }
            }
        }
        for (rcx, rcy, rw, rh) in s.rects() {
            let (Some((x0, x1)), Some((y0, y1))) = (
                span(rcx - rw / 2.0, rcx + rw / 2.0, w),
                span(rcy - rh / 2.0, rcy + rh / 2.0, h),
            ) else {
                continue;
            };
            for y in y0..=y1 {
                for x in x0..=x1 {
                    img.set_pixel(x, y, &color);
                }
            }
        }
    }
    img
}
