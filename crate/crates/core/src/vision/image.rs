//! 8-bit raster images and binary PGM/PPM I/O.

use super::VisionError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    /// Row-major, interleaved channels.
    pub data: Vec<u8>,
}

impl Image {
    /// Uniform image filled with `color` (its length sets the channel count).
    pub fn filled(width: usize, height: usize, color: &[u8]) -> Self {
        let channels = color.len();
        assert!(channels == 1 || channels == 3, "channels must be 1 or 3");
        let mut data = Vec::with_capacity(width * height * channels);
        for _ in 0..width * height {
            data.extend_from_slice(color);
        }
        Self {
            width,
            height,
            channels,
            data,
        }
    }

    pub fn from_raw(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self, VisionError> {
        if channels != 1 && channels != 3 {
            return Err(VisionError::Format(format!("unsupported channel count {channels}")));
        }
        if data.len() != width * height * channels {
            return Err(VisionError::Format(format!(
                "data length {} does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        (y * self.width + x) * self.channels
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let i = self.index(x, y);
        &self.data[i..i + self.channels]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, color: &[u8]) {
        let i = self.index(x, y);
        self.data[i..i + self.channels].copy_from_slice(color);
    }

    /// Values of channel `c` in row-major order.
    pub fn channel(&self, c: usize) -> impl Iterator<Item = u8> + '_ {
        self.data.iter().skip(c).step_by(self.channels).copied()
    }

    /// `(min, max)` of channel `c`.
    pub fn channel_range(&self, c: usize) -> (u8, u8) {
        self.channel(c).fold((u8::MAX, u8::MIN), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }

    /// Binary P5 (one channel) or P6 (three channels).
    pub fn to_pnm(&self) -> Vec<u8> {
        let magic = if self.channels == 1 { "P5" } else { "P6" };
        let mut out = format!("{magic}\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }

    pub fn from_pnm(bytes: &[u8]) -> Result<Self, VisionError> {
        let mut pos = 0;
        let magic = next_token(bytes, &mut pos)?;
        let channels = match magic.as_str() {
            "P5" => 1,
            "P6" => 3,
            other => return Err(VisionError::Format(format!("unsupported magic `{other}`"))),
        };
        let width = parse_dim(&next_token(bytes, &mut pos)?)?;
        let height = parse_dim(&next_token(bytes, &mut pos)?)?;
        let maxval = parse_dim(&next_token(bytes, &mut pos)?)?;
        if maxval != 255 {
            return Err(VisionError::Format(format!("only maxval 255 is supported, got {maxval}")));
        }
        // Exactly one whitespace byte separates the header from the raster.
        if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
            return Err(VisionError::Format("missing raster".into()));
        }
        pos += 1;
        let need = width * height * channels;
        let raster = bytes
            .get(pos..pos + need)
            .ok_or_else(|| VisionError::Format(format!("raster truncated: need {need} bytes")))?;
        Self::from_raw(width, height, channels, raster.to_vec())
    }
}

fn next_token(bytes: &[u8], pos: &mut usize) -> Result<String, VisionError> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(VisionError::Format("truncated header".into()));
    }
    Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

fn parse_dim(tok: &str) -> Result<usize, VisionError> {
    tok.parse::<usize>()
        .ok()
        .filter(|v| *v > 0)
        .ok_or_else(|| VisionError::Format(format!("bad header value `{tok}`")))
}
