//! Event streams drawn as one RGB image per time bin.

use crate::error::{Error, Result};
use crate::event::{Event, Polarity};

pub const BACKGROUND: [u8; 3] = [255, 255, 255];
pub const POSITIVE_COLOR: [u8; 3] = [255, 0, 0];
pub const NEGATIVE_COLOR: [u8; 3] = [0, 0, 255];

/// Guards against an event sitting at `k / fps` landing in bin `k - 1`.
const BIN_SLACK: f64 = 1e-9;

/// Row-major 8-bit RGB image.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub rgb: Vec<u8>,
}

impl Raster {
    pub fn blank(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            rgb: BACKGROUND.repeat(width * height),
        }
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.rgb[i], self.rgb[i + 1], self.rgb[i + 2]]
    }

    fn put(&mut self, x: usize, y: usize, color: [u8; 3]) {
        let i = 3 * (y * self.width + x);
        self.rgb[i..i + 3].copy_from_slice(&color);
    }

    pub fn to_rgba(&self) -> Vec<u8> {
        self.rgb
            .chunks_exact(3)
            .flat_map(|c| [c[0], c[1], c[2], 255])
            .collect()
    }
}

pub fn color(p: Polarity) -> [u8; 3] {
    match p {
        Polarity::Positive => POSITIVE_COLOR,
        Polarity::Negative => NEGATIVE_COLOR,
    }
}

/// Index of the `1 / fps` bin containing time `t`.
pub fn bin_index(t: f64, fps: f64) -> usize {
    (t * fps + BIN_SLACK).floor().max(0.0) as usize
}

/// Number of bins needed to cover `[0, duration]`.
pub fn bin_count(duration: f64, fps: f64) -> usize {
    bin_index(duration, fps) + 1
}

/// Draws every event into its time bin.
///
/// When a pixel receives several events in one bin the latest wins, and at
/// equal times a positive event wins. `bins` defaults to enough bins for the
/// latest event.
pub fn render_bins(
    events: &[Event],
    width: usize,
    height: usize,
    fps: f64,
    bins: Option<usize>,
) -> Result<Vec<Raster>> {
    if width == 0 || height == 0 {
        return Err(Error::Config("render size must be positive".into()));
    }
    if !(fps > 0.0) || !fps.is_finite() {
        return Err(Error::Config(format!("fps must be positive, got {fps}")));
    }
    for e in events {
        if e.x as usize >= width || e.y as usize >= height {
            return Err(Error::Input(format!(
                "event at ({}, {}) outside {width}x{height} raster",
                e.x, e.y
            )));
        }
        if !(e.t >= 0.0) || !e.t.is_finite() {
            return Err(Error::Input(format!("event time {} is not a finite non-negative value", e.t)));
        }
    }
    let needed = events.iter().map(|e| bin_index(e.t, fps) + 1).max().unwrap_or(1);
    let count = bins.unwrap_or(needed).max(needed);
    let mut order: Vec<&Event> = events.iter().collect();
    order.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.p.cmp(&b.p)));
    let mut out = vec![Raster::blank(width, height); count];
    for e in order {
        out[bin_index(e.t, fps)].put(e.x as usize, e.y as usize, color(e.p));
    }
    Ok(out)
}
