//! Frame sequence to event stream conversion.
//!
//! Three pipelines share the same event semantics (fixed frame timestamps,
//! inclusive thresholds, optional multi-event emission):
//!
//! * [`Method::Esim`]: per-pixel reference tracking on raw log brightness.
//! * [`Method::WlrEsim`]: the same tracking on WLR-denoised frames.
//! * [`Method::ReducedWlr`]: keeps each pixel's last WLR model and only
//!   re-solves when the shifted-residual difference crosses the threshold.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::{canonical_sort, Event, EventStream, Polarity, StreamMeta};
use crate::frame::{FeatureFrame, FEATURE_DIM};
use crate::par;
use crate::wlr::{self, FeatureScales, WlrModel, WlrParams, Window};

pub const DEFAULT_CONTRAST: f64 = 0.60;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Esim,
    WlrEsim,
    ReducedWlr,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Esim, Method::WlrEsim, Method::ReducedWlr];

    pub fn name(self) -> &'static str {
        match self {
            Method::Esim => "esim",
            Method::WlrEsim => "wlr-esim",
            Method::ReducedWlr => "reduced-wlr",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub method: Method,
    /// Contrast threshold `C` in log-brightness units.
    pub contrast: f64,
    pub radius: usize,
    pub ridge: f64,
    pub bandwidth: f64,
    /// Emit `floor(|change| / C)` events per firing instead of one.
    pub multi_event: bool,
    /// Carry the sub-threshold remainder past an event, like the ESIM reference
    /// update does. Without it the reduced-WLR test is the plain `dR >= C^2`.
    pub carry_residue: bool,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            method: Method::ReducedWlr,
            contrast: DEFAULT_CONTRAST,
            radius: wlr::DEFAULT_RADIUS,
            ridge: wlr::DEFAULT_RIDGE,
            bandwidth: wlr::DEFAULT_BANDWIDTH,
            multi_event: true,
            carry_residue: true,
        }
    }
}

impl DetectorConfig {
    pub fn with_method(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.contrast > 0.0) || !self.contrast.is_finite() {
            return Err(Error::Config(format!(
                "contrast threshold must be > 0, got {}",
                self.contrast
            )));
        }
        if self.radius == 0 {
            return Err(Error::Config("window radius must be at least 1".into()));
        }
        if !(self.ridge >= 0.0) {
            return Err(Error::Config(format!("ridge must be >= 0, got {}", self.ridge)));
        }
        if !(self.bandwidth > 0.0) {
            return Err(Error::Config(format!("bandwidth must be > 0, got {}", self.bandwidth)));
        }
        Ok(())
    }

    /// Regression parameters for a sequence whose first frame is `first`.
    pub fn wlr_params(&self, first: &FeatureFrame) -> Result<WlrParams> {
        let p = WlrParams {
            radius: self.radius,
            bandwidth: self.bandwidth,
            ridge: self.ridge,
            scales: FeatureScales::for_frame(first, self.radius)?,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub frames: usize,
    pub pixels: usize,
    /// Regression solves, including the initial fit of every pixel for reduced-WLR.
    pub solves: u64,
    pub events_pos: u64,
    pub events_neg: u64,
    pub wall_seconds: f64,
    /// Solves after initialization divided by `frames * pixels`.
    pub solve_fraction: f64,
}

impl RunStats {
    fn new(frames: usize, pixels: usize, solves: u64, init_solves: u64, stream: &EventStream, wall: f64) -> Self {
        let denom = (frames * pixels) as f64;
        Self {
            frames,
            pixels,
            solves,
            events_pos: stream.count(Polarity::Positive) as u64,
            events_neg: stream.count(Polarity::Negative) as u64,
            wall_seconds: wall,
            solve_fraction: if denom > 0.0 {
                (solves - init_solves) as f64 / denom
            } else {
                0.0
            },
        }
    }
}

struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Stopwatch {
    fn start() -> Self {
        Self {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    fn seconds(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.start.elapsed().as_secs_f64()
        }
        #[cfg(target_arch = "wasm32")]
        {
            0.0
        }
    }
}

#[inline]
fn event_count(magnitude: f64, contrast: f64, multi_event: bool) -> usize {
    if multi_event {
        ((magnitude / contrast).floor() as usize).max(1)
    } else {
        1
    }
}

/// Events for a super-threshold brightness change `delta` at one pixel and time.
pub fn emit_events(
    delta: f64,
    contrast: f64,
    t: f64,
    x: u32,
    y: u32,
    multi_event: bool,
) -> Result<Vec<Event>> {
    if !(delta.abs() >= contrast) {
        return Err(Error::Contract(format!(
            "|change| {} is below the threshold {contrast}",
            delta.abs()
        )));
    }
    let p = Polarity::of(delta).expect("nonzero after threshold check");
    let n = event_count(delta.abs(), contrast, multi_event);
    Ok(vec![Event::new(t, x, y, p); n])
}

/// Checks a sequence is usable for detection and returns its stream metadata.
pub fn sequence_meta(frames: &[FeatureFrame]) -> Result<StreamMeta> {
    if frames.len() < 2 {
        return Err(Error::Input(format!(
            "detection needs at least 2 frames, got {}",
            frames.len()
        )));
    }
    let first = &frames[0];
    for (i, f) in frames.iter().enumerate() {
        if !f.same_shape(first) {
            return Err(Error::Input(format!(
                "frame {i} is {}x{}, expected {}x{}",
                f.width(),
                f.height(),
                first.width(),
                first.height()
            )));
        }
    }
    let duration = frames[frames.len() - 1].time() - first.time();
    if !(duration > 0.0) {
        return Err(Error::Input("frame timestamps must increase".into()));
    }
    Ok(StreamMeta {
        width: first.width() as u32,
        height: first.height() as u32,
        duration,
        frame_count: frames.len(),
        dt: duration / (frames.len() - 1) as f64,
    })
}

/// Per-pixel reference tracking shared by the ESIM paths and the synthetic oracle.
pub(crate) struct EsimTracker {
    width: usize,
    reference: Vec<f64>,
    contrast: f64,
    multi_event: bool,
}

impl EsimTracker {
    pub(crate) fn new(width: usize, initial: Vec<f64>, contrast: f64, multi_event: bool) -> Self {
        Self {
            width,
            reference: initial,
            contrast,
            multi_event,
        }
    }

    /// Compares `plane` against the references and advances them by `n * p * C`
    /// wherever events fire.
    pub(crate) fn step(&mut self, plane: &[f64], t: f64) -> Vec<Event> {
        let (contrast, multi, width) = (self.contrast, self.multi_event, self.width);
        let rows = par::map_chunks_mut(&mut self.reference, width, |y, refs| {
            let mut out = Vec::new();
            let row = &plane[y * width..(y + 1) * width];
            for (x, (r, &l)) in refs.iter_mut().zip(row).enumerate() {
                let delta = l - *r;
                if delta.abs() >= contrast {
                    let p = if delta > 0.0 { Polarity::Positive } else { Polarity::Negative };
                    let n = event_count(delta.abs(), contrast, multi);
                    *r += n as f64 * p.as_f64() * contrast;
                    out.extend(std::iter::repeat_n(Event::new(t, x as u32, y as u32, p), n));
                }
            }
            out
        });
        rows.into_iter().flatten().collect()
    }
}

/// ESIM over precomputed log-brightness planes, one per frame time.
pub(crate) fn esim_over_planes<I>(
    meta: StreamMeta,
    mut planes: I,
    contrast: f64,
    multi_event: bool,
) -> Result<EventStream>
where
    I: Iterator<Item = Result<(f64, Vec<f64>)>>,
{
    let (_, first) = planes
        .next()
        .ok_or_else(|| Error::Input("empty sequence".into()))??;
    let mut tracker = EsimTracker::new(meta.width as usize, first, contrast, multi_event);
    let mut events = Vec::new();
    for item in planes {
        let (t, plane) = item?;
        events.extend(tracker.step(&plane, t));
    }
    Ok(canonical_sort(EventStream::new(events, meta)))
}

/// Runs the configured method.
pub fn detect(frames: &[FeatureFrame], cfg: &DetectorConfig) -> Result<(EventStream, RunStats)> {
    match cfg.method {
        Method::Esim => detect_esim(frames, cfg),
        Method::WlrEsim => detect_wlr_esim(frames, cfg),
        Method::ReducedWlr => detect_reduced_wlr(frames, cfg),
    }
}

/// Fixed-interval ESIM on the raw (noisy) log brightness.
pub fn detect_esim(frames: &[FeatureFrame], cfg: &DetectorConfig) -> Result<(EventStream, RunStats)> {
    cfg.validate()?;
    let meta = sequence_meta(frames)?;
    let clock = Stopwatch::start();
    let planes = frames.iter().map(|f| Ok((f.time(), f.log_brightness_plane())));
    let stream = esim_over_planes(meta, planes, cfg.contrast, cfg.multi_event)?;
    let stats = RunStats::new(frames.len(), frames[0].pixels(), 0, 0, &stream, clock.seconds());
    Ok((stream, stats))
}

/// ESIM applied to every frame after WLR denoising.
pub fn detect_wlr_esim(
    frames: &[FeatureFrame],
    cfg: &DetectorConfig,
) -> Result<(EventStream, RunStats)> {
    cfg.validate()?;
    let meta = sequence_meta(frames)?;
    let params = cfg.wlr_params(&frames[0])?;
    let clock = Stopwatch::start();
    let planes = frames
        .iter()
        .map(|f| wlr::denoise_frame(f, &params).map(|p| (f.time(), p)));
    let stream = esim_over_planes(meta, planes, cfg.contrast, cfg.multi_event)?;
    let pixels = frames[0].pixels();
    let solves = (frames.len() * pixels) as u64;
    let stats = RunStats::new(frames.len(), pixels, solves, 0, &stream, clock.seconds());
    Ok((stream, stats))
}

/// Per-pixel state of the reduced-WLR detector.
#[derive(Clone, Debug)]
struct PixelState {
    /// Model fitted at the last event (or the first frame); its snapshot holds
    /// the stored center feature.
    model: WlrModel,
    /// Estimated brightness not yet accounted for by emitted events.
    residue: f64,
}

/// Outcome of testing one pixel against its stored model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShiftTest {
    /// `|R_hat - R|`.
    pub delta_residual: f64,
    /// `beta . (x_c' - x_c)`, whose sign gives the polarity.
    pub predicted_change: f64,
    /// Threshold `dR` was compared against: `(C - p * residue)^2`.
    pub threshold: f64,
    pub fired: bool,
}

/// Thresholds the shifted-residual difference for a stored model and a shift
/// of its center. With zero residue this is `dR >= C^2`.
pub fn shift_test(model: &WlrModel, shift: &crate::frame::FeatureVector, contrast: f64, residue: f64) -> ShiftTest {
    let r_hat = wlr::shifted_residual(model, shift);
    let dr = wlr::delta_residual(r_hat, model.residual);
    let predicted: f64 = (0..FEATURE_DIM).map(|j| model.beta[j] * shift.0[j]).sum();
    let sign = if predicted > 0.0 {
        1.0
    } else if predicted < 0.0 {
        -1.0
    } else {
        0.0
    };
    // `need` only drops to zero or below when single-event mode leaves more
    // than one threshold of residue behind.
    let need = contrast - sign * residue;
    let threshold = if need > 0.0 { need * need } else { 0.0 };
    ShiftTest {
        delta_residual: dr,
        predicted_change: predicted,
        threshold,
        fired: sign != 0.0 && dr >= threshold,
    }
}

/// Reduced-WLR detection: one solve per pixel up front, then a solve only
/// where an event fires.
pub fn detect_reduced_wlr(
    frames: &[FeatureFrame],
    cfg: &DetectorConfig,
) -> Result<(EventStream, RunStats)> {
    cfg.validate()?;
    let meta = sequence_meta(frames)?;
    let params = cfg.wlr_params(&frames[0])?;
    let clock = Stopwatch::start();
    let first = &frames[0];
    let (width, height) = (first.width(), first.height());
    let pixels = width * height;

    let log0 = first.log_brightness_plane();
    let init: Vec<Result<Vec<PixelState>>> = par::map_range(height, |y| {
        (0..width)
            .map(|x| {
                Ok(PixelState {
                    model: wlr::solve_at(first, &log0, x, y, &params)?,
                    residue: 0.0,
                })
            })
            .collect()
    });
    let mut states = Vec::with_capacity(pixels);
    for row in init {
        states.extend(row?);
    }
    let init_solves = pixels as u64;
    let mut solves = init_solves;

    let (contrast, multi, carry) = (cfg.contrast, cfg.multi_event, cfg.carry_residue);
    let mut events = Vec::new();
    for frame in &frames[1..] {
        let log = frame.log_brightness_plane();
        let t = frame.time();
        let rows = par::map_chunks_mut(&mut states, width, |y, row| -> Result<(Vec<Event>, u64)> {
            let mut out = Vec::new();
            let mut refits = 0u64;
            let mut scratch: Option<Window> = None;
            for (x, state) in row.iter_mut().enumerate() {
                let center = frame.feature_unchecked(x, y);
                let shift = state.model.shift_to(&center, &params.scales)?;
                let test = shift_test(&state.model, &shift, contrast, state.residue);
                if !test.fired {
                    continue;
                }
                let p = if test.predicted_change > 0.0 {
                    Polarity::Positive
                } else {
                    Polarity::Negative
                };
                let estimate = p.as_f64() * test.delta_residual.sqrt() + state.residue;
                let n = event_count(estimate.abs(), contrast, multi);
                out.extend(std::iter::repeat_n(Event::new(t, x as u32, y as u32, p), n));

                let window = match scratch.take() {
                    Some(mut w) => {
                        w.regather(frame, &log, x, y, &params);
                        w
                    }
                    None => Window::gather(frame, &log, x, y, &params),
                };
                let old = std::mem::replace(&mut state.model, wlr::solve_wlr(window, params.ridge)?);
                scratch = Some(old.snapshot);
                state.residue = if carry {
                    estimate - n as f64 * p.as_f64() * contrast
                } else {
                    0.0
                };
                refits += 1;
            }
            Ok((out, refits))
        });
        for row in rows {
            let (ev, refits) = row?;
            events.extend(ev);
            solves += refits;
        }
    }
    let stream = canonical_sort(EventStream::new(events, meta));
    let stats = RunStats::new(frames.len(), pixels, solves, init_solves, &stream, clock.seconds());
    Ok((stream, stats))
}
