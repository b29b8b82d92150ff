//! WebAssembly bindings for the browser demo.
//!
//! A [`Demo`] holds one synthetic sequence (clean and noisy) and the result of
//! the last detector run. The page reads event rasters, the F1 curve against
//! the clean-frame oracle, and grayscale previews of the noisy and
//! regression-denoised log brightness.

use evsim_core::metrics::{self, Matcher};
use evsim_core::render::{self, Raster};
use evsim_core::synth::{self, NoiseSpec, SceneSpec};
use evsim_core::wlr;
use evsim_core::{detect, DetectorConfig, EventStream, FeatureFrame, Method, MetricReport, RunStats, DEFAULT_TAU};
use wasm_bindgen::prelude::*;

/// Log-spaced tolerances from 1e-4 to 1e-1 for the F1 curve.
fn curve_taus() -> Vec<f64> {
    const STEPS: usize = 16;
    (0..STEPS)
        .map(|i| 10f64.powf(-4.0 + 3.0 * i as f64 / (STEPS - 1) as f64))
        .collect()
}

struct LastRun {
    events: EventStream,
    rasters: Vec<Raster>,
    report: MetricReport,
    curve: Vec<f64>,
    stats: RunStats,
}

#[wasm_bindgen]
pub struct Demo {
    clean: Vec<FeatureFrame>,
    noisy: Vec<FeatureFrame>,
    dt: f64,
    oracle: Option<(f64, EventStream)>,
    last: Option<LastRun>,
}

#[wasm_bindgen]
impl Demo {
    /// Generates a scene and its noisy copy.
    #[wasm_bindgen(constructor)]
    pub fn new(scene: &str, width: usize, height: usize, frames: usize, spp: u32, seed: u32) -> Result<Demo, JsError> {
        let spec = SceneSpec::new(scene, width, height, frames)?;
        let clean = synth::generate_clean(&spec)?;
        let noisy = synth::add_noise(&clean, &NoiseSpec::new(spp, seed as u64))?;
        Ok(Demo {
            clean,
            noisy,
            dt: spec.dt,
            oracle: None,
            last: None,
        })
    }

    /// Names accepted by the constructor.
    pub fn scenes() -> Vec<String> {
        synth::SceneKind::NAMES.iter().map(|s| s.to_string()).collect()
    }

    pub fn width(&self) -> usize {
        self.clean[0].width()
    }

    pub fn height(&self) -> usize {
        self.clean[0].height()
    }

    pub fn frame_count(&self) -> usize {
        self.clean.len()
    }

    /// Runs `method` on the noisy frames and scores it against the clean-frame
    /// oracle at the same contrast.
    pub fn detect(&mut self, method: &str, contrast: f64) -> Result<(), JsError> {
        let cfg = DetectorConfig {
            contrast,
            ..DetectorConfig::with_method(method.parse::<Method>()?)
        };
        cfg.validate()?;
        if self.oracle.as_ref().is_none_or(|(c, _)| *c != contrast) {
            self.oracle = Some((contrast, synth::oracle_events(&self.clean, contrast, cfg.multi_event)?));
        }
        let oracle = &self.oracle.as_ref().expect("oracle computed above").1;
        let (events, stats) = detect(&self.noisy, &cfg)?;
        let matcher = Matcher::new(&metrics::normalize_events(&events)?, &metrics::normalize_events(oracle)?);
        let curve = matcher.curve(&curve_taus())?.into_iter().map(|row| row.f1).collect();
        let rasters = render::render_bins(
            &events.events,
            self.width(),
            self.height(),
            1.0 / self.dt,
            Some(self.frame_count()),
        )?;
        self.last = Some(LastRun {
            report: matcher.report(DEFAULT_TAU),
            events,
            rasters,
            curve,
            stats,
        });
        Ok(())
    }

    /// RGBA image of the events in frame interval `k` of the last run.
    pub fn event_frame(&self, k: usize) -> Vec<u8> {
        self.last
            .as_ref()
            .and_then(|run| run.rasters.get(k))
            .map(Raster::to_rgba)
            .unwrap_or_default()
    }

    pub fn event_count(&self) -> usize {
        self.last.as_ref().map_or(0, |run| run.events.len())
    }

    /// `[precision, recall, f1, chamfer]` of the last run at the default tolerance.
    pub fn scores(&self) -> Vec<f64> {
        self.last.as_ref().map_or_else(Vec::new, |run| {
            let r = &run.report;
            vec![r.precision, r.recall, r.f1, r.chamfer]
        })
    }

    pub fn solve_fraction(&self) -> f64 {
        self.last.as_ref().map_or(0.0, |run| run.stats.solve_fraction)
    }

    /// Tolerances of [`Demo::f1_curve`].
    pub fn curve_taus() -> Vec<f64> {
        curve_taus()
    }

    /// F1 of the last run at each tolerance of [`Demo::curve_taus`].
    pub fn f1_curve(&self) -> Vec<f64> {
        self.last.as_ref().map_or_else(Vec::new, |run| run.curve.clone())
    }

    /// Grayscale RGBA preview of frame `k`'s log brightness. `view` is
    /// `clean`, `noisy` or `denoised`; all three share the clean frame's range.
    pub fn preview(&self, k: usize, view: &str) -> Result<Vec<u8>, JsError> {
        let clean = self
            .clean
            .get(k)
            .ok_or_else(|| JsError::new(&format!("frame {k} out of range")))?;
        let reference = clean.log_brightness_plane();
        let plane = match view {
            "clean" => reference.clone(),
            "noisy" => self.noisy[k].log_brightness_plane(),
            "denoised" => {
                let params = DetectorConfig::default().wlr_params(&self.noisy[0])?;
                wlr::denoise_frame(&self.noisy[k], &params)?
            }
            other => return Err(JsError::new(&format!("unknown view {other:?}"))),
        };
        Ok(grayscale(&plane, &reference))
    }
}

/// Maps `plane` to gray levels using the value range of `reference`.
fn grayscale(plane: &[f64], reference: &[f64]) -> Vec<u8> {
    let lo = reference.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = reference.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    plane
        .iter()
        .flat_map(|v| {
            let g = (255.0 * ((v - lo) / span).clamp(0.0, 1.0)).round() as u8;
            [g, g, g, 255]
        })
        .collect()
}
