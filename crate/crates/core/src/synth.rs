//! Synthetic feature-augmented sequences with analytic clean irradiance,
//! Monte Carlo style noise, and an ESIM oracle on the clean signal.
//!
//! Ramp and moving-blob scenes see through a participating medium whose
//! irradiance is `exp(gain * depth)` up to a constant, so log brightness is
//! affine in the depth feature. The ramp medium glows (`gain > 0`) and thickens
//! over time; the blob medium absorbs (`gain < 0`). Both carry a seeded
//! white-noise depth texture so that local regressions on depth are well posed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::detect::{esim_over_planes, sequence_meta};
use crate::error::{Error, Result};
use crate::event::EventStream;
use crate::frame::{Channel, FeatureFrame, CHANNELS};
use crate::par;

/// `spp` recorded on clean frames.
pub const REFERENCE_SPP: u32 = 4096;
/// Lower bound on the irradiance used to scale noise, so dark pixels stay noisy.
pub const E_FLOOR: f64 = 1e-3;

const TEXTURE_STREAM: u64 = 0;

fn radiance_stream(frame: usize) -> u64 {
    1 + 2 * frame as u64
}

fn feature_stream(frame: usize) -> u64 {
    2 + 2 * frame as u64
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform white noise in `[-1, 1]`, one value per pixel.
fn texture(seed: u64, pixels: usize) -> Vec<f64> {
    let mut rng = rng_for(seed, TEXTURE_STREAM);
    (0..pixels).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RampParams {
    /// Log-brightness increase per frame.
    pub rate: f64,
    /// Irradiance of frame 0 at zero texture.
    pub base_irradiance: f64,
    /// Log-brightness change per unit depth.
    pub depth_gain: f64,
    /// Half-width of the depth texture, in depth units.
    pub texture_amplitude: f64,
    /// Albedo increase per pixel along x. Cosmetic: irradiance does not depend on it.
    pub albedo_slope: f64,
    pub seed: u64,
}

impl Default for RampParams {
    fn default() -> Self {
        Self {
            rate: 0.25,
            base_irradiance: 0.01,
            depth_gain: 1.0,
            texture_amplitude: 0.3,
            albedo_slope: 0.004,
            seed: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlobParams {
    /// Gaussian standard deviation of the bump, in pixels.
    pub radius: f64,
    /// Pixels per frame; the blob wraps around the image borders.
    pub velocity: [f64; 2],
    /// Irradiance at the blob apex.
    pub peak_irradiance: f64,
    pub attenuation: f64,
    pub apex_depth: f64,
    pub plane_depth: f64,
    pub texture_amplitude: f64,
    pub seed: u64,
}

impl Default for BlobParams {
    fn default() -> Self {
        Self {
            radius: 10.0,
            velocity: [0.8, 0.45],
            peak_irradiance: 1.0,
            attenuation: 1.0,
            apex_depth: 1.0,
            plane_depth: 4.0,
            texture_amplitude: 2.5,
            seed: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckerParams {
    /// Side of one checker cell, in pixels.
    pub period: f64,
    /// Radians per frame about the image center.
    pub angular_velocity: f64,
    /// Irradiance of a fully white pixel.
    pub peak_irradiance: f64,
    pub depth: f64,
}

impl Default for CheckerParams {
    fn default() -> Self {
        Self {
            period: 16.0,
            angular_velocity: 0.02,
            peak_irradiance: 1.0,
            depth: 2.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SceneKind {
    Ramp(RampParams),
    MovingBlob(BlobParams),
    RotatingChecker(CheckerParams),
}

impl SceneKind {
    pub const NAMES: [&'static str; 3] = ["ramp", "moving_blob", "rotating_checker"];

    /// Default parameters for a scene name.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "ramp" => Ok(SceneKind::Ramp(RampParams::default())),
            "moving_blob" => Ok(SceneKind::MovingBlob(BlobParams::default())),
            "rotating_checker" => Ok(SceneKind::RotatingChecker(CheckerParams::default())),
            other => Err(Error::Config(format!(
                "unknown scene kind '{other}' (expected one of {})",
                Self::NAMES.join(", ")
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SceneKind::Ramp(_) => "ramp",
            SceneKind::MovingBlob(_) => "moving_blob",
            SceneKind::RotatingChecker(_) => "rotating_checker",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub frame_count: usize,
    /// Seconds between frames.
    pub dt: f64,
    pub scene: SceneKind,
}

impl SceneSpec {
    pub fn new(name: &str, width: usize, height: usize, frame_count: usize) -> Result<Self> {
        let spec = Self {
            width,
            height,
            frame_count,
            dt: 1.0 / 30.0,
            scene: SceneKind::from_name(name)?,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config("scene dimensions must be positive".into()));
        }
        if self.frame_count == 0 {
            return Err(Error::Config("frame_count must be positive".into()));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config("dt must be positive".into()));
        }
        let positive = |what: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{what} must be positive, got {v}")))
            }
        };
        let non_negative = |what: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{what} must be >= 0, got {v}")))
            }
        };
        match &self.scene {
            SceneKind::Ramp(p) => {
                if !p.rate.is_finite() {
                    return Err(Error::Config("ramp rate must be finite".into()));
                }
                positive("base_irradiance", p.base_irradiance)?;
                if !(p.depth_gain != 0.0) || !p.depth_gain.is_finite() {
                    return Err(Error::Config("depth_gain must be finite and nonzero".into()));
                }
                non_negative("texture_amplitude", p.texture_amplitude)?;
                non_negative("albedo_slope", p.albedo_slope)?;
            }
            SceneKind::MovingBlob(p) => {
                positive("radius", p.radius)?;
                positive("peak_irradiance", p.peak_irradiance)?;
                positive("attenuation", p.attenuation)?;
                non_negative("apex_depth", p.apex_depth)?;
                non_negative("texture_amplitude", p.texture_amplitude)?;
                if !p.velocity.iter().all(|v| v.is_finite()) {
                    return Err(Error::Config("velocity must be finite".into()));
                }
                if !(p.plane_depth - p.texture_amplitude > p.apex_depth) {
                    return Err(Error::Config(
                        "background depth must stay behind the blob apex".into(),
                    ));
                }
            }
            SceneKind::RotatingChecker(p) => {
                positive("period", p.period)?;
                positive("peak_irradiance", p.peak_irradiance)?;
                non_negative("depth", p.depth)?;
                if !p.angular_velocity.is_finite() {
                    return Err(Error::Config("angular_velocity must be finite".into()));
                }
            }
        }
        Ok(())
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }
}

/// Per-pixel values of one frame before packing into `f32` planes.
struct FrameBuilder {
    planes: Vec<Vec<f32>>,
}

impl FrameBuilder {
    fn new(pixels: usize) -> Self {
        let mut planes = vec![vec![0.0f32; pixels]; CHANNELS];
        planes[Channel::NormalZ.index()].fill(1.0);
        Self { planes }
    }

    fn set(&mut self, ch: Channel, i: usize, v: f64) {
        self.planes[ch.index()][i] = v as f32;
    }

    fn set_gray(&mut self, first: Channel, i: usize, v: f64) {
        let base = first.index();
        for c in 0..3 {
            self.planes[base + c][i] = v as f32;
        }
    }
}

/// Wraps `d` into `[-period / 2, period / 2)`.
fn torus_offset(d: f64, period: f64) -> f64 {
    (d + 0.5 * period).rem_euclid(period) - 0.5 * period
}

/// Deterministic clean sequence; frame `k` has time `k * dt`.
pub fn generate_clean(spec: &SceneSpec) -> Result<Vec<FeatureFrame>> {
    spec.validate()?;
    let (w, h, n) = (spec.width, spec.height, spec.pixels());
    let frames = match spec.scene {
        SceneKind::Ramp(p) => {
            let tex = texture(p.seed, n);
            // Depth moves by `rate / gain` per frame and never drops below 1.
            let step = p.rate / p.depth_gain;
            let d0 = 1.0 + p.texture_amplitude + (-step * (spec.frame_count - 1) as f64).max(0.0);
            par::map_range(spec.frame_count, |k| {
                let mut b = FrameBuilder::new(n);
                for i in 0..n {
                    let depth = d0 + p.texture_amplitude * tex[i] + step * k as f64;
                    let e = p.base_irradiance * (p.depth_gain * (depth - d0)).exp();
                    b.set_gray(Channel::RadianceR, i, e);
                    b.set(Channel::Depth, i, depth);
                    let albedo = (0.2 + p.albedo_slope * (i % w) as f64).min(1.0);
                    b.set_gray(Channel::AlbedoR, i, albedo);
                }
                b.planes
            })
        }
        SceneKind::MovingBlob(p) => {
            let tex = texture(p.seed, n);
            let (wf, hf) = (w as f64, h as f64);
            let inv = 1.0 / (2.0 * p.radius * p.radius);
            par::map_range(spec.frame_count, |k| {
                let cx = (0.5 * wf + p.velocity[0] * k as f64).rem_euclid(wf);
                let cy = (0.5 * hf + p.velocity[1] * k as f64).rem_euclid(hf);
                let mut b = FrameBuilder::new(n);
                for i in 0..n {
                    let dx = torus_offset((i % w) as f64 - cx, wf);
                    let dy = torus_offset((i / w) as f64 - cy, hf);
                    let g = (-(dx * dx + dy * dy) * inv).exp();
                    let background = p.plane_depth + p.texture_amplitude * tex[i];
                    let depth = (1.0 - g) * background + g * p.apex_depth;
                    let e = p.peak_irradiance * (-p.attenuation * (depth - p.apex_depth)).exp();
                    b.set_gray(Channel::RadianceR, i, e);
                    b.set(Channel::Depth, i, depth);
                    b.set_gray(Channel::AlbedoR, i, 0.5);
                }
                b.planes
            })
        }
        SceneKind::RotatingChecker(p) => {
            const SUB: usize = 4;
            let (cx, cy) = (0.5 * (w as f64 - 1.0), 0.5 * (h as f64 - 1.0));
            par::map_range(spec.frame_count, |k| {
                let (s, c) = (p.angular_velocity * k as f64).sin_cos();
                let mut b = FrameBuilder::new(n);
                for i in 0..n {
                    let (x, y) = ((i % w) as f64, (i / w) as f64);
                    let mut white = 0usize;
                    for sy in 0..SUB {
                        for sx in 0..SUB {
                            let px = x + (sx as f64 + 0.5) / SUB as f64 - 0.5 - cx;
                            let py = y + (sy as f64 + 0.5) / SUB as f64 - 0.5 - cy;
                            let u = c * px + s * py;
                            let v = -s * px + c * py;
                            let cell = (u / p.period).floor() as i64 + (v / p.period).floor() as i64;
                            white += (cell.rem_euclid(2) == 0) as usize;
                        }
                    }
                    let albedo = white as f64 / (SUB * SUB) as f64;
                    b.set_gray(Channel::RadianceR, i, p.peak_irradiance * albedo);
                    b.set(Channel::Depth, i, p.depth);
                    b.set_gray(Channel::AlbedoR, i, albedo);
                }
                b.planes
            })
        }
    };
    frames
        .into_iter()
        .enumerate()
        .map(|(k, planes)| FeatureFrame::from_planes(w, h, k as f64 * spec.dt, REFERENCE_SPP, planes))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSpec {
    pub spp: u32,
    /// Relative noise level at one sample per pixel.
    pub kappa: f64,
    pub seed: u64,
    /// Standard deviation added to each normal component before renormalizing.
    pub normal_jitter: f64,
    pub depth_jitter: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            spp: 32,
            kappa: 1.0,
            seed: 0,
            normal_jitter: 0.0,
            depth_jitter: 0.0,
        }
    }
}

impl NoiseSpec {
    pub fn new(spp: u32, seed: u64) -> Self {
        Self {
            spp,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.spp == 0 {
            return Err(Error::Config("spp must be >= 1".into()));
        }
        for (what, v) in [
            ("kappa", self.kappa),
            ("normal_jitter", self.normal_jitter),
            ("depth_jitter", self.depth_jitter),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{what} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Noisy copy of frame `index` of a sequence.
///
/// The standard normal draws depend only on `(seed, index)`, so the same seed
/// gives the same noise pattern at every `spp`, scaled by `1 / sqrt(spp)`.
pub fn add_noise_to_frame(clean: &FeatureFrame, index: usize, noise: &NoiseSpec) -> Result<FeatureFrame> {
    noise.validate()?;
    let mut frame = clean.clone();
    frame.set_spp(noise.spp);
    let scale = noise.kappa / (noise.spp as f64).sqrt();
    let mut rng = rng_for(noise.seed, radiance_stream(index));
    for ch in [Channel::RadianceR, Channel::RadianceG, Channel::RadianceB] {
        for v in frame.plane_mut(ch) {
            let e = *v as f64;
            let z: f64 = rng.sample(StandardNormal);
            *v = (e + z * scale * e.max(E_FLOOR)).max(0.0) as f32;
        }
    }
    if noise.normal_jitter > 0.0 || noise.depth_jitter > 0.0 {
        jitter_features(&mut frame, index, noise);
    }
    Ok(frame)
}

fn jitter_features(frame: &mut FeatureFrame, index: usize, noise: &NoiseSpec) {
    let mut rng = rng_for(noise.seed, feature_stream(index));
    let mut z = move || -> f64 { rng.sample(StandardNormal) };
    for i in 0..frame.pixels() {
        if noise.normal_jitter > 0.0 {
            let mut n = [0.0f64; 3];
            for (c, ch) in [Channel::NormalX, Channel::NormalY, Channel::NormalZ].iter().enumerate() {
                n[c] = frame.plane(*ch)[i] as f64 + noise.normal_jitter * z();
            }
            let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
            if len > 0.0 {
                for (c, ch) in [Channel::NormalX, Channel::NormalY, Channel::NormalZ].iter().enumerate() {
                    frame.plane_mut(*ch)[i] = (n[c] / len) as f32;
                }
            }
        }
        if noise.depth_jitter > 0.0 {
            let d = &mut frame.plane_mut(Channel::Depth)[i];
            *d = (*d as f64 + noise.depth_jitter * z()).max(0.0) as f32;
        }
    }
}

/// Noisy copy of a clean sequence.
pub fn add_noise(clean: &[FeatureFrame], noise: &NoiseSpec) -> Result<Vec<FeatureFrame>> {
    noise.validate()?;
    par::map_range(clean.len(), |k| add_noise_to_frame(&clean[k], k, noise))
        .into_iter()
        .collect()
}

/// Reference events: fixed-interval ESIM on the clean log brightness.
pub fn oracle_events(clean: &[FeatureFrame], contrast: f64, multi_event: bool) -> Result<EventStream> {
    if !(contrast > 0.0) || !contrast.is_finite() {
        return Err(Error::Config(format!("contrast must be > 0, got {contrast}")));
    }
    let meta = sequence_meta(clean)?;
    let planes = clean.iter().map(|f| Ok((f.time(), f.log_brightness_plane())));
    esim_over_planes(meta, planes, contrast, multi_event)
}
