//! Feature-augmented frames: noisy linear radiance plus the per-pixel G-buffer
//! (normal, depth, albedo) that the regression uses as covariates.

use crate::error::{Error, Result};

/// Number of stored planes per frame.
pub const CHANNELS: usize = 10;
/// Dimension of the per-pixel regression feature vector.
pub const FEATURE_DIM: usize = 9;
/// Offset added to irradiance before taking the logarithm.
pub const LOG_EPS: f64 = 1e-6;

const REC709: [f64; 3] = [0.2126, 0.7152, 0.0722];

/// Stored plane, in on-disk order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Channel {
    RadianceR = 0,
    RadianceG,
    RadianceB,
    NormalX,
    NormalY,
    NormalZ,
    Depth,
    AlbedoR,
    AlbedoG,
    AlbedoB,
}

impl Channel {
    pub const ALL: [Channel; CHANNELS] = [
        Channel::RadianceR,
        Channel::RadianceG,
        Channel::RadianceB,
        Channel::NormalX,
        Channel::NormalY,
        Channel::NormalZ,
        Channel::Depth,
        Channel::AlbedoR,
        Channel::AlbedoG,
        Channel::AlbedoB,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::RadianceR => "radiance_r",
            Channel::RadianceG => "radiance_g",
            Channel::RadianceB => "radiance_b",
            Channel::NormalX => "normal_x",
            Channel::NormalY => "normal_y",
            Channel::NormalZ => "normal_z",
            Channel::Depth => "depth",
            Channel::AlbedoR => "albedo_r",
            Channel::AlbedoG => "albedo_g",
            Channel::AlbedoB => "albedo_b",
        }
    }
}

/// Nine regression covariates in fixed order: image x/y, normal xyz, depth, albedo rgb.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct FeatureVector(pub [f64; FEATURE_DIM]);

impl FeatureVector {
    pub const IMAGE_X: usize = 0;
    pub const IMAGE_Y: usize = 1;
    pub const NORMAL_X: usize = 2;
    pub const NORMAL_Y: usize = 3;
    pub const NORMAL_Z: usize = 4;
    pub const DEPTH: usize = 5;
    pub const ALBEDO_R: usize = 6;
    pub const ALBEDO_G: usize = 7;
    pub const ALBEDO_B: usize = 8;

    pub fn zeros() -> Self {
        Self([0.0; FEATURE_DIM])
    }

    pub fn dot(&self, other: &[f64; FEATURE_DIM]) -> f64 {
        self.0.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    pub fn norm_squared(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }
}

impl std::ops::Index<usize> for FeatureVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Rec. 709 luminance of linear RGB.
pub fn luminance(r: f64, g: f64, b: f64) -> Result<f64> {
    if r < 0.0 || g < 0.0 || b < 0.0 || r.is_nan() || g.is_nan() || b.is_nan() {
        return Err(Error::Domain(format!(
            "luminance of negative or NaN radiance ({r}, {g}, {b})"
        )));
    }
    Ok(luminance_unchecked(r, g, b))
}

#[inline]
pub(crate) fn luminance_unchecked(r: f64, g: f64, b: f64) -> f64 {
    REC709[0] * r + REC709[1] * g + REC709[2] * b
}

/// `ln(E + 1e-6)`.
pub fn log_brightness(irradiance: f64) -> Result<f64> {
    if !(irradiance >= 0.0) {
        return Err(Error::Domain(format!(
            "log brightness of negative irradiance {irradiance}"
        )));
    }
    Ok(log_brightness_unchecked(irradiance))
}

#[inline]
pub(crate) fn log_brightness_unchecked(irradiance: f64) -> f64 {
    (irradiance + LOG_EPS).ln()
}

/// One timestamp of a rendered sequence. Planes are row-major `f32`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureFrame {
    width: usize,
    height: usize,
    time: f64,
    spp: u32,
    planes: Vec<Vec<f32>>,
}

impl FeatureFrame {
    /// A zero-filled frame.
    pub fn new(width: usize, height: usize, time: f64, spp: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Config(format!(
                "frame dimensions must be positive, got {width}x{height}"
            )));
        }
        if spp == 0 {
            return Err(Error::Config("spp must be positive".into()));
        }
        Ok(Self {
            width,
            height,
            time,
            spp,
            planes: vec![vec![0.0; width * height]; CHANNELS],
        })
    }

    pub fn from_planes(
        width: usize,
        height: usize,
        time: f64,
        spp: u32,
        planes: Vec<Vec<f32>>,
    ) -> Result<Self> {
        let mut frame = Self::new(width, height, time, spp)?;
        if planes.len() != CHANNELS {
            return Err(Error::Input(format!(
                "expected {CHANNELS} planes, got {}",
                planes.len()
            )));
        }
        for (ch, plane) in Channel::ALL.iter().zip(&planes) {
            if plane.len() != width * height {
                return Err(Error::Input(format!(
                    "plane {} has {} entries, expected {}",
                    ch.name(),
                    plane.len(),
                    width * height
                )));
            }
        }
        frame.planes = planes;
        Ok(frame)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, time: f64) {
        self.time = time;
    }

    pub fn spp(&self) -> u32 {
        self.spp
    }

    pub fn set_spp(&mut self, spp: u32) {
        self.spp = spp;
    }

    pub fn plane(&self, ch: Channel) -> &[f32] {
        &self.planes[ch.index()]
    }

    pub fn plane_mut(&mut self, ch: Channel) -> &mut [f32] {
        &mut self.planes[ch.index()]
    }

    pub fn planes(&self) -> &[Vec<f32>] {
        &self.planes
    }

    #[inline]
    pub fn get(&self, ch: Channel, x: usize, y: usize) -> f32 {
        self.planes[ch.index()][y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, ch: Channel, x: usize, y: usize, value: f32) {
        let w = self.width;
        self.planes[ch.index()][y * w + x] = value;
    }

    pub fn same_shape(&self, other: &FeatureFrame) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Checks the value-range invariants of every plane.
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, i: usize| {
            Err(Error::Input(format!(
                "{what} at pixel ({}, {})",
                i % self.width,
                i / self.width
            )))
        };
        for ch in [Channel::RadianceR, Channel::RadianceG, Channel::RadianceB] {
            if let Some(i) = self.plane(ch).iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
                return bad("negative or non-finite radiance", i);
            }
        }
        if let Some(i) = self
            .plane(Channel::Depth)
            .iter()
            .position(|v| !(*v >= 0.0) || !v.is_finite())
        {
            return bad("negative or non-finite depth", i);
        }
        for ch in [Channel::AlbedoR, Channel::AlbedoG, Channel::AlbedoB] {
            if let Some(i) = self.plane(ch).iter().position(|v| !(0.0..=1.0).contains(v)) {
                return bad("albedo outside [0, 1]", i);
            }
        }
        let (nx, ny, nz) = (
            self.plane(Channel::NormalX),
            self.plane(Channel::NormalY),
            self.plane(Channel::NormalZ),
        );
        for i in 0..self.pixels() {
            let (a, b, c) = (nx[i] as f64, ny[i] as f64, nz[i] as f64);
            let len = (a * a + b * b + c * c).sqrt();
            if len != 0.0 && !(0.99..=1.01).contains(&len) {
                return bad("normal not unit length", i);
            }
        }
        Ok(())
    }

    /// Rec. 709 luminance of the radiance planes.
    pub fn luminance_plane(&self) -> Vec<f64> {
        let (r, g, b) = (
            self.plane(Channel::RadianceR),
            self.plane(Channel::RadianceG),
            self.plane(Channel::RadianceB),
        );
        (0..self.pixels())
            .map(|i| luminance_unchecked(r[i] as f64, g[i] as f64, b[i] as f64))
            .collect()
    }

    /// Per-pixel `ln(luminance + 1e-6)`.
    pub fn log_brightness_plane(&self) -> Vec<f64> {
        self.luminance_plane()
            .into_iter()
            .map(|e| log_brightness_unchecked(e.max(0.0)))
            .collect()
    }

    /// Feature vector with raw (pixel-unit) image coordinates. Caller checks bounds.
    #[inline]
    pub(crate) fn feature_unchecked(&self, x: usize, y: usize) -> FeatureVector {
        let i = y * self.width + x;
        let p = |ch: Channel| self.planes[ch.index()][i] as f64;
        FeatureVector([
            x as f64,
            y as f64,
            p(Channel::NormalX),
            p(Channel::NormalY),
            p(Channel::NormalZ),
            p(Channel::Depth),
            p(Channel::AlbedoR),
            p(Channel::AlbedoG),
            p(Channel::AlbedoB),
        ])
    }
}

/// Assembles the 9D feature vector of one pixel.
pub fn pixel_feature(frame: &FeatureFrame, x: usize, y: usize) -> Result<FeatureVector> {
    if x >= frame.width || y >= frame.height {
        return Err(Error::OutOfBounds {
            x,
            y,
            width: frame.width,
            height: frame.height,
        });
    }
    Ok(frame.feature_unchecked(x, y))
}
