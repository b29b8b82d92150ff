//! Weighted local regression of log brightness over G-buffer features.
//!
//! Around a center pixel `c`, the log brightness `y` of each window pixel `i`
//! is modelled as `alpha + beta . (x_i - x_c)` where `x` is the normalized
//! feature vector. The fit minimizes
//!
//! ```text
//! R(alpha, beta) = (1/W) sum_i w_i (y_i - alpha - beta . (x_i - x_c))^2
//! ```
//!
//! with Gaussian weights `w_i = exp(-|x_i - x_c|^2 / (2 h^2))` and `W = sum_i w_i`.
//!
//! Re-evaluating `R` with the stored fit but a new center `x_c'` (the shifted
//! residual) gives `R + (beta . (x_c - x_c'))^2` exactly, because the
//! intercept's optimality condition zeroes the cross term. The detector
//! thresholds that difference instead of re-solving the regression.

use crate::error::{Error, Result};
use crate::frame::{FeatureFrame, FeatureVector, FEATURE_DIM};
use crate::par;

pub const DEFAULT_RADIUS: usize = 3;
pub const DEFAULT_RIDGE: f64 = 1e-6;
pub const DEFAULT_BANDWIDTH: f64 = 1.0;
/// Ridge used when an unregularized system turns out singular.
pub const FALLBACK_RIDGE: f64 = 1e-6;

/// Cholesky pivots below this fraction of the largest diagonal entry count as singular.
const PIVOT_TOLERANCE: f64 = 1e-12;
const SYSTEM_DIM: usize = FEATURE_DIM + 1;

/// Per-channel divisors applied to feature differences before weighting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureScales(pub [f64; FEATURE_DIM]);

impl FeatureScales {
    /// Image coordinates by the window radius, depth by `depth_scale`, the rest by 1.
    pub fn new(radius: usize, depth_scale: f64) -> Result<Self> {
        let mut s = [1.0; FEATURE_DIM];
        s[FeatureVector::IMAGE_X] = radius as f64;
        s[FeatureVector::IMAGE_Y] = radius as f64;
        s[FeatureVector::DEPTH] = depth_scale;
        let scales = Self(s);
        scales.validate()?;
        Ok(scales)
    }

    /// Default scales with the depth scale taken from `frame`.
    pub fn for_frame(frame: &FeatureFrame, radius: usize) -> Result<Self> {
        Self::new(radius, depth_scale(frame))
    }

    pub fn unit() -> Self {
        Self([1.0; FEATURE_DIM])
    }

    pub fn validate(&self) -> Result<()> {
        match self.0.iter().position(|s| !(*s > 0.0) || !s.is_finite()) {
            Some(j) => Err(Error::Config(format!(
                "feature scale {j} must be positive and finite, got {}",
                self.0[j]
            ))),
            None => Ok(()),
        }
    }
}

/// 99th-percentile (nearest-rank) depth of a frame; 1.0 when that is not positive.
pub fn depth_scale(frame: &FeatureFrame) -> f64 {
    let mut depths: Vec<f32> = frame
        .plane(crate::frame::Channel::Depth)
        .iter()
        .copied()
        .filter(|d| d.is_finite())
        .collect();
    if depths.is_empty() {
        return 1.0;
    }
    depths.sort_by(f32::total_cmp);
    let rank = ((0.99 * depths.len() as f64).ceil() as usize).clamp(1, depths.len());
    let d = depths[rank - 1] as f64;
    if d > 0.0 {
        d
    } else {
        1.0
    }
}

/// `(raw - center) / scales`, channel-wise.
pub fn normalize_features(
    raw: &FeatureVector,
    center: &FeatureVector,
    scales: &FeatureScales,
) -> Result<FeatureVector> {
    scales.validate()?;
    Ok(normalize_unchecked(raw, center, scales))
}

#[inline]
fn normalize_unchecked(
    raw: &FeatureVector,
    center: &FeatureVector,
    scales: &FeatureScales,
) -> FeatureVector {
    let mut out = [0.0; FEATURE_DIM];
    for j in 0..FEATURE_DIM {
        out[j] = (raw.0[j] - center.0[j]) / scales.0[j];
    }
    FeatureVector(out)
}

/// Product of per-channel Gaussian fall-offs, `exp(-|dx|^2 / (2 h^2))`.
#[inline]
pub fn weight(dx: &FeatureVector, h: f64) -> f64 {
    (-dx.norm_squared() / (2.0 * h * h)).exp()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WlrParams {
    pub radius: usize,
    /// Gaussian bandwidth `h`.
    pub bandwidth: f64,
    pub ridge: f64,
    pub scales: FeatureScales,
}

impl WlrParams {
    pub fn new(radius: usize, ridge: f64, scales: FeatureScales) -> Result<Self> {
        let p = Self {
            radius,
            bandwidth: DEFAULT_BANDWIDTH,
            ridge,
            scales,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.radius == 0 {
            return Err(Error::Config("window radius must be at least 1".into()));
        }
        if !(self.bandwidth > 0.0) {
            return Err(Error::Config(format!("bandwidth must be > 0, got {}", self.bandwidth)));
        }
        if !(self.ridge >= 0.0) {
            return Err(Error::Config(format!("ridge must be >= 0, got {}", self.ridge)));
        }
        self.scales.validate()
    }
}

/// One window sample: normalized feature offset from the center, observed log
/// brightness, and Gaussian weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub offset: [f64; FEATURE_DIM],
    pub y: f64,
    pub weight: f64,
}

/// The neighborhood a regression is fitted on.
#[derive(Clone, Debug, PartialEq)]
pub struct Window {
    center: (usize, usize),
    /// Raw (unnormalized) feature of the center pixel.
    center_feature: FeatureVector,
    scales: FeatureScales,
    neighbors: Vec<Neighbor>,
    weight_sum: f64,
}

impl Window {
    /// Builds a window from precomputed samples.
    pub fn from_neighbors(
        center: (usize, usize),
        center_feature: FeatureVector,
        scales: FeatureScales,
        neighbors: Vec<Neighbor>,
    ) -> Result<Self> {
        scales.validate()?;
        if neighbors.is_empty() {
            return Err(Error::Contract("window has no samples".into()));
        }
        for (i, n) in neighbors.iter().enumerate() {
            if !(n.weight > 0.0 && n.weight <= 1.0) {
                return Err(Error::Contract(format!(
                    "sample {i} weight {} outside (0, 1]",
                    n.weight
                )));
            }
            if !n.y.is_finite() || n.offset.iter().any(|v| !v.is_finite()) {
                return Err(Error::Contract(format!("sample {i} is not finite")));
            }
        }
        let weight_sum = neighbors.iter().map(|n| n.weight).sum();
        Ok(Self {
            center,
            center_feature,
            scales,
            neighbors,
            weight_sum,
        })
    }

    /// Collects the clamped `(2r+1)^2` window around `(x, y)`.
    ///
    /// `log_plane` holds the observations `y` for every pixel of `frame`.
    pub fn gather(
        frame: &FeatureFrame,
        log_plane: &[f64],
        x: usize,
        y: usize,
        params: &WlrParams,
    ) -> Self {
        let mut w = Window {
            center: (x, y),
            center_feature: FeatureVector::zeros(),
            scales: params.scales,
            neighbors: Vec::with_capacity((2 * params.radius + 1).pow(2)),
            weight_sum: 0.0,
        };
        w.regather(frame, log_plane, x, y, params);
        w
    }

    /// Refills this window in place, reusing its allocation.
    pub(crate) fn regather(
        &mut self,
        frame: &FeatureFrame,
        log_plane: &[f64],
        x: usize,
        y: usize,
        params: &WlrParams,
    ) {
        let r = params.radius;
        let center = frame.feature_unchecked(x, y);
        self.center = (x, y);
        self.center_feature = center;
        self.scales = params.scales;
        self.neighbors.clear();
        let x_hi = (x + r).min(frame.width() - 1);
        let y_hi = (y + r).min(frame.height() - 1);
        for ny in y.saturating_sub(r)..=y_hi {
            for nx in x.saturating_sub(r)..=x_hi {
                let raw = frame.feature_unchecked(nx, ny);
                let offset = normalize_unchecked(&raw, &center, &params.scales);
                let weight = weight(&offset, params.bandwidth);
                // Underflowed weights carry no information.
                if weight > 0.0 {
                    self.neighbors.push(Neighbor {
                        offset: offset.0,
                        y: log_plane[ny * frame.width() + nx],
                        weight,
                    });
                }
            }
        }
        self.weight_sum = self.neighbors.iter().map(|n| n.weight).sum();
    }

    pub fn center(&self) -> (usize, usize) {
        self.center
    }

    pub fn center_feature(&self) -> &FeatureVector {
        &self.center_feature
    }

    pub fn scales(&self) -> &FeatureScales {
        &self.scales
    }

    pub fn neighbors(&self) -> &[Neighbor] {
        &self.neighbors
    }

    /// `W`, the sum of weights.
    pub fn weight_sum(&self) -> f64 {
        self.weight_sum
    }
}

/// Fitted local model plus the window it was fitted on.
#[derive(Clone, Debug, PartialEq)]
pub struct WlrModel {
    /// Fitted log brightness at the center.
    pub alpha: f64,
    /// Gradient with respect to the normalized features.
    pub beta: [f64; FEATURE_DIM],
    /// Weighted residual at `(alpha, beta)`, without the ridge term.
    pub residual: f64,
    /// Set when the system was singular and [`FALLBACK_RIDGE`] had to be applied.
    pub regularized_fallback: bool,
    pub snapshot: Window,
}

impl WlrModel {
    /// Normalized offset of a new raw center feature from the stored center.
    pub fn shift_to(
        &self,
        new_center: &FeatureVector,
        scales: &FeatureScales,
    ) -> Result<FeatureVector> {
        if scales != &self.snapshot.scales {
            return Err(Error::Config(
                "feature scales differ from the ones the model was fitted with".into(),
            ));
        }
        Ok(normalize_unchecked(new_center, &self.snapshot.center_feature, scales))
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Coefficients {
    pub alpha: f64,
    pub beta: [f64; FEATURE_DIM],
    pub fallback: bool,
}

/// Solves the weighted normal equations for `(alpha, beta)`.
///
/// Channels whose offsets are identically zero in the window carry no
/// information and are left out of the system with `beta_j = 0`. The ridge
/// term penalizes `beta` only.
pub(crate) fn fit_coefficients(window: &Window, ridge: f64) -> Result<Coefficients> {
    let mut active = [0usize; FEATURE_DIM];
    let mut k = 0;
    for j in 0..FEATURE_DIM {
        if window.neighbors.iter().any(|n| n.offset[j] != 0.0) {
            active[k] = j;
            k += 1;
        }
    }
    let active = &active[..k];
    let dim = k + 1;

    let mut a = [[0.0f64; SYSTEM_DIM]; SYSTEM_DIM];
    let mut b = [0.0f64; SYSTEM_DIM];
    let inv_w = 1.0 / window.weight_sum;
    let mut z = [0.0f64; SYSTEM_DIM];
    z[0] = 1.0;
    for n in &window.neighbors {
        let u = n.weight * inv_w;
        for (slot, &j) in active.iter().enumerate() {
            z[slot + 1] = n.offset[j];
        }
        for r in 0..dim {
            let uz = u * z[r];
            b[r] += uz * n.y;
            for c in 0..=r {
                a[r][c] += uz * z[c];
            }
        }
    }
    for r in 0..dim {
        for c in 0..r {
            a[c][r] = a[r][c];
        }
    }

    let attempt = |lambda: f64| {
        let mut m = a;
        let mut rhs = b;
        for d in 1..dim {
            m[d][d] += lambda;
        }
        cholesky_solve(&mut m, &mut rhs, dim).then_some(rhs)
    };

    let (solution, fallback) = match attempt(ridge) {
        Some(s) => (s, false),
        None if ridge == 0.0 => match attempt(FALLBACK_RIDGE) {
            Some(s) => (s, true),
            None => {
                return Err(Error::Singular(format!(
                    "window at {:?} is singular even with ridge {FALLBACK_RIDGE}",
                    window.center
                )))
            }
        },
        None => {
            return Err(Error::Singular(format!(
                "window at {:?} is singular with ridge {ridge}",
                window.center
            )))
        }
    };

    let mut beta = [0.0; FEATURE_DIM];
    for (slot, &j) in active.iter().enumerate() {
        beta[j] = solution[slot + 1];
    }
    Ok(Coefficients {
        alpha: solution[0],
        beta,
        fallback,
    })
}

/// In-place Cholesky factorization and solve of the leading `n x n` block.
/// Returns false when a pivot is not safely positive.
fn cholesky_solve(
    m: &mut [[f64; SYSTEM_DIM]; SYSTEM_DIM],
    rhs: &mut [f64; SYSTEM_DIM],
    n: usize,
) -> bool {
    let scale = (0..n).map(|i| m[i][i]).fold(0.0f64, f64::max);
    if !(scale > 0.0) || !scale.is_finite() {
        return false;
    }
    for j in 0..n {
        let mut d = m[j][j];
        for p in 0..j {
            d -= m[j][p] * m[j][p];
        }
        if !(d > PIVOT_TOLERANCE * scale) {
            return false;
        }
        let d = d.sqrt();
        m[j][j] = d;
        for i in j + 1..n {
            let mut s = m[i][j];
            for p in 0..j {
                s -= m[i][p] * m[j][p];
            }
            m[i][j] = s / d;
        }
    }
    // L y = rhs
    for i in 0..n {
        let mut s = rhs[i];
        for p in 0..i {
            s -= m[i][p] * rhs[p];
        }
        rhs[i] = s / m[i][i];
    }
    // L^T x = y
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for p in i + 1..n {
            s -= m[p][i] * rhs[p];
        }
        rhs[i] = s / m[i][i];
    }
    true
}

/// Fits the local model on `window`. `ridge` is added to the objective as `ridge * |beta|^2`.
pub fn solve_wlr(window: Window, ridge: f64) -> Result<WlrModel> {
    if !(ridge >= 0.0) {
        return Err(Error::Config(format!("ridge must be >= 0, got {ridge}")));
    }
    if window.neighbors.is_empty() || !(window.weight_sum > 0.0) {
        return Err(Error::Contract("cannot fit an empty window".into()));
    }
    let c = fit_coefficients(&window, ridge)?;
    let residual = residual(c.alpha, &c.beta, &window);
    Ok(WlrModel {
        alpha: c.alpha,
        beta: c.beta,
        residual,
        regularized_fallback: c.fallback,
        snapshot: window,
    })
}

/// The weighted residual of `(alpha, beta)` on `window`.
pub fn residual(alpha: f64, beta: &[f64; FEATURE_DIM], window: &Window) -> f64 {
    let mut acc = 0.0;
    for n in &window.neighbors {
        let mut e = n.y - alpha;
        for j in 0..FEATURE_DIM {
            e -= beta[j] * n.offset[j];
        }
        acc += n.weight * e * e;
    }
    acc / window.weight_sum
}

/// The stored model's residual with the center moved by `shift` (normalized
/// units, relative to the stored center). Weights, features and observations
/// all come from the snapshot.
pub fn shifted_residual(model: &WlrModel, shift: &FeatureVector) -> f64 {
    let window = &model.snapshot;
    let mut acc = 0.0;
    for n in &window.neighbors {
        let mut e = n.y - model.alpha;
        for j in 0..FEATURE_DIM {
            e -= model.beta[j] * (n.offset[j] - shift.0[j]);
        }
        acc += n.weight * e * e;
    }
    acc / window.weight_sum
}

/// `|r_hat - r|`.
pub fn delta_residual(r_hat: f64, r: f64) -> f64 {
    (r_hat - r).abs()
}

/// Fits the model centered at `(x, y)`.
pub fn solve_at(
    frame: &FeatureFrame,
    log_plane: &[f64],
    x: usize,
    y: usize,
    params: &WlrParams,
) -> Result<WlrModel> {
    solve_wlr(Window::gather(frame, log_plane, x, y, params), params.ridge)
}

/// Denoises `log_plane` (observations aligned with `frame`'s pixels) by
/// replacing every pixel with its fitted `alpha`.
pub fn denoise_log_plane(
    frame: &FeatureFrame,
    log_plane: &[f64],
    params: &WlrParams,
) -> Result<Vec<f64>> {
    params.validate()?;
    if log_plane.len() != frame.pixels() {
        return Err(Error::Input(format!(
            "observation plane has {} entries for a {}-pixel frame",
            log_plane.len(),
            frame.pixels()
        )));
    }
    let width = frame.width();
    let rows = par::map_range(frame.height(), |y| -> Result<Vec<f64>> {
        let mut window = Window::gather(frame, log_plane, 0, y, params);
        let mut row = Vec::with_capacity(width);
        for x in 0..width {
            if x > 0 {
                window.regather(frame, log_plane, x, y, params);
            }
            row.push(fit_coefficients(&window, params.ridge)?.alpha);
        }
        Ok(row)
    });
    let mut out = Vec::with_capacity(frame.pixels());
    for row in rows {
        out.extend(row?);
    }
    Ok(out)
}

/// Per-pixel denoised log-brightness image of `frame`.
pub fn denoise_frame(frame: &FeatureFrame, params: &WlrParams) -> Result<Vec<f64>> {
    denoise_log_plane(frame, &frame.log_brightness_plane(), params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::Channel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn window_from(samples: &[([f64; FEATURE_DIM], f64)], h: f64) -> Window {
        let neighbors = samples
            .iter()
            .map(|(o, y)| Neighbor {
                offset: *o,
                y: *y,
                weight: weight(&FeatureVector(*o), h),
            })
            .collect();
        Window::from_neighbors((0, 0), FeatureVector::zeros(), FeatureScales::unit(), neighbors)
            .unwrap()
    }

    fn random_window(rng: &mut ChaCha8Rng, n: usize) -> Window {
        let mut samples = vec![([0.0; FEATURE_DIM], rng.random_range(-2.0..2.0))];
        for _ in 1..n {
            let mut o = [0.0; FEATURE_DIM];
            for v in &mut o {
                *v = rng.random_range(-1.0..1.0);
            }
            samples.push((o, rng.random_range(-2.0..2.0)));
        }
        window_from(&samples, 1.0)
    }

    #[test]
    fn normalize_examples() {
        let s = FeatureScales::new(3, 8.0).unwrap();
        let c = FeatureVector([10.0, 5.0, 0.0, 0.0, 1.0, 4.0, 0.2, 0.2, 0.2]);
        assert_eq!(normalize_features(&c, &c, &s).unwrap(), FeatureVector::zeros());
        let mut raw = c;
        raw.0[0] += 3.0;
        raw.0[5] += 4.0;
        let n = normalize_features(&raw, &c, &s).unwrap();
        assert_eq!(n.0[0], 1.0);
        assert_eq!(n.0[5], 0.5);
        let mut bad = s;
        bad.0[3] = 0.0;
        assert!(matches!(normalize_features(&raw, &c, &bad), Err(Error::Config(_))));
        assert!(FeatureScales::new(3, -1.0).is_err());
    }

    #[test]
    fn depth_scale_is_99th_percentile() {
        let mut f = FeatureFrame::new(10, 10, 0.0, 1).unwrap();
        for (i, d) in f.plane_mut(Channel::Depth).iter_mut().enumerate() {
            *d = (i + 1) as f32;
        }
        assert_eq!(depth_scale(&f), 99.0);
        let flat = FeatureFrame::new(2, 2, 0.0, 1).unwrap();
        assert_eq!(depth_scale(&flat), 1.0);
    }

    #[test]
    fn weight_examples() {
        assert_eq!(weight(&FeatureVector::zeros(), 1.0), 1.0);
        let mut one = FeatureVector::zeros();
        one.0[4] = 1.0;
        assert!((weight(&one, 1.0) - 0.6065306597126334).abs() < 1e-15);
        one.0[7] = 1.0;
        assert!((weight(&one, 1.0) - 0.36787944117144233).abs() < 1e-15);
        one.0[7] = 0.0;
        assert!((weight(&one, 2.0) - (-0.125f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn constant_data_fits_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut w = random_window(&mut rng, 25);
        for n in &mut w.neighbors {
            n.y = 1.75;
        }
        let m = solve_wlr(w, DEFAULT_RIDGE).unwrap();
        assert!((m.alpha - 1.75).abs() < 1e-12);
        assert!(m.beta.iter().all(|b| b.abs() < 1e-10));
        assert!(m.residual < 1e-24);
    }

    #[test]
    fn affine_data_on_one_channel_is_recovered() {
        // Only channel 3 varies; the other eight are inactive and dropped.
        let samples: Vec<_> = (-3..=3)
            .map(|i| {
                let mut o = [0.0; FEATURE_DIM];
                o[3] = i as f64 / 3.0;
                (o, 2.0 + 3.0 * o[3])
            })
            .collect();
        let m = solve_wlr(window_from(&samples, 1.0), 0.0).unwrap();
        assert!(!m.regularized_fallback);
        assert!((m.alpha - 2.0).abs() < 1e-12);
        assert!((m.beta[3] - 3.0).abs() < 1e-12);
        assert!(m.residual <= 1e-18, "R = {}", m.residual);
    }

    #[test]
    fn collinear_channels_fall_back_to_ridge() {
        let samples: Vec<_> = (-3..=3)
            .map(|i| {
                let mut o = [0.0; FEATURE_DIM];
                o[0] = i as f64 / 3.0;
                o[6] = i as f64 / 3.0;
                (o, 1.0 + o[0])
            })
            .collect();
        let w = window_from(&samples, 1.0);
        let m = solve_wlr(w.clone(), 0.0).unwrap();
        assert!(m.regularized_fallback);
        // The slope splits across the two identical channels.
        assert!((m.beta[0] + m.beta[6] - 1.0).abs() < 1e-5);
        assert!(!solve_wlr(w, 1e-3).unwrap().regularized_fallback);
    }

    #[test]
    fn empty_window_is_rejected() {
        let err = Window::from_neighbors((0, 0), FeatureVector::zeros(), FeatureScales::unit(), vec![]);
        assert!(err.is_err());
    }

    #[test]
    fn residual_of_fit_equals_stored_and_grows_by_delta_squared() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let w = random_window(&mut rng, 49);
        let m = solve_wlr(w.clone(), 0.0).unwrap();
        assert_eq!(residual(m.alpha, &m.beta, &w), m.residual);
        for delta in [1e-3, 0.1, -0.7, 2.5] {
            let perturbed = residual(m.alpha + delta, &m.beta, &w);
            // Direct-summation oracle of the same objective.
            let direct: f64 = w
                .neighbors
                .iter()
                .map(|n| {
                    let pred = m.alpha + delta + (0..FEATURE_DIM).map(|j| m.beta[j] * n.offset[j]).sum::<f64>();
                    n.weight * (n.y - pred).powi(2)
                })
                .sum::<f64>()
                / w.weight_sum();
            assert!((perturbed - direct).abs() < 1e-12);
            assert!(
                (perturbed - m.residual - delta * delta).abs() < 1e-10 * (1.0 + m.residual),
                "delta {delta}"
            );
        }
        let mut c = w.clone();
        for n in &mut c.neighbors {
            n.y = -0.5;
        }
        assert_eq!(residual(-0.5, &[0.0; FEATURE_DIM], &c), 0.0);
    }

    #[test]
    fn shifted_residual_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let w = random_window(&mut rng, 49);
        let m = solve_wlr(w, 0.0).unwrap();
        assert!((shifted_residual(&m, &FeatureVector::zeros()) - m.residual).abs() < 1e-15);

        let mut flat = m.clone();
        flat.beta = [0.0; FEATURE_DIM];
        flat.residual = residual(flat.alpha, &flat.beta, &flat.snapshot);
        let mut shift = FeatureVector::zeros();
        shift.0 = [0.3, -0.2, 0.1, 0.0, 0.5, 1.0, -0.4, 0.2, 0.9];
        assert!((shifted_residual(&flat, &shift) - flat.residual).abs() < 1e-15);

        let bd: f64 = (0..FEATURE_DIM).map(|j| m.beta[j] * shift.0[j]).sum();
        let r_hat = shifted_residual(&m, &shift);
        assert!((r_hat - m.residual - bd * bd).abs() <= 1e-10 * (m.residual + bd * bd));
        assert!((delta_residual(r_hat, m.residual) - bd * bd).abs() <= 1e-10 * (1.0 + bd * bd));
    }

    #[test]
    fn shift_requires_matching_scales() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = solve_wlr(random_window(&mut rng, 9), 0.0).unwrap();
        assert!(m.shift_to(&FeatureVector::zeros(), &FeatureScales::unit()).is_ok());
        let other = FeatureScales::new(3, 2.0).unwrap();
        assert!(matches!(
            m.shift_to(&FeatureVector::zeros(), &other),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn delta_residual_examples() {
        assert_eq!(delta_residual(5.0, 5.0), 0.0);
        assert_eq!(delta_residual(0.0, 1.0), 1.0);
        assert_eq!(delta_residual(1.0, 0.0), 1.0);
    }

    fn textured_frame(width: usize, height: usize, seed: u64) -> FeatureFrame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = FeatureFrame::new(width, height, 0.0, 1).unwrap();
        f.plane_mut(Channel::NormalZ).fill(1.0);
        for d in f.plane_mut(Channel::Depth) {
            *d = rng.random_range(2.0..4.0);
        }
        for a in f.plane_mut(Channel::AlbedoG) {
            *a = rng.random_range(0.2..0.8);
        }
        f
    }

    #[test]
    fn denoise_constant_brightness_is_identity() {
        let f = textured_frame(12, 9, 5);
        let params = WlrParams::new(3, DEFAULT_RIDGE, FeatureScales::for_frame(&f, 3).unwrap()).unwrap();
        let plane = vec![-1.25; f.pixels()];
        let out = denoise_log_plane(&f, &plane, &params).unwrap();
        assert!(out.iter().all(|v| (v + 1.25).abs() < 1e-12));
    }

    #[test]
    fn denoise_reproduces_affine_data_and_is_idempotent() {
        let f = textured_frame(16, 12, 9);
        let params = WlrParams::new(3, 0.0, FeatureScales::for_frame(&f, 3).unwrap()).unwrap();
        let plane: Vec<f64> = (0..f.pixels())
            .map(|i| {
                let (x, y) = ((i % 16) as f64, (i / 16) as f64);
                0.5 + 0.03 * x - 0.02 * y - 0.7 * f.plane(Channel::Depth)[i] as f64
                    + 1.5 * f.plane(Channel::AlbedoG)[i] as f64
            })
            .collect();
        let once = denoise_log_plane(&f, &plane, &params).unwrap();
        let twice = denoise_log_plane(&f, &once, &params).unwrap();
        for i in 0..plane.len() {
            assert!((once[i] - plane[i]).abs() < 1e-8, "pixel {i}");
            assert!((twice[i] - once[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn denoise_reduces_error_on_noisy_ramp() {
        let f = textured_frame(32, 32, 13);
        let params = WlrParams::new(3, DEFAULT_RIDGE, FeatureScales::for_frame(&f, 3).unwrap()).unwrap();
        let clean: Vec<f64> = (0..f.pixels()).map(|i| 0.05 * (i % 32) as f64 - 1.0).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let noisy: Vec<f64> = clean
            .iter()
            .map(|v| v + rand_distr::Distribution::<f64>::sample(&rand_distr::StandardNormal, &mut rng) * 0.2f64)
            .collect();
        let out = denoise_log_plane(&f, &noisy, &params).unwrap();
        let mse = |a: &[f64]| a.iter().zip(&clean).map(|(p, q)| (p - q).powi(2)).sum::<f64>() / a.len() as f64;
        let (before, after) = (mse(&noisy), mse(&out));
        assert!(after < before, "mse {after} !< {before}");
        assert!(after < 0.5 * before);
    }

    #[test]
    fn gather_clamps_at_borders() {
        let f = textured_frame(10, 10, 2);
        let params = WlrParams::new(3, DEFAULT_RIDGE, FeatureScales::for_frame(&f, 3).unwrap()).unwrap();
        let plane = vec![0.0; 100];
        assert_eq!(Window::gather(&f, &plane, 0, 0, &params).neighbors().len(), 16);
        assert_eq!(Window::gather(&f, &plane, 5, 5, &params).neighbors().len(), 49);
        assert_eq!(Window::gather(&f, &plane, 9, 4, &params).neighbors().len(), 28);
        let w = Window::gather(&f, &plane, 5, 5, &params);
        let center = w.neighbors().iter().find(|n| n.offset == [0.0; FEATURE_DIM]).unwrap();
        assert_eq!(center.weight, 1.0);
    }
}
