//! Polarity-aware comparison of event streams as spatiotemporal point sets.
//!
//! Events are mapped to the unit cube `(x / width, y / height, t / duration)`
//! and only ever matched against events of the same polarity. Nearest-neighbor
//! queries go through a k-d tree but return exactly what a linear scan would.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::{EventStream, Polarity, StreamMeta};
use crate::par;

/// Matching distance used for headline scores, in normalized units.
pub const DEFAULT_TAU: f64 = 5.0e-4;
/// Chamfer contribution of a point whose polarity is absent from the other set
/// (the diameter of the unit cube).
pub const MISSING_POLARITY_PENALTY: f64 = 1.7320508075688772;

pub type Point3 = [f64; 3];

#[inline]
pub fn squared_distance(a: &Point3, b: &Point3) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

#[inline]
pub fn distance(a: &Point3, b: &Point3) -> f64 {
    squared_distance(a, b).sqrt()
}

/// Events split by polarity, in normalized coordinates.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NormalizedEventSet {
    pub positive: Vec<Point3>,
    pub negative: Vec<Point3>,
}

impl NormalizedEventSet {
    pub fn len(&self) -> usize {
        self.positive.len() + self.negative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, p: Polarity) -> &[Point3] {
        match p {
            Polarity::Positive => &self.positive,
            Polarity::Negative => &self.negative,
        }
    }
}

/// Scales a stream into the unit cube using its own metadata.
pub fn normalize_events(stream: &EventStream) -> Result<NormalizedEventSet> {
    let StreamMeta {
        width,
        height,
        duration,
        ..
    } = stream.meta;
    if width == 0 || height == 0 {
        return Err(Error::Config("sensor dimensions must be positive".into()));
    }
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(Error::Config(format!("duration must be > 0, got {duration}")));
    }
    let (w, h) = (width as f64, height as f64);
    let mut set = NormalizedEventSet::default();
    for e in &stream.events {
        let point = [e.x as f64 / w, e.y as f64 / h, e.t / duration];
        match e.p {
            Polarity::Positive => set.positive.push(point),
            Polarity::Negative => set.negative.push(point),
        }
    }
    Ok(set)
}

/// Static 3-d tree over a point set for exact nearest-neighbor queries.
#[derive(Clone, Debug)]
pub struct KdTree {
    points: Vec<Point3>,
}

impl KdTree {
    pub fn new(points: &[Point3]) -> Self {
        let mut points = points.to_vec();
        build(&mut points, 0);
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Euclidean distance to the closest point; `+inf` for an empty tree.
    pub fn nearest(&self, q: &Point3) -> f64 {
        if self.points.is_empty() {
            return f64::INFINITY;
        }
        let mut best = (f64::INFINITY, 0usize);
        self.search(q, 0, self.points.len(), 0, &mut best);
        distance(q, &self.points[best.1])
    }

    fn search(&self, q: &Point3, lo: usize, hi: usize, depth: usize, best: &mut (f64, usize)) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let p = &self.points[mid];
        let d2 = squared_distance(q, p);
        if d2 < best.0 {
            *best = (d2, mid);
        }
        let axis = depth % 3;
        let diff = q[axis] - p[axis];
        let (near, far) = if diff < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.search(q, near.0, near.1, depth + 1, best);
        if diff * diff <= best.0 {
            self.search(q, far.0, far.1, depth + 1, best);
        }
    }
}

fn build(points: &mut [Point3], depth: usize) {
    if points.len() <= 1 {
        return;
    }
    let axis = depth % 3;
    let mid = points.len() / 2;
    points.select_nth_unstable_by(mid, |a, b| a[axis].total_cmp(&b[axis]));
    let (left, rest) = points.split_at_mut(mid);
    build(left, depth + 1);
    build(&mut rest[1..], depth + 1);
}

/// Distance from `point` to its nearest neighbor in `set`; `+inf` when empty.
pub fn nn_distance(point: &Point3, set: &KdTree) -> f64 {
    set.nearest(point)
}

fn same_polarity_distances(from: &NormalizedEventSet, to: &NormalizedEventSet) -> Vec<f64> {
    let pos = KdTree::new(&to.positive);
    let neg = KdTree::new(&to.negative);
    let mut out = par::map_range(from.positive.len(), |i| pos.nearest(&from.positive[i]));
    out.extend(par::map_range(from.negative.len(), |i| neg.nearest(&from.negative[i])));
    out
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub chamfer: f64,
    pub tau: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub tau: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Nearest-neighbor distances between a detected and a reference set, computed
/// once and reused for any number of thresholds.
#[derive(Clone, Debug)]
pub struct Matcher {
    /// Detected point -> nearest same-polarity reference point (positive block first).
    detected_to_reference: Vec<f64>,
    reference_to_detected: Vec<f64>,
}

impl Matcher {
    pub fn new(detected: &NormalizedEventSet, reference: &NormalizedEventSet) -> Self {
        Self {
            detected_to_reference: same_polarity_distances(detected, reference),
            reference_to_detected: same_polarity_distances(reference, detected),
        }
    }

    /// Fraction of detected events within `tau` of a reference event; 1 if none were detected.
    pub fn precision(&self, tau: f64) -> f64 {
        fraction_within(&self.detected_to_reference, tau)
    }

    /// Fraction of reference events within `tau` of a detected event; 1 if the reference is empty.
    pub fn recall(&self, tau: f64) -> f64 {
        fraction_within(&self.reference_to_detected, tau)
    }

    pub fn chamfer(&self) -> f64 {
        mean_penalized(&self.detected_to_reference) + mean_penalized(&self.reference_to_detected)
    }

    pub fn report(&self, tau: f64) -> MetricReport {
        let (precision, recall) = (self.precision(tau), self.recall(tau));
        MetricReport {
            precision,
            recall,
            f1: f1(precision, recall),
            chamfer: self.chamfer(),
            tau,
        }
    }

    pub fn curve(&self, taus: &[f64]) -> Result<Vec<CurveRow>> {
        validate_taus(taus)?;
        Ok(taus
            .iter()
            .map(|&tau| {
                let (precision, recall) = (self.precision(tau), self.recall(tau));
                CurveRow {
                    tau,
                    precision,
                    recall,
                    f1: f1(precision, recall),
                }
            })
            .collect())
    }
}

fn fraction_within(distances: &[f64], tau: f64) -> f64 {
    if distances.is_empty() {
        return 1.0;
    }
    let hits = distances.iter().filter(|d| **d < tau).count();
    hits as f64 / distances.len() as f64
}

fn mean_penalized(distances: &[f64]) -> f64 {
    if distances.is_empty() {
        return 0.0;
    }
    let sum: f64 = distances
        .iter()
        .map(|d| if d.is_finite() { *d } else { MISSING_POLARITY_PENALTY })
        .sum();
    sum / distances.len() as f64
}

pub fn validate_taus(taus: &[f64]) -> Result<()> {
    if taus.is_empty() {
        return Err(Error::Config("tau list is empty".into()));
    }
    if taus.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
        return Err(Error::Config("tau values must be positive".into()));
    }
    if taus.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("tau list must be strictly increasing".into()));
    }
    Ok(())
}

/// Fails when two streams do not describe the same sensor and time span.
pub fn check_compatible(a: &StreamMeta, b: &StreamMeta) -> Result<()> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::Input(format!(
            "sensor size mismatch: {}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    if (a.duration - b.duration).abs() > 1e-9 * a.duration.abs().max(b.duration.abs()) {
        return Err(Error::Input(format!(
            "duration mismatch: {} vs {}",
            a.duration, b.duration
        )));
    }
    Ok(())
}

fn matcher_for(detected: &EventStream, reference: &EventStream) -> Result<Matcher> {
    check_compatible(&detected.meta, &reference.meta)?;
    Ok(Matcher::new(
        &normalize_events(detected)?,
        &normalize_events(reference)?,
    ))
}

pub fn precision(detected: &EventStream, reference: &EventStream, tau: f64) -> Result<f64> {
    validate_taus(&[tau])?;
    Ok(matcher_for(detected, reference)?.precision(tau))
}

pub fn recall(detected: &EventStream, reference: &EventStream, tau: f64) -> Result<f64> {
    validate_taus(&[tau])?;
    Ok(matcher_for(detected, reference)?.recall(tau))
}

/// Polarity-aware chamfer distance (unsquared, mean over each direction).
pub fn chamfer(a: &EventStream, b: &EventStream) -> Result<f64> {
    Ok(matcher_for(a, b)?.chamfer())
}

pub fn evaluate(detected: &EventStream, reference: &EventStream, tau: f64) -> Result<MetricReport> {
    validate_taus(&[tau])?;
    Ok(matcher_for(detected, reference)?.report(tau))
}

pub fn f1_curve(detected: &EventStream, reference: &EventStream, taus: &[f64]) -> Result<Vec<CurveRow>> {
    validate_taus(taus)?;
    matcher_for(detected, reference)?.curve(taus)
}
