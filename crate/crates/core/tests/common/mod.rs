//! Independent reference implementations shared by the integration tests and
//! the acceptance suite.
#![allow(dead_code)]

use evsim_core::frame::{FeatureVector, FEATURE_DIM};
use evsim_core::metrics::MISSING_POLARITY_PENALTY;
use evsim_core::wlr::{self, FeatureScales, Neighbor, Window};
use evsim_core::{Event, EventStream, Polarity, StreamMeta};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// A 7x7 window of random normalized offsets (the center sample has offset 0)
/// with Gaussian weights and arbitrary observations. Channels listed in
/// `flat` get zero offsets everywhere.
pub fn random_window(rng: &mut ChaCha8Rng, flat: &[usize]) -> Window {
    let mut neighbors = Vec::with_capacity(49);
    for i in 0..49 {
        let mut offset = [0.0; FEATURE_DIM];
        if i != 24 {
            for (j, o) in offset.iter_mut().enumerate() {
                if !flat.contains(&j) {
                    *o = 0.6 * normal(rng);
                }
            }
        }
        let w = wlr::weight(&FeatureVector(offset), 1.0);
        neighbors.push(Neighbor {
            offset,
            y: 2.0 * normal(rng) - 1.0,
            weight: w,
        });
    }
    Window::from_neighbors((3, 3), FeatureVector::zeros(), FeatureScales::unit(), neighbors).unwrap()
}

/// Replaces the observations of `window` with an exact affine function.
pub fn affine_window(window: &Window, alpha: f64, beta: &[f64; FEATURE_DIM]) -> Window {
    let neighbors = window
        .neighbors()
        .iter()
        .map(|n| Neighbor {
            y: alpha + (0..FEATURE_DIM).map(|j| beta[j] * n.offset[j]).sum::<f64>(),
            ..*n
        })
        .collect();
    Window::from_neighbors(window.center(), *window.center_feature(), *window.scales(), neighbors).unwrap()
}

/// Minimizes `(1/W) sum w_i (y_i - alpha - beta . z_i)^2 + ridge |beta|^2` by
/// SVD least squares on the explicitly weighted, ridge-augmented design.
pub fn wlr_oracle(window: &Window, ridge: f64) -> (f64, [f64; FEATURE_DIM]) {
    let n = window.neighbors().len();
    let cols = FEATURE_DIM + 1;
    let mut a = DMatrix::<f64>::zeros(n + FEATURE_DIM, cols);
    let mut b = DVector::<f64>::zeros(n + FEATURE_DIM);
    let total = window.weight_sum();
    for (i, s) in window.neighbors().iter().enumerate() {
        let sw = (s.weight / total).sqrt();
        a[(i, 0)] = sw;
        for j in 0..FEATURE_DIM {
            a[(i, j + 1)] = sw * s.offset[j];
        }
        b[i] = sw * s.y;
    }
    for j in 0..FEATURE_DIM {
        a[(n + j, j + 1)] = ridge.sqrt();
    }
    let x = a.svd(true, true).solve(&b, 1e-14).unwrap();
    let mut beta = [0.0; FEATURE_DIM];
    for j in 0..FEATURE_DIM {
        beta[j] = x[j + 1];
    }
    (x[0], beta)
}

/// Weighted objective evaluated by direct summation.
pub fn objective(window: &Window, alpha: f64, beta: &[f64; FEATURE_DIM]) -> f64 {
    let mut acc = 0.0;
    for s in window.neighbors() {
        let pred: f64 = alpha + (0..FEATURE_DIM).map(|j| beta[j] * s.offset[j]).sum::<f64>();
        acc += s.weight * (s.y - pred).powi(2);
    }
    acc / window.weight_sum()
}

pub fn random_stream(rng: &mut ChaCha8Rng, max_events: usize, meta: StreamMeta) -> EventStream {
    let n = rng.random_range(0..=max_events);
    let frames = meta.frame_count.max(2);
    let events = (0..n)
        .map(|_| {
            let k = rng.random_range(0..frames);
            Event::new(
                k as f64 * meta.dt,
                rng.random_range(0..meta.width),
                rng.random_range(0..meta.height),
                if rng.random_bool(0.5) { Polarity::Positive } else { Polarity::Negative },
            )
        })
        .collect();
    evsim_core::canonical_sort(EventStream::new(events, meta))
}

/// Precision, recall, F1 and chamfer distance by exhaustive pairwise search.
pub struct BruteMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub chamfer: f64,
}

fn unit_cube(e: &Event, meta: &StreamMeta) -> [f64; 3] {
    [
        e.x as f64 / meta.width as f64,
        e.y as f64 / meta.height as f64,
        e.t / meta.duration,
    ]
}

/// Distances from each event of `from` to the closest same-polarity event of
/// `to`, positive events first, each block in input order.
fn brute_distances(from: &EventStream, to: &EventStream) -> Vec<f64> {
    let mut out = Vec::new();
    for p in [Polarity::Positive, Polarity::Negative] {
        for a in from.events.iter().filter(|e| e.p == p) {
            let qa = unit_cube(a, &from.meta);
            let mut best = f64::INFINITY;
            for b in to.events.iter().filter(|e| e.p == p) {
                let qb = unit_cube(b, &to.meta);
                let d = ((qa[0] - qb[0]).powi(2) + (qa[1] - qb[1]).powi(2) + (qa[2] - qb[2]).powi(2)).sqrt();
                if d < best {
                    best = d;
                }
            }
            out.push(best);
        }
    }
    out
}

pub fn brute_metrics(detected: &EventStream, reference: &EventStream, tau: f64) -> BruteMetrics {
    let dg = brute_distances(detected, reference);
    let gd = brute_distances(reference, detected);
    let frac = |d: &[f64]| {
        if d.is_empty() {
            1.0
        } else {
            d.iter().filter(|v| **v < tau).count() as f64 / d.len() as f64
        }
    };
    let mean = |d: &[f64]| {
        if d.is_empty() {
            0.0
        } else {
            d.iter().map(|v| if v.is_finite() { *v } else { MISSING_POLARITY_PENALTY }).sum::<f64>() / d.len() as f64
        }
    };
    let (precision, recall) = (frac(&dg), frac(&gd));
    let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
    BruteMetrics {
        precision,
        recall,
        f1,
        chamfer: mean(&dg) + mean(&gd),
    }
}
