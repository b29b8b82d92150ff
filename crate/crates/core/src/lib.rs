//! Event-camera streams from noisy, feature-augmented frame sequences.
//!
//! Frames carry linear irradiance plus per-pixel auxiliary features (normal,
//! depth, albedo). Detectors turn a sequence into polarity events:
//!
//! * [`detect::detect_esim`] thresholds raw log brightness per pixel,
//! * [`detect::detect_wlr_esim`] denoises every frame with a weighted local
//!   regression on the features first,
//! * [`detect::detect_reduced_wlr`] keeps one regression per pixel and refits
//!   it only when the feature shift predicts a super-threshold change.
//!
//! [`synth`] generates test scenes with a clean-signal oracle and [`metrics`]
//! scores detected streams against a reference.

pub mod detect;
pub mod error;
pub mod event;
pub mod frame;
pub mod io;
pub mod metrics;
mod par;
pub mod render;
pub mod synth;
pub mod wlr;

pub use detect::{detect, DetectorConfig, Method, RunStats};
pub use error::{Error, Result};
pub use event::{canonical_sort, Event, EventStream, Polarity, StreamMeta};
pub use frame::{Channel, FeatureFrame, FeatureVector};
pub use metrics::{MetricReport, DEFAULT_TAU};
pub use synth::{NoiseSpec, SceneKind, SceneSpec};
