//! HRV-based binary stress detection.
//!
//! The crate covers the whole chain from raw ECG/BVP samples to evaluation
//! reports:
//!
//! - [`signal`]: waveforms and zero-phase Butterworth band-pass preprocessing
//! - [`peaks`]: R-peak (two moving averages) and systolic-peak detection
//! - [`hrv`]: inter-beat intervals, 60 s windows, 22 HRV features, per-participant min-max normalization
//! - [`dataset`]: manifests, labeling schemes, feature tables
//! - [`models`]: random forest, linear SVM and MLP classifiers
//! - [`eval`]: within-dataset LOSO, cross-dataset and combined-dataset protocols
//! - [`synth`]: synthetic signals and feature sets with ground truth

pub mod dataset;
pub mod error;
pub mod eval;
pub mod hrv;
pub mod models;
pub mod peaks;
pub mod seed;
pub mod signal;
pub mod synth;

pub use error::{Error, Result};
