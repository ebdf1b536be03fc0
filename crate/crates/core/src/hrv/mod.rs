//! Inter-beat intervals, 60 s windows and the 22 HRV features.

mod freq;
mod ibi;
mod normalize;
mod poincare;
mod time;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use freq::{freq_features, welch_psd, FreqFeatures, HF_BAND, LF_BAND, LF_HF_SENTINEL, RESAMPLE_HZ};
pub use ibi::{
    ibis_from_peaks, segment_windows, IbiSeries, IbiWindow, Segmentation, HOP_S, MIN_WINDOW_INTERVALS, PLAUSIBLE_MS,
    WINDOW_S,
};
pub use normalize::{apply_normalization, fit_normalization, NormalizationParams, NORMALIZATION_BUDGET_S};
pub use poincare::{poincare_features, PoincareFeatures};
pub use time::{time_features, TimeFeatures};

pub const N_FEATURES: usize = 22;

/// Feature names in table order: 13 time domain, 5 frequency domain, 4 Poincaré.
pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "MeanNN",
    "SDNN",
    "RMSSD",
    "SDSD",
    "CVNN",
    "CVSD",
    "MedianNN",
    "MadNN",
    "MCVNN",
    "IQRNN",
    "pNN20",
    "pNN50",
    "RangeNN",
    "LF",
    "HF",
    "LF_HF",
    "LFnu",
    "HFnu",
    "SD1",
    "SD2",
    "SD1_SD2",
    "EllipseArea",
];

/// The 22 features of one window, in `FEATURE_NAMES` order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; N_FEATURES]);

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURE_NAMES.iter().position(|n| *n == name).map(|i| self.0[i])
    }

    pub fn values(&self) -> &[f64; N_FEATURES] {
        &self.0
    }
}

/// Spectral conditions worth surfacing next to a window's features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct WindowFlags {
    /// HF power was zero, so LF_HF holds `LF_HF_SENTINEL`.
    pub lf_hf_sentinel: bool,
    /// LF + HF was zero, so LFnu and HFnu are 0.
    pub spectrum_degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    NoStress,
    Stress,
    Unlabeled,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::NoStress => "no_stress",
            Label::Stress => "stress",
            Label::Unlabeled => "unlabeled",
        }
    }

    /// 1 for stress, 0 for no stress.
    pub fn target(self) -> Option<u8> {
        match self {
            Label::NoStress => Some(0),
            Label::Stress => Some(1),
            Label::Unlabeled => None,
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "no_stress" => Ok(Label::NoStress),
            "stress" => Ok(Label::Stress),
            "unlabeled" => Ok(Label::Unlabeled),
            other => Err(Error::InvalidSpec(format!("unknown label {other:?}"))),
        }
    }
}

/// One 60 s window with its features and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureWindow {
    pub start_s: f64,
    pub end_s: f64,
    pub features: FeatureVector,
    pub label: Label,
    pub participant_id: String,
    pub dataset_id: String,
    pub condition_id: String,
    #[serde(default)]
    pub flags: WindowFlags,
}

/// All 22 features of a window.
pub fn extract_features(w: &IbiSeries) -> Result<(FeatureVector, WindowFlags)> {
    let t = time_features(w)?;
    let f = freq_features(w)?;
    let p = poincare_features(w)?;
    let mut v = [0.0; N_FEATURES];
    v[..13].copy_from_slice(&t.to_array());
    v[13..18].copy_from_slice(&f.to_array());
    v[18..].copy_from_slice(&p.to_array());
    let flags = WindowFlags {
        lf_hf_sentinel: f.lf_hf_sentinel,
        spectrum_degenerate: f.degenerate,
    };
    Ok((FeatureVector(v), flags))
}

pub(crate) fn require_intervals(w: &IbiSeries, what: &str) -> Result<()> {
    if w.len() < MIN_WINDOW_INTERVALS {
        return Err(Error::InsufficientData(format!(
            "{what} need at least {MIN_WINDOW_INTERVALS} intervals, got {}",
            w.len()
        )));
    }
    Ok(())
}
