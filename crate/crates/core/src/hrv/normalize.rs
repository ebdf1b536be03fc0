use serde::{Deserialize, Serialize};

use super::{FeatureVector, FeatureWindow, N_FEATURES};
use crate::error::{Error, Result};

/// Neutral data used for calibration, seconds from the first neutral window.
pub const NORMALIZATION_BUDGET_S: f64 = 300.0;
/// Below this many windows inside the budget, every neutral window is used.
pub const MIN_BUDGET_WINDOWS: usize = 30;

/// Per-participant, per-feature min-max scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub participant_id: String,
    pub min: [f64; N_FEATURES],
    pub max: [f64; N_FEATURES],
    /// Windows the extremes were taken over.
    pub windows_used: usize,
}

/// Feature extremes over the neutral windows that start within `budget_s` of
/// the earliest one. With fewer than `MIN_BUDGET_WINDOWS` such windows, all
/// neutral windows are used.
pub fn fit_normalization(neutral: &[FeatureWindow], budget_s: f64) -> Result<NormalizationParams> {
    let Some(first) = neutral.first() else {
        return Err(Error::Calibration("no neutral windows to calibrate on".into()));
    };
    if let Some(other) = neutral.iter().find(|w| w.participant_id != first.participant_id) {
        return Err(Error::Calibration(format!(
            "neutral windows mix participants {} and {}",
            first.participant_id, other.participant_id
        )));
    }
    let origin = neutral.iter().map(|w| w.start_s).fold(f64::INFINITY, f64::min);
    let budgeted: Vec<&FeatureWindow> = neutral.iter().filter(|w| w.start_s - origin < budget_s).collect();
    let used: Vec<&FeatureWindow> = if budgeted.len() < MIN_BUDGET_WINDOWS {
        neutral.iter().collect()
    } else {
        budgeted
    };
    let mut min = [f64::INFINITY; N_FEATURES];
    let mut max = [f64::NEG_INFINITY; N_FEATURES];
    for w in &used {
        for (i, v) in w.features.0.iter().enumerate() {
            min[i] = min[i].min(*v);
            max[i] = max[i].max(*v);
        }
    }
    Ok(NormalizationParams {
        participant_id: first.participant_id.clone(),
        min,
        max,
        windows_used: used.len(),
    })
}

/// `(x - min) / (max - min)` per feature, 0 where `max == min`. Not clamped.
pub fn apply_normalization(p: &NormalizationParams, v: &FeatureVector) -> FeatureVector {
    let mut out = [0.0; N_FEATURES];
    for i in 0..N_FEATURES {
        let range = p.max[i] - p.min[i];
        out[i] = if range > 0.0 { (v.0[i] - p.min[i]) / range } else { 0.0 };
    }
    FeatureVector(out)
}
