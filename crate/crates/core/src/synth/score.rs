//! Detection scoring against ground-truth beat annotations.

use serde::Serialize;

/// One-to-one matching of detected beats to annotated beats.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct DetectionScore {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    /// Largest |detected - true| among matched pairs, seconds.
    pub max_abs_error_s: f64,
}

impl DetectionScore {
    pub fn sensitivity(&self) -> f64 {
        ratio(self.true_positives, self.true_positives + self.false_negatives)
    }

    /// Positive predictive value.
    pub fn ppv(&self) -> f64 {
        ratio(self.true_positives, self.true_positives + self.false_positives)
    }

    /// Sums counts and keeps the worse error.
    pub fn merge(self, other: Self) -> Self {
        Self {
            true_positives: self.true_positives + other.true_positives,
            false_positives: self.false_positives + other.false_positives,
            false_negatives: self.false_negatives + other.false_negatives,
            max_abs_error_s: self.max_abs_error_s.max(other.max_abs_error_s),
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

/// Greedy matching in time order: each true beat takes the earliest unused
/// detection within `tolerance_s`. Both inputs must be sorted.
pub fn score_detections(truth_s: &[f64], detected_s: &[f64], tolerance_s: f64) -> DetectionScore {
    let mut tp = 0;
    let mut max_err: f64 = 0.0;
    let mut j = 0;
    for &t in truth_s {
        while j < detected_s.len() && detected_s[j] < t - tolerance_s {
            j += 1;
        }
        if j < detected_s.len() && (detected_s[j] - t).abs() <= tolerance_s {
            max_err = max_err.max((detected_s[j] - t).abs());
            tp += 1;
            j += 1;
        }
    }
    DetectionScore {
        true_positives: tp,
        false_positives: detected_s.len() - tp,
        false_negatives: truth_s.len() - tp,
        max_abs_error_s: max_err,
    }
}
