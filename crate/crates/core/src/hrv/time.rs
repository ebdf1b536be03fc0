use serde::{Deserialize, Serialize};

use super::{require_intervals, IbiSeries};
use crate::error::Result;
use crate::peaks::quantile_sorted;

/// Scale that makes the median absolute deviation consistent with the
/// standard deviation of a normal distribution.
const MAD_SCALE: f64 = 1.4826;

/// Time-domain features. Lengths in ms, pNN in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeFeatures {
    pub mean_nn: f64,
    /// Sample standard deviation (n - 1).
    pub sdnn: f64,
    pub rmssd: f64,
    /// Sample standard deviation of successive differences.
    pub sdsd: f64,
    pub cvnn: f64,
    pub cvsd: f64,
    pub median_nn: f64,
    pub mad_nn: f64,
    pub mcvnn: f64,
    pub iqr_nn: f64,
    /// Share of successive differences strictly above 20 ms.
    pub pnn20: f64,
    pub pnn50: f64,
    pub range_nn: f64,
}

impl TimeFeatures {
    pub fn to_array(&self) -> [f64; 13] {
        [
            self.mean_nn,
            self.sdnn,
            self.rmssd,
            self.sdsd,
            self.cvnn,
            self.cvsd,
            self.median_nn,
            self.mad_nn,
            self.mcvnn,
            self.iqr_nn,
            self.pnn20,
            self.pnn50,
            self.range_nn,
        ]
    }
}

pub(crate) fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sum of squared deviations from the mean.
pub(crate) fn sum_sq_dev(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum()
}

fn sorted(x: &[f64]) -> Vec<f64> {
    let mut s = x.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    s
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub fn time_features(w: &IbiSeries) -> Result<TimeFeatures> {
    require_intervals(w, "time-domain features")?;
    let x = w.intervals_ms();
    let n = x.len() as f64;
    let diffs: Vec<f64> = x.windows(2).map(|p| p[1] - p[0]).collect();
    let nd = diffs.len() as f64;

    let mean_nn = mean(x);
    let sdnn = (sum_sq_dev(x) / (n - 1.0)).sqrt();
    let rmssd = (diffs.iter().map(|d| d * d).sum::<f64>() / nd).sqrt();
    let sdsd = (sum_sq_dev(&diffs) / (nd - 1.0)).sqrt();

    let s = sorted(x);
    let median_nn = quantile_sorted(&s, 0.5);
    let abs_dev = sorted(&x.iter().map(|v| (v - median_nn).abs()).collect::<Vec<_>>());
    let mad_nn = MAD_SCALE * quantile_sorted(&abs_dev, 0.5);
    let iqr_nn = quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25);
    let above = |limit: f64| 100.0 * diffs.iter().filter(|d| d.abs() > limit).count() as f64 / nd;

    Ok(TimeFeatures {
        mean_nn,
        sdnn,
        rmssd,
        sdsd,
        cvnn: ratio(sdnn, mean_nn),
        cvsd: ratio(rmssd, mean_nn),
        median_nn,
        mad_nn,
        mcvnn: ratio(mad_nn, median_nn),
        iqr_nn,
        pnn20: above(20.0),
        pnn50: above(50.0),
        range_nn: s[s.len() - 1] - s[0],
    })
}
