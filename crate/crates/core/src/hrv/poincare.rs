use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use super::time::sum_sq_dev;
use super::{require_intervals, IbiSeries};
use crate::error::Result;

/// Poincaré plot descriptors, population statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoincareFeatures {
    pub sd1: f64,
    pub sd2: f64,
    /// 0 when SD2 is 0.
    pub sd1_sd2: f64,
    pub ellipse_area: f64,
}

impl PoincareFeatures {
    pub fn to_array(&self) -> [f64; 4] {
        [self.sd1, self.sd2, self.sd1_sd2, self.ellipse_area]
    }
}

/// SD1 is the spread across the identity line, `SDSD_pop / sqrt(2)`. SD2 is
/// taken from `SD1^2 + SD2^2 = 2 SDNN_pop^2`, so both identities hold exactly.
pub fn poincare_features(w: &IbiSeries) -> Result<PoincareFeatures> {
    require_intervals(w, "Poincaré features")?;
    let x = w.intervals_ms();
    let diffs: Vec<f64> = x.windows(2).map(|p| p[1] - p[0]).collect();
    let sdnn_pop_sq = sum_sq_dev(x) / x.len() as f64;
    let sdsd_pop_sq = sum_sq_dev(&diffs) / diffs.len() as f64;
    let sd1 = sdsd_pop_sq.sqrt() / SQRT_2;
    let sd2 = (2.0 * sdnn_pop_sq - sdsd_pop_sq / 2.0).max(0.0).sqrt();
    Ok(PoincareFeatures {
        sd1,
        sd2,
        sd1_sd2: if sd2 == 0.0 { 0.0 } else { sd1 / sd2 },
        ellipse_area: PI * sd1 * sd2,
    })
}
