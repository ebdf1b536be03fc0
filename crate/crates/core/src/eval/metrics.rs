use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hrv::Label;

/// Counts with stress as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Tallies labeled pairs; unlabeled truths are skipped.
    pub fn from_labels(truth: impl IntoIterator<Item = (Label, Label)>) -> Self {
        let mut c = Confusion::default();
        for (t, p) in truth {
            match (t, p) {
                (Label::Stress, Label::Stress) => c.tp += 1,
                (Label::Stress, _) => c.fn_ += 1,
                (Label::NoStress, Label::Stress) => c.fp += 1,
                (Label::NoStress, _) => c.tn += 1,
                (Label::Unlabeled, _) => {}
            }
        }
        c
    }

    pub fn add(&mut self, o: &Confusion) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
        self.tn += o.tn;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub f1_pos: f64,
    pub f1_macro: f64,
}

fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let d = 2 * tp + fp + fn_;
    if d == 0 {
        0.0
    } else {
        2.0 * tp as f64 / d as f64
    }
}

/// Accuracy, stress-class F1, and the mean of both classes' F1. A zero
/// denominator gives an F1 of 0.
pub fn metrics(c: &Confusion) -> Result<Metrics> {
    if c.total() == 0 {
        return Err(Error::InsufficientData("confusion matrix is empty".into()));
    }
    let f1_pos = f1(c.tp, c.fp, c.fn_);
    let f1_neg = f1(c.tn, c.fn_, c.fp);
    Ok(Metrics {
        accuracy: (c.tp + c.tn) as f64 / c.total() as f64,
        f1_pos,
        f1_macro: (f1_pos + f1_neg) / 2.0,
    })
}

/// Unweighted mean and population standard deviation of each metric.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: Metrics,
    pub std: Metrics,
}

impl Summary {
    pub fn of(ms: &[Metrics]) -> Self {
        if ms.is_empty() {
            return Self::default();
        }
        let n = ms.len() as f64;
        let stat = |get: fn(&Metrics) -> f64| {
            let mean = ms.iter().map(get).sum::<f64>() / n;
            let var = ms.iter().map(|m| (get(m) - mean).powi(2)).sum::<f64>() / n;
            (mean, var.sqrt())
        };
        let (a, sa) = stat(|m| m.accuracy);
        let (p, sp) = stat(|m| m.f1_pos);
        let (q, sq) = stat(|m| m.f1_macro);
        Self {
            n: ms.len(),
            mean: Metrics {
                accuracy: a,
                f1_pos: p,
                f1_macro: q,
            },
            std: Metrics {
                accuracy: sa,
                f1_pos: sp,
                f1_macro: sq,
            },
        }
    }
}
