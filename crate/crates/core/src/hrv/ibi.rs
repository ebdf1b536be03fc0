use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::peaks::PeakSeries;

pub const WINDOW_S: f64 = 60.0;
pub const HOP_S: f64 = 1.0;
/// Windows with fewer intervals are dropped.
pub const MIN_WINDOW_INTERVALS: usize = 10;
/// Bounds of the optional plausibility filter, ms.
pub const PLAUSIBLE_MS: (f64, f64) = (250.0, 2000.0);

/// Successive beat-to-beat intervals. `beat_times_s[i]` is the beat that ends
/// interval `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IbiSeries {
    intervals_ms: Vec<f64>,
    beat_times_s: Vec<f64>,
}

impl IbiSeries {
    /// Checks that every interval is positive and matches its beat times.
    pub fn new(intervals_ms: Vec<f64>, beat_times_s: Vec<f64>) -> Result<Self> {
        if intervals_ms.len() != beat_times_s.len() {
            return Err(Error::InvalidSpec(format!(
                "{} intervals but {} beat times",
                intervals_ms.len(),
                beat_times_s.len()
            )));
        }
        if intervals_ms.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidSpec("intervals must be finite and positive".into()));
        }
        if beat_times_s.iter().any(|t| !t.is_finite()) || beat_times_s.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSpec(
                "beat times must be finite and strictly increasing".into(),
            ));
        }
        Ok(Self {
            intervals_ms,
            beat_times_s,
        })
    }

    /// Intervals laid end to end from a first beat at `first_beat_s`.
    pub fn from_intervals(intervals_ms: &[f64], first_beat_s: f64) -> Result<Self> {
        let mut t = first_beat_s;
        let times = intervals_ms
            .iter()
            .map(|ms| {
                t += ms / 1000.0;
                t
            })
            .collect();
        Self::new(intervals_ms.to_vec(), times)
    }

    pub fn intervals_ms(&self) -> &[f64] {
        &self.intervals_ms
    }

    pub fn beat_times_s(&self) -> &[f64] {
        &self.beat_times_s
    }

    pub fn len(&self) -> usize {
        self.intervals_ms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals_ms.is_empty()
    }

    /// Time of the beat that opens the first interval.
    pub fn start_s(&self) -> f64 {
        match (self.beat_times_s.first(), self.intervals_ms.first()) {
            (Some(t), Some(ms)) => t - ms / 1000.0,
            _ => 0.0,
        }
    }

    pub fn end_s(&self) -> f64 {
        self.beat_times_s.last().copied().unwrap_or(0.0)
    }

    /// From the first beat to the last.
    pub fn span_s(&self) -> f64 {
        self.end_s() - self.start_s()
    }

    /// Intervals `range` as a new series.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            intervals_ms: self.intervals_ms[range.clone()].to_vec(),
            beat_times_s: self.beat_times_s[range].to_vec(),
        }
    }

    /// Drops intervals outside `[lo_ms, hi_ms]`; returns the filtered series
    /// and the number removed.
    pub fn retain_plausible(&self, lo_ms: f64, hi_ms: f64) -> (Self, usize) {
        let (intervals_ms, beat_times_s): (Vec<f64>, Vec<f64>) = self
            .intervals_ms
            .iter()
            .zip(&self.beat_times_s)
            .filter(|(ms, _)| (lo_ms..=hi_ms).contains(*ms))
            .map(|(ms, t)| (*ms, *t))
            .unzip();
        let removed = self.len() - intervals_ms.len();
        (
            Self {
                intervals_ms,
                beat_times_s,
            },
            removed,
        )
    }
}

/// Intervals between successive detected beats.
pub fn ibis_from_peaks(p: &PeakSeries) -> Result<IbiSeries> {
    if p.times_s.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 peaks for an interval, got {}",
            p.times_s.len()
        )));
    }
    let intervals = p.times_s.windows(2).map(|w| (w[1] - w[0]) * 1000.0).collect();
    IbiSeries::new(intervals, p.times_s[1..].to_vec())
}

/// One window of a segmented series.
#[derive(Debug, Clone, PartialEq)]
pub struct IbiWindow {
    pub start_s: f64,
    pub end_s: f64,
    pub ibi: IbiSeries,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Segmentation {
    pub windows: Vec<IbiWindow>,
    /// Windows discarded for holding fewer than `MIN_WINDOW_INTERVALS` intervals.
    pub dropped: usize,
    /// Set when the series is shorter than one window.
    pub warning: Option<String>,
}

/// Sliding windows over `ibi`, starting at its first beat.
///
/// Window `k` covers `[t0 + k*hop_s, t0 + k*hop_s + window_s)` and holds the
/// intervals whose ending beat falls inside. Windows run while they end no
/// later than the last beat, so a span of `T` gives `floor((T - window_s) / hop_s) + 1`.
pub fn segment_windows(ibi: &IbiSeries, window_s: f64, hop_s: f64) -> Result<Segmentation> {
    if !(window_s > 0.0 && hop_s > 0.0 && window_s.is_finite() && hop_s.is_finite()) {
        return Err(Error::InvalidSpec(format!("window {window_s} s / hop {hop_s} s")));
    }
    let span = ibi.span_s();
    if ibi.is_empty() || span + 1e-9 < window_s {
        return Ok(Segmentation {
            warning: Some(format!(
                "series spans {span:.3} s, shorter than one {window_s} s window"
            )),
            ..Default::default()
        });
    }
    let t0 = ibi.start_s();
    let count = ((span - window_s) / hop_s + 1e-9).floor() as usize + 1;
    let times = ibi.beat_times_s();
    let mut out = Segmentation::default();
    for k in 0..count {
        let start = t0 + k as f64 * hop_s;
        let end = start + window_s;
        let lo = times.partition_point(|&t| t < start);
        let hi = times.partition_point(|&t| t < end);
        if hi - lo < MIN_WINDOW_INTERVALS {
            out.dropped += 1;
            continue;
        }
        out.windows.push(IbiWindow {
            start_s: start,
            end_s: end,
            ibi: ibi.slice(lo..hi),
        });
    }
    Ok(out)
}
