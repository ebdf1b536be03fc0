//! Beat detection: R peaks in filtered ECG, systolic peaks in filtered BVP.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{Modality, Waveform};

/// Moving-average window spanning one QRS complex.
pub const QRS_WINDOW_S: f64 = 0.097;
/// Moving-average window spanning one beat.
pub const BEAT_WINDOW_S: f64 = 0.611;
/// Offset of the block threshold, as a fraction of the mean squared signal.
pub const BLOCK_OFFSET_BETA: f64 = 0.08;
/// Shortest block accepted as a QRS complex.
pub const MIN_QRS_S: f64 = 0.080;
/// Minimum spacing between systolic peaks (180 bpm).
pub const MIN_PEAK_DISTANCE_S: f64 = 0.333;
/// Minimum recording length accepted by both detectors.
pub const MIN_DURATION_S: f64 = 2.0;

/// Detected beat locations.
///
/// `indices` are strictly increasing. `times_s` are the same beats at sub-sample
/// resolution, strictly increasing and within a few samples of `indices / rate_hz`.
/// `heights` holds the detection-signal value at each index (squared ECG, filtered BVP).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakSeries {
    pub indices: Vec<usize>,
    pub times_s: Vec<f64>,
    pub heights: Vec<f64>,
    pub rate_hz: f64,
    pub modality: Modality,
}

impl PeakSeries {
    fn from_indices(indices: Vec<usize>, detection: &[f64], rate_hz: f64, modality: Modality) -> Self {
        let times_s = indices
            .iter()
            .map(|&i| (i as f64 + vertex_offset(detection, i)) / rate_hz)
            .collect();
        let heights = indices.iter().map(|&i| detection[i]).collect();
        Self {
            indices,
            times_s,
            heights,
            rate_hz,
            modality,
        }
    }

    /// Peaks at the given times, without height information.
    pub fn from_times(times_s: &[f64], rate_hz: f64, modality: Modality) -> Self {
        Self {
            indices: times_s.iter().map(|t| (t * rate_hz).round() as usize).collect(),
            times_s: times_s.to_vec(),
            heights: vec![0.0; times_s.len()],
            rate_hz,
            modality,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Debug dump, one `index,time_s,height` row per peak.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let mut write = || -> std::io::Result<()> {
            writeln!(out, "index,time_s,height")?;
            for ((i, t), h) in self.indices.iter().zip(&self.times_s).zip(&self.heights) {
                writeln!(out, "{i},{t},{h}")?;
            }
            out.flush()
        };
        write().map_err(|e| Error::io(path, e))
    }
}

/// Sub-sample offset of the parabola through the three samples around `i`, in [-0.5, 0.5].
fn vertex_offset(x: &[f64], i: usize) -> f64 {
    if i == 0 || i + 1 >= x.len() {
        return 0.0;
    }
    let (l, c, r) = (x[i - 1], x[i], x[i + 1]);
    let curvature = l - 2.0 * c + r;
    if curvature >= 0.0 {
        return 0.0;
    }
    (0.5 * (l - r) / curvature).clamp(-0.5, 0.5)
}

fn check_duration(w: &Waveform) -> Result<()> {
    if w.duration_s() < MIN_DURATION_S {
        return Err(Error::InsufficientData(format!(
            "beat detection needs at least {MIN_DURATION_S} s of signal, got {:.3} s",
            w.duration_s()
        )));
    }
    Ok(())
}

/// Centered moving average; windows are truncated at the edges.
fn moving_average(x: &[f64], window: usize) -> Vec<f64> {
    let n = x.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in x {
        acc += v;
        prefix.push(acc);
    }
    let half_left = window / 2;
    let half_right = window - 1 - half_left;
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half_left);
            let hi = (i + half_right + 1).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// R-peak detection with two moving averages over the squared signal.
///
/// Blocks of interest are the runs where the QRS-scale average exceeds the
/// beat-scale average plus `BLOCK_OFFSET_BETA * mean(x^2)`. Runs shorter than
/// `MIN_QRS_S` are dropped; each remaining run yields the position of its
/// largest squared sample.
pub fn detect_r_peaks(w: &Waveform) -> Result<PeakSeries> {
    check_duration(w)?;
    let rate = w.rate_hz();
    let squared: Vec<f64> = w.samples().iter().map(|v| v * v).collect();
    let qrs_len = ((QRS_WINDOW_S * rate).round() as usize).max(1);
    let beat_len = ((BEAT_WINDOW_S * rate).round() as usize).max(1);
    let ma_qrs = moving_average(&squared, qrs_len);
    let ma_beat = moving_average(&squared, beat_len);
    let offset = BLOCK_OFFSET_BETA * squared.iter().sum::<f64>() / squared.len() as f64;
    let min_block = MIN_QRS_S * rate;

    let mut peaks = Vec::new();
    let mut start = None;
    for i in 0..=squared.len() {
        let inside = i < squared.len() && ma_qrs[i] > ma_beat[i] + offset;
        match (inside, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if (i - s) as f64 >= min_block {
                    let best = (s..i)
                        .max_by(|&a, &b| squared[a].total_cmp(&squared[b]).then(b.cmp(&a)))
                        .expect("non-empty block");
                    peaks.push(best);
                }
                start = None;
            }
            _ => {}
        }
    }
    let mut p = PeakSeries::from_indices(peaks, &squared, rate, Modality::Ecg);
    settle_times(&mut p, 0.0);
    Ok(p)
}

/// Linear-interpolated quantile of sorted data, `q` in [0, 1].
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn local_maxima(x: &[f64]) -> Vec<usize> {
    (1..x.len().saturating_sub(1))
        .filter(|&i| x[i] > x[i - 1] && x[i] > x[i + 1])
        .collect()
}

/// Quantile of the spaced candidate heights that anchors the threshold.
pub const HEIGHT_QUANTILE: f64 = 0.75;
/// Fraction of that quantile a peak must reach.
pub const HEIGHT_FRACTION: f64 = 0.5;

/// Height threshold derived from the distribution of candidate heights:
/// `HEIGHT_FRACTION` times their `HEIGHT_QUANTILE` quantile. Empty input gives +inf.
pub fn height_threshold(heights: &[f64]) -> f64 {
    if heights.is_empty() {
        return f64::INFINITY;
    }
    let mut sorted = heights.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    HEIGHT_FRACTION * quantile_sorted(&sorted, HEIGHT_QUANTILE)
}

/// Pulse template span before and after the apex.
const TEMPLATE_BEFORE_S: f64 = 0.3;
const TEMPLATE_AFTER_S: f64 = 0.3;
/// Template grid points per sample period.
const OVERSAMPLE: usize = 8;
const ALIGN_PASSES: usize = 3;
/// Half-width of the window fitted around the template maximum.
const APEX_FIT_S: f64 = 0.08;

/// Ensemble-average pulse on a grid `OVERSAMPLE` times finer than the signal.
struct PulseTemplate {
    before: f64,
    step: f64,
    values: Vec<f64>,
    /// Bin averages before smoothing; empty for kernels.
    raw: Vec<f64>,
}

impl PulseTemplate {
    fn window(rate: f64) -> (f64, f64) {
        (TEMPLATE_BEFORE_S.max(2.0 / rate), TEMPLATE_AFTER_S.max(2.0 / rate))
    }

    /// Samples of each beat binned by their time relative to the beat, averaged
    /// across beats, then smoothed over one sample period. `None` when fewer
    /// than three beats have a complete segment.
    fn build(x: &[f64], times: &[f64], rate: f64) -> Option<Self> {
        let (before, after) = Self::window(rate);
        let step = 1.0 / (rate * OVERSAMPLE as f64);
        let bins = ((before + after) / step).round() as usize + 1;
        let mut sum = vec![0.0; bins];
        let mut count = vec![0usize; bins];
        let mut used = 0;
        for &t in times {
            let lo = ((t - before) * rate).ceil();
            let hi = ((t + after) * rate).floor();
            if lo < 0.0 || hi >= x.len() as f64 {
                continue;
            }
            let (lo, hi) = (lo as usize, hi as usize);
            let mean = x[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64;
            for (j, v) in x.iter().enumerate().take(hi + 1).skip(lo) {
                let rel = j as f64 / rate - t;
                let bin = (((rel + before) / step).round() as usize).min(bins - 1);
                sum[bin] += v - mean;
                count[bin] += 1;
            }
            used += 1;
        }
        if used < 3 {
            return None;
        }
        let mut raw: Vec<Option<f64>> = sum
            .iter()
            .zip(&count)
            .map(|(s, &c)| (c > 0).then(|| s / c as f64))
            .collect();
        fill_gaps(&mut raw);
        let raw: Vec<f64> = raw.into_iter().map(|v| v.unwrap_or(0.0)).collect();
        let half = OVERSAMPLE / 2;
        let values = (0..bins)
            .map(|i| {
                let lo = i.saturating_sub(half);
                let hi = (i + half).min(bins - 1);
                raw[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
            })
            .collect();
        Some(Self {
            before,
            step,
            values,
            raw,
        })
    }

    fn at(&self, rel: f64) -> f64 {
        let pos = (rel + self.before) / self.step;
        if pos <= 0.0 {
            return self.values[0];
        }
        let i = pos.floor() as usize;
        if i + 1 >= self.values.len() {
            return *self.values.last().unwrap();
        }
        let f = pos - i as f64;
        self.values[i] * (1.0 - f) + self.values[i + 1] * f
    }

    /// Time of the template maximum relative to the alignment point.
    ///
    /// A least-squares cubic over `APEX_FIT_S` either side of the smoothed
    /// maximum; the cubic term absorbs the rise/fall asymmetry of the pulse.
    fn apex(&self) -> f64 {
        let i0 = (1..self.values.len() - 1)
            .max_by(|&a, &b| self.values[a].total_cmp(&self.values[b]))
            .unwrap_or(0);
        let coarse = (i0 as f64 + vertex_offset(&self.values, i0)) * self.step - self.before;
        let half = (APEX_FIT_S / self.step).round() as usize;
        let lo = i0.saturating_sub(half);
        let hi = (i0 + half).min(self.raw.len() - 1);
        let centre = i0 as f64;
        let pts: Vec<(f64, f64)> = (lo..=hi)
            .map(|i| ((i as f64 - centre) / half as f64, self.raw[i]))
            .collect();
        let Some([_, c1, c2, c3]) = fit_cubic(&pts) else {
            return coarse;
        };
        // stationary points of c1 + 2 c2 u + 3 c3 u^2, keep the maximum inside the fit
        let roots: Vec<f64> = if c3.abs() < 1e-12 * c2.abs().max(1e-300) {
            vec![-c1 / (2.0 * c2)]
        } else {
            let disc = 4.0 * c2 * c2 - 12.0 * c3 * c1;
            if disc < 0.0 {
                return coarse;
            }
            let r = disc.sqrt();
            vec![(-2.0 * c2 + r) / (6.0 * c3), (-2.0 * c2 - r) / (6.0 * c3)]
        };
        roots
            .into_iter()
            .filter(|u| u.abs() <= 1.0 && 2.0 * c2 + 6.0 * c3 * u < 0.0)
            .map(|u| (centre + u * half as f64) * self.step - self.before)
            .next()
            .unwrap_or(coarse)
    }

    /// Zero-mean template with cosine tapers on the outer fifth of each side.
    fn kernel(&self) -> Self {
        let n = self.values.len();
        let taper = |i: usize| {
            let edge = (n as f64 * 0.2).max(1.0);
            let d = i.min(n - 1 - i) as f64;
            if d >= edge {
                1.0
            } else {
                0.5 - 0.5 * (std::f64::consts::PI * d / edge).cos()
            }
        };
        let mean = self.values.iter().sum::<f64>() / n as f64;
        Self {
            before: self.before,
            step: self.step,
            values: (0..n).map(|i| (self.values[i] - mean) * taper(i)).collect(),
            raw: Vec::new(),
        }
    }
}

/// Least-squares coefficients of `c0 + c1 u + c2 u^2 + c3 u^3`.
fn fit_cubic(pts: &[(f64, f64)]) -> Option<[f64; 4]> {
    if pts.len() < 4 {
        return None;
    }
    let mut m = [[0.0; 5]; 4];
    for &(u, y) in pts {
        let p = [1.0, u, u * u, u * u * u];
        for r in 0..4 {
            for c in 0..4 {
                m[r][c] += p[r] * p[c];
            }
            m[r][4] += p[r] * y;
        }
    }
    for col in 0..4 {
        let piv = (col..4).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, piv);
        for r in 0..4 {
            if r != col {
                let f = m[r][col] / m[col][col];
                for c in col..5 {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    Some([0, 1, 2, 3].map(|i| m[i][4] / m[i][i]))
}

fn fill_gaps(v: &mut [Option<f64>]) {
    let known: Vec<usize> = (0..v.len()).filter(|&i| v[i].is_some()).collect();
    let Some((&first, &last)) = known.first().zip(known.last()) else {
        return;
    };
    for i in 0..v.len() {
        if v[i].is_some() {
            continue;
        }
        v[i] = if i < first {
            v[first]
        } else if i > last {
            v[last]
        } else {
            let r = known[known.partition_point(|&k| k < i)];
            let l = known[known.partition_point(|&k| k < i) - 1];
            let f = (i - l) as f64 / (r - l) as f64;
            Some(v[l].unwrap() * (1.0 - f) + v[r].unwrap() * f)
        };
    }
}

/// Time shift within +/-2 samples of `t` that best correlates the signal with `kernel`.
fn align(x: &[f64], t: f64, rate: f64, kernel: &PulseTemplate, after: f64) -> f64 {
    let span = 2.0 / rate;
    let steps = 4 * OVERSAMPLE;
    let lo_t = t - span;
    let before = kernel.before;
    let corr: Vec<f64> = (0..=steps)
        .map(|k| {
            let tau = lo_t + k as f64 * kernel.step;
            let lo = ((tau - before) * rate).ceil().max(0.0) as usize;
            let hi = (((tau + after) * rate).floor().max(0.0) as usize).min(x.len() - 1);
            (lo..=hi).map(|j| x[j] * kernel.at(j as f64 / rate - tau)).sum()
        })
        .collect();
    let best = (1..steps)
        .max_by(|&a, &b| corr[a].total_cmp(&corr[b]).then(b.cmp(&a)))
        .expect("non-empty search grid");
    lo_t + (best as f64 + vertex_offset(&corr, best)) * kernel.step
}

/// Sub-sample apex times refined against the ensemble-average pulse.
///
/// Starts from per-peak parabola vertices, then repeatedly builds the
/// oversampled average pulse around the current times, re-aligns every beat to
/// it by cross-correlation, and re-centers the times on the template apex.
/// Beats too close to either edge keep their parabola vertex.
fn template_times(x: &[f64], indices: &[usize], rate: f64) -> Vec<f64> {
    let mut times: Vec<f64> = indices
        .iter()
        .map(|&i| (i as f64 + vertex_offset(x, i)) / rate)
        .collect();
    let (_, after) = PulseTemplate::window(rate);
    for _ in 0..ALIGN_PASSES {
        let Some(template) = PulseTemplate::build(x, &times, rate) else {
            return times;
        };
        let kernel = template.kernel();
        let margin = 2.0 / rate;
        let end = x.len() as f64 / rate;
        let inner = |t: f64| t - kernel.before - margin >= 0.0 && t + after + margin < end;
        let aligned: Vec<f64> = times
            .iter()
            .map(|&t| if inner(t) { align(x, t, rate, &kernel, after) } else { t })
            .collect();
        // The tapered kernel shifts the correlation peak of an asymmetric pulse,
        // so the apex is measured on a template built around the aligned points.
        let Some(realigned) = PulseTemplate::build(x, &aligned, rate) else {
            return times;
        };
        let apex = realigned.apex();
        times = times
            .iter()
            .zip(&aligned)
            .map(|(&t, &a)| if inner(t) { a + apex } else { t })
            .collect();
    }
    times
}

/// Greedy spacing: visit candidates tallest first (earlier on ties) and keep
/// those at least `min_distance_s` from every kept peak.
pub fn enforce_spacing(candidates: &[usize], x: &[f64], rate_hz: f64, min_distance_s: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        x[candidates[b]]
            .total_cmp(&x[candidates[a]])
            .then(candidates[a].cmp(&candidates[b]))
    });
    let mut kept: Vec<usize> = Vec::new();
    for k in order {
        let idx = candidates[k];
        let pos = kept.partition_point(|&p| p < idx);
        let far_left = pos == 0 || (idx - kept[pos - 1]) as f64 / rate_hz >= min_distance_s;
        let far_right = pos == kept.len() || (kept[pos] - idx) as f64 / rate_hz >= min_distance_s;
        if far_left && far_right {
            kept.insert(pos, idx);
        }
    }
    kept
}

/// Systolic peaks in a band-passed BVP signal.
///
/// Candidates are the strict local maxima. They are thinned so that no two
/// are closer than `MIN_PEAK_DISTANCE_S` (the taller wins, the earlier on
/// ties), then those below `height_threshold` of the survivors' heights are
/// dropped. Times are refined against the recording's average pulse.
pub fn detect_systolic_peaks(w: &Waveform) -> Result<PeakSeries> {
    check_duration(w)?;
    let x = w.samples();
    let rate = w.rate_hz();
    let candidates = local_maxima(x);
    let spaced = enforce_spacing(&candidates, x, rate, MIN_PEAK_DISTANCE_S);
    let heights: Vec<f64> = spaced.iter().map(|&i| x[i]).collect();
    let threshold = height_threshold(&heights);
    let kept: Vec<usize> = spaced.into_iter().filter(|&i| x[i] >= threshold).collect();
    let mut p = PeakSeries::from_indices(kept, x, rate, Modality::Bvp);
    p.times_s = template_times(x, &p.indices, rate);
    settle_times(&mut p, MIN_PEAK_DISTANCE_S);
    Ok(p)
}

/// Puts refined times that come closer than `min_gap_s` to a neighbour (or
/// out of order) back on their sample grid, where the spacing holds by
/// construction.
fn settle_times(p: &mut PeakSeries, min_gap_s: f64) {
    loop {
        let bad = (1..p.times_s.len()).find(|&k| {
            let gap = p.times_s[k] - p.times_s[k - 1];
            gap <= 0.0 || gap < min_gap_s
        });
        let Some(k) = bad else { return };
        let mut changed = false;
        for j in [k - 1, k] {
            let grid = p.indices[j] as f64 / p.rate_hz;
            if p.times_s[j] != grid {
                p.times_s[j] = grid;
                changed = true;
            }
        }
        if !changed {
            return;
        }
    }
}
