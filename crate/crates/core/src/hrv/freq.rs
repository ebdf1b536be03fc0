use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{require_intervals, IbiSeries};
use crate::error::{Error, Result};

/// Rate of the evenly resampled interval series.
pub const RESAMPLE_HZ: f64 = 4.0;
/// Welch segment length.
pub const SEGMENT_S: f64 = 32.0;
pub const LF_BAND: (f64, f64) = (0.04, 0.15);
pub const HF_BAND: (f64, f64) = (0.15, 0.40);
/// LF_HF reported when HF power is zero.
pub const LF_HF_SENTINEL: f64 = 1e9;
/// Band power at or below this, in ms^2, counts as zero.
pub const ZERO_POWER_MS2: f64 = 1e-9;
/// Shortest window the spectrum is estimated on.
pub const MIN_SPAN_S: f64 = 30.0;

/// Frequency-domain features. Powers in ms^2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreqFeatures {
    pub lf: f64,
    pub hf: f64,
    pub lf_hf: f64,
    pub lf_nu: f64,
    pub hf_nu: f64,
    /// HF was zero and LF was not; `lf_hf` is `LF_HF_SENTINEL`.
    pub lf_hf_sentinel: bool,
    /// LF + HF was zero; `lf_hf`, `lf_nu` and `hf_nu` are 0.
    pub degenerate: bool,
}

impl FreqFeatures {
    pub fn to_array(&self) -> [f64; 5] {
        [self.lf, self.hf, self.lf_hf, self.lf_nu, self.hf_nu]
    }
}

/// Second derivatives of the natural cubic spline through `(x, y)`.
fn spline_second_derivatives(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    // Thomas algorithm on the interior equations
    let mut diag = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        let lower = h0 / 6.0;
        diag[i] = (h0 + h1) / 3.0;
        upper[i] = h1 / 6.0;
        rhs[i] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
        if i > 1 {
            let f = lower / diag[i - 1];
            diag[i] -= f * upper[i - 1];
            rhs[i] -= f * rhs[i - 1];
        }
    }
    for i in (1..n - 1).rev() {
        let next = if i + 1 < n - 1 { m[i + 1] } else { 0.0 };
        m[i] = (rhs[i] - upper[i] * next) / diag[i];
    }
    m
}

/// Natural cubic spline through `(x, y)` evaluated at sorted `at`, all inside `[x0, xn]`.
fn spline_eval(x: &[f64], y: &[f64], at: &[f64]) -> Vec<f64> {
    let m = spline_second_derivatives(x, y);
    let mut seg = 0;
    at.iter()
        .map(|&t| {
            while seg + 2 < x.len() && t > x[seg + 1] {
                seg += 1;
            }
            let h = x[seg + 1] - x[seg];
            let a = (x[seg + 1] - t) / h;
            let b = (t - x[seg]) / h;
            a * y[seg] + b * y[seg + 1] + ((a * a * a - a) * m[seg] + (b * b * b - b) * m[seg + 1]) * h * h / 6.0
        })
        .collect()
}

/// Intervals against their ending beat times, resampled at `RESAMPLE_HZ`
/// from the first to the last beat, mean removed.
pub(crate) fn resample(w: &IbiSeries) -> Vec<f64> {
    let t = w.beat_times_s();
    let t0 = t[0];
    let n = ((t[t.len() - 1] - t0) * RESAMPLE_HZ + 1e-9).floor() as usize + 1;
    let grid: Vec<f64> = (0..n).map(|i| t0 + i as f64 / RESAMPLE_HZ).collect();
    let mut y = spline_eval(t, w.intervals_ms(), &grid);
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    y.iter_mut().for_each(|v| *v -= mean);
    y
}

/// One-sided Welch power spectral density (units^2/Hz).
///
/// Segments of `nperseg` samples overlap by half; each is mean-removed and
/// Hann-windowed (periodic). Input shorter than `nperseg` is treated as a
/// single segment. Returns `(frequencies, psd)`.
pub fn welch_psd(x: &[f64], fs: f64, nperseg: usize) -> (Vec<f64>, Vec<f64>) {
    let seg_len = nperseg.min(x.len()).max(1);
    let hop = (seg_len / 2).max(1);
    let window: Vec<f64> = (0..seg_len)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / seg_len as f64).cos())
        .collect();
    let scale = fs * window.iter().map(|w| w * w).sum::<f64>();
    let bins = seg_len / 2 + 1;
    let fft = FftPlanner::new().plan_fft_forward(seg_len);
    let mut psd = vec![0.0; bins];
    let mut segments = 0;
    let mut start = 0;
    while start + seg_len <= x.len() {
        let seg = &x[start..start + seg_len];
        let mean = seg.iter().sum::<f64>() / seg_len as f64;
        let mut buf: Vec<Complex64> = seg
            .iter()
            .zip(&window)
            .map(|(v, w)| Complex64::new((v - mean) * w, 0.0))
            .collect();
        fft.process(&mut buf);
        for (k, p) in psd.iter_mut().enumerate() {
            let one_sided = if k == 0 || (seg_len.is_multiple_of(2) && k == seg_len / 2) {
                1.0
            } else {
                2.0
            };
            *p += one_sided * buf[k].norm_sqr() / scale;
        }
        segments += 1;
        start += hop;
    }
    psd.iter_mut().for_each(|p| *p /= segments.max(1) as f64);
    let freqs = (0..bins).map(|k| k as f64 * fs / seg_len as f64).collect();
    (freqs, psd)
}

/// Integral of `psd` over `[lo, hi)` as a rectangle sum.
pub(crate) fn band_power(freqs: &[f64], psd: &[f64], (lo, hi): (f64, f64)) -> f64 {
    let df = if freqs.len() > 1 { freqs[1] - freqs[0] } else { 0.0 };
    freqs
        .iter()
        .zip(psd)
        .filter(|(f, _)| **f >= lo && **f < hi)
        .map(|(_, p)| p * df)
        .sum()
}

pub fn freq_features(w: &IbiSeries) -> Result<FreqFeatures> {
    require_intervals(w, "frequency-domain features")?;
    if w.span_s() < MIN_SPAN_S {
        return Err(Error::InsufficientData(format!(
            "spectrum needs a {MIN_SPAN_S} s span, window spans {:.3} s",
            w.span_s()
        )));
    }
    let y = resample(w);
    let nperseg = (SEGMENT_S * RESAMPLE_HZ) as usize;
    let (freqs, psd) = welch_psd(&y, RESAMPLE_HZ, nperseg);
    Ok(from_band_powers(
        band_power(&freqs, &psd, LF_BAND),
        band_power(&freqs, &psd, HF_BAND),
    ))
}

/// Ratios and normalised units from the two band powers.
fn from_band_powers(lf: f64, hf: f64) -> FreqFeatures {
    let total = lf + hf;
    let mut out = FreqFeatures {
        lf,
        hf,
        lf_hf: 0.0,
        lf_nu: 0.0,
        hf_nu: 0.0,
        lf_hf_sentinel: false,
        degenerate: false,
    };
    if total <= ZERO_POWER_MS2 {
        out.degenerate = true;
        return out;
    }
    out.lf_nu = lf / total;
    out.hf_nu = hf / total;
    if hf <= ZERO_POWER_MS2 {
        out.lf_hf = LF_HF_SENTINEL;
        out.lf_hf_sentinel = true;
    } else {
        out.lf_hf = lf / hf;
    }
    out
}
