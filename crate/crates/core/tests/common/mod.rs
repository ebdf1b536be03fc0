//! Reference implementations shared by the integration and acceptance tests.
//! Written from the textbook formulas, without calling into the library.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Insertion sort, kept separate from the library's sort-based path.
fn sorted(x: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(x.len());
    for &v in x {
        let mut i = out.len();
        while i > 0 && out[i - 1] > v {
            i -= 1;
        }
        out.insert(i, v);
    }
    out
}

/// Quantile by linear interpolation between closest ranks (numpy "linear").
fn quantile(x: &[f64], q: f64) -> f64 {
    let s = sorted(x);
    let h = (s.len() as f64 - 1.0) * q;
    let below = h.floor();
    let frac = h - below;
    let i = below as usize;
    if i + 1 < s.len() {
        s[i] * (1.0 - frac) + s[i + 1] * frac
    } else {
        s[i]
    }
}

fn avg(x: &[f64]) -> f64 {
    let mut s = 0.0;
    for v in x {
        s += v;
    }
    s / x.len() as f64
}

fn var(x: &[f64], ddof: f64) -> f64 {
    let m = avg(x);
    let mut s = 0.0;
    for v in x {
        s += (v - m) * (v - m);
    }
    s / (x.len() as f64 - ddof)
}

/// The 13 time-domain features in library order.
pub fn time_oracle(x: &[f64]) -> [f64; 13] {
    let n = x.len();
    let mut d = Vec::new();
    for i in 1..n {
        d.push(x[i] - x[i - 1]);
    }
    let mean_nn = avg(x);
    let sdnn = var(x, 1.0).sqrt();
    let mut sq = 0.0;
    for v in &d {
        sq += v * v;
    }
    let rmssd = (sq / d.len() as f64).sqrt();
    let sdsd = var(&d, 1.0).sqrt();
    let median = quantile(x, 0.5);
    let dev: Vec<f64> = x.iter().map(|v| (v - median).abs()).collect();
    let mad = 1.4826 * quantile(&dev, 0.5);
    let iqr = quantile(x, 0.75) - quantile(x, 0.25);
    let mut over20 = 0;
    let mut over50 = 0;
    for v in &d {
        if v.abs() > 20.0 {
            over20 += 1;
        }
        if v.abs() > 50.0 {
            over50 += 1;
        }
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in x {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    [
        mean_nn,
        sdnn,
        rmssd,
        sdsd,
        sdnn / mean_nn,
        rmssd / mean_nn,
        median,
        mad,
        mad / median,
        iqr,
        100.0 * over20 as f64 / d.len() as f64,
        100.0 * over50 as f64 / d.len() as f64,
        hi - lo,
    ]
}

/// SD1 from the scatter perpendicular to the identity line, SD2 from the
/// identity `SD1^2 + SD2^2 = 2 var_pop(x)`.
pub fn poincare_oracle(x: &[f64]) -> [f64; 4] {
    let mut across = Vec::new();
    for i in 1..x.len() {
        across.push((x[i] - x[i - 1]) / 2f64.sqrt());
    }
    let sd1 = var(&across, 0.0).sqrt();
    let sd2 = (2.0 * var(x, 0.0) - sd1 * sd1).max(0.0).sqrt();
    let ratio = if sd2 == 0.0 { 0.0 } else { sd1 / sd2 };
    [sd1, sd2, ratio, PI * sd1 * sd2]
}

/// Band power of `y` (sampled at `fs`) by a direct O(n^2) DFT of the
/// Hann-windowed, mean-removed whole record, one-sided density, summed over `[lo, hi)`.
pub fn dft_band_power(y: &[f64], fs: f64, lo: f64, hi: f64) -> f64 {
    let n = y.len();
    let m = avg(y);
    let w: Vec<f64> = (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect();
    let mut wsum = 0.0;
    for v in &w {
        wsum += v * v;
    }
    let df = fs / n as f64;
    let mut total = 0.0;
    for k in 0..=n / 2 {
        let f = k as f64 * df;
        if f < lo || f >= hi {
            continue;
        }
        let (mut re, mut im) = (0.0, 0.0);
        for j in 0..n {
            let a = -2.0 * PI * (k * j) as f64 / n as f64;
            re += (y[j] - m) * w[j] * a.cos();
            im += (y[j] - m) * w[j] * a.sin();
        }
        let edge = k == 0 || (n.is_multiple_of(2) && k == n / 2);
        let p = (re * re + im * im) / (fs * wsum) * if edge { 1.0 } else { 2.0 };
        total += p * df;
    }
    total
}

/// Beat-to-beat intervals (ms) following `mean + depth * sin(2 pi f t)`,
/// evaluated where each interval ends, for `seconds` of beats from t = 0.
pub fn modulated_intervals(mean: f64, depth: f64, freq: f64, phase: f64, seconds: f64) -> Vec<f64> {
    let mut t = 0.0;
    let mut out = Vec::new();
    while t < seconds {
        let mut i = mean;
        for _ in 0..30 {
            i = mean + depth * (2.0 * PI * freq * (t + i / 1000.0) + phase).sin();
        }
        t += i / 1000.0;
        out.push(i);
    }
    out
}

/// `|a - b| <= tol * max(|a|, |b|)`, with exact zeros matching only zeros.
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    if a == b {
        return true;
    }
    (a - b).abs() <= tol * a.abs().max(b.abs())
}
