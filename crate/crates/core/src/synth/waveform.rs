use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{Modality, Waveform};

/// Sinusoidal modulation of the inter-beat interval.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HrvModulation {
    pub freq_hz: f64,
    pub depth_ms: f64,
}

/// Additive contaminations. Amplitudes are relative to the main deflection
/// (R wave or systolic peak), which is rendered with unit height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub baseline_amp: f64,
    pub baseline_freq_hz: f64,
    /// Mains tone; dropped when at or above the Nyquist frequency of the
    /// rendered rate, as an anti-aliased acquisition chain would.
    pub powerline_amp: f64,
    pub powerline_freq_hz: f64,
    /// White noise power relative to the clean waveform's variance; `None` adds none.
    pub white_snr_db: Option<f64>,
    /// Expected number of motion bursts per minute (BVP).
    pub motion_bursts_per_min: f64,
    pub motion_amp: f64,
}

impl NoiseSpec {
    pub const fn clean() -> Self {
        Self {
            baseline_amp: 0.0,
            baseline_freq_hz: 0.3,
            powerline_amp: 0.0,
            powerline_freq_hz: 50.0,
            white_snr_db: None,
            motion_bursts_per_min: 0.0,
            motion_amp: 0.0,
        }
    }

    /// Wander 0.2 at 0.3 Hz, mains 0.1 at 50 Hz, white noise at 10 dB SNR.
    pub const fn standard() -> Self {
        Self {
            baseline_amp: 0.2,
            baseline_freq_hz: 0.3,
            powerline_amp: 0.1,
            powerline_freq_hz: 50.0,
            white_snr_db: Some(10.0),
            motion_bursts_per_min: 0.0,
            motion_amp: 0.0,
        }
    }
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self::clean()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub modality: Modality,
    pub rate_hz: f64,
    pub duration_s: f64,
    pub mean_hr_bpm: f64,
    pub hrv_modulation: HrvModulation,
    pub noise: NoiseSpec,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(modality: Modality, rate_hz: f64, duration_s: f64, mean_hr_bpm: f64) -> Self {
        Self {
            modality,
            rate_hz,
            duration_s,
            mean_hr_bpm,
            hrv_modulation: HrvModulation::default(),
            noise: NoiseSpec::clean(),
            seed: 0,
        }
    }

    pub fn with_modulation(mut self, freq_hz: f64, depth_ms: f64) -> Self {
        self.hrv_modulation = HrvModulation { freq_hz, depth_ms };
        self
    }

    pub fn with_noise(mut self, noise: NoiseSpec) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn mean_ibi_s(&self) -> f64 {
        60.0 / self.mean_hr_bpm
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if !(30.0..=220.0).contains(&self.mean_hr_bpm) {
            return bad(format!("mean heart rate {} bpm outside [30, 220]", self.mean_hr_bpm));
        }
        if !(self.duration_s >= 10.0 && self.duration_s.is_finite()) {
            return bad(format!("duration {} s is shorter than 10 s", self.duration_s));
        }
        if !(self.rate_hz.is_finite() && self.rate_hz > 0.0) {
            return bad(format!("sampling rate {} Hz", self.rate_hz));
        }
        let m = self.hrv_modulation;
        if !(m.depth_ms.is_finite() && m.freq_hz.is_finite() && m.depth_ms >= 0.0 && m.freq_hz >= 0.0) {
            return bad("modulation depth and frequency must be finite and >= 0".into());
        }
        if m.depth_ms >= 0.8 * self.mean_ibi_s() * 1000.0 {
            return bad(format!(
                "modulation depth {} ms would produce non-positive intervals",
                m.depth_ms
            ));
        }
        let n = self.noise;
        let amps = [n.baseline_amp, n.powerline_amp, n.motion_amp, n.motion_bursts_per_min];
        if amps.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return bad("noise amplitudes and rates must be finite and >= 0".into());
        }
        if let Some(snr) = n.white_snr_db {
            if !snr.is_finite() {
                return bad("white-noise SNR must be finite".into());
            }
        }
        Ok(())
    }
}

/// A synthetic waveform together with its exact beat fiducials.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedWaveform {
    pub waveform: Waveform,
    /// R-apex (ECG) or systolic-apex (BVP) times.
    pub true_beats_s: Vec<f64>,
    /// The interval sequence the beat times were built from, seconds.
    pub true_intervals_s: Vec<f64>,
}

impl AnnotatedWaveform {
    pub fn write_annotations(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let mut write = || -> std::io::Result<()> {
            writeln!(out, "beat_time_s")?;
            for t in &self.true_beats_s {
                writeln!(out, "{t}")?;
            }
            out.flush()
        };
        write().map_err(|e| Error::io(path, e))
    }
}

/// Beat times from the modulated interval recurrence `t[k+1] = t[k] + I(t[k])`.
///
/// The first beat sits half a mean interval into the record and no beat is
/// placed closer than half a mean interval to the end.
pub fn beat_schedule(spec: &SynthSpec) -> (Vec<f64>, Vec<f64>) {
    let mean = spec.mean_ibi_s();
    let m = spec.hrv_modulation;
    let mut beats = vec![mean / 2.0];
    let mut intervals = Vec::new();
    loop {
        let t = *beats.last().unwrap();
        let ibi = mean + m.depth_ms / 1000.0 * (2.0 * PI * m.freq_hz * t).sin();
        let next = t + ibi;
        if next > spec.duration_s - mean / 2.0 {
            break;
        }
        intervals.push(ibi);
        beats.push(next);
    }
    (beats, intervals)
}

fn add_gaussian(out: &mut [f64], rate: f64, center: f64, sigma: f64, amp: f64) {
    let lo = ((center - 6.0 * sigma) * rate).floor().max(0.0) as usize;
    let hi = (((center + 6.0 * sigma) * rate).ceil().max(0.0) as usize).min(out.len());
    for (i, v) in out.iter_mut().enumerate().take(hi).skip(lo) {
        let dt = i as f64 / rate - center;
        *v += amp * (-0.5 * (dt / sigma).powi(2)).exp();
    }
}

/// Gamma-shaped pulse `amp * u^k * exp(k * (1 - u))`, `u = (t - onset) / rise`,
/// peaking at `apex` with height `amp`. Smooth everywhere, so a band-limited
/// front end leaves the apex where it was rendered. Cut off below 1e-6 of `amp`.
fn add_gamma(out: &mut [f64], rate: f64, apex: f64, rise: f64, k: f64, amp: f64) {
    let onset = apex - rise;
    // k * (u - 1 - ln u) reaches ln(1e6) a little past u = 1 + 6 / sqrt(k)
    let mut u_end = 1.0 + 6.0 / k.sqrt();
    while k * (u_end - 1.0 - u_end.ln()) < 1e6f64.ln() {
        u_end += 0.1;
    }
    let lo = (onset * rate).ceil().max(0.0) as usize;
    let hi = (((onset + u_end * rise) * rate).ceil().max(0.0) as usize).min(out.len());
    for (i, v) in out.iter_mut().enumerate().take(hi).skip(lo) {
        let u = (i as f64 / rate - onset) / rise;
        if u > 0.0 {
            *v += amp * (k * (u.ln() + 1.0 - u)).exp();
        }
    }
}

fn render(spec: &SynthSpec, beats: &[f64], intervals: &[f64]) -> Vec<f64> {
    let n = (spec.duration_s * spec.rate_hz).round() as usize;
    let rate = spec.rate_hz;
    let mut x = vec![0.0; n];
    let mean = spec.mean_ibi_s();
    for (k, &t) in beats.iter().enumerate() {
        let ibi = intervals.get(k).copied().unwrap_or(mean);
        let scale = ibi.sqrt();
        match spec.modality {
            Modality::Ecg => {
                // 100 ms QRS: the R bump spans +/-3 sigma, Q and S dips mirror each other
                add_gaussian(&mut x, rate, t, 0.1 / 6.0, 1.0);
                add_gaussian(&mut x, rate, t - 0.03, 0.008, -0.12);
                add_gaussian(&mut x, rate, t + 0.03, 0.008, -0.12);
                add_gaussian(&mut x, rate, t - 0.16 * scale, 0.025, 0.12);
                add_gaussian(&mut x, rate, t + 0.28 * scale, 0.045, 0.3);
            }
            Modality::Bvp => {
                add_gamma(&mut x, rate, t, 0.2, 6.0, 1.0);
                add_gaussian(&mut x, rate, t + (0.25 * scale).min(0.3), 0.05, 0.22);
            }
        }
    }
    x
}

/// Adds the noise sources of `spec.noise` in place.
fn contaminate(spec: &SynthSpec, x: &mut [f64]) {
    let noise = spec.noise;
    let rate = spec.rate_hz;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let power = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.len() as f64;

    let wander_phase = rng.random::<f64>() * 2.0 * PI;
    let mains_phase = rng.random::<f64>() * 2.0 * PI;
    // tones at or above Nyquist never reach the samples of a device with an
    // anti-alias front end, so they are not folded back into the band
    let nyquist = rate / 2.0;
    let wander_amp = if noise.baseline_freq_hz < nyquist {
        noise.baseline_amp
    } else {
        0.0
    };
    let mains_amp = if noise.powerline_freq_hz < nyquist {
        noise.powerline_amp
    } else {
        0.0
    };
    for (i, v) in x.iter_mut().enumerate() {
        let t = i as f64 / rate;
        *v += wander_amp * (2.0 * PI * noise.baseline_freq_hz * t + wander_phase).sin();
        *v += mains_amp * (2.0 * PI * noise.powerline_freq_hz * t + mains_phase).sin();
    }

    if noise.motion_bursts_per_min > 0.0 && noise.motion_amp > 0.0 {
        let count = (noise.motion_bursts_per_min * spec.duration_s / 60.0).round() as usize;
        for _ in 0..count {
            let start = rng.random::<f64>() * spec.duration_s;
            let len = rng.random_range(0.5..1.5);
            let comps: Vec<(f64, f64)> = (0..3)
                .map(|_| (rng.random_range(0.5..3.0), rng.random::<f64>() * 2.0 * PI))
                .collect();
            let lo = (start * rate) as usize;
            let hi = (((start + len) * rate) as usize).min(x.len());
            for i in lo..hi {
                let u = (i - lo) as f64 / (hi - lo).max(1) as f64;
                let envelope = 0.5 - 0.5 * (2.0 * PI * u).cos();
                let t = i as f64 / rate;
                let s: f64 = comps.iter().map(|(f, p)| (2.0 * PI * f * t + p).sin()).sum();
                x[i] += noise.motion_amp * envelope * s / 3.0;
            }
        }
    }

    if let Some(snr) = noise.white_snr_db {
        let sd = (power / 10f64.powf(snr / 10.0)).sqrt();
        if sd > 0.0 {
            let normal = Normal::new(0.0, sd).expect("finite standard deviation");
            for v in x.iter_mut() {
                *v += normal.sample(&mut rng);
            }
        }
    }
}

fn synth(spec: &SynthSpec, modality: Modality) -> Result<AnnotatedWaveform> {
    if spec.modality != modality {
        return Err(Error::Modality {
            expected: modality.as_str(),
            actual: spec.modality.as_str(),
        });
    }
    spec.validate()?;
    let (beats, intervals) = beat_schedule(spec);
    let mut x = render(spec, &beats, &intervals);
    contaminate(spec, &mut x);
    let waveform = Waveform::new(x, spec.rate_hz, modality, "synthetic", format!("seed-{}", spec.seed))?;
    Ok(AnnotatedWaveform {
        waveform,
        true_beats_s: beats,
        true_intervals_s: intervals,
    })
}

/// Template ECG: Gaussian QRS (100 ms) with Q/S dips and P/T waves.
pub fn synth_ecg(spec: &SynthSpec) -> Result<AnnotatedWaveform> {
    synth(spec, Modality::Ecg)
}

/// Template BVP: gamma-shaped systolic pulse (0.2 s rise) followed by a dicrotic bump.
pub fn synth_bvp(spec: &SynthSpec) -> Result<AnnotatedWaveform> {
    synth(spec, Modality::Bvp)
}
