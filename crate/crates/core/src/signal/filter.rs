use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Modality, Waveform};
use crate::error::{Error, Result};

/// QRS-emphasis band used for ECG.
pub const ECG_BAND: BandpassSpec = BandpassSpec {
    low_hz: 8.0,
    high_hz: 20.0,
    order: 2,
};

/// Pulse band used for BVP.
pub const BVP_BAND: BandpassSpec = BandpassSpec {
    low_hz: 0.5,
    high_hz: 8.0,
    order: 2,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandpassSpec {
    pub low_hz: f64,
    pub high_hz: f64,
    /// Order of the low-pass prototype; the digital band-pass has twice as many poles.
    pub order: usize,
}

impl BandpassSpec {
    fn validate(&self, rate_hz: f64) -> Result<()> {
        let finite = self.low_hz.is_finite() && self.high_hz.is_finite() && rate_hz.is_finite();
        if !finite {
            return Err(Error::InvalidSpec(format!(
                "non-finite band-pass spec {self:?} at {rate_hz} Hz"
            )));
        }
        if rate_hz <= 0.0 {
            return Err(Error::InvalidSpec(format!("sampling rate {rate_hz} Hz")));
        }
        if !(self.low_hz > 0.0 && self.low_hz < self.high_hz) {
            return Err(Error::InvalidSpec(format!(
                "band edges must satisfy 0 < low < high, got {} .. {} Hz",
                self.low_hz, self.high_hz
            )));
        }
        if self.order == 0 {
            return Err(Error::InvalidSpec("filter order must be >= 1".into()));
        }
        let nyquist = rate_hz / 2.0;
        if self.high_hz >= nyquist {
            return Err(Error::InvalidSpec(format!(
                "upper edge {} Hz is not below the Nyquist frequency {nyquist} Hz",
                self.high_hz
            )));
        }
        Ok(())
    }
}

/// One second-order section, `a[0]` normalized to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    fn response(&self, z: Complex64) -> Complex64 {
        let zi = z.inv();
        let zi2 = zi * zi;
        (self.b[0] + self.b[1] * zi + self.b[2] * zi2) / (self.a[0] + self.a[1] * zi + self.a[2] * zi2)
    }

    fn poles(&self) -> [Complex64; 2] {
        // roots of z^2 + a1 z + a2
        let a1 = Complex64::new(self.a[1], 0.0);
        let a2 = Complex64::new(self.a[2], 0.0);
        let disc = (a1 * a1 - 4.0 * a2).sqrt();
        [(-a1 + disc) / 2.0, (-a1 - disc) / 2.0]
    }

    /// Direct form II transposed state that a constant unit input holds forever.
    fn step_state(&self) -> [f64; 2] {
        let y = (self.b[0] + self.b[1] + self.b[2]) / (self.a[0] + self.a[1] + self.a[2]);
        let z2 = self.b[2] - self.a[2] * y;
        let z1 = self.b[1] - self.a[1] * y + z2;
        [z1, z2]
    }

    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (self.a[0] + self.a[1] + self.a[2])
    }
}

/// A cascade of second-order sections designed for one sampling rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterCoefficients {
    pub sections: Vec<Biquad>,
    pub rate_hz: f64,
}

impl FilterCoefficients {
    /// Complex frequency response at `freq_hz`.
    pub fn response(&self, freq_hz: f64) -> Complex64 {
        let z = Complex64::from_polar(1.0, 2.0 * PI * freq_hz / self.rate_hz);
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(z))
    }

    pub fn magnitude(&self, freq_hz: f64) -> f64 {
        self.response(freq_hz).norm()
    }

    pub fn poles(&self) -> Vec<Complex64> {
        self.sections.iter().flat_map(|s| s.poles()).collect()
    }

    pub fn is_stable(&self) -> bool {
        self.poles().iter().all(|p| p.norm() < 1.0)
    }

    /// Number of poles of the whole cascade.
    pub fn digital_order(&self) -> usize {
        2 * self.sections.len()
    }

    /// Samples of odd reflection added at each edge before forward-backward filtering.
    pub fn pad_len(&self) -> usize {
        3 * (self.digital_order() + 1)
    }

    fn run(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        let mut scale = x[0];
        for s in &self.sections {
            let [mut z1, mut z2] = s.step_state().map(|v| v * scale);
            for v in y.iter_mut() {
                let input = *v;
                let out = s.b[0] * input + z1;
                z1 = s.b[1] * input - s.a[1] * out + z2;
                z2 = s.b[2] * input - s.a[2] * out;
                *v = out;
            }
            scale *= s.dc_gain();
        }
        y
    }
}

/// Digital Butterworth band-pass via the bilinear transform with pre-warped edges.
///
/// The analog low-pass prototype of order `spec.order` is mapped to a band-pass
/// (doubling the pole count), each pole is mapped to the z-plane, and conjugate
/// pairs become second-order sections with zeros at z = 1 and z = -1. Gain is
/// normalized to unity at the digital image of the analog center frequency.
pub fn design_bandpass(spec: BandpassSpec, rate_hz: f64) -> Result<FilterCoefficients> {
    spec.validate(rate_hz)?;
    let fs2 = 2.0 * rate_hz;
    let w_low = fs2 * (PI * spec.low_hz / rate_hz).tan();
    let w_high = fs2 * (PI * spec.high_hz / rate_hz).tan();
    let w0 = (w_low * w_high).sqrt();
    let bw = w_high - w_low;
    let n = spec.order;

    let mut upper = Vec::with_capacity(n);
    let mut real = Vec::new();
    for k in 1..=n {
        let theta = PI * (2 * k + n - 1) as f64 / (2 * n) as f64;
        let p = Complex64::from_polar(1.0, theta);
        let a = p * (bw / 2.0);
        let d = (a * a - w0 * w0).sqrt();
        for s in [a + d, a - d] {
            let z = (fs2 + s) / (fs2 - s);
            if z.im > 1e-12 {
                upper.push(z);
            } else if z.im.abs() <= 1e-12 {
                real.push(z.re);
            }
        }
    }
    real.sort_by(|a, b| a.total_cmp(b));

    let mut sections: Vec<Biquad> = upper
        .iter()
        .map(|z| Biquad {
            b: [1.0, 0.0, -1.0],
            a: [1.0, -2.0 * z.re, z.norm_sqr()],
        })
        .collect();
    for pair in real.chunks(2) {
        let (r1, r2) = (pair[0], pair.get(1).copied().unwrap_or(0.0));
        sections.push(Biquad {
            b: [1.0, 0.0, -1.0],
            a: [1.0, -(r1 + r2), r1 * r2],
        });
    }
    debug_assert_eq!(sections.len(), n);

    let mut coeffs = FilterCoefficients { sections, rate_hz };
    let f_center = rate_hz / PI * (w0 / fs2).atan();
    let gain = coeffs.magnitude(f_center);
    let per_section = gain.recip().powf(1.0 / n as f64);
    for s in &mut coeffs.sections {
        for b in &mut s.b {
            *b *= per_section;
        }
    }
    Ok(coeffs)
}

/// Forward-backward filtering with odd-reflection edge padding.
///
/// Both passes start from the steady state matching the first sample, so the
/// output has zero phase and no start-up step.
pub fn apply_zero_phase(coeffs: &FilterCoefficients, w: &Waveform) -> Result<Waveform> {
    let x = w.samples();
    let pad = coeffs.pad_len();
    if x.len() <= pad {
        return Err(Error::InsufficientData(format!(
            "zero-phase filtering needs more than {pad} samples, got {}",
            x.len()
        )));
    }
    let n = x.len();
    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

    let mut y = coeffs.run(&ext);
    y.reverse();
    let mut y = coeffs.run(&y);
    y.reverse();
    w.with_samples(y[pad..pad + n].to_vec())
}

fn require_modality(w: &Waveform, expected: Modality) -> Result<()> {
    if w.modality() != expected {
        return Err(Error::Modality {
            expected: expected.as_str(),
            actual: w.modality().as_str(),
        });
    }
    Ok(())
}

/// 8-20 Hz second-order Butterworth band-pass, applied with zero phase.
pub fn preprocess_ecg(w: &Waveform) -> Result<Waveform> {
    require_modality(w, Modality::Ecg)?;
    let coeffs = design_bandpass(ECG_BAND, w.rate_hz())?;
    apply_zero_phase(&coeffs, w)
}

/// 0.5-8 Hz second-order Butterworth band-pass, applied with zero phase.
pub fn preprocess_bvp(w: &Waveform) -> Result<Waveform> {
    require_modality(w, Modality::Bvp)?;
    let coeffs = design_bandpass(BVP_BAND, w.rate_hz())?;
    apply_zero_phase(&coeffs, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Closed-form Butterworth band-pass magnitude after the pre-warped bilinear map.
    fn analytic_magnitude(spec: BandpassSpec, rate: f64, f: f64) -> f64 {
        let warp = |hz: f64| 2.0 * rate * (PI * hz / rate).tan();
        let (wl, wh, w) = (warp(spec.low_hz), warp(spec.high_hz), warp(f));
        let omega = (w * w - wl * wh) / (w * (wh - wl));
        (1.0 / (1.0 + omega.powi(2 * spec.order as i32))).sqrt()
    }

    fn sine(freq: f64, rate: f64, seconds: f64) -> Vec<f64> {
        let n = (rate * seconds) as usize;
        (0..n).map(|i| (2.0 * PI * freq * i as f64 / rate).sin()).collect()
    }

    /// Steady-state amplitude ratio and best cross-correlation lag, ignoring 2 s at each edge.
    fn amplitude_and_lag(input: &[f64], output: &[f64], rate: f64) -> (f64, i64) {
        let skip = (2.0 * rate) as usize;
        let core = skip..input.len() - skip;
        let rms = |x: &[f64]| (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();
        let ratio = rms(&output[core.clone()]) / rms(&input[core.clone()]);
        let mut best = (f64::NEG_INFINITY, 0);
        for lag in -5i64..=5 {
            let c: f64 = core.clone().map(|i| input[i] * output[(i as i64 + lag) as usize]).sum();
            if c > best.0 {
                best = (c, lag);
            }
        }
        (ratio, best.1)
    }

    fn wave(samples: Vec<f64>, rate: f64, modality: Modality) -> Waveform {
        Waveform::new(samples, rate, modality, "p", "s").unwrap()
    }

    #[test]
    fn ecg_band_passes_center_and_is_stable() {
        let c = design_bandpass(ECG_BAND, 700.0).unwrap();
        assert!(c.is_stable());
        assert_eq!(c.sections.len(), 2);
        let center = (8.0f64 * 20.0).sqrt();
        assert!(c.magnitude(center) >= 0.95, "{}", c.magnitude(center));
    }

    #[test]
    fn bvp_band_response_matches_closed_form() {
        let c = design_bandpass(BVP_BAND, 64.0).unwrap();
        assert!(c.magnitude(2.0) >= 0.95);
        assert!(c.magnitude(0.05) <= 0.1);
        for f in [0.05, 0.3, 0.5, 1.0, 2.0, 5.0, 8.0, 12.0, 20.0, 30.0] {
            let expected = analytic_magnitude(BVP_BAND, 64.0, f);
            assert!((c.magnitude(f) - expected).abs() < 1e-9, "f = {f}");
        }
    }

    #[test]
    fn nyquist_violation_is_rejected() {
        assert!(matches!(design_bandpass(ECG_BAND, 30.0), Err(Error::InvalidSpec(_))));
        let bad = BandpassSpec {
            low_hz: f64::NAN,
            high_hz: 8.0,
            order: 2,
        };
        assert!(matches!(design_bandpass(bad, 64.0), Err(Error::InvalidSpec(_))));
        let inverted = BandpassSpec {
            low_hz: 8.0,
            high_hz: 0.5,
            order: 2,
        };
        assert!(design_bandpass(inverted, 64.0).is_err());
    }

    #[test]
    fn odd_orders_design_cleanly() {
        for order in 1..=5 {
            let spec = BandpassSpec {
                low_hz: 0.5,
                high_hz: 8.0,
                order,
            };
            let c = design_bandpass(spec, 64.0).unwrap();
            assert!(c.is_stable());
            assert_eq!(c.digital_order(), 2 * order);
            for f in [0.2, 1.0, 2.0, 6.0, 15.0] {
                let expected = analytic_magnitude(spec, 64.0, f);
                assert!((c.magnitude(f) - expected).abs() < 1e-9, "order {order} f {f}");
            }
        }
    }

    #[test]
    fn zero_input_stays_zero() {
        let c = design_bandpass(ECG_BAND, 700.0).unwrap();
        let out = apply_zero_phase(&c, &wave(vec![0.0; 1000], 700.0, Modality::Ecg)).unwrap();
        assert!(out.samples().iter().all(|&v| v == 0.0));
        let out = preprocess_bvp(&wave(vec![0.0; 640], 64.0, Modality::Bvp)).unwrap();
        assert!(out.samples().iter().all(|&v| v == 0.0));
        let out = preprocess_ecg(&wave(vec![0.0; 700], 700.0, Modality::Ecg)).unwrap();
        assert!(out.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn in_band_sine_keeps_amplitude_and_phase() {
        let rate = 700.0;
        let x = sine(14.0, rate, 10.0);
        let out = preprocess_ecg(&wave(x.clone(), rate, Modality::Ecg)).unwrap();
        let (ratio, lag) = amplitude_and_lag(&x, out.samples(), rate);
        assert!((0.9..=1.1).contains(&ratio), "ratio {ratio}");
        assert_eq!(lag, 0);
    }

    #[test]
    fn powerline_is_attenuated() {
        let rate = 700.0;
        let x = sine(50.0, rate, 10.0);
        let out = preprocess_ecg(&wave(x.clone(), rate, Modality::Ecg)).unwrap();
        let (ratio, _) = amplitude_and_lag(&x, out.samples(), rate);
        assert!(ratio <= 0.1, "ratio {ratio}");
    }

    #[test]
    fn bvp_passband_and_stopband() {
        let x = sine(1.2, 27.0, 30.0);
        let out = preprocess_bvp(&wave(x.clone(), 27.0, Modality::Bvp)).unwrap();
        let (ratio, lag) = amplitude_and_lag(&x, out.samples(), 27.0);
        assert!(ratio >= 0.9, "ratio {ratio}");
        assert_eq!(lag, 0);

        let x = sine(12.0, 64.0, 30.0);
        let out = preprocess_bvp(&wave(x.clone(), 64.0, Modality::Bvp)).unwrap();
        let (ratio, _) = amplitude_and_lag(&x, out.samples(), 64.0);
        assert!(ratio <= 0.2, "ratio {ratio}");
    }

    #[test]
    fn bvp_rate_at_or_below_16_hz_is_rejected() {
        let w = wave(vec![0.0; 200], 16.0, Modality::Bvp);
        assert!(matches!(preprocess_bvp(&w), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn modality_mismatch_is_an_error() {
        let w = wave(vec![0.0; 2000], 700.0, Modality::Bvp);
        assert!(matches!(preprocess_ecg(&w), Err(Error::Modality { .. })));
        let w = wave(vec![0.0; 2000], 64.0, Modality::Ecg);
        assert!(matches!(preprocess_bvp(&w), Err(Error::Modality { .. })));
    }

    #[test]
    fn short_waveform_is_insufficient() {
        let c = design_bandpass(ECG_BAND, 700.0).unwrap();
        let w = wave(vec![1.0; c.pad_len()], 700.0, Modality::Ecg);
        assert!(matches!(apply_zero_phase(&c, &w), Err(Error::InsufficientData(_))));
    }

    /// Band power below `cutoff` by direct DFT.
    fn low_band_power(x: &[f64], rate: f64, cutoff: f64) -> f64 {
        let n = x.len();
        let kmax = (cutoff * n as f64 / rate).floor() as usize;
        (0..=kmax)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (i, v) in x.iter().enumerate() {
                    let ph = -2.0 * PI * (k * i) as f64 / n as f64;
                    re += v * ph.cos();
                    im += v * ph.sin();
                }
                re * re + im * im
            })
            .sum()
    }

    #[test]
    fn baseline_wander_is_removed_from_ecg() {
        let rate = 250.0;
        let seconds = 20.0;
        let n = (rate * seconds) as usize;
        let x: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / rate;
                let beat = (t % 1.0) - 0.5;
                (-beat * beat / (2.0 * 0.017f64.powi(2))).exp() + 0.2 * (2.0 * PI * 0.3 * t).sin()
            })
            .collect();
        let out = preprocess_ecg(&wave(x.clone(), rate, Modality::Ecg)).unwrap();
        let before = low_band_power(&x, rate, 0.5);
        let after = low_band_power(out.samples(), rate, 0.5);
        let db = 10.0 * (before / after).log10();
        assert!(db >= 20.0, "reduction {db} dB");
    }

    proptest! {
        #[test]
        fn stable_for_valid_specs(low in 0.05f64..50.0, width in 0.1f64..100.0, order in 1usize..6, rate in 20.0f64..2000.0) {
            let high = low + width;
            prop_assume!(high < rate / 2.0 * 0.98);
            let c = design_bandpass(BandpassSpec { low_hz: low, high_hz: high, order }, rate).unwrap();
            prop_assert!(c.is_stable());
        }

        #[test]
        fn filtering_is_linear(
            x in proptest::collection::vec(-10.0f64..10.0, 200),
            y in proptest::collection::vec(-10.0f64..10.0, 200),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
        ) {
            let c = design_bandpass(BVP_BAND, 64.0).unwrap();
            let fx = apply_zero_phase(&c, &wave(x.clone(), 64.0, Modality::Bvp)).unwrap();
            let fy = apply_zero_phase(&c, &wave(y.clone(), 64.0, Modality::Bvp)).unwrap();
            let mix: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
            let fm = apply_zero_phase(&c, &wave(mix, 64.0, Modality::Bvp)).unwrap();
            prop_assert_eq!(fm.len(), 200);
            let scale = fx.samples().iter().chain(fy.samples()).fold(1.0f64, |m, v| m.max(v.abs()));
            for i in 0..200 {
                let expected = a * fx.samples()[i] + b * fy.samples()[i];
                prop_assert!((fm.samples()[i] - expected).abs() <= 1e-9 * scale * (a.abs() + b.abs() + 1.0));
            }
        }

        #[test]
        fn in_band_peaks_stay_put(freq in 1.0f64..4.0, phase in 0.0f64..std::f64::consts::TAU) {
            let rate = 64.0;
            let n = (rate * 20.0) as usize;
            let x: Vec<f64> = (0..n).map(|i| (2.0 * PI * freq * i as f64 / rate + phase).sin()).collect();
            let out = preprocess_bvp(&wave(x.clone(), rate, Modality::Bvp)).unwrap();
            let skip = (2.0 * rate) as usize;
            let argmax = |v: &[f64]| v.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
            let seg_in = &x[skip..n - skip];
            let seg_out = &out.samples()[skip..n - skip];
            let i = argmax(seg_in) as i64;
            // output maximum near the input maximum
            let lo = (i - 3).max(0) as usize;
            let hi = ((i + 4) as usize).min(seg_out.len());
            let j = lo + argmax(&seg_out[lo..hi]);
            prop_assert!((j as i64 - i).abs() <= 1);
        }
    }
}
