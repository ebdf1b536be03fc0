mod common;

use std::f64::consts::PI;

use common::{dft_band_power, modulated_intervals, poincare_oracle, rel_close, time_oracle};
use hrvbench_core::hrv::{
    extract_features, freq_features, poincare_features, time_features, IbiSeries, HF_BAND, LF_BAND, RESAMPLE_HZ,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_window(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = rng.random_range(10..120);
    let base = rng.random_range(400.0..1400.0);
    let spread = rng.random_range(0.0..200.0);
    // quantise some windows to whole ms so ties and exact thresholds occur
    let whole = rng.random_bool(0.3);
    (0..n)
        .map(|_| {
            let v: f64 = base + spread * (rng.random::<f64>() - 0.5);
            if whole {
                v.round()
            } else {
                v
            }
        })
        .collect()
}

#[test]
fn time_and_poincare_match_the_formula_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let x = random_window(&mut rng);
        let s = IbiSeries::from_intervals(&x, 0.0).unwrap();
        let got = time_features(&s).unwrap().to_array();
        for (k, (a, b)) in got.iter().zip(time_oracle(&x)).enumerate() {
            assert!(rel_close(*a, b, 1e-9), "time feature {k}: {a} vs {b}");
        }
        let got = poincare_features(&s).unwrap().to_array();
        for (k, (a, b)) in got.iter().zip(poincare_oracle(&x)).enumerate() {
            assert!(rel_close(*a, b, 1e-9), "Poincaré feature {k}: {a} vs {b}");
        }
    }
}

#[test]
fn spectral_band_power_matches_a_plain_dft() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..40 {
        let lf = case % 2 == 0;
        // The interval series only samples the modulation once per beat, and the
        // spline loses power as the modulation nears half the heart rate (16%
        // at 0.35 Hz and 60 bpm). Keep at least ~3.5 beats per cycle. The 32 s
        // Hann segments have a +/-0.0625 Hz main lobe, so LF tones sit mid-band
        // where the lobe does not spill across 0.04 or 0.15 Hz.
        let freq = if lf {
            rng.random_range(0.085..0.105)
        } else {
            rng.random_range(0.2..0.28)
        };
        let mean = rng.random_range(600.0..900.0);
        let depth = rng.random_range(10.0..60.0);
        let phase = rng.random_range(0.0..2.0 * PI);
        let x = modulated_intervals(mean, depth, freq, phase, 62.0);
        let s = IbiSeries::from_intervals(&x, 0.0).unwrap();
        let f = freq_features(&s).unwrap();

        // the same modulation sampled exactly on the 4 Hz grid
        let t0 = s.beat_times_s()[0];
        let n = ((s.end_s() - t0) * RESAMPLE_HZ).floor() as usize + 1;
        let y: Vec<f64> = (0..n)
            .map(|i| depth * (2.0 * PI * freq * (t0 + i as f64 / RESAMPLE_HZ) + phase).sin())
            .collect();
        let (band, got) = if lf { (LF_BAND, f.lf) } else { (HF_BAND, f.hf) };
        let want = dft_band_power(&y, RESAMPLE_HZ, band.0, band.1);
        assert!(rel_close(got, want, 0.05), "case {case} f {freq:.3}: {got} vs {want}");
    }
}

#[test]
fn identities_hold_on_random_windows() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..500 {
        let mut x = random_window(&mut rng);
        while x.len() < 70 {
            x.extend_from_within(..);
        }
        let s = IbiSeries::from_intervals(&x, 0.0).unwrap();
        let (v, _) = extract_features(&s).unwrap();
        let get = |n: &str| v.get(n).unwrap();
        let n = x.len() as f64;
        let sdnn_pop_sq = get("SDNN").powi(2) * (n - 1.0) / n;
        let sdsd_pop = get("SDSD") * ((n - 2.0) / (n - 1.0)).sqrt();
        assert!(rel_close(get("SD1"), sdsd_pop / 2f64.sqrt(), 1e-9));
        assert!(rel_close(
            get("SD1").powi(2) + get("SD2").powi(2),
            2.0 * sdnn_pop_sq,
            1e-9
        ));
        if get("LF") + get("HF") > 0.0 {
            assert!((get("LFnu") + get("HFnu") - 1.0).abs() < 1e-12);
        }
    }
}
