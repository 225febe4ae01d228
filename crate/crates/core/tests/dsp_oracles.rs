//! Feature extraction checked against brute-force implementations written
//! directly from the definitions.

use std::f64::consts::PI;

use bearing_acoustics::dsp::{
    filterbank_energies, hz_to_mel, mel_to_hz, mfcc, power_spectrum, MelFilterbank, MfccConfig, MfccExtractor,
    PowerSpectrum, Window, WindowKind,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_frame(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn naive_window(kind: WindowKind, n: usize) -> Vec<f64> {
    match kind {
        WindowKind::Rectangular => vec![1.0; n],
        WindowKind::Hann => (0..n)
            .map(|k| 0.5 - 0.5 * (2.0 * PI * k as f64 / (n as f64 - 1.0)).cos())
            .collect(),
    }
}

/// `|sum_k x[k] w[k] e^{-j 2 pi k v / N}|^2` for `v = 0..=N/2`.
fn naive_power(frame: &[f64], window: &[f64]) -> Vec<f64> {
    let n = frame.len();
    (0..=n / 2)
        .map(|v| {
            let (mut re, mut im) = (0.0, 0.0);
            for k in 0..n {
                let phi = -2.0 * PI * (k * v % n) as f64 / n as f64;
                re += frame[k] * window[k] * phi.cos();
                im += frame[k] * window[k] * phi.sin();
            }
            re * re + im * im
        })
        .collect()
}

fn mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn inv_mel(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular filters on K + 2 Mel-equidistant points snapped to bins.
fn naive_filterbank(c: &MfccConfig) -> Vec<Vec<f64>> {
    let k = c.num_channels;
    let (m0, m1) = (mel(c.freq_low), mel(c.freq_high));
    let bins: Vec<usize> = (0..k + 2)
        .map(|j| {
            let f = inv_mel(m0 + (m1 - m0) * j as f64 / (k + 1) as f64);
            (f * c.dft_size as f64 / c.sample_rate).round() as usize
        })
        .collect();
    (0..k)
        .map(|i| {
            let (lo, mid, hi) = (bins[i] as f64, bins[i + 1] as f64, bins[i + 2] as f64);
            (0..=c.dft_size / 2)
                .map(|v| {
                    let v = v as f64;
                    if v >= lo && v <= mid {
                        (v - lo) / (mid - lo)
                    } else if v > mid && v <= hi {
                        (hi - v) / (hi - mid)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

fn naive_cepstrum(energies: &[f64], num_coeffs: usize, floor: f64) -> Vec<f64> {
    let k = energies.len() as f64;
    (1..=num_coeffs)
        .map(|mu| {
            let mut c = 0.0;
            for (i0, &x) in energies.iter().enumerate() {
                let i = (i0 + 1) as f64;
                c += x.max(floor).ln() * (PI * (2.0 * i - 1.0) * mu as f64 / (2.0 * k)).cos();
            }
            c
        })
        .collect()
}

fn naive_pipeline(frame: &[f64], c: &MfccConfig) -> Vec<f64> {
    let power = naive_power(frame, &naive_window(c.window, c.dft_size));
    let energies: Vec<f64> = naive_filterbank(c)
        .iter()
        .map(|row| row.iter().zip(&power).map(|(g, p)| g * p).sum())
        .collect();
    naive_cepstrum(&energies, c.num_coeffs, c.log_floor)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn dft_matches_brute_force_on_random_frames() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for kind in [WindowKind::Rectangular, WindowKind::Hann] {
        let window = Window::new(kind, 64);
        for _ in 0..100 {
            let frame = random_frame(&mut rng, 64);
            let fast = power_spectrum(&frame, &window).unwrap();
            let slow = naive_power(&frame, &naive_window(kind, 64));
            let scale = max_abs(&slow);
            for (a, b) in fast.bins().iter().zip(&slow) {
                assert!((a - b).abs() <= 1e-9 * scale, "{a} vs {b}");
            }
        }
    }
}

#[test]
fn parseval_with_rectangular_window() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let window = Window::new(WindowKind::Rectangular, 64);
    for _ in 0..100 {
        let frame = random_frame(&mut rng, 64);
        let bins = power_spectrum(&frame, &window).unwrap();
        let b = bins.bins();
        let time: f64 = frame.iter().map(|x| x * x).sum();
        let freq = (b[0] + 2.0 * b[1..32].iter().sum::<f64>() + b[32]) / 64.0;
        assert!((time - freq).abs() <= 1e-6 * time);
    }
}

#[test]
fn integer_bin_cosine() {
    let window = Window::new(WindowKind::Rectangular, 64);
    for v0 in 1..32 {
        let frame: Vec<f64> = (0..64).map(|k| (2.0 * PI * (v0 * k) as f64 / 64.0).cos()).collect();
        let p = power_spectrum(&frame, &window).unwrap();
        for (v, &b) in p.bins().iter().enumerate() {
            let expected = if v == v0 { 32.0 * 32.0 } else { 0.0 };
            assert!((b - expected).abs() <= 1e-6 * 1024.0, "bin {v}: {b}");
        }
    }
}

#[test]
fn filterbank_matches_independent_construction() {
    for c in [
        MfccConfig::default(),
        MfccConfig {
            dft_size: 32,
            num_channels: 4,
            num_coeffs: 4,
            ..MfccConfig::default()
        },
        MfccConfig {
            dft_size: 512,
            num_channels: 40,
            sample_rate: 16_000.0,
            freq_low: 100.0,
            freq_high: 7000.0,
            ..MfccConfig::default()
        },
    ] {
        let fb = MelFilterbank::new(&c).unwrap();
        let oracle = naive_filterbank(&c);
        for (row, orow) in fb.weights().iter().zip(&oracle) {
            for (a, b) in row.iter().zip(orow) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn default_center_frequencies_follow_the_mel_warp() {
    let fb = MelFilterbank::new(&MfccConfig::default()).unwrap();
    let top = mel(12_800.0);
    for (i, &f) in fb.center_freqs().iter().enumerate() {
        let expected = inv_mel(top * (i + 1) as f64 / 27.0);
        assert!((f - expected).abs() < 1e-9 * expected, "{f} vs {expected}");
    }
    // library warp agrees with the scalar formula
    for f in [0.0, 43.0, 1000.0, 12_800.0] {
        assert!((hz_to_mel(f) - mel(f)).abs() < 1e-9);
        assert!((mel_to_hz(mel(f)) - f).abs() < 1e-9);
    }
}

#[test]
fn energies_match_double_loop_exactly() {
    let c = MfccConfig {
        dft_size: 32,
        num_channels: 4,
        num_coeffs: 4,
        ..MfccConfig::default()
    };
    let fb = MelFilterbank::new(&c).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let bins: Vec<f64> = (0..17).map(|_| rng.random_range(0.0..5.0)).collect();
    let got = filterbank_energies(&PowerSpectrum::new(bins.clone()).unwrap(), &fb).unwrap();
    for (i, row) in fb.weights().iter().enumerate() {
        let mut acc = 0.0;
        for v in 0..bins.len() {
            acc += row[v] * bins[v];
        }
        assert_eq!(got[i], acc);
    }
}

#[test]
fn cepstrum_matches_naive_sum() {
    let c = MfccConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let energies: Vec<f64> = (0..26).map(|_| rng.random_range(1e-3..1e3)).collect();
        let got = mfcc(&energies, &c).unwrap();
        let want = naive_cepstrum(&energies, 13, c.log_floor);
        for (a, b) in got.coeffs.iter().zip(&want) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn constant_energies_cancel() {
    let c = MfccConfig {
        num_coeffs: 26,
        ..MfccConfig::default()
    };
    for level in [1e-8, 0.3, 1.0, 42.0, 1e9] {
        let got = mfcc(&vec![level; 26], &c).unwrap();
        assert!(got.coeffs.iter().all(|v| v.abs() < 1e-9), "{level}: {:?}", got.coeffs);
    }
}

#[test]
fn cepstrum_is_amplitude_invariant() {
    let extractor = MfccExtractor::new(MfccConfig::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let frame = random_frame(&mut rng, 2048);
        let base = extractor.frame_features(&frame).unwrap();
        for alpha in [0.5, 2.0, 10.0] {
            let scaled: Vec<f64> = frame.iter().map(|x| alpha * x).collect();
            let got = extractor.frame_features(&scaled).unwrap();
            for (a, b) in got.coeffs.iter().zip(&base.coeffs) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn small_pipelines_match_naive_definition() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let configs = [(16, 2, 2), (32, 4, 4), (64, 8, 8), (64, 6, 3)];
    for (n, k, m) in configs {
        for window in [WindowKind::Hann, WindowKind::Rectangular] {
            let c = MfccConfig {
                dft_size: n,
                num_channels: k,
                num_coeffs: m,
                window,
                ..MfccConfig::default()
            };
            let extractor = MfccExtractor::new(c.clone()).unwrap();
            for _ in 0..25 {
                let frame = random_frame(&mut rng, n);
                let got = extractor.frame_features(&frame).unwrap();
                let want = naive_pipeline(&frame, &c);
                let scale = max_abs(&want).max(1.0);
                for (a, b) in got.coeffs.iter().zip(&want) {
                    assert!((a - b).abs() <= 1e-9 * scale, "N={n} K={k}: {a} vs {b}");
                }
            }
        }
    }
}

#[test]
fn identical_inputs_give_identical_features() {
    let extractor = MfccExtractor::new(MfccConfig::default()).unwrap();
    let frame = random_frame(&mut ChaCha8Rng::seed_from_u64(7), 2048);
    let a = extractor.frame_features(&frame).unwrap();
    let b = MfccExtractor::new(MfccConfig::default()).unwrap().frame_features(&frame).unwrap();
    assert_eq!(a, b);
}
