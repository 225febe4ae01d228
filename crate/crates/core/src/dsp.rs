//! MFCC front end.
//!
//! Each frame of `N` samples is windowed, transformed with an `N`-point DFT
//! (only bins `0..=N/2` are kept for real input), weighted by `K` triangular
//! Mel filters and summed to channel energies `X_i`. The cepstral
//! coefficients are the unnormalized cosine transform of the log energies:
//!
//! ```text
//! c_mu = sum_{i=1..K} ln(max(X_i, eps)) * cos(pi * (2i - 1) * mu / (2K)),  mu = 1..M
//! ```
//!
//! There is no `c_0` term and no scale factor. Frames never overlap and a
//! trailing partial frame is dropped.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::audio::AudioRecording;
use crate::{Error, Execution, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    Rectangular,
    Hann,
}

/// Full parameterization of the feature extractor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfccConfig {
    /// DFT size `N`, equal to the frame length. Must be a power of two.
    pub dft_size: usize,
    /// Number of Mel channels `K`.
    pub num_channels: usize,
    /// Sampling rate in Hz.
    pub sample_rate: f64,
    /// Lower edge of the filterbank in Hz.
    pub freq_low: f64,
    /// Upper edge of the filterbank in Hz.
    pub freq_high: f64,
    /// Number of retained coefficients `c_1..c_M`.
    pub num_coeffs: usize,
    pub window: WindowKind,
    /// Energies are clamped to this value before the logarithm.
    pub log_floor: f64,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self {
            dft_size: 2048,
            num_channels: 26,
            sample_rate: 25_600.0,
            freq_low: 0.0,
            freq_high: 12_800.0,
            num_coeffs: 13,
            window: WindowKind::Hann,
            log_floor: 1e-10,
        }
    }
}

impl MfccConfig {
    pub fn validate(&self) -> Result<()> {
        let n = self.dft_size;
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::Config(format!("DFT size {n} is not a power of two >= 2")));
        }
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(Error::Config(format!("sample rate {} must be positive", self.sample_rate)));
        }
        let nyquist = self.sample_rate / 2.0;
        if !(self.freq_low >= 0.0 && self.freq_low < self.freq_high && self.freq_high <= nyquist) {
            return Err(Error::Config(format!(
                "filterbank band [{}, {}] Hz must satisfy 0 <= low < high <= {nyquist}",
                self.freq_low, self.freq_high
            )));
        }
        if self.num_coeffs == 0 || self.num_coeffs > self.num_channels || self.num_channels > n / 2 {
            return Err(Error::Config(format!(
                "need 1 <= coeffs ({}) <= channels ({}) <= N/2 ({})",
                self.num_coeffs,
                self.num_channels,
                n / 2
            )));
        }
        if !(self.log_floor.is_finite() && self.log_floor > 0.0) {
            return Err(Error::Config(format!("log floor {} must be positive", self.log_floor)));
        }
        Ok(())
    }

    /// Number of spectrum bins kept for real input, `N/2 + 1`.
    pub fn num_bins(&self) -> usize {
        self.dft_size / 2 + 1
    }
}

/// Analysis window samples `w[0..N]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    samples: Vec<f64>,
}

impl Window {
    pub fn new(kind: WindowKind, len: usize) -> Self {
        let samples = match kind {
            WindowKind::Rectangular => vec![1.0; len],
            // symmetric form: both end points are exactly zero
            WindowKind::Hann if len > 1 => {
                let denom = (len - 1) as f64;
                (0..len)
                    .map(|k| 0.5 * (1.0 - (2.0 * PI * k as f64 / denom).cos()))
                    .collect()
            }
            WindowKind::Hann => vec![1.0; len],
        };
        Self { samples }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Squared DFT magnitudes for bins `0..=N/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum {
    bins: Vec<f64>,
}

impl PowerSpectrum {
    pub fn new(bins: Vec<f64>) -> Result<Self> {
        if let Some(bad) = bins.iter().find(|b| !(**b >= 0.0 && b.is_finite())) {
            return Err(Error::Data(format!("power spectrum bin {bad} is not a finite non-negative value")));
        }
        Ok(Self { bins })
    }

    pub fn bins(&self) -> &[f64] {
        &self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }
}

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular Mel filters over the half spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    weights: Vec<Vec<f64>>,
    center_freqs: Vec<f64>,
    edge_bins: Vec<usize>,
}

impl MelFilterbank {
    /// Places `K + 2` points equally spaced on the Mel scale between the
    /// configured band edges and snaps them to the nearest DFT bin. Filter
    /// `i` rises linearly from point `i` to a peak of 1.0 at point `i + 1`
    /// and falls back to zero at point `i + 2`.
    pub fn new(config: &MfccConfig) -> Result<Self> {
        config.validate()?;
        let k = config.num_channels;
        let n = config.dft_size;
        let num_bins = config.num_bins();
        let mel_low = hz_to_mel(config.freq_low);
        let mel_high = hz_to_mel(config.freq_high);
        let step = (mel_high - mel_low) / (k + 1) as f64;

        let freqs: Vec<f64> = (0..k + 2)
            .map(|j| {
                if j == 0 {
                    config.freq_low
                } else if j == k + 1 {
                    config.freq_high
                } else {
                    mel_to_hz(mel_low + step * j as f64)
                }
            })
            .collect();
        let edge_bins: Vec<usize> = freqs
            .iter()
            .map(|f| ((f * n as f64 / config.sample_rate).round() as usize).min(num_bins - 1))
            .collect();
        if edge_bins.windows(2).any(|w| w[0] >= w[1]) {
            let mut distinct = edge_bins.clone();
            distinct.dedup();
            return Err(Error::Config(format!(
                "{} Mel channels need {} distinct DFT bins but only {} are available at {} Hz resolution",
                k,
                k + 2,
                distinct.len(),
                config.sample_rate / n as f64
            )));
        }

        let weights = edge_bins
            .windows(3)
            .map(|w| {
                let (lo, center, hi) = (w[0], w[1], w[2]);
                let mut row = vec![0.0; num_bins];
                for (bin, weight) in row.iter_mut().enumerate().take(hi + 1).skip(lo) {
                    *weight = if bin <= center {
                        (bin - lo) as f64 / (center - lo) as f64
                    } else {
                        (hi - bin) as f64 / (hi - center) as f64
                    };
                }
                row
            })
            .collect();

        Ok(Self {
            weights,
            center_freqs: freqs[1..=k].to_vec(),
            edge_bins,
        })
    }

    /// `K` rows of `N/2 + 1` weights.
    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn center_freqs(&self) -> &[f64] {
        &self.center_freqs
    }

    /// The `K + 2` snapped bin indices; filter `i` spans `edge_bins[i..=i+2]`.
    pub fn edge_bins(&self) -> &[usize] {
        &self.edge_bins
    }

    pub fn num_channels(&self) -> usize {
        self.weights.len()
    }
}

/// Cepstral coefficients `c_1..c_M` of one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub coeffs: Vec<f64>,
    pub normalized: bool,
}

impl FeatureVector {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self {
            coeffs,
            normalized: false,
        }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient `c_mu` with the 1-based index used in the cepstral sum.
    pub fn coeff(&self, mu: usize) -> Option<f64> {
        mu.checked_sub(1).and_then(|i| self.coeffs.get(i).copied())
    }
}

/// `N`-point DFT power spectrum of a windowed frame.
pub fn power_spectrum(frame: &[f64], window: &Window) -> Result<PowerSpectrum> {
    let n = frame.len();
    if window.len() != n {
        return Err(Error::Shape {
            what: "window",
            expected: n,
            actual: window.len(),
        });
    }
    if n == 0 {
        return Err(Error::Config("empty frame".into()));
    }
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut buffer = vec![Complex::new(0.0, 0.0); n];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    Ok(PowerSpectrum {
        bins: windowed_power(frame, window.samples(), fft.as_ref(), &mut buffer, &mut scratch),
    })
}

fn windowed_power(
    frame: &[f64],
    window: &[f64],
    fft: &dyn Fft<f64>,
    buffer: &mut [Complex<f64>],
    scratch: &mut [Complex<f64>],
) -> Vec<f64> {
    for ((slot, x), w) in buffer.iter_mut().zip(frame).zip(window) {
        *slot = Complex::new(x * w, 0.0);
    }
    fft.process_with_scratch(buffer, scratch);
    buffer[..frame.len() / 2 + 1].iter().map(|c| c.norm_sqr()).collect()
}

/// Mel channel energies `X_i = sum_nu g[i][nu] * P[nu]`.
pub fn filterbank_energies(spectrum: &PowerSpectrum, filterbank: &MelFilterbank) -> Result<Vec<f64>> {
    let expected = filterbank.weights.first().map_or(0, Vec::len);
    if spectrum.len() != expected {
        return Err(Error::Shape {
            what: "power spectrum",
            expected,
            actual: spectrum.len(),
        });
    }
    Ok(channel_energies(spectrum.bins(), filterbank))
}

fn channel_energies(bins: &[f64], filterbank: &MelFilterbank) -> Vec<f64> {
    filterbank
        .weights
        .iter()
        .zip(filterbank.edge_bins.windows(3))
        .map(|(row, edges)| {
            // weights are zero outside the triangle's support
            let (lo, hi) = (edges[0], edges[2]);
            row[lo..=hi].iter().zip(&bins[lo..=hi]).map(|(g, p)| g * p).sum()
        })
        .collect()
}

/// Cosine basis `cos(pi (2i-1) mu / 2K)` laid out as `[mu-1][i-1]`.
fn cosine_table(num_channels: usize, num_coeffs: usize) -> Vec<Vec<f64>> {
    let k = num_channels as f64;
    (1..=num_coeffs)
        .map(|mu| {
            (1..=num_channels)
                .map(|i| (PI * (2 * i - 1) as f64 * mu as f64 / (2.0 * k)).cos())
                .collect()
        })
        .collect()
}

fn cepstrum(energies: &[f64], table: &[Vec<f64>], log_floor: f64) -> Vec<f64> {
    let logs: Vec<f64> = energies.iter().map(|x| x.max(log_floor).ln()).collect();
    table
        .iter()
        .map(|basis| basis.iter().zip(&logs).map(|(c, l)| c * l).sum())
        .collect()
}

/// Cepstral coefficients from `K` channel energies.
pub fn mfcc(energies: &[f64], config: &MfccConfig) -> Result<FeatureVector> {
    if energies.len() != config.num_channels {
        return Err(Error::Shape {
            what: "filterbank energies",
            expected: config.num_channels,
            actual: energies.len(),
        });
    }
    if config.num_coeffs > config.num_channels {
        return Err(Error::Config("more coefficients than Mel channels".into()));
    }
    let table = cosine_table(config.num_channels, config.num_coeffs);
    Ok(FeatureVector::new(cepstrum(energies, &table, config.log_floor)))
}

/// Reusable extractor holding the window, filterbank, FFT plan and cosine
/// table for one configuration.
#[derive(Clone)]
pub struct MfccExtractor {
    config: MfccConfig,
    window: Window,
    filterbank: MelFilterbank,
    fft: Arc<dyn Fft<f64>>,
    cosines: Vec<Vec<f64>>,
}

impl std::fmt::Debug for MfccExtractor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MfccExtractor").field("config", &self.config).finish_non_exhaustive()
    }
}

impl MfccExtractor {
    pub fn new(config: MfccConfig) -> Result<Self> {
        let filterbank = MelFilterbank::new(&config)?;
        let window = Window::new(config.window, config.dft_size);
        let fft = FftPlanner::new().plan_fft_forward(config.dft_size);
        let cosines = cosine_table(config.num_channels, config.num_coeffs);
        Ok(Self {
            config,
            window,
            filterbank,
            fft,
            cosines,
        })
    }

    pub fn config(&self) -> &MfccConfig {
        &self.config
    }

    pub fn filterbank(&self) -> &MelFilterbank {
        &self.filterbank
    }

    /// Features of a single frame of exactly `N` samples.
    pub fn frame_features(&self, frame: &[f64]) -> Result<FeatureVector> {
        if frame.len() != self.config.dft_size {
            return Err(Error::Shape {
                what: "frame",
                expected: self.config.dft_size,
                actual: frame.len(),
            });
        }
        let mut buffer = vec![Complex::new(0.0, 0.0); frame.len()];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        Ok(self.features_with(frame, &mut buffer, &mut scratch))
    }

    fn features_with(&self, frame: &[f64], buffer: &mut [Complex<f64>], scratch: &mut [Complex<f64>]) -> FeatureVector {
        let power = windowed_power(frame, self.window.samples(), self.fft.as_ref(), buffer, scratch);
        let energies = channel_energies(&power, &self.filterbank);
        FeatureVector::new(cepstrum(&energies, &self.cosines, self.config.log_floor))
    }

    /// Features of the selected non-overlapping frames of `samples`, in the
    /// order of `frame_indices`.
    pub fn frames_features(&self, samples: &[f64], frame_indices: &[usize], exec: Execution) -> Vec<FeatureVector> {
        let n = self.config.dft_size;
        exec.map(frame_indices, |&idx| {
            let frame = &samples[idx * n..(idx + 1) * n];
            let mut buffer = vec![Complex::new(0.0, 0.0); n];
            let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
            self.features_with(frame, &mut buffer, &mut scratch)
        })
    }

    /// One feature vector per complete frame of the recording.
    pub fn extract(&self, recording: &AudioRecording, exec: Execution) -> Result<Vec<FeatureVector>> {
        if recording.sample_rate() != self.config.sample_rate {
            return Err(Error::SampleRate {
                recording: recording.sample_rate(),
                expected: self.config.sample_rate,
            });
        }
        let count = recording.samples().len() / self.config.dft_size;
        let indices: Vec<usize> = (0..count).collect();
        Ok(self.frames_features(recording.samples(), &indices, exec))
    }
}

/// Convenience wrapper building a one-off [`MfccExtractor`].
pub fn extract_features(recording: &AudioRecording, config: &MfccConfig) -> Result<Vec<FeatureVector>> {
    MfccExtractor::new(config.clone())?.extract(recording, Execution::default())
}
