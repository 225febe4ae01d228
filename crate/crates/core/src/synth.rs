//! Synthetic airborne drivetrain sound.
//!
//! A recording is the sum of three independently seeded parts:
//!
//! * shaft harmonics `a_h sin(2 pi h phi(t) + theta_h)` where `phi` is the
//!   integral of the rotational frequency profile,
//! * white Gaussian noise with RMS `noise_level`,
//! * for damaged bearings, impacts at `fault_freq_ratio * f_r(t)`, each
//!   ringing a structural resonance `exp(-d tau) sin(2 pi f_res tau)`.
//!   Inner-ring impacts are additionally amplitude modulated by the shaft.
//!
//! Removing the fault from a config leaves the other two parts bit-identical,
//! so faulted minus healthy is exactly the impulse train.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::audio::{self, AudioRecording, TRACK_BLOCK};
use crate::dataset::{Component, Manifest, ManifestEntry};
use crate::{Error, Execution, Label, Result};

const STREAM_HARMONICS: u64 = 1;
const STREAM_NOISE: u64 = 2;
const STREAM_FAULT: u64 = 3;

/// Depth of the shaft-synchronous amplitude modulation of inner-ring impacts.
pub const SHAFT_MODULATION_DEPTH: f64 = 0.5;

/// Impulse responses are truncated once they decayed by this factor.
const RINGDOWN_FLOOR: f64 = 1e-6;

/// Piecewise-linear rotational frequency `f_r(t)`, held constant before the
/// first and after the last breakpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct RotProfile {
    points: Vec<(f64, f64)>,
}

impl TryFrom<Vec<(f64, f64)>> for RotProfile {
    type Error = Error;

    fn try_from(points: Vec<(f64, f64)>) -> Result<Self> {
        RotProfile::new(points)
    }
}

impl From<RotProfile> for Vec<(f64, f64)> {
    fn from(p: RotProfile) -> Self {
        p.points
    }
}

impl RotProfile {
    /// Breakpoints `(time s, frequency Hz)` with strictly increasing times.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Config("rotational profile needs at least one point".into()));
        }
        if points.iter().any(|&(t, f)| !t.is_finite() || !(f.is_finite() && f > 0.0)) {
            return Err(Error::Config("rotational profile frequencies must be positive and finite".into()));
        }
        if points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Config("rotational profile times must be strictly increasing".into()));
        }
        Ok(Self { points })
    }

    pub fn constant(freq: f64) -> Result<Self> {
        Self::new(vec![(0.0, freq)])
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn at(&self, t: f64) -> f64 {
        let pts = &self.points;
        let seg = pts.partition_point(|&(ti, _)| ti <= t);
        if seg == 0 {
            return pts[0].1;
        }
        if seg == pts.len() {
            return pts[seg - 1].1;
        }
        let (t0, f0) = pts[seg - 1];
        let (t1, f1) = pts[seg];
        f0 + (f1 - f0) * (t - t0) / (t1 - t0)
    }

    pub fn min(&self) -> f64 {
        self.points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Time within `[0, duration]` during which `lo <= f_r(t) <= hi`.
    pub fn in_band_duration(&self, lo: f64, hi: f64, duration: f64) -> f64 {
        let mut knots = vec![(0.0, self.at(0.0))];
        knots.extend(self.points.iter().copied().filter(|&(t, _)| t > 0.0 && t < duration));
        knots.push((duration, self.at(duration)));
        knots
            .windows(2)
            .map(|w| {
                let ((t0, f0), (t1, f1)) = (w[0], w[1]);
                if f0 == f1 {
                    return if (lo..=hi).contains(&f0) { t1 - t0 } else { 0.0 };
                }
                // parameter s in [0,1] where the segment is inside the band
                let s_at = |f: f64| (f - f0) / (f1 - f0);
                let (a, b) = if f1 > f0 { (s_at(lo), s_at(hi)) } else { (s_at(hi), s_at(lo)) };
                let (a, b) = (a.max(0.0), b.min(1.0));
                if b > a {
                    (b - a) * (t1 - t0)
                } else {
                    0.0
                }
            })
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultKind {
    OuterRing,
    InnerRing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultSpec {
    pub kind: FaultKind,
    /// Impact rate as a multiple of the rotational frequency.
    pub fault_freq_ratio: f64,
    /// Peak amplitude of a single impact response.
    pub impulse_amplitude: f64,
    /// Hz.
    pub resonance_freq: f64,
    /// 1/s.
    pub resonance_decay: f64,
    pub amplitude_modulated_by_shaft: bool,
    /// Fractional randomization of impact amplitude and timing.
    pub severity_jitter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub sample_rate: f64,
    /// Seconds.
    pub duration: f64,
    pub seed: u64,
    pub rot_profile: RotProfile,
    /// `(harmonic index, amplitude)` pairs of shaft harmonics.
    pub harmonics: Vec<(u32, f64)>,
    /// RMS of the additive broadband noise.
    pub noise_level: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<FaultSpec>,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return bad(format!("sample rate {} must be positive", self.sample_rate));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return bad(format!("duration {} must be positive", self.duration));
        }
        if self.harmonics.iter().any(|&(h, a)| h == 0 || !(a.is_finite() && a >= 0.0)) {
            return bad("harmonic indices must be >= 1 and amplitudes >= 0".into());
        }
        if !(self.noise_level.is_finite() && self.noise_level >= 0.0) {
            return bad(format!("noise level {} must be >= 0", self.noise_level));
        }
        if let Some(f) = &self.fault {
            if !(f.fault_freq_ratio.is_finite() && f.fault_freq_ratio > 0.0) {
                return bad(format!("fault frequency ratio {} must be positive", f.fault_freq_ratio));
            }
            if !(f.resonance_freq > 0.0 && f.resonance_freq < self.sample_rate / 2.0) {
                return bad(format!("resonance {} Hz must lie below Nyquist", f.resonance_freq));
            }
            if !(f.resonance_decay.is_finite() && f.resonance_decay > 0.0) {
                return bad(format!("resonance decay {} must be positive", f.resonance_decay));
            }
            if !(f.impulse_amplitude.is_finite() && f.impulse_amplitude >= 0.0) {
                return bad(format!("impulse amplitude {} must be >= 0", f.impulse_amplitude));
            }
            if !(0.0..1.0).contains(&f.severity_jitter) {
                return bad(format!("severity jitter {} must lie in [0, 1)", f.severity_jitter));
            }
        }
        Ok(())
    }

    pub fn num_samples(&self) -> usize {
        (self.duration * self.sample_rate).round() as usize
    }

    /// Mean power of the harmonic part, `sum a_h^2 / 2`.
    pub fn harmonic_power(&self) -> f64 {
        self.harmonics.iter().map(|&(_, a)| a * a / 2.0).sum()
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// Impact amplitude giving the impulse train a mean power `snr_db` relative
/// to `harmonic_power`, for impacts at `rate` per second ringing with `decay`.
pub fn impulse_amplitude_for_snr(snr_db: f64, harmonic_power: f64, rate: f64, decay: f64) -> f64 {
    // energy of one response exp(-d t) sin(w t) is ~1/(4d) for w >> d
    let target = harmonic_power * 10f64.powf(snr_db / 10.0);
    (4.0 * decay * target / rate).sqrt()
}

/// Walks the sample grid accumulating shaft revolutions with the trapezoid rule.
struct ShaftSweep<'a> {
    profile: &'a RotProfile,
    sample_rate: f64,
    k: usize,
    segment: usize,
    freq: f64,
    cycles: f64,
}

impl<'a> ShaftSweep<'a> {
    fn new(profile: &'a RotProfile, sample_rate: f64) -> Self {
        Self {
            profile,
            sample_rate,
            k: 0,
            segment: 0,
            freq: profile.at(0.0),
            cycles: 0.0,
        }
    }

    fn freq_at(&mut self, t: f64) -> f64 {
        let pts = self.profile.points();
        while self.segment < pts.len() && pts[self.segment].0 <= t {
            self.segment += 1;
        }
        match self.segment {
            0 => pts[0].1,
            s if s == pts.len() => pts[s - 1].1,
            s => {
                let (t0, f0) = pts[s - 1];
                let (t1, f1) = pts[s];
                f0 + (f1 - f0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// Current sample's `(f_r, revolutions since t = 0)`, then advances.
    fn next_sample(&mut self) -> (f64, f64) {
        let out = (self.freq, self.cycles);
        self.k += 1;
        let next = self.freq_at(self.k as f64 / self.sample_rate);
        self.cycles += 0.5 * (self.freq + next) / self.sample_rate;
        self.freq = next;
        out
    }
}

/// One fault impact: onset time in seconds and peak amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Impulse {
    pub time: f64,
    pub amplitude: f64,
}

/// Impacts placed by the generator for `config.fault`, in time order of
/// their nominal (unjittered) positions. Empty without a fault.
pub fn fault_impulses(config: &SynthConfig) -> Result<Vec<Impulse>> {
    config.validate()?;
    let Some(fault) = &config.fault else {
        return Ok(Vec::new());
    };
    let fs = config.sample_rate;
    let mut rng = config.rng(STREAM_FAULT);
    let mut sweep = ShaftSweep::new(&config.rot_profile, fs);
    let mut impulses = Vec::new();
    let (mut prev_f, mut prev_cycles) = sweep.next_sample();
    for k in 1..config.num_samples() {
        let (f, cycles) = sweep.next_sample();
        let (psi0, psi1) = (fault.fault_freq_ratio * prev_cycles, fault.fault_freq_ratio * cycles);
        let mut m = psi0.floor() + 1.0;
        while m <= psi1 {
            let frac = (m - psi0) / (psi1 - psi0);
            let nominal = (k as f64 - 1.0 + frac) / fs;
            let period = 1.0 / (fault.fault_freq_ratio * (prev_f + frac * (f - prev_f)));
            let jitter_t: f64 = rng.random_range(-1.0..=1.0);
            let jitter_a: f64 = rng.random_range(-1.0..=1.0);
            let mut amplitude = fault.impulse_amplitude * (1.0 + fault.severity_jitter * jitter_a);
            if fault.amplitude_modulated_by_shaft {
                let shaft_phase = prev_cycles + frac * (cycles - prev_cycles);
                amplitude *= 1.0 + SHAFT_MODULATION_DEPTH * (2.0 * PI * shaft_phase).cos();
            }
            impulses.push(Impulse {
                time: (nominal + fault.severity_jitter * period * jitter_t).max(0.0),
                amplitude,
            });
            m += 1.0;
        }
        prev_f = f;
        prev_cycles = cycles;
    }
    Ok(impulses)
}

fn render_impulses(samples: &mut [f64], impulses: &[Impulse], fault: &FaultSpec, fs: f64) {
    let decay = fault.resonance_decay;
    let omega = 2.0 * PI * fault.resonance_freq;
    let length = ((-RINGDOWN_FLOOR.ln()) / decay * fs).ceil() as usize;
    let step_mag = (-decay / fs).exp();
    let (step_re, step_im) = ((omega / fs).cos() * step_mag, (omega / fs).sin() * step_mag);
    for imp in impulses {
        let k0 = (imp.time * fs).ceil() as usize;
        if k0 >= samples.len() {
            continue;
        }
        let tau0 = k0 as f64 / fs - imp.time;
        let mag = imp.amplitude * (-decay * tau0).exp();
        let (mut re, mut im) = ((omega * tau0).cos() * mag, (omega * tau0).sin() * mag);
        let end = (k0 + length).min(samples.len());
        for s in samples[k0..end].iter_mut() {
            *s += im;
            (re, im) = (re * step_re - im * step_im, re * step_im + im * step_re);
        }
    }
}

/// Generates one recording. Deterministic in `config` (including its seed).
pub fn synth_recording(channel_id: &str, config: &SynthConfig) -> Result<AudioRecording> {
    config.validate()?;
    let fs = config.sample_rate;
    let n = config.num_samples();
    let max_h = config.harmonics.iter().map(|h| h.0).max().unwrap_or(0) as usize;

    let mut phase_rng = config.rng(STREAM_HARMONICS);
    let mut amps = vec![0.0; max_h + 1];
    let mut offsets = vec![(0.0, 0.0); max_h + 1];
    for &(h, a) in &config.harmonics {
        let theta: f64 = phase_rng.random_range(0.0..2.0 * PI);
        amps[h as usize] += a;
        offsets[h as usize] = (theta.cos(), theta.sin());
    }

    let mut samples = Vec::with_capacity(n);
    let mut track = Vec::with_capacity(n / TRACK_BLOCK);
    let mut block_sum = 0.0;
    let mut sweep = ShaftSweep::new(&config.rot_profile, fs);
    for k in 0..n {
        let (f, cycles) = sweep.next_sample();
        block_sum += f;
        if (k + 1) % TRACK_BLOCK == 0 {
            track.push(block_sum / TRACK_BLOCK as f64);
            block_sum = 0.0;
        }
        // e^{i h 2 pi phi} by repeated multiplication of the fundamental phasor
        let (s1, c1) = (2.0 * PI * cycles.fract()).sin_cos();
        let (mut c, mut s) = (1.0, 0.0);
        let mut value = 0.0;
        for h in 1..=max_h {
            (c, s) = (c * c1 - s * s1, c * s1 + s * c1);
            if amps[h] != 0.0 {
                let (cos_t, sin_t) = offsets[h];
                value += amps[h] * (s * cos_t + c * sin_t);
            }
        }
        samples.push(value);
    }

    if config.noise_level > 0.0 {
        let normal = Normal::new(0.0, config.noise_level).map_err(|e| Error::Config(e.to_string()))?;
        let mut rng = config.rng(STREAM_NOISE);
        for s in samples.iter_mut() {
            *s += normal.sample(&mut rng);
        }
    }

    if let Some(fault) = &config.fault {
        render_impulses(&mut samples, &fault_impulses(config)?, fault, fs);
    }

    AudioRecording::new(channel_id, fs, samples)?.with_rot_track(track)
}

/// One microphone channel of a campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub channel_id: String,
    pub label: Label,
    pub axle: String,
    pub component: Component,
    #[serde(default)]
    pub description: String,
    pub synth: SynthConfig,
}

/// Ordered list of channels to synthesize.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Scenario {
    pub channels: Vec<ChannelSpec>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for ch in &self.channels {
            if !seen.insert(ch.channel_id.as_str()) {
                return Err(Error::Data(format!("duplicate channel id {:?} in scenario", ch.channel_id)));
            }
            ch.synth
                .validate()
                .map_err(|e| Error::Config(format!("channel {}: {e}", ch.channel_id)))?;
        }
        Ok(())
    }
}

/// Synthesized recordings with the manifest describing them.
#[derive(Debug, Clone)]
pub struct Campaign {
    pub recordings: Vec<AudioRecording>,
    pub manifest: Manifest,
}

impl Campaign {
    /// Writes `<id>.wav`, `<id>.track` and `manifest.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for rec in &self.recordings {
            let entry = self
                .manifest
                .get(rec.channel_id())
                .ok_or_else(|| Error::Data(format!("channel {} missing from manifest", rec.channel_id())))?;
            audio::write_recording(&dir.join(&entry.file), rec)?;
        }
        self.manifest.save(&dir.join(Manifest::FILE_NAME))
    }
}

pub fn synth_campaign(scenario: &Scenario, exec: Execution) -> Result<Campaign> {
    scenario.validate()?;
    let recordings = exec
        .map(&scenario.channels, |ch| synth_recording(&ch.channel_id, &ch.synth))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut manifest = Manifest::default();
    for ch in &scenario.channels {
        manifest.insert(
            &ch.channel_id,
            ManifestEntry {
                file: format!("{}.wav", ch.channel_id),
                label: ch.label,
                axle: ch.axle.clone(),
                component: ch.component,
                description: ch.description.clone(),
            },
        )?;
    }
    Ok(Campaign { recordings, manifest })
}

/// Settings of the built-in campaign.
pub mod defaults {
    use super::*;

    pub const SAMPLE_RATE: f64 = 25_600.0;
    /// Seconds per channel; 8000 frames of 2048 samples.
    pub const DURATION: f64 = 640.0;
    pub const NOISE_LEVEL: f64 = 0.05;

    pub const OUTER_RING_RATIO: f64 = 3.5;
    pub const INNER_RING_RATIO: f64 = 5.4;
    /// Nominal shaft speed used to convert impact SNR into amplitude.
    pub const NOMINAL_ROT_FREQ: f64 = 43.5;

    pub const MOTOR_RESONANCE: f64 = 3400.0;
    pub const MOTOR_DECAY: f64 = 900.0;
    pub const GEARBOX_RESONANCE: f64 = 5200.0;
    pub const GEARBOX_DECAY: f64 = 1200.0;

    /// Impact power relative to the harmonics, dB.
    pub const SNR_A1_B1: f64 = -5.0;
    pub const SNR_A2_B2: f64 = -1.0;
    pub const SNR_A2_B3: f64 = -3.0;

    pub const SEVERITY_JITTER: f64 = 0.05;

    /// Cruise at 44 Hz, one deceleration to 36 Hz and a recovery to 43 Hz.
    /// Every breakpoint and every 42 Hz crossing falls on a 2048-sample
    /// frame boundary, so the in-band time is a whole number of frames.
    pub fn rot_profile() -> RotProfile {
        RotProfile::new(vec![
            (0.0, 44.0),
            (320.0, 44.0),
            (345.6, 36.0),
            (384.0, 36.0),
            (401.92, 43.0),
        ])
        .expect("static profile is valid")
    }

    pub fn motor_harmonics(gain: f64) -> Vec<(u32, f64)> {
        [(1, 0.030), (2, 0.020), (3, 0.012), (4, 0.010), (5, 0.006), (6, 0.005), (8, 0.004)]
            .into_iter()
            .map(|(h, a)| (h, a * gain))
            .collect()
    }

    /// Motor-like harmonics plus gear-mesh lines at 17 and 34 times f_r.
    pub fn gearbox_harmonics(gain: f64) -> Vec<(u32, f64)> {
        let mut h = motor_harmonics(gain);
        h.extend([(17, 0.012 * gain), (34, 0.006 * gain)]);
        h
    }

    pub fn channel_seed(campaign_seed: u64, channel_id: &str) -> u64 {
        // FNV-1a over the id, mixed with the campaign seed
        let hash = channel_id
            .bytes()
            .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3));
        hash ^ campaign_seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
    }

    pub fn fault(kind: FaultKind, snr_db: f64, harmonics: &[(u32, f64)], component: Component) -> FaultSpec {
        let (resonance_freq, resonance_decay) = match component {
            Component::Motor => (MOTOR_RESONANCE, MOTOR_DECAY),
            Component::Gearbox => (GEARBOX_RESONANCE, GEARBOX_DECAY),
        };
        let ratio = match kind {
            FaultKind::OuterRing => OUTER_RING_RATIO,
            FaultKind::InnerRing => INNER_RING_RATIO,
        };
        let power: f64 = harmonics.iter().map(|&(_, a)| a * a / 2.0).sum();
        FaultSpec {
            kind,
            fault_freq_ratio: ratio,
            impulse_amplitude: impulse_amplitude_for_snr(snr_db, power, ratio * NOMINAL_ROT_FREQ, resonance_decay),
            resonance_freq,
            resonance_decay,
            amplitude_modulated_by_shaft: kind == FaultKind::InnerRing,
            severity_jitter: SEVERITY_JITTER,
        }
    }
}

struct ChannelTemplate {
    id: &'static str,
    axle: &'static str,
    component: Component,
    gain: f64,
    noise_gain: f64,
    fault: Option<(FaultKind, f64)>,
    description: &'static str,
}

const DEFAULT_CHANNELS: [ChannelTemplate; 6] = [
    ChannelTemplate {
        id: "A1_b1",
        axle: "A1",
        component: Component::Motor,
        gain: 1.0,
        noise_gain: 1.0,
        fault: Some((FaultKind::InnerRing, defaults::SNR_A1_B1)),
        description: "deep groove ball bearing, motor DE, inner ring pitting, very early stage",
    },
    ChannelTemplate {
        id: "A2_b2",
        axle: "A2",
        component: Component::Motor,
        gain: 0.95,
        noise_gain: 1.04,
        fault: Some((FaultKind::OuterRing, defaults::SNR_A2_B2)),
        description: "deep groove ball bearing, motor DE, outer ring fatigue, slightly more developed stage",
    },
    ChannelTemplate {
        id: "A2_b3",
        axle: "A2",
        component: Component::Gearbox,
        gain: 1.0,
        noise_gain: 1.0,
        fault: Some((FaultKind::OuterRing, defaults::SNR_A2_B3)),
        description: "cylindrical roller bearing, gearbox NDE, outer ring fatigue, developed stage",
    },
    ChannelTemplate {
        id: "B1_b1",
        axle: "B1",
        component: Component::Motor,
        gain: 1.02,
        noise_gain: 0.98,
        fault: None,
        description: "healthy reference, motor DE",
    },
    ChannelTemplate {
        id: "B2_b2",
        axle: "B2",
        component: Component::Motor,
        gain: 0.97,
        noise_gain: 1.02,
        fault: None,
        description: "healthy reference, motor DE",
    },
    ChannelTemplate {
        id: "B2_b3",
        axle: "B2",
        component: Component::Gearbox,
        gain: 1.0,
        noise_gain: 1.0,
        fault: None,
        description: "healthy reference, gearbox NDE",
    },
];

/// Healthy gearbox references at the remaining axles.
const EXTRA_GEARBOX_CHANNELS: [ChannelTemplate; 2] = [
    ChannelTemplate {
        id: "A1_b3",
        axle: "A1",
        component: Component::Gearbox,
        gain: 1.03,
        noise_gain: 0.97,
        fault: None,
        description: "healthy gearbox NDE",
    },
    ChannelTemplate {
        id: "B1_b3",
        axle: "B1",
        component: Component::Gearbox,
        gain: 0.98,
        noise_gain: 1.03,
        fault: None,
        description: "healthy gearbox NDE",
    },
];

fn channel_from_template(t: &ChannelTemplate, seed: u64, duration: f64) -> ChannelSpec {
    let harmonics = match t.component {
        Component::Motor => defaults::motor_harmonics(t.gain),
        Component::Gearbox => defaults::gearbox_harmonics(t.gain),
    };
    let fault = t.fault.map(|(kind, snr)| defaults::fault(kind, snr, &harmonics, t.component));
    ChannelSpec {
        channel_id: t.id.to_string(),
        label: if fault.is_some() { Label::Damaged } else { Label::Healthy },
        axle: t.axle.to_string(),
        component: t.component,
        description: t.description.to_string(),
        synth: SynthConfig {
            sample_rate: defaults::SAMPLE_RATE,
            duration,
            seed: defaults::channel_seed(seed, t.id),
            rot_profile: defaults::rot_profile(),
            harmonics,
            noise_level: defaults::NOISE_LEVEL * t.noise_gain,
            fault,
        },
    }
}

/// Three damaged and three healthy channels: inner-ring (early) and
/// outer-ring (developed) motor faults on axles A1 and A2, an outer-ring
/// gearbox fault on A2, and motor and gearbox references on Car B.
pub fn default_scenario(seed: u64) -> Scenario {
    default_scenario_with_duration(seed, defaults::DURATION)
}

pub fn default_scenario_with_duration(seed: u64, duration: f64) -> Scenario {
    Scenario {
        channels: DEFAULT_CHANNELS
            .iter()
            .map(|t| channel_from_template(t, seed, duration))
            .collect(),
    }
}

/// The default scenario plus healthy gearbox references at axles A1 and B1.
pub fn extended_scenario(seed: u64) -> Scenario {
    extended_scenario_with_duration(seed, defaults::DURATION)
}

pub fn extended_scenario_with_duration(seed: u64, duration: f64) -> Scenario {
    let mut s = default_scenario_with_duration(seed, duration);
    s.channels.extend(
        EXTRA_GEARBOX_CHANNELS
            .iter()
            .map(|t| channel_from_template(t, seed, duration)),
    );
    s
}
