//! Recordings, 16-bit PCM WAV files and rotational-speed sidecars.
//!
//! Samples are held as `f64` in nominal full scale `[-1, 1)`. WAV files are
//! single channel, 16-bit signed little-endian; values outside full scale
//! are clipped on write.
//!
//! The rotational frequency travels beside each WAV as a plain text file with
//! one ASCII float per line, one line per [`TRACK_BLOCK`]-sample block.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::{Error, Result};

/// Block length (samples) of the rotational-frequency track.
pub const TRACK_BLOCK: usize = 2048;

const PCM_SCALE: f64 = 32768.0;

/// A single-channel waveform with its rotational-speed side channel.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioRecording {
    channel_id: String,
    sample_rate: f64,
    samples: Vec<f64>,
    rot_track: Option<Vec<f64>>,
}

impl AudioRecording {
    pub fn new(channel_id: impl Into<String>, sample_rate: f64, samples: Vec<f64>) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::Data(format!("sample rate {sample_rate} must be positive")));
        }
        if let Some(pos) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::Data(format!("sample {pos} is not finite")));
        }
        Ok(Self {
            channel_id: channel_id.into(),
            sample_rate,
            samples,
            rot_track: None,
        })
    }

    /// Attaches the per-block mean rotational frequency. The track must have
    /// exactly `floor(len / TRACK_BLOCK)` entries.
    pub fn with_rot_track(mut self, track: Vec<f64>) -> Result<Self> {
        let expected = self.samples.len() / TRACK_BLOCK;
        if track.len() != expected {
            return Err(Error::Shape {
                what: "rotational frequency track",
                expected,
                actual: track.len(),
            });
        }
        if let Some(bad) = track.iter().find(|f| !f.is_finite()) {
            return Err(Error::Data(format!("rotational frequency {bad} is not finite")));
        }
        self.rot_track = Some(track);
        Ok(self)
    }

    pub fn channel_id(&self) -> &str {
        &self.channel_id
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn rot_track(&self) -> Option<&[f64]> {
        self.rot_track.as_deref()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }
}

fn to_pcm(x: f64) -> i16 {
    (x * PCM_SCALE).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

pub fn write_wav(path: &Path, recording: &AudioRecording) -> Result<()> {
    let rate = recording.sample_rate();
    if rate.fract() != 0.0 || rate > u32::MAX as f64 {
        return Err(Error::Data(format!("sample rate {rate} cannot be stored in a WAV header")));
    }
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: rate as u32,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let wav_err = |source| Error::Wav {
        path: path.to_path_buf(),
        source,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(wav_err)?;
    {
        let mut w = writer.get_i16_writer(recording.samples().len() as u32);
        for &x in recording.samples() {
            w.write_sample(to_pcm(x));
        }
        w.flush().map_err(wav_err)?;
    }
    writer.finalize().map_err(wav_err)
}

/// Reads a mono 16-bit WAV as channel `channel_id`.
pub fn read_wav(path: &Path, channel_id: &str) -> Result<AudioRecording> {
    let wav_err = |source| Error::Wav {
        path: path.to_path_buf(),
        source,
    };
    let reader = hound::WavReader::open(path).map_err(wav_err)?;
    let spec = reader.spec();
    if spec.channels != 1 || spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
        return Err(Error::format(
            "WAV",
            format!(
                "{}: expected mono 16-bit PCM, found {} channel(s) at {} bits",
                path.display(),
                spec.channels,
                spec.bits_per_sample
            ),
        ));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| v as f64 / PCM_SCALE))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(wav_err)?;
    AudioRecording::new(channel_id, spec.sample_rate as f64, samples)
}

/// Sidecar path for a WAV: same stem, `.track` extension.
pub fn track_path(wav: &Path) -> PathBuf {
    wav.with_extension("track")
}

pub fn write_track(path: &Path, track: &[f64]) -> Result<()> {
    let mut text = String::with_capacity(track.len() * 20);
    for f in track {
        // shortest round-trip representation
        let _ = writeln!(text, "{f:?}");
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_track(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse::<f64>().map_err(|e| {
                Error::format("rotational track", format!("{} line {}: {e}", path.display(), i + 1))
            })
        })
        .collect()
}

/// Writes `<path>` and its `.track` sidecar when the recording carries one.
pub fn write_recording(path: &Path, recording: &AudioRecording) -> Result<()> {
    write_wav(path, recording)?;
    if let Some(track) = recording.rot_track() {
        write_track(&track_path(path), track)?;
    }
    Ok(())
}

/// Reads a WAV and, when present, its `.track` sidecar.
pub fn read_recording(path: &Path, channel_id: &str) -> Result<AudioRecording> {
    let rec = read_wav(path, channel_id)?;
    let sidecar = track_path(path);
    if sidecar.exists() {
        rec.with_rot_track(read_track(&sidecar)?)
    } else {
        Ok(rec)
    }
}
