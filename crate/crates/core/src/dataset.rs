//! From recordings to labelled feature tables.
//!
//! Recordings are cut into non-overlapping frames; only frames whose mean
//! rotational frequency lies in the analysis band (42..=45 Hz by default)
//! are kept. Gated frames can be cached per channel, split into train and
//! test partitions, and z-scored with statistics fitted on training frames.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::audio::{self, AudioRecording, TRACK_BLOCK};
use crate::dsp::{FeatureVector, MfccExtractor};
use crate::{Error, Execution, Label, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Motor,
    Gearbox,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// WAV path, relative to the manifest's directory unless absolute.
    pub file: String,
    pub label: Label,
    pub axle: String,
    pub component: Component,
    #[serde(default)]
    pub description: String,
}

/// Channel id to recording metadata, stored as a JSON object.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Manifest {
    entries: BTreeMap<String, ManifestEntry>,
    #[serde(skip)]
    base_dir: PathBuf,
}

// a plain map would silently keep the last of two entries with the same id
impl<'de> Deserialize<'de> for Manifest {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct Entries;

        impl<'de> serde::de::Visitor<'de> for Entries {
            type Value = Manifest;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("an object mapping channel ids to recordings")
            }

            fn visit_map<A: serde::de::MapAccess<'de>>(self, mut map: A) -> std::result::Result<Manifest, A::Error> {
                let mut manifest = Manifest::default();
                while let Some((id, entry)) = map.next_entry::<String, ManifestEntry>()? {
                    manifest.insert(&id, entry).map_err(serde::de::Error::custom)?;
                }
                Ok(manifest)
            }
        }

        deserializer.deserialize_map(Entries)
    }
}

impl Manifest {
    pub const FILE_NAME: &'static str = "manifest.json";

    pub fn insert(&mut self, channel_id: &str, entry: ManifestEntry) -> Result<()> {
        if self.entries.contains_key(channel_id) {
            return Err(Error::Data(format!("duplicate channel id {channel_id:?} in manifest")));
        }
        self.entries.insert(channel_id.to_string(), entry);
        Ok(())
    }

    pub fn get(&self, channel_id: &str) -> Option<&ManifestEntry> {
        self.entries.get(channel_id)
    }

    pub fn entry(&self, channel_id: &str) -> Result<&ManifestEntry> {
        self.get(channel_id)
            .ok_or_else(|| Error::Data(format!("channel {channel_id:?} is not in the manifest")))
    }

    /// Entries in channel-id order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &ManifestEntry)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn channel_ids(&self) -> Vec<String> {
        self.entries.keys().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn resolve(&self, channel_id: &str) -> Result<PathBuf> {
        let file = Path::new(&self.entry(channel_id)?.file);
        Ok(if file.is_absolute() {
            file.to_path_buf()
        } else {
            self.base_dir.join(file)
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: Manifest = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        manifest.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Checks that every referenced WAV exists.
    pub fn validate_files(&self) -> Result<()> {
        for id in self.entries.keys() {
            let path = self.resolve(id)?;
            if !path.is_file() {
                return Err(Error::Data(format!("channel {id}: recording {} not found", path.display())));
            }
        }
        Ok(())
    }

    pub fn load_recording(&self, channel_id: &str) -> Result<AudioRecording> {
        audio::read_recording(&self.resolve(channel_id)?, channel_id)
    }
}

/// Closed rotational-frequency interval `[lo, hi]` in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotBand {
    pub lo: f64,
    pub hi: f64,
}

impl Default for RotBand {
    fn default() -> Self {
        Self { lo: 42.0, hi: 45.0 }
    }
}

impl RotBand {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::Config(format!("rotational band {lo}:{hi} is empty")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, f: f64) -> bool {
        self.lo <= f && f <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub features: FeatureVector,
    pub label: Label,
    pub channel_id: String,
    /// Mean rotational frequency over the frame, Hz.
    pub mean_rot_freq: f64,
    pub frame_index: u64,
}

/// Mean of the block track over samples `[start, start + len)`.
fn frame_rot_freq(track: &[f64], start: usize, len: usize) -> f64 {
    if len == TRACK_BLOCK && start.is_multiple_of(TRACK_BLOCK) {
        return track[start / TRACK_BLOCK];
    }
    let (mut acc, mut covered) = (0.0, 0usize);
    let mut pos = start;
    while pos < start + len && pos / TRACK_BLOCK < track.len() {
        let block = pos / TRACK_BLOCK;
        let end = ((block + 1) * TRACK_BLOCK).min(start + len);
        acc += track[block] * (end - pos) as f64;
        covered += end - pos;
        pos = end;
    }
    acc / covered as f64
}

/// Frames of `recording` whose mean rotational frequency lies in `band`,
/// with their cepstral features, in temporal order.
pub fn gate_frames(
    recording: &AudioRecording,
    label: Label,
    extractor: &MfccExtractor,
    band: RotBand,
    exec: Execution,
) -> Result<Vec<FrameRecord>> {
    let config = extractor.config();
    if recording.sample_rate() != config.sample_rate {
        return Err(Error::SampleRate {
            recording: recording.sample_rate(),
            expected: config.sample_rate,
        });
    }
    let track = recording.rot_track().ok_or_else(|| {
        Error::Data(format!("recording {} has no rotational frequency track", recording.channel_id()))
    })?;
    let n = config.dft_size;
    let total = recording.samples().len() / n;
    // the last frame may reach into a trailing partial track block
    if total > 0 && ((total - 1) * n) / TRACK_BLOCK >= track.len() {
        return Err(Error::Data(format!(
            "rotational track of {} covers {} blocks, too short for {total} frames",
            recording.channel_id(),
            track.len()
        )));
    }
    let (kept, freqs): (Vec<usize>, Vec<f64>) = (0..total)
        .map(|i| (i, frame_rot_freq(track, i * n, n)))
        .filter(|&(_, f)| band.contains(f))
        .unzip();
    let features = extractor.frames_features(recording.samples(), &kept, exec);
    Ok(kept
        .into_iter()
        .zip(freqs)
        .zip(features)
        .map(|((idx, f), features)| FrameRecord {
            features,
            label,
            channel_id: recording.channel_id().to_string(),
            mean_rot_freq: f,
            frame_index: idx as u64,
        })
        .collect())
}

/// Keeps the records whose mean rotational frequency lies in `band`.
pub fn gate_records(frames: &[FrameRecord], band: RotBand) -> Vec<FrameRecord> {
    frames.iter().filter(|f| band.contains(f.mean_rot_freq)).cloned().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SplitMode {
    /// Seeded shuffle of the pooled frames, then partition.
    Random,
    /// Train and test come from disjoint channel sets.
    ByChannel {
        train_channels: Vec<String>,
        test_channels: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    #[serde(flatten)]
    pub mode: SplitMode,
    pub train_size: usize,
    pub test_size: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<FrameRecord>,
    pub test: Vec<FrameRecord>,
}

/// Per-class counts indexed by [`Label::index`].
pub fn class_counts(frames: &[FrameRecord]) -> [usize; 2] {
    let mut counts = [0; 2];
    for f in frames {
        counts[f.label.index()] += 1;
    }
    counts
}

/// Equal share of `size` for each of `parts` channels, remainder to the first ones.
fn quotas(size: usize, parts: usize) -> Vec<usize> {
    (0..parts).map(|i| size / parts + usize::from(i < size % parts)).collect()
}

fn subsample_by_channel(
    frames: &[FrameRecord],
    channels: &[String],
    size: usize,
    rng: &mut ChaCha8Rng,
    role: &str,
) -> Result<Vec<FrameRecord>> {
    let mut out = Vec::with_capacity(size);
    for (channel, quota) in channels.iter().zip(quotas(size, channels.len())) {
        let mut idx: Vec<usize> = frames
            .iter()
            .enumerate()
            .filter(|(_, f)| &f.channel_id == channel)
            .map(|(i, _)| i)
            .collect();
        if idx.len() < quota {
            return Err(Error::Data(format!(
                "{role} set needs {quota} frames from channel {channel} but only {} are available",
                idx.len()
            )));
        }
        idx.shuffle(rng);
        idx.truncate(quota);
        out.extend(idx.into_iter().map(|i| frames[i].clone()));
    }
    Ok(out)
}

pub fn make_split(frames: &[FrameRecord], spec: &SplitSpec) -> Result<Split> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match &spec.mode {
        SplitMode::Random => {
            let needed = spec.train_size + spec.test_size;
            if needed > frames.len() {
                return Err(Error::Data(format!(
                    "split needs {needed} frames but only {} are available",
                    frames.len()
                )));
            }
            let mut idx: Vec<usize> = (0..frames.len()).collect();
            idx.shuffle(&mut rng);
            let pick = |ids: &[usize]| ids.iter().map(|&i| frames[i].clone()).collect();
            Ok(Split {
                train: pick(&idx[..spec.train_size]),
                test: pick(&idx[spec.train_size..needed]),
            })
        }
        SplitMode::ByChannel {
            train_channels,
            test_channels,
        } => {
            if train_channels.is_empty() || test_channels.is_empty() {
                return Err(Error::Config("by-channel split needs train and test channels".into()));
            }
            let train_set: HashSet<&String> = train_channels.iter().collect();
            if let Some(c) = test_channels.iter().find(|c| train_set.contains(c)) {
                return Err(Error::Config(format!("channel {c} is listed for both train and test")));
            }
            Ok(Split {
                train: subsample_by_channel(frames, train_channels, spec.train_size, &mut rng, "train")?,
                test: subsample_by_channel(frames, test_channels, spec.test_size, &mut rng, "test")?,
            })
        }
    }
}

/// Per-coefficient z-score statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormalizationStats {
    /// Population mean and standard deviation of each coefficient.
    pub fn fit(frames: &[FrameRecord]) -> Result<Self> {
        let vectors: Vec<&[f64]> = frames.iter().map(|f| f.features.coeffs.as_slice()).collect();
        Self::fit_vectors(&vectors)
    }

    pub fn fit_vectors(vectors: &[&[f64]]) -> Result<Self> {
        let Some(first) = vectors.first() else {
            return Err(Error::Data("cannot fit normalization on an empty training set".into()));
        };
        let dim = first.len();
        if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
            return Err(Error::Shape {
                what: "feature vector",
                expected: dim,
                actual: v.len(),
            });
        }
        let n = vectors.len() as f64;
        let mean: Vec<f64> = (0..dim).map(|j| vectors.iter().map(|v| v[j]).sum::<f64>() / n).collect();
        let std: Vec<f64> = (0..dim)
            .map(|j| (vectors.iter().map(|v| (v[j] - mean[j]).powi(2)).sum::<f64>() / n).sqrt())
            .collect();
        if let Some(j) = std.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::Data(format!(
                "coefficient c{} has zero variance over {} training frame(s)",
                j + 1,
                vectors.len()
            )));
        }
        Ok(Self { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, coeffs: &[f64]) -> Vec<f64> {
        coeffs
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }

    pub fn apply(&self, frames: &mut [FrameRecord]) -> Result<()> {
        for f in frames.iter_mut() {
            if f.features.len() != self.dim() {
                return Err(Error::Shape {
                    what: "feature vector",
                    expected: self.dim(),
                    actual: f.features.len(),
                });
            }
            if f.features.normalized {
                return Err(Error::Data(format!(
                    "frame {} of {} is already normalized",
                    f.frame_index, f.channel_id
                )));
            }
            f.features.coeffs = self.transform(&f.features.coeffs);
            f.features.normalized = true;
        }
        Ok(())
    }
}

const CACHE_MAGIC: &[u8; 4] = b"ABFC";
pub const CACHE_VERSION: u16 = 1;
const CACHE_HEADER: usize = 4 + 2 + 2 + 8;

#[derive(Debug, Clone, PartialEq)]
pub struct CachedFrame {
    pub mean_rot_freq: f64,
    pub coeffs: Vec<f64>,
    pub frame_index: u64,
}

/// Gated frames of one channel, in the binary cache layout:
///
/// ```text
/// "ABFC" | version u16 | num_coeffs u16 | frame count u64
/// then per frame: mean f_r f64 | coeffs f64 x num_coeffs | frame_index u64
/// ```
///
/// All integers and floats little-endian.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureCache {
    pub num_coeffs: u16,
    pub frames: Vec<CachedFrame>,
}

impl FeatureCache {
    pub fn from_records(frames: &[FrameRecord], num_coeffs: usize) -> Result<Self> {
        let nc = u16::try_from(num_coeffs).map_err(|_| Error::Config(format!("{num_coeffs} coefficients")))?;
        let frames = frames
            .iter()
            .map(|f| {
                if f.features.len() != num_coeffs {
                    return Err(Error::Shape {
                        what: "feature vector",
                        expected: num_coeffs,
                        actual: f.features.len(),
                    });
                }
                Ok(CachedFrame {
                    mean_rot_freq: f.mean_rot_freq,
                    coeffs: f.features.coeffs.clone(),
                    frame_index: f.frame_index,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { num_coeffs: nc, frames })
    }

    pub fn into_records(self, channel_id: &str, label: Label) -> Vec<FrameRecord> {
        self.frames
            .into_iter()
            .map(|f| FrameRecord {
                features: FeatureVector::new(f.coeffs),
                label,
                channel_id: channel_id.to_string(),
                mean_rot_freq: f.mean_rot_freq,
                frame_index: f.frame_index,
            })
            .collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let per_frame = 8 * (self.num_coeffs as usize + 2);
        let mut out = Vec::with_capacity(CACHE_HEADER + per_frame * self.frames.len());
        out.extend_from_slice(CACHE_MAGIC);
        out.extend_from_slice(&CACHE_VERSION.to_le_bytes());
        out.extend_from_slice(&self.num_coeffs.to_le_bytes());
        out.extend_from_slice(&(self.frames.len() as u64).to_le_bytes());
        for f in &self.frames {
            out.extend_from_slice(&f.mean_rot_freq.to_le_bytes());
            for c in &f.coeffs {
                out.extend_from_slice(&c.to_le_bytes());
            }
            out.extend_from_slice(&f.frame_index.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |reason: String| Error::format("feature cache", reason);
        if bytes.len() < CACHE_HEADER {
            return Err(bad(format!("{} bytes is shorter than the header", bytes.len())));
        }
        if &bytes[..4] != CACHE_MAGIC {
            return Err(bad(format!("bad magic {:?}", &bytes[..4])));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != CACHE_VERSION {
            return Err(Error::Version {
                what: "feature cache",
                found: version,
                supported: CACHE_VERSION,
            });
        }
        let num_coeffs = u16::from_le_bytes([bytes[6], bytes[7]]);
        let count = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
        let per_frame = 8 * (num_coeffs as usize + 2);
        let body = &bytes[CACHE_HEADER..];
        let expected = usize::try_from(count)
            .ok()
            .and_then(|c| c.checked_mul(per_frame))
            .ok_or_else(|| bad(format!("frame count {count} overflows")))?;
        if body.len() != expected {
            return Err(bad(format!(
                "header announces {count} frames ({expected} bytes) but {} bytes follow",
                body.len()
            )));
        }
        let f64_at = |chunk: &[u8], i: usize| f64::from_le_bytes(chunk[8 * i..8 * i + 8].try_into().expect("8 bytes"));
        let frames = body
            .chunks_exact(per_frame)
            .map(|chunk| CachedFrame {
                mean_rot_freq: f64_at(chunk, 0),
                coeffs: (0..num_coeffs as usize).map(|j| f64_at(chunk, j + 1)).collect(),
                frame_index: u64::from_le_bytes(chunk[per_frame - 8..].try_into().expect("8 bytes")),
            })
            .collect();
        Ok(Self { num_coeffs, frames })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|e| match e {
            Error::Format { what, reason } => Error::Format {
                what,
                reason: format!("{}: {reason}", path.display()),
            },
            other => other,
        })
    }
}

pub fn cache_path(dir: &Path, channel_id: &str) -> PathBuf {
    dir.join(format!("{channel_id}.abfc"))
}

/// Gated frames of the listed channels read from their caches in `dir`,
/// labelled from the manifest, concatenated in the given channel order.
pub fn load_cached_frames(manifest: &Manifest, dir: &Path, channels: &[String]) -> Result<Vec<FrameRecord>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for id in channels {
        if !seen.insert(id) {
            continue;
        }
        let label = manifest.entry(id)?.label;
        out.extend(FeatureCache::read(&cache_path(dir, id))?.into_records(id, label));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::MfccConfig;

    fn record(channel: &str, label: Label, idx: u64, coeffs: Vec<f64>) -> FrameRecord {
        FrameRecord {
            features: FeatureVector::new(coeffs),
            label,
            channel_id: channel.into(),
            mean_rot_freq: 43.0,
            frame_index: idx,
        }
    }

    fn frames(channels: &[(&str, Label)], per_channel: usize) -> Vec<FrameRecord> {
        channels
            .iter()
            .flat_map(|&(c, l)| (0..per_channel).map(move |i| record(c, l, i as u64, vec![i as f64, 1.0])))
            .collect()
    }

    fn recording_with_track(track: Vec<f64>) -> AudioRecording {
        let n = track.len() * TRACK_BLOCK;
        let samples = (0..n).map(|k| ((k * 7919) % 1000) as f64 / 1000.0 - 0.5).collect();
        AudioRecording::new("ch", 25_600.0, samples).unwrap().with_rot_track(track).unwrap()
    }

    #[test]
    fn gate_keeps_closed_band() {
        let rec = recording_with_track(vec![43.0, 41.9, 45.0, 42.0, 45.01]);
        let ex = MfccExtractor::new(MfccConfig::default()).unwrap();
        let kept = gate_frames(&rec, Label::Healthy, &ex, RotBand::default(), Execution::default()).unwrap();
        let idx: Vec<u64> = kept.iter().map(|f| f.frame_index).collect();
        assert_eq!(idx, vec![0, 2, 3]);
        assert_eq!(kept[1].mean_rot_freq, 45.0);
        // features equal the ungated extraction of the same frame
        let all = ex.extract(&rec, Execution::Sequential).unwrap();
        assert_eq!(kept[2].features, all[3]);
        // idempotent
        assert_eq!(gate_records(&kept, RotBand::default()), kept);
    }

    #[test]
    fn gate_requires_track() {
        let rec = AudioRecording::new("ch", 25_600.0, vec![0.0; 4096]).unwrap();
        let ex = MfccExtractor::new(MfccConfig::default()).unwrap();
        assert!(gate_frames(&rec, Label::Healthy, &ex, RotBand::default(), Execution::default()).is_err());
    }

    #[test]
    fn longer_frames_average_the_track() {
        let track = vec![40.0, 44.0, 43.0, 43.0];
        assert_eq!(frame_rot_freq(&track, 0, 4096), 42.0);
        assert_eq!(frame_rot_freq(&track, 4096, 4096), 43.0);
        assert_eq!(frame_rot_freq(&track, 1024, 1024), 40.0);
    }

    #[test]
    fn random_split_is_a_partition() {
        let all = frames(&[("a", Label::Damaged), ("b", Label::Healthy)], 50);
        let spec = SplitSpec {
            mode: SplitMode::Random,
            train_size: 70,
            test_size: 30,
            seed: 9,
        };
        let s = make_split(&all, &spec).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (70, 30));
        let key = |f: &FrameRecord| (f.channel_id.clone(), f.frame_index);
        let mut keys: Vec<_> = s.train.iter().chain(&s.test).map(key).collect();
        keys.sort();
        let mut expected: Vec<_> = all.iter().map(key).collect();
        expected.sort();
        assert_eq!(keys, expected);
        assert_eq!(make_split(&all, &spec).unwrap(), s);
        let other = make_split(&all, &SplitSpec { seed: 10, ..spec.clone() }).unwrap();
        assert_ne!(other.train, s.train);
    }

    #[test]
    fn random_split_too_large() {
        let all = frames(&[("a", Label::Damaged)], 10);
        let spec = SplitSpec {
            mode: SplitMode::Random,
            train_size: 8,
            test_size: 3,
            seed: 1,
        };
        assert!(make_split(&all, &spec).is_err());
    }

    #[test]
    fn by_channel_split() {
        let all = frames(
            &[
                ("A1_b1", Label::Damaged),
                ("B1_b1", Label::Healthy),
                ("A2_b2", Label::Damaged),
                ("B2_b2", Label::Healthy),
            ],
            40,
        );
        let spec = SplitSpec {
            mode: SplitMode::ByChannel {
                train_channels: vec!["A1_b1".into(), "B1_b1".into()],
                test_channels: vec!["A2_b2".into(), "B2_b2".into()],
            },
            train_size: 31,
            test_size: 20,
            seed: 4,
        };
        let s = make_split(&all, &spec).unwrap();
        assert_eq!(class_counts(&s.train), [15, 16]);
        assert_eq!(class_counts(&s.test), [10, 10]);
        assert!(s.train.iter().all(|f| f.channel_id == "A1_b1" || f.channel_id == "B1_b1"));
        assert!(s.test.iter().all(|f| f.channel_id == "A2_b2" || f.channel_id == "B2_b2"));

        let overlapping = SplitSpec {
            mode: SplitMode::ByChannel {
                train_channels: vec!["A1_b1".into()],
                test_channels: vec!["A1_b1".into()],
            },
            ..spec.clone()
        };
        assert!(matches!(make_split(&all, &overlapping), Err(Error::Config(_))));
        let too_many = SplitSpec {
            train_size: 100,
            ..spec
        };
        assert!(make_split(&all, &too_many).is_err());
    }

    #[test]
    fn normalization() {
        let mut train: Vec<FrameRecord> = (0..10)
            .map(|i| record("a", Label::Healthy, i, vec![i as f64, (i * i) as f64 - 3.0]))
            .collect();
        let stats = NormalizationStats::fit(&train).unwrap();
        stats.apply(&mut train).unwrap();
        for j in 0..2 {
            let col: Vec<f64> = train.iter().map(|f| f.features.coeffs[j]).collect();
            let mean = col.iter().sum::<f64>() / 10.0;
            let std = (col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 10.0).sqrt();
            assert!(mean.abs() < 1e-9);
            assert!((std - 1.0).abs() < 1e-9);
        }
        assert!(train.iter().all(|f| f.features.normalized));
        assert!(stats.apply(&mut train).is_err());
    }

    #[test]
    fn single_frame_normalization_fails() {
        let one = vec![record("a", Label::Healthy, 0, vec![1.0, 2.0])];
        assert!(NormalizationStats::fit(&one).is_err());
        assert!(NormalizationStats::fit(&[]).is_err());
    }

    #[test]
    fn normalization_ignores_constant_shift() {
        let base: Vec<FrameRecord> = (0..20)
            .map(|i| record("a", Label::Healthy, i, vec![(i as f64).sin(), (i as f64 * 0.3).cos()]))
            .collect();
        let shifted: Vec<FrameRecord> = base
            .iter()
            .map(|f| {
                let mut g = f.clone();
                g.features.coeffs = g.features.coeffs.iter().map(|x| x + 17.5).collect();
                g
            })
            .collect();
        let (mut a, mut b) = (base.clone(), shifted.clone());
        NormalizationStats::fit(&base).unwrap().apply(&mut a).unwrap();
        NormalizationStats::fit(&shifted).unwrap().apply(&mut b).unwrap();
        for (x, y) in a.iter().zip(&b) {
            for (p, q) in x.features.coeffs.iter().zip(&y.features.coeffs) {
                assert!((p - q).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn cache_rejects_corruption() {
        let recs = frames(&[("a", Label::Healthy)], 3);
        let cache = FeatureCache::from_records(&recs, 2).unwrap();
        let bytes = cache.to_bytes();
        assert_eq!(bytes.len(), 16 + 3 * 8 * 4);
        assert_eq!(FeatureCache::from_bytes(&bytes).unwrap(), cache);

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(FeatureCache::from_bytes(&bad), Err(Error::Format { .. })));
        let mut future = bytes.clone();
        future[4] = 2;
        assert!(matches!(FeatureCache::from_bytes(&future), Err(Error::Version { found: 2, .. })));
        assert!(FeatureCache::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(FeatureCache::from_bytes(&bytes[..10]).is_err());
    }

    #[test]
    fn manifest_round_trip_and_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = Manifest::default();
        let entry = ManifestEntry {
            file: "x.wav".into(),
            label: Label::Damaged,
            axle: "A1".into(),
            component: Component::Motor,
            description: "inner ring".into(),
        };
        m.insert("A1_b1", entry.clone()).unwrap();
        assert!(m.insert("A1_b1", entry).is_err());
        let path = dir.path().join(Manifest::FILE_NAME);
        m.save(&path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"label\": \"D\""));
        assert!(text.contains("\"component\": \"motor\""));
        let back = Manifest::load(&path).unwrap();
        assert_eq!(back.entry("A1_b1").unwrap(), m.entry("A1_b1").unwrap());
        assert_eq!(back.resolve("A1_b1").unwrap(), dir.path().join("x.wav"));
        let err = back.validate_files().unwrap_err();
        assert!(err.to_string().contains("x.wav"));

        let e = r#"{"file": "a.wav", "label": "H", "axle": "B1", "component": "motor"}"#;
        let text = format!(r#"{{"B1_b1": {e}, "B1_b1": {e}}}"#);
        let err = serde_json::from_str::<Manifest>(&text).unwrap_err();
        assert!(err.to_string().contains("B1_b1"), "{err}");
    }

    #[test]
    fn manifest_rejects_unknown_label() {
        let text = r#"{"a": {"file": "a.wav", "label": "X", "axle": "A1", "component": "motor"}}"#;
        assert!(serde_json::from_str::<Manifest>(text).is_err());
    }
}
