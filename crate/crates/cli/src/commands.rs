//! One function per subcommand. Each reports progress to `log` and writes its
//! artifacts under the given output directory.

use std::io::Write;
use std::path::{Path, PathBuf};

use bearing_acoustics::classifier::{self, ModelFile, TrainConfig};
use bearing_acoustics::dataset::{
    self, class_counts, gate_frames, make_split, FeatureCache, FrameRecord, Manifest, NormalizationStats, RotBand,
    SplitMode, SplitSpec,
};
use bearing_acoustics::dsp::{MfccConfig, MfccExtractor};
use bearing_acoustics::eval::{self, MetricsReport};
use bearing_acoustics::synth::{self, Scenario};
use bearing_acoustics::{Error, Execution, Result};
use serde::{Deserialize, Serialize};

pub const FEATURES_FILE: &str = "features.json";
pub const MODEL_FILE: &str = "model.abmm";
pub const TRAIN_LOG_FILE: &str = "train_log.json";
pub const REPORT_STEM: &str = "report";

/// Frame and cepstrum settings plus the rotational-speed gate.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureOptions {
    pub mfcc: MfccConfig,
    pub band: RotBand,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

// Progress output is best effort; a closed stdout must not fail a run.
macro_rules! say {
    ($log:expr, $($arg:tt)*) => {
        let _ = writeln!($log, $($arg)*);
    };
}

/// Synthesizes `scenario` into `out_dir`: one WAV and `.track` per channel
/// plus `manifest.json`.
pub fn synth(scenario: &Scenario, out_dir: &Path, exec: Execution, log: &mut dyn Write) -> Result<Manifest> {
    scenario.validate()?;
    create_dir(out_dir)?;
    let campaign = synth::synth_campaign(scenario, exec)?;
    campaign.write_to(out_dir)?;
    let band = RotBand::default();
    let frame = MfccConfig::default().dft_size as f64;
    for ch in &scenario.channels {
        let cfg = &ch.synth;
        let in_band = cfg.rot_profile.in_band_duration(band.lo, band.hi, cfg.duration);
        say!(
            log,
            "{:<8} {} {:>8.2} s  ~{} frames in {}..{} Hz",
            ch.channel_id,
            ch.label,
            cfg.duration,
            (in_band * cfg.sample_rate / frame).floor(),
            band.lo,
            band.hi
        );
    }
    say!(log, "wrote {} channels to {}", scenario.channels.len(), out_dir.display());
    Ok(campaign.manifest)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExtractSummary {
    pub channel_id: String,
    pub total_frames: usize,
    pub gated_frames: usize,
}

/// Frames, gates and featurizes each channel, writing `<id>.abfc` caches
/// and `features.json` into `out_dir`. `channels` defaults to the whole manifest.
pub fn extract(
    manifest: &Manifest,
    channels: Option<&[String]>,
    features: &FeatureOptions,
    out_dir: &Path,
    exec: Execution,
    log: &mut dyn Write,
) -> Result<Vec<ExtractSummary>> {
    let extractor = MfccExtractor::new(features.mfcc.clone())?;
    let ids = match channels {
        Some(list) => list.to_vec(),
        None => manifest.channel_ids(),
    };
    create_dir(out_dir)?;
    let mut summaries = Vec::with_capacity(ids.len());
    for id in &ids {
        let entry = manifest.entry(id)?;
        let rec = manifest.load_recording(id)?;
        let frames = gate_frames(&rec, entry.label, &extractor, features.band, exec)?;
        FeatureCache::from_records(&frames, features.mfcc.num_coeffs)?.write(&dataset::cache_path(out_dir, id))?;
        let summary = ExtractSummary {
            channel_id: id.clone(),
            total_frames: rec.samples().len() / features.mfcc.dft_size,
            gated_frames: frames.len(),
        };
        say!(
            log,
            "{:<8} {} frames, {} gated",
            summary.channel_id,
            summary.total_frames,
            summary.gated_frames
        );
        summaries.push(summary);
    }
    write_json(&out_dir.join(FEATURES_FILE), features)?;
    Ok(summaries)
}

pub fn read_feature_options(features_dir: &Path) -> Result<FeatureOptions> {
    read_json(&features_dir.join(FEATURES_FILE))
}

/// Channels whose frames feed a split. Random splits draw from `pool`, or
/// from the whole manifest when `pool` is empty.
pub fn split_channels(manifest: &Manifest, split: &SplitSpec, pool: &[String]) -> Vec<String> {
    match &split.mode {
        SplitMode::Random if pool.is_empty() => manifest.channel_ids(),
        SplitMode::Random => pool.to_vec(),
        SplitMode::ByChannel {
            train_channels,
            test_channels,
        } => train_channels.iter().chain(test_channels).cloned().collect(),
    }
}

/// Everything needed to reproduce a split of cached frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRequest {
    pub split: SplitSpec,
    /// Channel pool of a random split; empty means every manifest channel.
    #[serde(default)]
    pub pool: Vec<String>,
}

pub fn load_split(manifest: &Manifest, features_dir: &Path, req: &SplitRequest) -> Result<dataset::Split> {
    let channels = split_channels(manifest, &req.split, &req.pool);
    let frames = dataset::load_cached_frames(manifest, features_dir, &channels)?;
    make_split(&frames, &req.split)
}

fn inputs(frames: &[FrameRecord]) -> Vec<Vec<f64>> {
    frames.iter().map(|f| f.features.coeffs.clone()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub seed: u64,
    pub features: FeatureOptions,
    pub split: SplitRequest,
    pub normalize: bool,
    pub train: TrainConfig,
    /// `[H, D]` frames in the training partition.
    pub train_class_counts: [usize; 2],
    pub epoch_losses: Vec<f64>,
    /// Percent of training frames classified correctly by the final model.
    pub final_train_accuracy: f64,
}

/// Trains on the training partition and writes `model.abmm` and
/// `train_log.json` into `out_dir`.
#[allow(clippy::too_many_arguments)]
pub fn train(
    manifest: &Manifest,
    features_dir: &Path,
    req: &SplitRequest,
    config: &TrainConfig,
    normalize: bool,
    out_dir: &Path,
    exec: Execution,
    log: &mut dyn Write,
) -> Result<(ModelFile, TrainLog)> {
    config.validate()?;
    let features = read_feature_options(features_dir)?;
    let mut split = load_split(manifest, features_dir, req)?;
    if split.train.is_empty() {
        return Err(Error::Data("training partition is empty".into()));
    }
    let normalization = if normalize {
        let stats = NormalizationStats::fit(&split.train)?;
        stats.apply(&mut split.train)?;
        Some(stats)
    } else {
        None
    };
    let counts = class_counts(&split.train);
    say!(
        log,
        "training on {} frames (H {}, D {})",
        split.train.len(),
        counts[0],
        counts[1]
    );
    let xs = inputs(&split.train);
    let ys: Vec<_> = split.train.iter().map(|f| f.label).collect();
    let outcome = classifier::train_with_progress(&xs, &ys, config, exec, |epoch, loss| {
        say!(log, "epoch {:>3}/{}  loss {loss:.6}", epoch + 1, config.epochs);
    })?;
    let cm = eval::evaluate(&outcome.model, &split.train, exec)?;
    let final_train_accuracy = cm.accuracy().unwrap_or(0.0);
    say!(log, "final training accuracy {final_train_accuracy:.2}%");

    create_dir(out_dir)?;
    let model = ModelFile {
        model: outcome.model,
        normalization,
    };
    model.save(&out_dir.join(MODEL_FILE))?;
    let train_log = TrainLog {
        seed: config.seed,
        features,
        split: req.clone(),
        normalize,
        train: config.clone(),
        train_class_counts: counts,
        epoch_losses: outcome.epoch_losses,
        final_train_accuracy,
    };
    write_json(&out_dir.join(TRAIN_LOG_FILE), &train_log)?;
    Ok((model, train_log))
}

/// Scores `model` on the test partition and writes `report.json` and
/// `report.txt` into `out_dir`.
pub fn evaluate(
    manifest: &Manifest,
    features_dir: &Path,
    model: &ModelFile,
    req: &SplitRequest,
    out_dir: &Path,
    exec: Execution,
    log: &mut dyn Write,
) -> Result<MetricsReport> {
    let features = read_feature_options(features_dir)?;
    if features.mfcc.num_coeffs != model.model.input_dim() {
        return Err(Error::Shape {
            what: "model input (cached coefficients per frame)",
            expected: model.model.input_dim(),
            actual: features.mfcc.num_coeffs,
        });
    }
    let mut test = load_split(manifest, features_dir, req)?.test;
    if let Some(stats) = &model.normalization {
        stats.apply(&mut test)?;
    }
    let cm = eval::evaluate(&model.model, &test, exec)?;
    let report = eval::metrics(&cm)?;
    create_dir(out_dir)?;
    report.write(out_dir, REPORT_STEM)?;
    say!(log, "{report}");
    Ok(report)
}

/// Writes a two-coefficient scatter table of the cached frames of `channels`
/// (all manifest channels when empty).
pub fn scatter(
    manifest: &Manifest,
    features_dir: &Path,
    channels: &[String],
    pair: (usize, usize),
    out: &Path,
    log: &mut dyn Write,
) -> Result<usize> {
    let ids = if channels.is_empty() {
        manifest.channel_ids()
    } else {
        channels.to_vec()
    };
    let frames = dataset::load_cached_frames(manifest, features_dir, &ids)?;
    eval::export_scatter(&frames, pair.0, pair.1, out)?;
    say!(log, "wrote {} rows to {}", frames.len(), out.display());
    Ok(frames.len())
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    Manifest::load(path)
}

/// `<dir>/manifest.json`
pub fn manifest_path(dir: &Path) -> PathBuf {
    dir.join(Manifest::FILE_NAME)
}
