//! The named experiments: seen damages (motor, gearbox) and unseen damages
//! (train on one damaged motor bearing, test on the other).

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use bearing_acoustics::classifier::TrainConfig;
use bearing_acoustics::dataset::{Component, Manifest, SplitMode, SplitSpec};
use bearing_acoustics::eval::MetricsReport;
use bearing_acoustics::synth;
use bearing_acoustics::{Error, Execution, Label, Result};
use serde::{Deserialize, Serialize};

use crate::commands::{self, FeatureOptions, SplitRequest, TrainLog};

pub const EXPERIMENT_FILE: &str = "experiment.json";

/// Desk-scale split sizes.
pub const SEEN_SPLIT: (usize, usize) = (8000, 2000);
pub const UNSEEN_SPLIT: (usize, usize) = (5000, 5000);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentName {
    #[serde(rename = "seen-motor")]
    SeenMotor,
    #[serde(rename = "seen-gearbox")]
    SeenGearbox,
    #[serde(rename = "unseen-A2b2")]
    UnseenA2b2,
    #[serde(rename = "unseen-A1b1")]
    UnseenA1b1,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 4] = [
        ExperimentName::SeenMotor,
        ExperimentName::SeenGearbox,
        ExperimentName::UnseenA2b2,
        ExperimentName::UnseenA1b1,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::SeenMotor => "seen-motor",
            ExperimentName::SeenGearbox => "seen-gearbox",
            ExperimentName::UnseenA2b2 => "unseen-A2b2",
            ExperimentName::UnseenA1b1 => "unseen-A1b1",
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|n| n.as_str() == s).ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(|n| n.as_str()).collect();
            Error::Config(format!("unknown experiment {s:?}; expected one of {}", names.join(", ")))
        })
    }
}

/// A fully expanded experiment; written to `experiment.json` as the config echo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: ExperimentName,
    pub seed: u64,
    pub features: FeatureOptions,
    pub split: SplitRequest,
    pub train: TrainConfig,
    pub normalize: bool,
}

/// Command-line overrides of a named experiment's defaults.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub features: Option<FeatureOptions>,
    pub train_size: Option<usize>,
    pub test_size: Option<usize>,
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub batch_size: Option<usize>,
    pub normalize: Option<bool>,
}

fn ids(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

/// Healthy gearbox channels of axles A1, B1 and B2 present in `manifest`.
pub fn healthy_gearbox_channels(manifest: &Manifest) -> Vec<String> {
    manifest
        .entries()
        .filter(|(_, e)| {
            e.component == Component::Gearbox && e.label == Label::Healthy && ["A1", "B1", "B2"].contains(&e.axle.as_str())
        })
        .map(|(id, _)| id.to_string())
        .collect()
}

impl ExperimentSpec {
    /// Expands `name` against the channels available in `manifest`.
    pub fn named(name: ExperimentName, manifest: &Manifest, seed: u64, overrides: &Overrides) -> Result<Self> {
        let (mode, pool, (train_size, test_size)) = match name {
            ExperimentName::SeenMotor => (
                SplitMode::Random,
                ids(&["A1_b1", "A2_b2", "B1_b1", "B2_b2"]),
                SEEN_SPLIT,
            ),
            ExperimentName::SeenGearbox => {
                let mut pool = ids(&["A2_b3"]);
                let healthy = healthy_gearbox_channels(manifest);
                if healthy.is_empty() {
                    return Err(Error::Data("manifest has no healthy gearbox channel on axles A1, B1 or B2".into()));
                }
                pool.extend(healthy);
                (SplitMode::Random, pool, SEEN_SPLIT)
            }
            ExperimentName::UnseenA2b2 => (
                SplitMode::ByChannel {
                    train_channels: ids(&["A1_b1", "B1_b1"]),
                    test_channels: ids(&["A2_b2", "B2_b2"]),
                },
                Vec::new(),
                UNSEEN_SPLIT,
            ),
            ExperimentName::UnseenA1b1 => (
                SplitMode::ByChannel {
                    train_channels: ids(&["A2_b2", "B2_b2"]),
                    test_channels: ids(&["A1_b1", "B1_b1"]),
                },
                Vec::new(),
                UNSEEN_SPLIT,
            ),
        };
        let split = SplitSpec {
            mode,
            train_size: overrides.train_size.unwrap_or(train_size),
            test_size: overrides.test_size.unwrap_or(test_size),
            seed,
        };
        let split = SplitRequest { split, pool };
        for id in commands::split_channels(manifest, &split.split, &split.pool) {
            manifest.entry(&id)?;
        }
        let defaults = TrainConfig::default();
        let train = TrainConfig {
            epochs: overrides.epochs.unwrap_or(defaults.epochs),
            learning_rate: overrides.learning_rate.unwrap_or(defaults.learning_rate),
            batch_size: overrides.batch_size.unwrap_or(defaults.batch_size),
            seed,
            ..defaults
        };
        Ok(Self {
            name,
            seed,
            features: overrides.features.clone().unwrap_or_default(),
            split,
            train,
            normalize: overrides.normalize.unwrap_or(true),
        })
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub spec: ExperimentSpec,
    pub report: MetricsReport,
    pub train_log: TrainLog,
    pub out_dir: PathBuf,
}

/// Synthesizes the campaign a named experiment needs into `data_dir`.
/// Seen-gearbox gets the extended campaign with three healthy gearbox references.
pub fn synth_for(name: ExperimentName, data_dir: &Path, seed: u64, exec: Execution, log: &mut dyn Write) -> Result<Manifest> {
    let scenario = match name {
        ExperimentName::SeenGearbox => synth::extended_scenario(seed),
        _ => synth::default_scenario(seed),
    };
    commands::synth(&scenario, data_dir, exec, log)
}

/// extract, split, train and evaluate; everything lands in `out_dir`.
pub fn run(spec: &ExperimentSpec, manifest: &Manifest, out_dir: &Path, exec: Execution, log: &mut dyn Write) -> Result<ExperimentOutcome> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    commands::write_json(&out_dir.join(EXPERIMENT_FILE), spec)?;
    let features_dir = out_dir.join("features");
    let channels = commands::split_channels(manifest, &spec.split.split, &spec.split.pool);
    let _ = writeln!(log, "[{}] extracting features", spec.name);
    commands::extract(manifest, Some(&channels), &spec.features, &features_dir, exec, log)?;
    let _ = writeln!(log, "[{}] training", spec.name);
    let (model, train_log) = commands::train(
        manifest,
        &features_dir,
        &spec.split,
        &spec.train,
        spec.normalize,
        out_dir,
        exec,
        log,
    )?;
    let _ = writeln!(log, "[{}] evaluating", spec.name);
    let report = commands::evaluate(manifest, &features_dir, &model, &spec.split, out_dir, exec, log)?;
    Ok(ExperimentOutcome {
        spec: spec.clone(),
        report,
        train_log,
        out_dir: out_dir.to_path_buf(),
    })
}

/// Expands and runs `name` on the campaign in `data_dir`, synthesizing it first
/// when `synth_first` is set.
#[allow(clippy::too_many_arguments)]
pub fn run_named(
    name: ExperimentName,
    data_dir: &Path,
    out_dir: &Path,
    seed: u64,
    synth_first: bool,
    overrides: &Overrides,
    exec: Execution,
    log: &mut dyn Write,
) -> Result<ExperimentOutcome> {
    let manifest_path = commands::manifest_path(data_dir);
    let manifest = if synth_first {
        synth_for(name, data_dir, seed, exec, log)?;
        Manifest::load(&manifest_path)?
    } else if manifest_path.exists() {
        Manifest::load(&manifest_path)?
    } else {
        return Err(Error::Data(format!(
            "{} not found; synthesize a campaign first or pass --synth-first",
            manifest_path.display()
        )));
    };
    let spec = ExperimentSpec::named(name, &manifest, seed, overrides)?;
    run(&spec, &manifest, out_dir, exec, log)
}
