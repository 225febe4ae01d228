use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use bearing_acoustics::classifier::{ModelFile, TrainConfig};
use bearing_acoustics::dataset::{RotBand, SplitMode, SplitSpec};
use bearing_acoustics::dsp::MfccConfig;
use bearing_acoustics::synth::{self, Scenario};
use bearing_acoustics::{Error, ErrorKind, Execution, Result};
use bearing_acoustics_cli::commands::{self, FeatureOptions, SplitRequest};
use bearing_acoustics_cli::experiment::{self, ExperimentName, Overrides};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Airborne-sound bearing fault detection on synthetic railway recordings.
#[derive(Parser)]
#[command(name = "abfd", version)]
struct Cli {
    /// Run everything on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a campaign: WAVs, rotational-speed tracks and manifest.json.
    Synth(SynthArgs),
    /// Extract gated MFCC features into per-channel caches.
    Extract(ExtractArgs),
    /// Train the classifier on the training partition.
    Train(TrainArgs),
    /// Evaluate a model on the test partition.
    Eval(EvalArgs),
    /// Export two cepstral coefficients per frame as a TSV scatter table.
    Scatter(ScatterArgs),
    /// Run a named experiment end to end.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Scenario JSON (array of channel specs).
    #[arg(long, conflicts_with_all = ["default_campaign", "extended_campaign", "duration"])]
    scenario: Option<PathBuf>,
    /// Built-in six-channel campaign.
    #[arg(long)]
    default_campaign: bool,
    /// Built-in campaign plus healthy gearbox channels on A1 and B1.
    #[arg(long, conflicts_with = "default_campaign")]
    extended_campaign: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seconds per channel for the built-in campaigns.
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

fn parse_band(s: &str) -> std::result::Result<RotBand, String> {
    let (lo, hi) = s.split_once(':').ok_or("expected LO:HI")?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("{lo}: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("{hi}: {e}"))?;
    RotBand::new(lo, hi).map_err(|e| e.to_string())
}

#[derive(Args, Clone)]
struct FeatureArgs {
    /// Expected sampling rate in Hz; the filterbank spans 0..fs/2.
    #[arg(long, default_value_t = 25_600.0)]
    fs: f64,
    /// Frame length and DFT size in samples.
    #[arg(long, default_value_t = 2048)]
    frame_len: usize,
    #[arg(long, default_value_t = 26)]
    mel_channels: usize,
    #[arg(long, default_value_t = 13)]
    coeffs: usize,
    /// Rotational-frequency gate in Hz, inclusive.
    #[arg(long, default_value = "42:45", value_parser = parse_band)]
    band: RotBand,
}

impl FeatureArgs {
    fn options(&self) -> FeatureOptions {
        FeatureOptions {
            mfcc: MfccConfig {
                dft_size: self.frame_len,
                num_channels: self.mel_channels,
                sample_rate: self.fs,
                freq_high: self.fs / 2.0,
                num_coeffs: self.coeffs,
                ..MfccConfig::default()
            },
            band: self.band,
        }
    }
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Comma-separated channel ids; all manifest channels by default.
    #[arg(long, value_delimiter = ',')]
    channels: Vec<String>,
    #[command(flatten)]
    features: FeatureArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitKind {
    Random,
    ByChannel,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long, value_enum, default_value_t = SplitKind::Random)]
    split: SplitKind,
    /// Training channels (by-channel), or part of the pool (random).
    #[arg(long, value_delimiter = ',')]
    train_channels: Vec<String>,
    /// Test channels (by-channel), or part of the pool (random).
    #[arg(long, value_delimiter = ',')]
    test_channels: Vec<String>,
    #[arg(long, default_value_t = 8000)]
    train_size: usize,
    #[arg(long, default_value_t = 2000)]
    test_size: usize,
    /// Seeds the split and the weight initialization.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SplitArgs {
    fn request(&self) -> SplitRequest {
        let (mode, pool) = match self.split {
            SplitKind::Random => {
                let pool = self.train_channels.iter().chain(&self.test_channels).cloned().collect();
                (SplitMode::Random, pool)
            }
            SplitKind::ByChannel => (
                SplitMode::ByChannel {
                    train_channels: self.train_channels.clone(),
                    test_channels: self.test_channels.clone(),
                },
                Vec::new(),
            ),
        };
        SplitRequest {
            split: SplitSpec {
                mode,
                train_size: self.train_size,
                test_size: self.test_size,
                seed: self.seed,
            },
            pool,
        }
    }
}

#[derive(Args)]
struct HyperArgs {
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 32)]
    batch: usize,
    /// Train on raw coefficients instead of z-scored ones.
    #[arg(long)]
    no_normalize: bool,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Directory written by `extract`.
    #[arg(long)]
    features: PathBuf,
    #[command(flatten)]
    split: SplitArgs,
    #[command(flatten)]
    hyper: HyperArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    features: PathBuf,
    #[command(flatten)]
    split: SplitArgs,
    #[arg(long)]
    out: PathBuf,
}

fn parse_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected A,B")?;
    let a = a.trim().parse().map_err(|e| format!("{a}: {e}"))?;
    let b = b.trim().parse().map_err(|e| format!("{b}: {e}"))?;
    Ok((a, b))
}

#[derive(Args)]
struct ScatterArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    features: PathBuf,
    #[arg(long, value_delimiter = ',')]
    channels: Vec<String>,
    /// 1-based coefficient indices, e.g. 1,2 or 4,13.
    #[arg(long, default_value = "1,2", value_parser = parse_pair)]
    pair: (usize, usize),
    /// Output TSV file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum NameArg {
    #[value(name = "seen-motor")]
    SeenMotor,
    #[value(name = "seen-gearbox")]
    SeenGearbox,
    #[value(name = "unseen-A2b2")]
    UnseenA2b2,
    #[value(name = "unseen-A1b1")]
    UnseenA1b1,
}

impl From<NameArg> for ExperimentName {
    fn from(n: NameArg) -> Self {
        match n {
            NameArg::SeenMotor => ExperimentName::SeenMotor,
            NameArg::SeenGearbox => ExperimentName::SeenGearbox,
            NameArg::UnseenA2b2 => ExperimentName::UnseenA2b2,
            NameArg::UnseenA1b1 => ExperimentName::UnseenA1b1,
        }
    }
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(value_enum)]
    name: NameArg,
    /// Campaign directory containing manifest.json.
    #[arg(long)]
    data: PathBuf,
    /// Synthesize the campaign into --data before running.
    #[arg(long)]
    synth_first: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    features: FeatureArgs,
    #[arg(long)]
    train_size: Option<usize>,
    #[arg(long)]
    test_size: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    no_normalize: bool,
    #[arg(long)]
    out: PathBuf,
}

fn run(cli: Cli) -> Result<()> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let mut out = io::stdout().lock();
    let log: &mut dyn Write = &mut out;
    match cli.command {
        Command::Synth(a) => {
            let duration = a.duration.unwrap_or(synth::defaults::DURATION);
            let scenario = match &a.scenario {
                Some(path) => Scenario::load(path)?,
                None if a.extended_campaign => synth::extended_scenario_with_duration(a.seed, duration),
                None if a.default_campaign => synth::default_scenario_with_duration(a.seed, duration),
                None => {
                    return Err(Error::Config(
                        "pass --scenario FILE, --default-campaign or --extended-campaign".into(),
                    ))
                }
            };
            commands::synth(&scenario, &a.out, exec, log)?;
        }
        Command::Extract(a) => {
            let manifest = commands::load_manifest(&a.manifest)?;
            let channels = (!a.channels.is_empty()).then_some(a.channels.as_slice());
            commands::extract(&manifest, channels, &a.features.options(), &a.out, exec, log)?;
        }
        Command::Train(a) => {
            let manifest = commands::load_manifest(&a.manifest)?;
            let config = TrainConfig {
                epochs: a.hyper.epochs,
                learning_rate: a.hyper.lr,
                batch_size: a.hyper.batch,
                seed: a.split.seed,
                ..TrainConfig::default()
            };
            commands::train(
                &manifest,
                &a.features,
                &a.split.request(),
                &config,
                !a.hyper.no_normalize,
                &a.out,
                exec,
                log,
            )?;
        }
        Command::Eval(a) => {
            let manifest = commands::load_manifest(&a.manifest)?;
            let model = ModelFile::load(&a.model)?;
            commands::evaluate(&manifest, &a.features, &model, &a.split.request(), &a.out, exec, log)?;
        }
        Command::Scatter(a) => {
            let manifest = commands::load_manifest(&a.manifest)?;
            commands::scatter(&manifest, &a.features, &a.channels, a.pair, &a.out, log)?;
        }
        Command::Experiment(a) => {
            let overrides = Overrides {
                features: Some(a.features.options()),
                train_size: a.train_size,
                test_size: a.test_size,
                epochs: a.epochs,
                learning_rate: a.lr,
                batch_size: a.batch,
                normalize: Some(!a.no_normalize),
            };
            let outcome = experiment::run_named(
                a.name.into(),
                &a.data,
                &a.out,
                a.seed,
                a.synth_first,
                &overrides,
                exec,
                log,
            )?;
            let _ = writeln!(
                log,
                "[{}] accuracy {:.2}%, results in {}",
                outcome.spec.name,
                outcome.report.accuracy,
                outcome.out_dir.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Usage => 1,
                ErrorKind::Data => 2,
                ErrorKind::Numeric => 3,
            })
        }
    }
}
