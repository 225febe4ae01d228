//! Sequential against rayon-parallel execution for the data-parallel stages.
//! Without the `parallel` feature both variants run sequentially.

use bearing_acoustics::classifier::{Activation, MlpModel, TrainConfig};
use bearing_acoustics::dsp::{MfccConfig, MfccExtractor};
use bearing_acoustics::synth::{default_scenario_with_duration, synth_campaign, synth_recording};
use bearing_acoustics::{classifier, Execution, Label};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn extraction(c: &mut Criterion) {
    let scenario = default_scenario_with_duration(0, 20.0);
    let ch = &scenario.channels[0];
    let rec = synth_recording(&ch.channel_id, &ch.synth).unwrap();
    let extractor = MfccExtractor::new(MfccConfig::default()).unwrap();
    let frames: Vec<usize> = (0..rec.samples().len() / 2048).collect();
    let mut group = c.benchmark_group("mfcc_extraction");
    group.throughput(Throughput::Elements(frames.len() as u64));
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| extractor.frames_features(rec.samples(), &frames, exec))
        });
    }
    group.finish();
}

fn synthesis(c: &mut Criterion) {
    let scenario = default_scenario_with_duration(0, 5.0);
    let mut group = c.benchmark_group("campaign_synthesis");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| synth_campaign(&scenario, exec).unwrap())
        });
    }
    group.finish();
}

fn batch(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<Label>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs = (0..n).map(|_| (0..13).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let ys = (0..n).map(|_| Label::ALL[rng.random_range(0..2)]).collect();
    (xs, ys)
}

fn inference(c: &mut Criterion) {
    let model = MlpModel::init(&[13, 1024, 100, 2], Activation::Relu, 1).unwrap();
    let (xs, _) = batch(2000, 2);
    let mut group = c.benchmark_group("batch_inference");
    group.throughput(Throughput::Elements(xs.len() as u64));
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| model.predict_batch(&xs, exec).unwrap())
        });
    }
    group.finish();
}

fn training(c: &mut Criterion) {
    let (xs, ys) = batch(512, 3);
    let config = TrainConfig {
        epochs: 1,
        batch_size: 128,
        ..TrainConfig::default()
    };
    let mut group = c.benchmark_group("training_epoch");
    group.throughput(Throughput::Elements(xs.len() as u64));
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| classifier::train(&xs, &ys, &config, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, extraction, synthesis, inference, training);
criterion_main!(benches);
