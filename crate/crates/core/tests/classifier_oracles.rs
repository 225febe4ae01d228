use bearing_acoustics::classifier::{
    backward, loss, train, Activation, MlpModel, ModelFile, Prediction, TrainConfig, MODEL_VERSION,
};
use bearing_acoustics::dataset::NormalizationStats;
use bearing_acoustics::{Error, Execution, Label};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_model(dims: &[usize], activation: Activation, seed: u64) -> MlpModel {
    let mut m = MlpModel::init(dims, activation, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
    for layer in m.layers_mut() {
        for b in &mut layer.bias {
            *b = rng.random_range(-0.3..0.3);
        }
    }
    m
}

fn random_batch(n: usize, dim: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<Label>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs = (0..n).map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let ys = (0..n).map(|_| Label::ALL[rng.random_range(0..2)]).collect();
    (xs, ys)
}

/// Plain matrix products, written independently of the library.
fn oracle_logits(m: &MlpModel, x: &[f64]) -> [f64; 2] {
    let mut a = x.to_vec();
    let last = m.layers().len() - 1;
    for (l, layer) in m.layers().iter().enumerate() {
        let mut z = vec![0.0; layer.outputs];
        for o in 0..layer.outputs {
            let mut s = layer.bias[o];
            for i in 0..layer.inputs {
                s += layer.weights[o * layer.inputs + i] * a[i];
            }
            z[o] = if l == last {
                s
            } else {
                match m.activation() {
                    Activation::Relu => s.max(0.0),
                    Activation::Tanh => s.tanh(),
                }
            };
        }
        a = z;
    }
    [a[0], a[1]]
}

fn oracle_loss(m: &MlpModel, xs: &[Vec<f64>], ys: &[Label]) -> f64 {
    let mut total = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let z = oracle_logits(m, x);
        let denom = z[0].exp() + z[1].exp();
        let p = z[y.index()].exp() / denom;
        total -= p.max(1e-12).ln();
    }
    total / xs.len() as f64
}

#[test]
fn forward_matches_matrix_oracle() {
    for activation in [Activation::Relu, Activation::Tanh] {
        let m = random_model(&[13, 4, 3, 2], activation, 11);
        let (xs, _) = random_batch(50, 13, 12);
        for x in &xs {
            let got = m.forward(x).unwrap();
            let z = oracle_logits(&m, x);
            let denom = z[0].exp() + z[1].exp();
            for c in 0..2 {
                assert!((got.posteriors[c] - z[c].exp() / denom).abs() < 1e-12);
            }
            assert!((got.posteriors[0] + got.posteriors[1] - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn loss_matches_scalar_loop() {
    let m = random_model(&[13, 4, 3, 2], Activation::Relu, 21);
    let (xs, ys) = random_batch(8, 13, 22);
    let preds: Vec<Prediction> = xs.iter().map(|x| m.forward(x).unwrap()).collect();
    assert!((loss(&preds, &ys).unwrap() - oracle_loss(&m, &xs, &ys)).abs() < 1e-12);
}

fn finite_difference_check(activation: Activation, seed: u64) {
    let model = random_model(&[13, 4, 3, 2], activation, seed);
    let (xs, ys) = random_batch(8, 13, seed + 1);
    let views: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
    let grads = backward(&model, &views, &ys).unwrap();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for l in 0..model.layers().len() {
        let (nw, nb) = (model.layers()[l].weights.len(), model.layers()[l].bias.len());
        for p in 0..nw + nb {
            let perturbed = |delta: f64| {
                let mut m = model.clone();
                let layer = &mut m.layers_mut()[l];
                if p < nw {
                    layer.weights[p] += delta;
                } else {
                    layer.bias[p - nw] += delta;
                }
                oracle_loss(&m, &xs, &ys)
            };
            let numeric = (perturbed(h) - perturbed(-h)) / (2.0 * h);
            let analytic = if p < nw { grads.layers[l].0[p] } else { grads.layers[l].1[p - nw] };
            let rel = (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8);
            worst = worst.max(rel);
            assert!(rel < 1e-4, "layer {l} param {p}: analytic {analytic} numeric {numeric}");
        }
    }
    assert!(worst < 1e-4);
}

#[test]
fn gradients_match_central_differences_relu() {
    finite_difference_check(Activation::Relu, 31);
}

#[test]
fn gradients_match_central_differences_tanh() {
    finite_difference_check(Activation::Tanh, 41);
}

fn separable_2d() -> (Vec<Vec<f64>>, Vec<Label>) {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    while xs.len() < 200 {
        let (a, b): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        // margin around the line a + 2b = 0.3
        let s = a + 2.0 * b - 0.3;
        if s.abs() < 0.1 {
            continue;
        }
        xs.push(vec![a, b]);
        ys.push(if s > 0.0 { Label::Damaged } else { Label::Healthy });
    }
    (xs, ys)
}

#[test]
fn separable_toy_problem_is_learned() {
    let (xs, ys) = separable_2d();
    let cfg = TrainConfig {
        seed: 3,
        ..TrainConfig::default()
    };
    let out = train(&xs, &ys, &cfg, Execution::default()).unwrap();
    let correct = xs
        .iter()
        .zip(&ys)
        .filter(|(x, y)| out.model.forward(x).unwrap().label == **y)
        .count();
    assert!(correct as f64 / xs.len() as f64 >= 0.99, "{correct}/200");
    assert_eq!(out.epoch_losses.len(), 20);
}

#[test]
fn full_batch_loss_decreases_on_separable_problem() {
    // one batch per epoch: each logged value is the exact training loss
    // before that epoch's update
    let (xs, ys) = separable_2d();
    let cfg = TrainConfig {
        batch_size: xs.len(),
        seed: 3,
        ..TrainConfig::default()
    };
    let out = train(&xs, &ys, &cfg, Execution::default()).unwrap();
    let init = MlpModel::init(&cfg.dims(2), cfg.activation, cfg.seed).unwrap();
    assert!((out.epoch_losses[0] - oracle_loss(&init, &xs, &ys)).abs() < 1e-12);
    for w in out.epoch_losses[2..].windows(2) {
        assert!(w[1] <= w[0], "{:?}", out.epoch_losses);
    }
    assert!(oracle_loss(&out.model, &xs, &ys) < out.epoch_losses[19]);
}

#[test]
fn training_is_reproducible() {
    let (xs, ys) = random_batch(300, 13, 61);
    let cfg = TrainConfig {
        epochs: 3,
        seed: 9,
        ..TrainConfig::default()
    };
    let a = train(&xs, &ys, &cfg, Execution::default()).unwrap();
    let b = train(&xs, &ys, &cfg, Execution::default()).unwrap();
    assert_eq!(a.model, b.model);
    assert_eq!(a.epoch_losses, b.epoch_losses);
    let c = train(&xs, &ys, &TrainConfig { seed: 10, ..cfg }, Execution::default()).unwrap();
    assert_ne!(a.model, c.model);
}

#[test]
fn softmax_translation_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    for _ in 0..1000 {
        let z = [rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)];
        let c = rng.random_range(-100.0..100.0);
        let p = Prediction::from_logits(z).posteriors;
        let q = Prediction::from_logits([z[0] + c, z[1] + c]).posteriors;
        assert!((p[0] - q[0]).abs() < 1e-12 && (p[1] - q[1]).abs() < 1e-12);
    }
}

#[test]
fn saved_model_predicts_identically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.abmm");
    let file = ModelFile {
        model: random_model(&[13, 1024, 100, 2], Activation::Relu, 81),
        normalization: None,
    };
    file.save(&path).unwrap();
    let back = ModelFile::load(&path).unwrap();
    let (xs, _) = random_batch(100, 13, 82);
    for x in &xs {
        assert_eq!(file.model.forward(x).unwrap(), back.model.forward(x).unwrap());
    }
}

#[test]
fn future_version_is_rejected() {
    let file = ModelFile {
        model: random_model(&[3, 2], Activation::Tanh, 1),
        normalization: None,
    };
    let mut bytes = file.to_bytes().unwrap();
    bytes[4..6].copy_from_slice(&(MODEL_VERSION + 1).to_le_bytes());
    assert!(matches!(ModelFile::from_bytes(&bytes), Err(Error::Version { .. })));
    bytes[0] = 0;
    assert!(matches!(ModelFile::from_bytes(&bytes), Err(Error::Format { .. })));
}

fn arb_model_file() -> impl Strategy<Value = ModelFile> {
    (
        prop::collection::vec(1usize..6, 1..4),
        any::<bool>(),
        any::<u64>(),
        any::<bool>(),
    )
        .prop_map(|(mut dims, tanh, seed, with_stats)| {
            dims.push(2);
            let activation = if tanh { Activation::Tanh } else { Activation::Relu };
            let model = random_model(&dims, activation, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let normalization = with_stats.then(|| NormalizationStats {
                mean: (0..dims[0]).map(|_| rng.random_range(-1e3..1e3)).collect(),
                std: (0..dims[0]).map(|_| rng.random_range(1e-6..1e3)).collect(),
            });
            ModelFile { model, normalization }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn model_file_round_trip_is_bit_exact(file in arb_model_file()) {
        let bytes = file.to_bytes().unwrap();
        let back = ModelFile::from_bytes(&bytes).unwrap();
        prop_assert_eq!(&back, &file);
        prop_assert_eq!(back.to_bytes().unwrap(), bytes);
    }

    #[test]
    fn truncated_model_files_fail(file in arb_model_file(), cut in 0usize..1000) {
        let bytes = file.to_bytes().unwrap();
        let cut = cut % bytes.len();
        prop_assert!(ModelFile::from_bytes(&bytes[..cut]).is_err());
    }
}
