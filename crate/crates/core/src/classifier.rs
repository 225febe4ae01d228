//! Feed-forward MLP with a two-way softmax output.
//!
//! The default network maps 13 cepstral coefficients through hidden layers of
//! 1024 and 100 units to the posteriors of Healthy and Damaged. Training
//! minimizes the mean cross-entropy with Adam on shuffled mini-batches.
//!
//! Mini-batch gradients are accumulated over fixed chunks of
//! [`GRAD_CHUNK`] samples that are summed in chunk order, so sequential and
//! parallel execution produce bit-identical models for a given seed.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::NormalizationStats;
use crate::{Error, Execution, Label, Result};

/// Samples per gradient partial.
pub const GRAD_CHUNK: usize = 8;

/// Floor applied to the true-class posterior inside the log of the loss.
pub const POSTERIOR_FLOOR: f64 = 1e-12;

pub const DEFAULT_HIDDEN: [usize; 2] = [1024, 100];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    pub fn tag(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Tanh => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Activation::Relu),
            1 => Some(Activation::Tanh),
            _ => None,
        }
    }

    fn apply(self, z: f64) -> f64 {
        match self {
            // keeps NaN, unlike f64::max
            Activation::Relu => {
                if z < 0.0 {
                    0.0
                } else {
                    z
                }
            }
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the activation output `a`.
    fn derivative(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

/// Fully connected layer; `weights` is `outputs x inputs`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    pub fn row(&self, o: usize) -> &[f64] {
        &self.weights[o * self.inputs..(o + 1) * self.inputs]
    }

    fn affine(&self, x: &[f64], out: &mut [f64]) {
        for (o, z) in out.iter_mut().enumerate() {
            *z = self.bias[o] + dot(self.row(o), x);
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Two-class posteriors and the arg-max label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub posteriors: [f64; 2],
    pub label: Label,
}

impl Prediction {
    pub fn from_logits(logits: [f64; 2]) -> Self {
        let posteriors = softmax(logits);
        let label = if posteriors[1] > posteriors[0] {
            Label::Damaged
        } else {
            Label::Healthy
        };
        Self { posteriors, label }
    }

    pub fn posterior(&self, label: Label) -> f64 {
        self.posteriors[label.index()]
    }
}

pub fn softmax(logits: [f64; 2]) -> [f64; 2] {
    let m = logits[0].max(logits[1]);
    let e = [(logits[0] - m).exp(), (logits[1] - m).exp()];
    let s = e[0] + e[1];
    [e[0] / s, e[1] / s]
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layers: Vec<Dense>,
    activation: Activation,
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(Error::Config(format!("invalid layer sizes {dims:?}")));
    }
    if *dims.last().expect("non-empty") != 2 {
        return Err(Error::Config(format!("output layer must have 2 units, got {dims:?}")));
    }
    Ok(())
}

impl MlpModel {
    /// All weights and biases zero.
    pub fn zeros(dims: &[usize], activation: Activation) -> Result<Self> {
        check_dims(dims)?;
        Ok(Self {
            layers: dims.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
            activation,
        })
    }

    /// Uniform He initialization, `U(-sqrt(6/fan_in), sqrt(6/fan_in))`, zero biases.
    pub fn init(dims: &[usize], activation: Activation, seed: u64) -> Result<Self> {
        let mut model = Self::zeros(dims, activation)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in &mut model.layers {
            let limit = (6.0 / layer.inputs as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.random_range(-limit..limit);
            }
        }
        Ok(model)
    }

    pub fn from_layers(layers: Vec<Dense>, activation: Activation) -> Result<Self> {
        let mut dims: Vec<usize> = layers.first().map(|l| vec![l.inputs]).unwrap_or_default();
        for (i, l) in layers.iter().enumerate() {
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(Error::Config(format!("layer {i} parameter shapes do not match {}x{}", l.outputs, l.inputs)));
            }
            if i > 0 && l.inputs != layers[i - 1].outputs {
                return Err(Error::Config(format!("layer {i} expects {} inputs but receives {}", l.inputs, layers[i - 1].outputs)));
            }
            dims.push(l.outputs);
        }
        check_dims(&dims)?;
        Ok(Self { layers, activation })
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.layers[0].inputs];
        dims.extend(self.layers.iter().map(|l| l.outputs));
        dims
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|p| p.is_finite()))
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape {
                what: "feature vector",
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Layer outputs after each activation; the last entry holds the logits.
    fn trace(&self, x: &[f64], acts: &mut [Vec<f64>]) {
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let (before, after) = acts.split_at_mut(l);
            let input = if l == 0 { x } else { &before[l - 1] };
            let out = &mut after[0];
            layer.affine(input, out);
            if l < last {
                for z in out.iter_mut() {
                    *z = self.activation.apply(*z);
                }
            }
        }
    }

    fn scratch(&self) -> Vec<Vec<f64>> {
        self.layers.iter().map(|l| vec![0.0; l.outputs]).collect()
    }

    pub fn logits(&self, x: &[f64]) -> Result<[f64; 2]> {
        self.check_input(x)?;
        let mut acts = self.scratch();
        self.trace(x, &mut acts);
        let out = acts.last().expect("at least one layer");
        Ok([out[0], out[1]])
    }

    pub fn forward(&self, x: &[f64]) -> Result<Prediction> {
        Ok(Prediction::from_logits(self.logits(x)?))
    }

    pub fn predict_batch(&self, inputs: &[Vec<f64>], exec: Execution) -> Result<Vec<Prediction>> {
        if let Some(x) = inputs.iter().find(|x| x.len() != self.input_dim()) {
            self.check_input(x)?;
        }
        Ok(exec.map(inputs, |x| {
            let mut acts = self.scratch();
            self.trace(x, &mut acts);
            let out = acts.last().expect("at least one layer");
            Prediction::from_logits([out[0], out[1]])
        }))
    }
}

/// Negative log of a posterior, floored; NaN passes through.
fn nll(p: f64) -> f64 {
    if p.is_nan() {
        p
    } else {
        -p.max(POSTERIOR_FLOOR).ln()
    }
}

/// Mean cross-entropy of the true-class posteriors.
pub fn loss(predictions: &[Prediction], labels: &[Label]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::Data("loss of an empty batch".into()));
    }
    if predictions.len() != labels.len() {
        return Err(Error::Shape {
            what: "labels",
            expected: predictions.len(),
            actual: labels.len(),
        });
    }
    let total: f64 = predictions
        .iter()
        .zip(labels)
        .map(|(p, &y)| nll(p.posterior(y)))
        .sum();
    Ok(total / predictions.len() as f64)
}

/// Per-layer `(weights, bias)` gradients, same shapes as the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Gradients {
    pub fn zeros_like(model: &MlpModel) -> Self {
        Self {
            layers: model
                .layers
                .iter()
                .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.bias.len()]))
                .collect(),
        }
    }

    fn fill_zero(&mut self) {
        for (w, b) in &mut self.layers {
            w.fill(0.0);
            b.fill(0.0);
        }
    }

    fn add(&mut self, other: &Gradients) {
        for ((w, b), (ow, ob)) in self.layers.iter_mut().zip(&other.layers) {
            axpy(1.0, ow, w);
            axpy(1.0, ob, b);
        }
    }

    fn scale(&mut self, s: f64) {
        for (w, b) in &mut self.layers {
            w.iter_mut().chain(b.iter_mut()).for_each(|g| *g *= s);
        }
    }
}

/// Scratch space for one gradient chunk.
struct ChunkWork {
    grads: Gradients,
    acts: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
    loss: f64,
}

impl ChunkWork {
    fn new(model: &MlpModel) -> Self {
        Self {
            grads: Gradients::zeros_like(model),
            acts: model.scratch(),
            deltas: model.scratch(),
            loss: 0.0,
        }
    }
}

/// Adds one sample's cross-entropy gradient to `work.grads`.
fn accumulate_sample(model: &MlpModel, x: &[f64], label: Label, work: &mut ChunkWork) {
    let ChunkWork {
        grads,
        acts,
        deltas,
        loss,
    } = work;
    model.trace(x, acts);
    let n_layers = model.layers.len();
    let out = &acts[n_layers - 1];
    let p = softmax([out[0], out[1]]);
    *loss += nll(p[label.index()]);
    {
        let d = &mut deltas[n_layers - 1];
        d[0] = p[0];
        d[1] = p[1];
        d[label.index()] -= 1.0;
    }
    for l in (0..n_layers).rev() {
        let layer = &model.layers[l];
        let input: &[f64] = if l == 0 { x } else { &acts[l - 1] };
        let (below, here) = deltas.split_at_mut(l);
        let delta = &here[0];
        let (gw, gb) = &mut grads.layers[l];
        for (o, &d) in delta.iter().enumerate() {
            if d != 0.0 {
                gb[o] += d;
                axpy(d, input, &mut gw[o * layer.inputs..(o + 1) * layer.inputs]);
            }
        }
        if l > 0 {
            let prev = &mut below[l - 1];
            prev.fill(0.0);
            for (o, &d) in delta.iter().enumerate() {
                if d != 0.0 {
                    axpy(d, layer.row(o), prev);
                }
            }
            for (g, &a) in prev.iter_mut().zip(&acts[l - 1]) {
                *g *= model.activation.derivative(a);
            }
        }
    }
}

fn check_batch(model: &MlpModel, inputs: &[&[f64]], labels: &[Label]) -> Result<()> {
    if inputs.is_empty() {
        return Err(Error::Data("gradient of an empty batch".into()));
    }
    if inputs.len() != labels.len() {
        return Err(Error::Shape {
            what: "labels",
            expected: inputs.len(),
            actual: labels.len(),
        });
    }
    inputs.iter().try_for_each(|x| model.check_input(x))
}

/// Mean gradient and summed loss over `batch`, using `work` as chunk scratch.
fn batch_gradients(
    model: &MlpModel,
    inputs: &[&[f64]],
    labels: &[Label],
    work: &mut Vec<ChunkWork>,
    exec: Execution,
) -> (Gradients, f64) {
    let chunks = inputs.len().div_ceil(GRAD_CHUNK);
    while work.len() < chunks {
        work.push(ChunkWork::new(model));
    }
    exec.for_each_mut(&mut work[..chunks], |c, w| {
        w.grads.fill_zero();
        w.loss = 0.0;
        let end = ((c + 1) * GRAD_CHUNK).min(inputs.len());
        for i in c * GRAD_CHUNK..end {
            accumulate_sample(model, inputs[i], labels[i], w);
        }
    });
    let mut total = work[0].grads.clone();
    let mut loss = work[0].loss;
    for w in &work[1..chunks] {
        total.add(&w.grads);
        loss += w.loss;
    }
    total.scale(1.0 / inputs.len() as f64);
    (total, loss)
}

/// Exact gradient of the mean cross-entropy over the batch.
pub fn backward(model: &MlpModel, inputs: &[&[f64]], labels: &[Label]) -> Result<Gradients> {
    check_batch(model, inputs, labels)?;
    Ok(batch_gradients(model, inputs, labels, &mut Vec::new(), Execution::default()).0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub shuffle_each_epoch: bool,
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            learning_rate: 1e-3,
            batch_size: 32,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            shuffle_each_epoch: true,
            hidden: DEFAULT_HIDDEN.to_vec(),
            activation: Activation::Relu,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate.is_finite()
            && self.learning_rate >= 0.0
            && self.batch_size > 0
            && self.beta1 > 0.0
            && self.beta1 < 1.0
            && self.beta2 > 0.0
            && self.beta2 < 1.0
            && self.epsilon > 0.0
            && !self.hidden.contains(&0);
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid training configuration {self:?}")))
        }
    }

    pub fn dims(&self, input_dim: usize) -> Vec<usize> {
        let mut dims = vec![input_dim];
        dims.extend(&self.hidden);
        dims.push(2);
        dims
    }
}

/// First and second moment estimates with the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Gradients,
    v: Gradients,
    t: u64,
}

impl AdamState {
    pub fn new(model: &MlpModel) -> Self {
        Self {
            m: Gradients::zeros_like(model),
            v: Gradients::zeros_like(model),
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// One bias-corrected Adam update.
    pub fn step(&mut self, model: &mut MlpModel, grads: &Gradients, config: &TrainConfig) {
        self.t += 1;
        let (b1, b2) = (config.beta1, config.beta2);
        let c1 = 1.0 - b1.powi(self.t as i32);
        let c2 = 1.0 - b2.powi(self.t as i32);
        let lr = config.learning_rate;
        for (l, layer) in model.layers.iter_mut().enumerate() {
            let (gw, gb) = &grads.layers[l];
            let (mw, mb) = &mut self.m.layers[l];
            let (vw, vb) = &mut self.v.layers[l];
            let params = layer.weights.iter_mut().chain(layer.bias.iter_mut());
            let g = gw.iter().chain(gb);
            let m = mw.iter_mut().chain(mb.iter_mut());
            let v = vw.iter_mut().chain(vb.iter_mut());
            for (((p, g), m), v) in params.zip(g).zip(m).zip(v) {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *p -= lr * m_hat / (v_hat.sqrt() + config.epsilon);
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: MlpModel,
    /// Mean training loss of each epoch, accumulated over its mini-batches.
    pub epoch_losses: Vec<f64>,
}

pub fn train(inputs: &[Vec<f64>], labels: &[Label], config: &TrainConfig, exec: Execution) -> Result<TrainOutcome> {
    train_with_progress(inputs, labels, config, exec, |_, _| {})
}

/// Like [`train`], calling `on_epoch(epoch, mean_loss)` after every epoch.
pub fn train_with_progress(
    inputs: &[Vec<f64>],
    labels: &[Label],
    config: &TrainConfig,
    exec: Execution,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<TrainOutcome> {
    config.validate()?;
    let Some(first) = inputs.first() else {
        return Err(Error::Data("empty training set".into()));
    };
    let mut model = MlpModel::init(&config.dims(first.len()), config.activation, config.seed)?;
    let views: Vec<&[f64]> = inputs.iter().map(Vec::as_slice).collect();
    check_batch(&model, &views, labels)?;
    if let Some(i) = inputs.iter().position(|x| x.iter().any(|v| !v.is_finite())) {
        return Err(Error::Data(format!("training sample {i} has non-finite features")));
    }

    let mut adam = AdamState::new(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut work = Vec::new();
    let mut batch_x: Vec<&[f64]> = Vec::with_capacity(config.batch_size);
    let mut batch_y = Vec::with_capacity(config.batch_size);
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        if config.shuffle_each_epoch {
            order.shuffle(&mut rng);
        }
        let mut epoch_loss = 0.0;
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            batch_x.clear();
            batch_y.clear();
            batch_x.extend(batch.iter().map(|&i| views[i]));
            batch_y.extend(batch.iter().map(|&i| labels[i]));
            let (grads, batch_loss) = batch_gradients(&model, &batch_x, &batch_y, &mut work, exec);
            if !batch_loss.is_finite() {
                return Err(Error::Numeric(format!("loss diverged in epoch {} batch {b}", epoch + 1)));
            }
            adam.step(&mut model, &grads, config);
            epoch_loss += batch_loss;
        }
        if !model.is_finite() {
            return Err(Error::Numeric(format!("non-finite parameters after epoch {}", epoch + 1)));
        }
        let mean = epoch_loss / inputs.len() as f64;
        on_epoch(epoch, mean);
        epoch_losses.push(mean);
    }
    Ok(TrainOutcome { model, epoch_losses })
}

const MODEL_MAGIC: &[u8; 4] = b"ABMM";
pub const MODEL_VERSION: u16 = 1;

/// A trained model together with the feature normalization it expects.
///
/// Binary layout (little-endian):
///
/// ```text
/// "ABMM" | version u16 | activation u8 | layer-size count u8 | sizes u32 x count
/// per layer: weights f64 (outputs x inputs, row-major) | bias f64 x outputs
/// normalization flag u8 | if 1: dim u16 | mean f64 x dim | std f64 x dim
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: MlpModel,
    pub normalization: Option<NormalizationStats>,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::format("model file", format!("truncated at byte {} (needed {n} more)", self.pos))
        })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::format("model file", "size overflow"))?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }
}

impl ModelFile {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let dims = self.model.dims();
        let count = u8::try_from(dims.len()).map_err(|_| Error::Config("too many layers".into()))?;
        let mut out = Vec::with_capacity(16 + 8 * self.model.num_params());
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        out.push(self.model.activation.tag());
        out.push(count);
        for d in dims {
            let d = u32::try_from(d).map_err(|_| Error::Config(format!("layer size {d}")))?;
            out.extend_from_slice(&d.to_le_bytes());
        }
        for layer in &self.model.layers {
            for p in layer.weights.iter().chain(&layer.bias) {
                out.extend_from_slice(&p.to_le_bytes());
            }
        }
        match &self.normalization {
            None => out.push(0),
            Some(stats) => {
                out.push(1);
                let dim = u16::try_from(stats.dim()).map_err(|_| Error::Config("normalization too wide".into()))?;
                out.extend_from_slice(&dim.to_le_bytes());
                for v in stats.mean.iter().chain(&stats.std) {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MODEL_MAGIC {
            return Err(Error::format("model file", "bad magic"));
        }
        let version = r.u16()?;
        if version != MODEL_VERSION {
            return Err(Error::Version {
                what: "model file",
                found: version,
                supported: MODEL_VERSION,
            });
        }
        let tag = r.u8()?;
        let activation = Activation::from_tag(tag)
            .ok_or_else(|| Error::format("model file", format!("unknown activation tag {tag}")))?;
        let count = r.u8()? as usize;
        let dims = (0..count).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        check_dims(&dims).map_err(|e| Error::format("model file", e.to_string()))?;
        let mut layers = Vec::with_capacity(count - 1);
        for w in dims.windows(2) {
            let (inputs, outputs) = (w[0], w[1]);
            let weights = r.f64s(inputs.checked_mul(outputs).ok_or_else(|| Error::format("model file", "size overflow"))?)?;
            let bias = r.f64s(outputs)?;
            layers.push(Dense {
                inputs,
                outputs,
                weights,
                bias,
            });
        }
        let normalization = match r.u8()? {
            0 => None,
            1 => {
                let dim = r.u16()? as usize;
                let mean = r.f64s(dim)?;
                let std = r.f64s(dim)?;
                Some(NormalizationStats { mean, std })
            }
            other => return Err(Error::format("model file", format!("bad normalization flag {other}"))),
        };
        if r.pos != bytes.len() {
            return Err(Error::format("model file", format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        let model = MlpModel::from_layers(layers, activation)?;
        if let Some(stats) = &normalization {
            if stats.dim() != model.input_dim() {
                return Err(Error::format(
                    "model file",
                    format!("normalization has {} dims but the model takes {}", stats.dim(), model.input_dim()),
                ));
            }
        }
        Ok(Self { model, normalization })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
