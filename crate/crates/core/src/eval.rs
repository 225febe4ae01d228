//! Confusion matrices and the metrics reported for each experiment.
//!
//! Healthy is the positive class. Matrices are laid out with predicted labels
//! as rows and true labels as columns, and percentages are normalized per
//! column (per true class).

use std::fmt::{self, Write as _};
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifier::{MlpModel, Prediction};
use crate::dataset::FrameRecord;
use crate::{Error, Execution, Label, Result};

/// `counts[predicted][true]`, indexed by [`Label::index`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 2]; 2],
}

impl ConfusionMatrix {
    pub fn new(counts: [[u64; 2]; 2]) -> Self {
        Self { counts }
    }

    pub fn get(&self, predicted: Label, truth: Label) -> u64 {
        self.counts[predicted.index()][truth.index()]
    }

    pub fn add(&mut self, predicted: Label, truth: Label) {
        self.counts[predicted.index()][truth.index()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        self.counts[0][0] + self.counts[1][1]
    }

    /// Number of samples whose true label is `truth`.
    pub fn support(&self, truth: Label) -> u64 {
        let j = truth.index();
        self.counts[0][j] + self.counts[1][j]
    }

    /// Unrounded accuracy in percent.
    pub fn accuracy(&self) -> Option<f64> {
        let total = self.total();
        (total > 0).then(|| 100.0 * self.correct() as f64 / total as f64)
    }

    /// Unrounded recall of `truth` in percent.
    pub fn recall(&self, truth: Label) -> Option<f64> {
        let col = self.support(truth);
        (col > 0).then(|| 100.0 * self.get(truth, truth) as f64 / col as f64)
    }

    /// Same matrix with every prediction flipped, i.e. rows swapped.
    pub fn with_predictions_flipped(&self) -> Self {
        Self::new([self.counts[1], self.counts[0]])
    }
}

pub fn confusion(predictions: &[Label], truths: &[Label]) -> Result<ConfusionMatrix> {
    if predictions.len() != truths.len() {
        return Err(Error::Shape {
            what: "true labels",
            expected: predictions.len(),
            actual: truths.len(),
        });
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &t) in predictions.iter().zip(truths) {
        cm.add(p, t);
    }
    Ok(cm)
}

/// `100 * num / den` rounded half-up to two decimals, computed in integers.
pub fn percent_2dp(num: u64, den: u64) -> f64 {
    assert!(den > 0, "zero denominator");
    let (num, den) = (num as u128, den as u128);
    let hundredths = (20_000 * num + den) / (2 * den);
    hundredths as f64 / 100.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// `counts[predicted][true]`.
    pub counts: [[u64; 2]; 2],
    /// Column-normalized percentages, same layout as `counts`.
    pub percentages: [[f64; 2]; 2],
    /// Percent correct over all samples.
    pub accuracy: f64,
    /// Recall of the positive (Healthy) class, percent.
    pub tpr: f64,
    /// Recall of the negative (Damaged) class, percent.
    pub tnr: f64,
    /// Recall of the Damaged class, percent; equal to `tnr`.
    pub damage_detection_rate: f64,
    /// Samples per true class, `[H, D]`.
    pub support: [u64; 2],
}

/// All rates rounded half-up to two decimals.
pub fn metrics(cm: &ConfusionMatrix) -> Result<MetricsReport> {
    let support = [cm.support(Label::Healthy), cm.support(Label::Damaged)];
    if let Some(j) = support.iter().position(|&s| s == 0) {
        return Err(Error::Data(format!(
            "no samples with true label {}; column percentages are undefined",
            Label::ALL[j]
        )));
    }
    let mut percentages = [[0.0; 2]; 2];
    for (p, row) in percentages.iter_mut().enumerate() {
        for (t, v) in row.iter_mut().enumerate() {
            *v = percent_2dp(cm.counts[p][t], support[t]);
        }
    }
    let tnr = percentages[1][1];
    Ok(MetricsReport {
        counts: cm.counts,
        percentages,
        accuracy: percent_2dp(cm.correct(), cm.total()),
        tpr: percentages[0][0],
        tnr,
        damage_detection_rate: tnr,
        support,
    })
}

impl MetricsReport {
    pub fn confusion(&self) -> ConfusionMatrix {
        ConfusionMatrix::new(self.counts)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }

    /// Writes `<stem>.json` and `<stem>.txt` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        let json = dir.join(format!("{stem}.json"));
        std::fs::write(&json, self.to_json()).map_err(|e| Error::io(&json, e))?;
        let txt = dir.join(format!("{stem}.txt"));
        std::fs::write(&txt, self.to_text()).map_err(|e| Error::io(&txt, e))
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cell = |p: usize, t: usize| format!("{} ({:.2}%)", self.counts[p][t], self.percentages[p][t]);
        writeln!(f, "{:<14}{:>22}{:>22}", "", "true H", "true D")?;
        for (p, name) in ["predicted H", "predicted D"].iter().enumerate() {
            writeln!(f, "{name:<14}{:>22}{:>22}", cell(p, 0), cell(p, 1))?;
        }
        writeln!(f)?;
        writeln!(f, "accuracy               {:.2}%", self.accuracy)?;
        writeln!(f, "TPR (H recall)         {:.2}%", self.tpr)?;
        writeln!(f, "TNR (D recall)         {:.2}%", self.tnr)?;
        writeln!(f, "damage detection rate  {:.2}%", self.damage_detection_rate)?;
        writeln!(f, "support                H {}  D {}", self.support[0], self.support[1])
    }
}

/// Runs `model` over every input.
pub fn predict_all(model: &MlpModel, inputs: &[Vec<f64>], exec: Execution) -> Result<Vec<Prediction>> {
    model.predict_batch(inputs, exec)
}

/// Confusion matrix of `model` over `frames`.
pub fn evaluate(model: &MlpModel, frames: &[FrameRecord], exec: Execution) -> Result<ConfusionMatrix> {
    let inputs: Vec<Vec<f64>> = frames.iter().map(|f| f.features.coeffs.clone()).collect();
    let preds: Vec<Label> = predict_all(model, &inputs, exec)?.iter().map(|p| p.label).collect();
    let truths: Vec<Label> = frames.iter().map(|f| f.label).collect();
    confusion(&preds, &truths)
}

/// Tab-separated `c<a>`, `c<b>`, label, channel id; one row per frame.
/// Coefficient indices are 1-based.
pub fn scatter_table(frames: &[FrameRecord], a: usize, b: usize) -> Result<String> {
    let width = frames.iter().map(|f| f.features.len()).min().unwrap_or(usize::MAX);
    for idx in [a, b] {
        if idx == 0 || idx > width {
            let hi = if width == usize::MAX { "any".to_string() } else { width.to_string() };
            return Err(Error::Config(format!("coefficient index {idx} outside 1..={hi}")));
        }
    }
    let mut out = format!("c{a}\tc{b}\tlabel\tchannel_id\n");
    for f in frames {
        let ca = f.features.coeffs[a - 1];
        let cb = f.features.coeffs[b - 1];
        let _ = writeln!(out, "{ca}\t{cb}\t{}\t{}", f.label, f.channel_id);
    }
    Ok(out)
}

pub fn export_scatter(frames: &[FrameRecord], a: usize, b: usize, path: &Path) -> Result<()> {
    let table = scatter_table(frames, a, b)?;
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(table.as_bytes()).map_err(|e| Error::io(path, e))
}
