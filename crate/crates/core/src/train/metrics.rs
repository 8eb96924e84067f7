use std::fmt;

use serde::Serialize;

use crate::error::{contract_err, Result};

/// Whether predictions are per slice or per trial (after ensembling).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Slice,
    Trial,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Slice => "slice",
            Level::Trial => "trial",
        })
    }
}

/// Classification quality over one set of predictions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub level: Level,
    pub accuracy: f64,
    /// Unweighted mean of the per-class F1 scores.
    pub macro_f1: f64,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    /// `confusion[actual][predicted]`
    pub confusion: Vec<Vec<usize>>,
}

impl Metrics {
    pub fn num_classes(&self) -> usize {
        self.confusion.len()
    }

    pub fn support(&self) -> Vec<usize> {
        self.confusion.iter().map(|row| row.iter().sum()).collect()
    }

    pub fn count(&self) -> usize {
        self.support().iter().sum()
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Accuracy, per-class precision/recall/F1 and macro F1. A ratio with a zero
/// denominator counts as 0, so a class that is neither present nor predicted
/// has F1 = 0.
pub fn compute_metrics(predictions: &[usize], labels: &[usize], num_classes: usize, level: Level) -> Result<Metrics> {
    if predictions.len() != labels.len() {
        return contract_err(format!("{} predictions for {} labels", predictions.len(), labels.len()));
    }
    if labels.is_empty() {
        return contract_err("metrics need at least one prediction");
    }
    if let Some(&c) = predictions.iter().chain(labels).find(|&&c| c >= num_classes) {
        return contract_err(format!("class {c} outside [0, {num_classes})"));
    }
    let mut confusion = vec![vec![0usize; num_classes]; num_classes];
    for (&p, &y) in predictions.iter().zip(labels) {
        confusion[y][p] += 1;
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let mut precision = Vec::with_capacity(num_classes);
    let mut recall = Vec::with_capacity(num_classes);
    let mut f1 = Vec::with_capacity(num_classes);
    for c in 0..num_classes {
        let tp = confusion[c][c];
        let predicted: usize = confusion.iter().map(|row| row[c]).sum();
        let actual: usize = confusion[c].iter().sum();
        precision.push(ratio(tp, predicted));
        recall.push(ratio(tp, actual));
        f1.push(ratio(2 * tp, predicted + actual));
    }
    let correct: usize = (0..num_classes).map(|c| confusion[c][c]).sum();
    Ok(Metrics {
        level,
        accuracy: ratio(correct, labels.len()),
        macro_f1: f1.iter().sum::<f64>() / num_classes as f64,
        precision,
        recall,
        f1,
        confusion,
    })
}
