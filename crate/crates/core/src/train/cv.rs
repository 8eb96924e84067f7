use std::collections::BTreeSet;

use super::{compute_metrics, ensemble_mean, predict_slices, train_model, Level, Metrics, TrainConfig};
use crate::data::{prepare_slices, stratified_trial_kfold, Dataset, FoldPlan};
use crate::error::{Error, Result};
use crate::model::{CamlpNet, ModelConfig};
use crate::nn::Mode;
use crate::tensor::Element;

/// Fold layout and segmentation for a cross-validation run.
#[derive(Debug, Clone, PartialEq)]
pub struct CvOptions {
    pub folds: usize,
    pub fold_seed: u64,
    pub window: usize,
    pub overlap: usize,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self { folds: 5, fold_seed: 0, window: 150, overlap: 10 }
    }
}

#[derive(Debug, Clone)]
pub struct FoldReport {
    pub fold: usize,
    /// Trial ids seen in training batches.
    pub trained_on: BTreeSet<String>,
    pub held_out: BTreeSet<String>,
    /// Held-out trials per class.
    pub held_out_per_class: Vec<usize>,
    pub slice: Metrics,
    pub trial: Metrics,
    pub epoch_losses: Vec<f64>,
}

impl FoldReport {
    /// No held-out trial contributed to any training batch.
    pub fn leak_free(&self) -> bool {
        self.trained_on.is_disjoint(&self.held_out)
    }

    pub fn metrics(&self, level: Level) -> &Metrics {
        match level {
            Level::Slice => &self.slice,
            Level::Trial => &self.trial,
        }
    }
}

/// Mean and sample standard deviation across folds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub level: Level,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub macro_f1_mean: f64,
    pub macro_f1_std: f64,
}

impl Summary {
    pub fn over(folds: &[FoldReport], level: Level) -> Self {
        let acc: Vec<f64> = folds.iter().map(|f| f.metrics(level).accuracy).collect();
        let f1: Vec<f64> = folds.iter().map(|f| f.metrics(level).macro_f1).collect();
        let (accuracy_mean, accuracy_std) = mean_std(&acc);
        let (macro_f1_mean, macro_f1_std) = mean_std(&f1);
        Self { level, accuracy_mean, accuracy_std, macro_f1_mean, macro_f1_std }
    }
}

/// Mean and sample standard deviation (`n − 1` denominator; 0 for `n < 2`).
pub(crate) fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone)]
pub struct CvReport {
    pub plan: FoldPlan,
    pub folds: Vec<FoldReport>,
}

impl CvReport {
    pub fn summary(&self, level: Level) -> Summary {
        Summary::over(&self.folds, level)
    }

    pub fn leak_free(&self) -> bool {
        self.folds.iter().all(FoldReport::leak_free)
    }
}

/// Trial-level stratified k-fold cross-validation. Each fold trains a fresh
/// net (seeded with `train.seed + fold`) on the other folds' slices and
/// scores the held-out trials per slice and by ensemble. `on_fold` sees each
/// fold as soon as it finishes.
pub fn run_cv<T: Element>(
    dataset: &Dataset,
    model: &ModelConfig,
    train: &TrainConfig,
    options: &CvOptions,
    mut on_fold: impl FnMut(&FoldReport),
) -> Result<CvReport> {
    if model.channels != dataset.channels {
        return Err(Error::Config {
            key: "channels".into(),
            reason: format!("model has {} channels, dataset has {}", model.channels, dataset.channels),
        });
    }
    if model.samples != options.window {
        return Err(Error::Config {
            key: "samples".into(),
            reason: format!("model expects {} samples per slice, window is {}", model.samples, options.window),
        });
    }
    if model.num_classes != dataset.num_classes {
        return Err(Error::Config {
            key: "num_classes".into(),
            reason: format!("model has {} classes, dataset has {}", model.num_classes, dataset.num_classes),
        });
    }
    let plan = stratified_trial_kfold(&dataset.trials, options.folds, options.fold_seed)?;
    let k = dataset.num_classes;
    let mut folds = Vec::with_capacity(options.folds);
    for fold in 0..options.folds {
        let (train_trials, test_trials) = plan.split(&dataset.trials, fold);
        let train_slices = prepare_slices(train_trials, options.window, options.overlap)?;
        let fold_train = TrainConfig { seed: train.seed.wrapping_add(fold as u64), ..train.clone() };
        let mut net = CamlpNet::<T>::new(model.clone(), fold_train.seed)?;
        let trained = train_model(&mut net, &train_slices, &fold_train)?;
        net.set_mode(Mode::Eval);

        let (mut slice_pred, mut slice_true) = (Vec::new(), Vec::new());
        let (mut trial_pred, mut trial_true) = (Vec::new(), Vec::new());
        let mut held_out_per_class = vec![0; k];
        for trial in &test_trials {
            let slices = prepare_slices([*trial], options.window, options.overlap)?;
            let probs = predict_slices(&net, &slices)?;
            for p in &probs {
                slice_pred.push(super::argmax(p));
                slice_true.push(trial.label);
            }
            trial_pred.push(ensemble_mean(&probs)?.0);
            trial_true.push(trial.label);
            held_out_per_class[trial.label] += 1;
        }
        let report = FoldReport {
            fold,
            trained_on: trained.seen_trials,
            held_out: test_trials.iter().map(|t| t.id.clone()).collect(),
            held_out_per_class,
            slice: compute_metrics(&slice_pred, &slice_true, k, Level::Slice)?,
            trial: compute_metrics(&trial_pred, &trial_true, k, Level::Trial)?,
            epoch_losses: trained.epoch_losses,
        };
        on_fold(&report);
        folds.push(report);
    }
    Ok(CvReport { plan, folds })
}
