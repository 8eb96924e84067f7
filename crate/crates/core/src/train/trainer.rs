use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{SgdMomentum, TrainConfig};
use crate::data::Slice;
use crate::error::{contract_err, shape_err, Result};
use crate::model::CamlpNet;
use crate::nn::{softmax_cross_entropy, Mode, Parameterized};
use crate::tensor::{Element, Tensor};

/// What a training run produced besides the updated weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Sample-weighted mean loss of each epoch.
    pub epoch_losses: Vec<f64>,
    /// Every trial id that appeared in some training batch.
    pub seen_trials: BTreeSet<String>,
    pub steps: usize,
}

/// Stacks slices into a constant `[B, C, T]` tensor.
pub fn slices_to_batch<T: Element>(slices: &[&Slice]) -> Result<Tensor<T>> {
    let Some(first) = slices.first() else {
        return contract_err("cannot build an empty batch");
    };
    let (c, t) = (first.channels, first.len);
    let mut data = Vec::with_capacity(slices.len() * c * t);
    for s in slices {
        if (s.channels, s.len) != (c, t) {
            return shape_err(format!("slice of trial `{}` is {}×{}, batch expects {c}×{t}", s.trial_id, s.channels, s.len));
        }
        data.extend(s.data.iter().map(|&v| T::of(v)));
    }
    Tensor::constant(&[slices.len(), c, t], data)
}

/// Minibatch SGD with momentum on softmax cross-entropy. The slice order is
/// reshuffled every epoch from a stream seeded by `config.seed`; batch norm
/// runs in training mode throughout and the net is left in that mode.
pub fn train_model<T: Element>(net: &mut CamlpNet<T>, slices: &[Slice], config: &TrainConfig) -> Result<TrainReport> {
    config.validate()?;
    if slices.is_empty() {
        return contract_err("no training slices");
    }
    let num_classes = net.config().num_classes;
    if let Some(s) = slices.iter().find(|s| s.label >= num_classes) {
        return contract_err(format!("trial `{}` has label {} but the net has {num_classes} classes", s.trial_id, s.label));
    }
    net.set_mode(Mode::Train);
    let params = net.parameters();
    let mut opt = SgdMomentum::new(&params);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..slices.len()).collect();
    let mut report = TrainReport { epoch_losses: Vec::with_capacity(config.epochs), seen_trials: BTreeSet::new(), steps: 0 };

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&Slice> = chunk.iter().map(|&i| &slices[i]).collect();
            let targets: Vec<usize> = batch.iter().map(|s| s.label).collect();
            report.seen_trials.extend(batch.iter().map(|s| s.trial_id.clone()));
            let x = slices_to_batch::<T>(&batch)?;
            let loss = softmax_cross_entropy(&net.forward(&x)?, &targets)?;
            loss.backward()?;
            opt.step(&params, config.lr, config.momentum)?;
            total += loss.item().as_f64() * batch.len() as f64;
            report.steps += 1;
        }
        report.epoch_losses.push(total / slices.len() as f64);
    }
    Ok(report)
}
