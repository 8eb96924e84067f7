use super::{argmax, slices_to_batch};
use crate::data::{prepare_slices, Slice, Trial};
use crate::error::{contract_err, Result};
use crate::model::CamlpNet;
use crate::nn::{softmax, Mode};
use crate::tensor::{no_grad, Element};

const EVAL_BATCH: usize = 64;

/// Class probabilities for each slice. The net must be in evaluation mode.
pub fn predict_slices<T: Element>(net: &CamlpNet<T>, slices: &[Slice]) -> Result<Vec<Vec<f64>>> {
    if net.mode() != Mode::Eval {
        return contract_err("prediction requires the net in evaluation mode");
    }
    let k = net.config().num_classes;
    let mut out = Vec::with_capacity(slices.len());
    no_grad(|| {
        for chunk in slices.chunks(EVAL_BATCH) {
            let refs: Vec<&Slice> = chunk.iter().collect();
            let logits = net.forward(&slices_to_batch::<T>(&refs)?)?;
            let logits: Vec<f64> = logits.data().iter().map(|v| v.as_f64()).collect();
            out.extend(logits.chunks(k).map(softmax));
        }
        Ok(out)
    })
}

/// Arithmetic mean of probability vectors and its argmax (lowest index on
/// ties).
pub fn ensemble_mean(probs: &[Vec<f64>]) -> Result<(usize, Vec<f64>)> {
    let Some(first) = probs.first() else {
        return contract_err("cannot ensemble zero predictions");
    };
    let mut mean = vec![0.0; first.len()];
    for p in probs {
        if p.len() != mean.len() {
            return contract_err("probability vectors differ in length");
        }
        mean.iter_mut().zip(p).for_each(|(m, v)| *m += v);
    }
    let n = probs.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    Ok((argmax(&mean), mean))
}

/// Segments and standardizes a trial, then averages the per-slice class
/// probabilities.
pub fn ensemble_predict_trial<T: Element>(
    net: &CamlpNet<T>,
    trial: &Trial,
    window: usize,
    overlap: usize,
) -> Result<(usize, Vec<f64>)> {
    let slices = prepare_slices([trial], window, overlap)?;
    ensemble_mean(&predict_slices(net, &slices)?)
}
