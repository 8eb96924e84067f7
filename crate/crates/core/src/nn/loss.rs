use crate::error::{contract_err, shape_err, Result};
use crate::tensor::{Element, Tensor};

/// Numerically stable softmax of one logit vector, in 64-bit.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Mean over the batch of `-log softmax(logits)[target]`.
///
/// `logits` is `[batch × classes]`; the gradient is `(softmax − onehot) / batch`.
pub fn softmax_cross_entropy<T: Element>(logits: &Tensor<T>, targets: &[usize]) -> Result<Tensor<T>> {
    let s = logits.shape();
    if s.len() != 2 {
        return shape_err(format!("cross entropy expects [batch, classes] logits, got {s:?}"));
    }
    let (batch, classes) = (s[0], s[1]);
    if targets.len() != batch {
        return shape_err(format!("{} targets for a batch of {batch}", targets.len()));
    }
    if let Some(&bad) = targets.iter().find(|&&t| t >= classes) {
        return contract_err(format!("target class {bad} outside [0, {classes})"));
    }

    let mut probs = vec![T::zero(); batch * classes];
    let mut total = T::zero();
    {
        let z = logits.data();
        for b in 0..batch {
            let row = &z[b * classes..(b + 1) * classes];
            let max = row.iter().copied().fold(T::neg_infinity(), T::max);
            let mut denom = T::zero();
            for (p, &v) in probs[b * classes..(b + 1) * classes].iter_mut().zip(row) {
                *p = (v - max).exp();
                denom += *p;
            }
            probs[b * classes..(b + 1) * classes].iter_mut().for_each(|p| *p /= denom);
            // -log softmax = log(denom) + max - z[target]
            total += denom.ln() + max - row[targets[b]];
        }
    }
    let inv_batch = T::one() / T::of(batch as f64);
    let targets = targets.to_vec();
    Ok(Tensor::from_op(Vec::new(), vec![total * inv_batch], "softmax_cross_entropy", vec![logits.clone()], move |g, _| {
        let scale = g[0] * inv_batch;
        let mut gx: Vec<T> = probs.iter().map(|&p| p * scale).collect();
        for (b, &t) in targets.iter().enumerate() {
            gx[b * classes + t] -= scale;
        }
        vec![Some(gx)]
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loss(logits: &[f64], target: usize) -> f64 {
        let z = Tensor::constant(&[1, logits.len()], logits.to_vec()).unwrap();
        softmax_cross_entropy(&z, &[target]).unwrap().item()
    }

    #[test]
    fn uniform_logits() {
        assert!((loss(&[0.3, 0.3, 0.3], 1) - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn saturated_logits_do_not_overflow() {
        let l = loss(&[1000., 0., 0.], 0);
        assert!(l.is_finite() && l.abs() < 1e-12);
        let l32 = {
            let z = Tensor::<f32>::constant(&[1, 3], vec![1000., 0., 0.]).unwrap();
            softmax_cross_entropy(&z, &[0]).unwrap().item()
        };
        assert!(l32.is_finite() && l32.abs() < 1e-6);
    }

    #[test]
    fn direct_formula() {
        let e = std::f64::consts::E;
        let expected = (e + e * e + e * e * e).ln() - 3.0;
        assert!((loss(&[1., 2., 3.], 2) - expected).abs() < 1e-12);
        assert!((expected - 0.40761).abs() < 1e-5);
    }

    #[test]
    fn gradient_rows_sum_to_zero() {
        let z = Tensor::<f64>::parameter(&[2, 4], vec![0.1, -2.0, 3.0, 0.5, 1.0, 1.0, -1.0, 0.0]).unwrap();
        softmax_cross_entropy(&z, &[2, 0]).unwrap().backward().unwrap();
        let g = z.grad().unwrap();
        for row in g.chunks(4) {
            assert!(row.iter().sum::<f64>().abs() < 1e-15);
        }
    }

    #[test]
    fn out_of_range_target() {
        let z = Tensor::<f64>::zeros(&[1, 3]);
        assert!(matches!(softmax_cross_entropy(&z, &[3]), Err(crate::Error::Contract(_))));
    }

    #[test]
    fn softmax_helper() {
        let p = softmax(&[1000.0, 1000.0]);
        assert_eq!(p, vec![0.5, 0.5]);
    }
}
