#![allow(dead_code)]

use camlp_core::{no_grad, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const STEP: f64 = 1e-5;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

pub fn param(shape: &[usize], values: Vec<f64>) -> Tensor<f64> {
    Tensor::parameter(shape, values).unwrap()
}

pub fn random_param(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor<f64> {
    let n = shape.iter().product();
    param(shape, uniform(rng, n, -2.0, 2.0))
}

/// `|a − n| / max(|a|, |n|, floor)`
pub fn rel_err(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Largest relative error between the analytic gradient of
/// `Σ w ⊙ f(inputs)` (random fixed `w`) and central differences, over every
/// input that requires a gradient.
pub fn fd_max_rel_err(
    inputs: &[Tensor<f64>],
    weight_seed: u64,
    floor: f64,
    f: impl Fn(&[Tensor<f64>]) -> Tensor<f64>,
) -> f64 {
    let out = f(inputs);
    let w = Tensor::constant(out.shape(), uniform(&mut rng(weight_seed), out.numel(), -1.0, 1.0)).unwrap();
    let loss_of = |inputs: &[Tensor<f64>]| f(inputs).mul(&w).unwrap().sum();
    for x in inputs {
        x.zero_grad();
    }
    loss_of(inputs).backward().unwrap();
    let mut worst = 0.0f64;
    for x in inputs.iter().filter(|x| x.requires_grad()) {
        let analytic = x.grad().unwrap_or_else(|| vec![0.0; x.numel()]);
        for (i, &a) in analytic.iter().enumerate() {
            let orig = x.data()[i];
            let numeric = no_grad(|| {
                x.data_mut()[i] = orig + STEP;
                let up = loss_of(inputs).item();
                x.data_mut()[i] = orig - STEP;
                let down = loss_of(inputs).item();
                x.data_mut()[i] = orig;
                (up - down) / (2.0 * STEP)
            });
            worst = worst.max(rel_err(a, numeric, floor));
        }
    }
    worst
}

pub fn assert_close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len(), "length mismatch");
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        assert!((x - y).abs() <= tol, "index {i}: {x} vs {y} (tol {tol})");
    }
}
