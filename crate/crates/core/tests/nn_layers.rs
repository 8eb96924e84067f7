mod common;

use camlp_core::nn::{
    avg_pool1d, conv1d_same, kaiming_uniform, leaky_relu, normalize_last_axis, softmax_cross_entropy, BatchNorm1d,
    LayerNormParams, LinearLayer, Mode,
};
use camlp_core::{Error, Tensor};
use common::*;
use proptest::prelude::*;
use rand::Rng;

/// Gradients below this magnitude are judged by absolute error (< 1e-9),
/// still two orders above the roundoff of a 1e-5 central difference.
const FLOOR: f64 = 1e-3;
const TOL: f64 = 1e-6;

#[test]
fn linear_examples_and_gradients() {
    let x = Tensor::constant(&[2], vec![1.0, 0.0]).unwrap();
    let id = LinearLayer::<f64>::from_parts(2, 2, vec![1., 0., 0., 1.], vec![0., 0.]).unwrap();
    assert_eq!(id.forward(&x).unwrap().to_vec(), vec![1.0, 0.0]);
    let zero = LinearLayer::<f64>::from_parts(2, 2, vec![0.; 4], vec![1., 1.]).unwrap();
    assert_eq!(zero.forward(&Tensor::constant(&[2], vec![-3.0, 8.0]).unwrap()).unwrap().to_vec(), vec![1.0, 1.0]);
    let l = LinearLayer::<f64>::from_parts(2, 2, vec![2., 0., 0., 2.], vec![1., 1.]).unwrap();
    assert_eq!(l.forward(&x).unwrap().to_vec(), vec![3.0, 1.0]);
    assert!(l.forward(&Tensor::zeros(&[3])).is_err());

    for seed in 0..20 {
        let mut r = rng(seed);
        let layer = LinearLayer::<f64>::new(4, 3, seed);
        let x = random_param(&mut r, &[2, 5, 4]);
        let inputs = [x, layer.weight.clone(), layer.bias.clone()];
        let e = fd_max_rel_err(&inputs, seed, FLOOR, |v| {
            LinearLayer { weight: v[1].clone(), bias: v[2].clone() }.forward(&v[0]).unwrap()
        });
        assert!(e < TOL, "seed {seed}: {e:.3e}");
    }
}

#[test]
fn conv_gradients_through_padding() {
    for seed in 0..30 {
        let mut r = rng(seed);
        let k = [1, 3, 5][seed as usize % 3];
        let (n, cin, cout, t) = (r.random_range(1..3), r.random_range(1..4), r.random_range(1..4), r.random_range(1..9));
        let x = random_param(&mut r, &[n, cin, t]);
        let w = random_param(&mut r, &[cout, cin, k]);
        let b = random_param(&mut r, &[cout]);
        let e = fd_max_rel_err(&[x, w, b], seed, FLOOR, |v| conv1d_same(&v[0], &v[1], &v[2]).unwrap());
        assert!(e < TOL, "seed {seed} k={k} t={t}: {e:.3e}");
    }
}

#[test]
fn conv_examples() {
    let run = |x: &[f64], k: &[f64], b: f64| {
        conv1d_same(
            &Tensor::constant(&[1, 1, x.len()], x.to_vec()).unwrap(),
            &Tensor::constant(&[1, 1, k.len()], k.to_vec()).unwrap(),
            &Tensor::constant(&[1], vec![b]).unwrap(),
        )
        .unwrap()
        .to_vec()
    };
    assert_eq!(run(&[4., -1., 2.5], &[0., 1., 0.], 0.), vec![4., -1., 2.5]);
    assert_close(&run(&[3., 6., 9.], &[1. / 3.; 3], 0.), &[3., 6., 5.], 1e-12);
    assert_eq!(run(&[1., 2., 3.], &[0.; 3], 0.75), vec![0.75; 3]);
    let err = conv1d_same(&Tensor::<f64>::zeros(&[1, 2, 4]), &Tensor::zeros(&[1, 3, 3]), &Tensor::zeros(&[1]));
    assert!(matches!(err, Err(Error::Shape(_))));
}

#[test]
fn pool_examples_and_gradients() {
    let x = Tensor::constant(&[6], vec![1., 2., 3., 4., 5., 6.]).unwrap();
    assert_eq!(avg_pool1d(&x, 3).unwrap().to_vec(), vec![2., 5.]);
    assert_eq!(avg_pool1d(&x, 1).unwrap().to_vec(), x.to_vec());
    assert_eq!(avg_pool1d(&Tensor::<f64>::zeros(&[2, 4, 150]), 3).unwrap().shape(), &[2, 4, 50]);
    assert!(avg_pool1d(&Tensor::<f64>::zeros(&[2]), 3).is_err());
    for seed in 0..20 {
        let mut r = rng(seed);
        let t = r.random_range(3..12);
        let x = random_param(&mut r, &[2, 3, t]);
        let e = fd_max_rel_err(&[x], seed, FLOOR, |v| avg_pool1d(&v[0], 3).unwrap());
        assert!(e < TOL, "seed {seed}: {e:.3e}");
    }
}

#[test]
fn leaky_relu_examples_and_gradients() {
    let x = Tensor::constant(&[3], vec![2.0, -1.0, 0.0]).unwrap();
    assert_eq!(leaky_relu(&x, 0.01).to_vec(), vec![2.0, -0.01, 0.0]);
    assert_eq!(leaky_relu(&Tensor::<f64>::scalar(0.0), 0.3).item(), 0.0);
    let z = param(&[1], vec![0.0]);
    leaky_relu(&z, 0.01).sum().backward().unwrap();
    assert_eq!(z.grad().unwrap(), vec![1.0]);
    for seed in 0..20 {
        let mut r = rng(seed);
        // keep inputs away from the kink
        let v: Vec<f64> = (0..12).map(|_| r.random_range(0.1..2.0) * if r.random() { 1.0 } else { -1.0 }).collect();
        let x = param(&[3, 4], v);
        let e = fd_max_rel_err(&[x], seed, FLOOR, |v| leaky_relu(&v[0], 0.01));
        assert!(e < TOL, "seed {seed}: {e:.3e}");
    }
}

#[test]
fn layer_norm_examples_and_gradients() {
    let ln = LayerNormParams::<f64>::new(3, 1e-5);
    let y = ln.forward(&Tensor::constant(&[3], vec![1., 2., 3.]).unwrap()).unwrap();
    assert_close(&y.to_vec(), &[-1.22474, 0.0, 1.22474], 1e-4);
    let y = ln.forward(&Tensor::constant(&[3], vec![5.; 3]).unwrap()).unwrap();
    assert_eq!(y.to_vec(), vec![0.0; 3]);
    let x = Tensor::constant(&[2, 3], vec![0.3, -1., 2., 4., 4.5, -2.]).unwrap();
    let base = ln.forward(&x).unwrap().to_vec();
    ln.beta.fill(0.7);
    let shifted = ln.forward(&x).unwrap().to_vec();
    assert_close(&shifted, &base.iter().map(|v| v + 0.7).collect::<Vec<_>>(), 1e-15);
    assert!(ln.forward(&Tensor::zeros(&[2, 4])).is_err());

    for seed in 0..30 {
        let mut r = rng(seed);
        let f = r.random_range(2..7);
        let x = random_param(&mut r, &[2, 3, f]);
        let ln = LayerNormParams::<f64>::new(f, 1e-5);
        ln.gamma.data_mut().copy_from_slice(&uniform(&mut r, f, 0.5, 1.5));
        ln.beta.data_mut().copy_from_slice(&uniform(&mut r, f, -1.0, 1.0));
        let inputs = [x, ln.gamma.clone(), ln.beta.clone()];
        let e = fd_max_rel_err(&inputs, seed, FLOOR, |v| {
            LayerNormParams { gamma: v[1].clone(), beta: v[2].clone(), eps: 1e-5 }.forward(&v[0]).unwrap()
        });
        assert!(e < TOL, "seed {seed}: {e:.3e}");
    }
}

#[test]
fn batch_norm_train_statistics() {
    let mut r = rng(9);
    let bn = BatchNorm1d::<f64>::new(3, 0.1, 1e-5);
    let x = Tensor::constant(&[4, 3, 5], uniform(&mut r, 60, -3.0, 7.0)).unwrap();
    let y = bn.forward(&x).unwrap().to_vec();
    for f in 0..3 {
        let vals: Vec<f64> = (0..4).flat_map(|n| y[(n * 3 + f) * 5..(n * 3 + f + 1) * 5].to_vec()).collect();
        let mean = vals.iter().sum::<f64>() / 20.0;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 20.0;
        assert!(mean.abs() < 1e-6, "{mean}");
        assert!((var - 1.0).abs() < 1e-4, "{var}");
    }
    bn.gamma.fill(0.0);
    bn.beta.fill(0.25);
    assert!(bn.forward(&x).unwrap().to_vec().iter().all(|&v| v == 0.25));

    let constant = BatchNorm1d::<f64>::new(1, 0.1, 1e-5);
    let y = constant.forward(&Tensor::constant(&[2, 1, 3], vec![4.0; 6]).unwrap()).unwrap();
    assert!(y.to_vec().iter().all(|v| v.abs() < 1e-9));

    let degenerate = constant.forward(&Tensor::constant(&[1, 1, 1], vec![1.0]).unwrap());
    assert!(matches!(degenerate, Err(Error::Contract(_))));
}

#[test]
fn batch_norm_running_stats_and_eval() {
    let mut bn = BatchNorm1d::<f64>::new(1, 0.1, 1e-5);
    bn.set_mode(Mode::Eval);
    let x = Tensor::constant(&[1, 1, 3], vec![1.0, 2.0, 3.0]).unwrap();
    // fresh statistics: mean 0, var 1
    assert_close(&bn.forward(&x).unwrap().to_vec(), &[1.0, 2.0, 3.0].map(|v| v / (1.0f64 + 1e-5).sqrt()), 1e-15);
    bn.set_mode(Mode::Train);
    bn.forward(&x).unwrap();
    assert_close(&bn.running_mean.to_vec(), &[0.2], 1e-15);
    assert_close(&bn.running_var.to_vec(), &[0.9 + 0.1 * (2.0 / 3.0)], 1e-15);
}

#[test]
fn batch_norm_gradients_both_modes() {
    for seed in 0..30 {
        let mut r = rng(seed);
        let (n, f, t) = (r.random_range(1..4), r.random_range(1..4), r.random_range(2..6));
        let x = random_param(&mut r, &[n, f, t]);
        let mut bn = BatchNorm1d::<f64>::new(f, 0.1, 1e-5);
        bn.gamma.data_mut().copy_from_slice(&uniform(&mut r, f, 0.5, 1.5));
        bn.beta.data_mut().copy_from_slice(&uniform(&mut r, f, -1.0, 1.0));
        for mode in [Mode::Train, Mode::Eval] {
            bn.set_mode(mode);
            let inputs = [x.clone(), bn.gamma.clone(), bn.beta.clone()];
            let e = fd_max_rel_err(&inputs, seed, FLOOR, |v| {
                let mut layer = bn.clone();
                layer.gamma = v[1].clone();
                layer.beta = v[2].clone();
                layer.forward(&v[0]).unwrap()
            });
            assert!(e < TOL, "seed {seed} {mode:?}: {e:.3e}");
        }
    }
}

#[test]
fn cross_entropy_examples_and_gradients() {
    let ce = |l: Vec<f64>, t: usize| softmax_cross_entropy(&Tensor::constant(&[1, l.len()], l).unwrap(), &[t]).unwrap().item();
    assert!((ce(vec![0.3; 3], 1) - 3f64.ln()).abs() < 1e-12);
    let sat = ce(vec![1000., 0., 0.], 0);
    assert!(sat.is_finite() && sat.abs() < 1e-12);
    let e = std::f64::consts::E;
    assert!((ce(vec![1., 2., 3.], 2) - ((e + e * e + e * e * e).ln() - 3.0)).abs() < 1e-12);
    assert!((ce(vec![1., 2., 3.], 2) - 0.40761).abs() < 1e-5);
    let bad = softmax_cross_entropy(&Tensor::<f64>::zeros(&[1, 3]), &[3]);
    assert!(matches!(bad, Err(Error::Contract(_))));

    for seed in 0..30 {
        let mut r = rng(seed);
        let (b, k) = (r.random_range(1..5), r.random_range(2..6));
        let logits = random_param(&mut r, &[b, k]);
        let targets: Vec<usize> = (0..b).map(|_| r.random_range(0..k)).collect();
        let e = fd_max_rel_err(&[logits.clone()], seed, FLOOR, |v| softmax_cross_entropy(&v[0], &targets).unwrap());
        assert!(e < TOL, "seed {seed}: {e:.3e}");
        logits.zero_grad();
        softmax_cross_entropy(&logits, &targets).unwrap().backward().unwrap();
        for row in logits.grad().unwrap().chunks(k) {
            assert!(row.iter().sum::<f64>().abs() < 1e-15);
        }
    }
}

#[test]
fn kaiming_statistics() {
    let v: Vec<f64> = kaiming_uniform(&[100_000], 50, 4);
    let bound = (6.0f64 / 50.0).sqrt();
    assert!(v.iter().all(|x| x.abs() <= bound));
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64;
    assert!((var / (2.0 / 50.0) - 1.0).abs() < 0.1, "{var}");
    assert_eq!(v, kaiming_uniform::<f64>(&[100_000], 50, 4));
}

proptest! {
    #[test]
    fn conv_is_linear_without_bias(t in 1usize..12, a in -3.0f64..3.0, b in -3.0f64..3.0, seed in any::<u64>()) {
        let mut r = rng(seed);
        let w = Tensor::constant(&[2, 2, 3], uniform(&mut r, 12, -1.0, 1.0)).unwrap();
        let zero = Tensor::constant(&[2], vec![0.0; 2]).unwrap();
        let (xv, yv) = (uniform(&mut r, 2 * t, -2.0, 2.0), uniform(&mut r, 2 * t, -2.0, 2.0));
        let conv = |v: Vec<f64>| conv1d_same(&Tensor::constant(&[1, 2, t], v).unwrap(), &w, &zero).unwrap().to_vec();
        let combo: Vec<f64> = xv.iter().zip(&yv).map(|(x, y)| a * x + b * y).collect();
        let (fx, fy) = (conv(xv), conv(yv));
        for ((l, x), y) in conv(combo).iter().zip(&fx).zip(&fy) {
            prop_assert!((l - (a * x + b * y)).abs() < 1e-6);
        }
    }

    #[test]
    fn layer_norm_ignores_row_shift(f in 2usize..10, shift in -50.0f64..50.0, seed in any::<u64>()) {
        let v = uniform(&mut rng(seed), f, -3.0, 3.0);
        let a = normalize_last_axis(&Tensor::constant(&[f], v.clone()).unwrap(), 1e-5).unwrap().to_vec();
        let b = normalize_last_axis(&Tensor::constant(&[f], v.iter().map(|x| x + shift).collect()).unwrap(), 1e-5).unwrap().to_vec();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn cross_entropy_is_non_negative(k in 2usize..8, seed in any::<u64>()) {
        let mut r = rng(seed);
        let logits = Tensor::constant(&[1, k], uniform(&mut r, k, -20.0, 20.0)).unwrap();
        let t = r.random_range(0..k);
        prop_assert!(softmax_cross_entropy(&logits, &[t]).unwrap().item() >= 0.0);
    }
}
