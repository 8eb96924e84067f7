mod common;

use camlp_core::{Error, GradGraph, Tensor};
use common::*;
use proptest::prelude::*;
use rand::Rng;

const FLOOR: f64 = 1e-6;
const TOL: f64 = 1e-6;

#[test]
fn construction() {
    let t = Tensor::<f64>::new(&[2, 2], vec![1., 2., 3., 4.], false).unwrap();
    assert_eq!(t.to_vec(), vec![1., 2., 3., 4.]);
    assert!(t.grad().is_none());
    assert_eq!(Tensor::<f64>::new(&[3], vec![0.; 3], true).unwrap().to_vec(), vec![0.; 3]);
    assert!(matches!(Tensor::<f64>::new(&[2], vec![1., 2., 3.], false), Err(Error::Shape(_))));
    assert!(Tensor::<f64>::new(&[0, 2], vec![], false).is_err());
}

#[test]
fn elementwise_examples() {
    let a = Tensor::constant(&[2], vec![1.0, 2.0]).unwrap();
    let b = Tensor::constant(&[2], vec![3.0, 4.0]).unwrap();
    assert_eq!(a.add(&b).unwrap().to_vec(), vec![4.0, 6.0]);
    assert_eq!(a.sub(&b).unwrap().to_vec(), vec![-2.0, -2.0]);
    let v = Tensor::constant(&[3], vec![1.0, 2.0, 3.0]).unwrap();
    assert_eq!(v.mul(&Tensor::scalar(0.0)).unwrap().to_vec(), vec![0.0; 3]);
    assert_eq!(v.scale(0.0).to_vec(), vec![0.0; 3]);

    let row = param(&[1, 2], vec![2.0, 3.0]);
    let m = param(&[2, 2], vec![1.0; 4]);
    let y = row.mul(&m).unwrap();
    assert_eq!(y.to_vec(), vec![2.0, 3.0, 2.0, 3.0]);
    y.sum().backward().unwrap();
    assert_eq!(row.grad().unwrap(), vec![2.0, 2.0]);
    assert_eq!(m.grad().unwrap(), vec![2.0, 3.0, 2.0, 3.0]);
}

#[test]
fn incompatible_shapes_are_rejected() {
    let a = Tensor::<f64>::zeros(&[2, 3]);
    assert!(a.add(&Tensor::zeros(&[3, 2])).is_err());
    assert!(a.mul(&Tensor::zeros(&[2])).is_err());
    assert!(a.add(&Tensor::zeros(&[1, 2, 3])).is_err());
    assert!(a.add(&Tensor::zeros(&[2, 2])).is_err());
    assert!(a.matmul(&Tensor::zeros(&[2, 3])).is_err());
    assert!(Tensor::<f64>::zeros(&[2, 3, 4]).transpose2d().is_err());
    assert!(a.mean_axis(2).is_err());
    assert!(a.reshape(&[5]).is_err());
}

#[test]
fn matmul_examples() {
    let i2 = Tensor::constant(&[2, 2], vec![1., 0., 0., 1.]).unwrap();
    let m = Tensor::constant(&[2, 2], vec![5., -6., 7., 8.5]).unwrap();
    assert_eq!(i2.matmul(&m).unwrap().to_vec(), m.to_vec());
    let a = Tensor::constant(&[1, 2], vec![1., 2.]).unwrap();
    let b = Tensor::constant(&[2, 1], vec![3., 4.]).unwrap();
    assert_eq!(a.matmul(&b).unwrap().to_vec(), vec![11.]);
}

#[test]
fn transpose_and_mean_examples() {
    let a = Tensor::constant(&[2, 2], vec![1., 2., 3., 4.]).unwrap();
    assert_eq!(a.transpose2d().unwrap().to_vec(), vec![1., 3., 2., 4.]);
    let v = Tensor::constant(&[3], vec![2., 4., 6.]).unwrap();
    assert_eq!(v.mean().item(), 4.0);
    let col = Tensor::constant(&[3, 1], vec![2., 4., 6.]).unwrap();
    let m = col.mean_axis(1).unwrap();
    assert_eq!((m.shape(), m.to_vec()), (&[3][..], vec![2., 4., 6.]));
    let x = param(&[4], vec![1., -2., 3., 9.]);
    x.mean().backward().unwrap();
    assert_eq!(x.grad().unwrap(), vec![0.25; 4]);
}

#[test]
fn backward_examples() {
    let x = param(&[2], vec![1.0, 2.0]);
    let loss = x.mul(&x).unwrap().sum();
    loss.backward().unwrap();
    assert_eq!(x.grad().unwrap(), vec![2.0, 4.0]);
    loss.backward().unwrap();
    assert_eq!(x.grad().unwrap(), vec![4.0, 8.0]);

    let c = Tensor::<f64>::scalar(3.0);
    let unused = param(&[1], vec![1.0]);
    c.backward().unwrap();
    assert!(c.grad().is_none() && unused.grad().is_none());

    assert!(matches!(x.mul(&x).unwrap().backward(), Err(Error::Contract(_))));
}

#[test]
fn graph_is_topological() {
    let a = param(&[2], vec![1.0, 2.0]);
    let b = a.mul(&a).unwrap();
    let c = b.add(&a).unwrap().sum();
    let g = GradGraph::from_root(&c);
    let ids: Vec<u64> = g.nodes().iter().map(|t| t.id()).collect();
    assert!(ids.windows(2).all(|w| w[0] > w[1]), "nodes must be in reverse creation order");
    let mut unique = ids.clone();
    unique.dedup();
    assert_eq!(unique.len(), ids.len(), "each node visited once");
    assert_eq!(g.len(), 4);
}

/// f(a, b) = sum((a·b + a) ⊙ a) built with `a` used in three places; its
/// gradient is compared to a brute-force scalar expansion.
#[test]
fn shared_subexpressions_sum_over_paths() {
    let mut r = rng(5);
    for _ in 0..20 {
        let (av, bv) = (uniform(&mut r, 3, -2.0, 2.0), uniform(&mut r, 3, -2.0, 2.0));
        let a = param(&[3], av.clone());
        let b = param(&[3], bv.clone());
        let ab = a.mul(&b).unwrap();
        let s = ab.add(&a).unwrap();
        let loss = s.mul(&a).unwrap().sum();
        loss.backward().unwrap();
        // ∑ (a b + a) a = ∑ a² b + a²
        let ga: Vec<f64> = av.iter().zip(&bv).map(|(a, b)| 2.0 * a * b + 2.0 * a).collect();
        let gb: Vec<f64> = av.iter().map(|a| a * a).collect();
        assert_close(&a.grad().unwrap(), &ga, 1e-12);
        assert_close(&b.grad().unwrap(), &gb, 1e-12);
        let direct: f64 = av.iter().zip(&bv).map(|(a, b)| a * a * b + a * a).sum();
        assert!((loss.item() - direct).abs() < 1e-12);
    }
}

/// Diamond: d = (x·2) ⊙ (x + y), e = d + x, loss = sum(e ⊙ d)
#[test]
fn diamond_matches_brute_force() {
    let x = param(&[1], vec![0.7]);
    let y = param(&[1], vec![-1.3]);
    let d = x.scale(2.0).mul(&x.add(&y).unwrap()).unwrap();
    let e = d.add(&x).unwrap();
    e.mul(&d).unwrap().sum().backward().unwrap();
    let f = |x: f64, y: f64| {
        let d = 2.0 * x * (x + y);
        (d + x) * d
    };
    let h = 1e-6;
    let gx = (f(0.7 + h, -1.3) - f(0.7 - h, -1.3)) / (2.0 * h);
    let gy = (f(0.7, -1.3 + h) - f(0.7, -1.3 - h)) / (2.0 * h);
    assert!((x.grad().unwrap()[0] - gx).abs() < 1e-8);
    assert!((y.grad().unwrap()[0] - gy).abs() < 1e-8);
}

fn random_shape(r: &mut rand_chacha::ChaCha8Rng, rank: usize) -> Vec<usize> {
    (0..rank).map(|_| r.random_range(1..5)).collect()
}

/// 100 random trials per operation: analytic vs central differences.
#[test]
fn every_op_matches_finite_differences() {
    for trial in 0..100u64 {
        let mut r = rng(1000 + trial);
        let rank = r.random_range(1..4);
        let shape = random_shape(&mut r, rank);
        let a = random_param(&mut r, &shape);
        let b = random_param(&mut r, &shape);
        let check = |name: &str, inputs: &[Tensor<f64>], f: &dyn Fn(&[Tensor<f64>]) -> Tensor<f64>| {
            let e = fd_max_rel_err(inputs, trial, FLOOR, f);
            assert!(e < TOL, "{name} trial {trial}: rel err {e:.3e}");
        };
        check("add", &[a.clone(), b.clone()], &|v| v[0].add(&v[1]).unwrap());
        check("sub", &[a.clone(), b.clone()], &|v| v[0].sub(&v[1]).unwrap());
        check("mul", &[a.clone(), b.clone()], &|v| v[0].mul(&v[1]).unwrap());
        check("scale", &[a.clone()], &|v| v[0].scale(-1.7));
        check("mul by scalar", &[a.clone(), random_param(&mut r, &[1])], &|v| v[0].mul(&v[1]).unwrap());

        // extent-1 broadcast along one axis
        let mut bshape = shape.clone();
        let axis = r.random_range(0..shape.len());
        bshape[axis] = 1;
        let bb = random_param(&mut r, &bshape);
        check("broadcast mul", &[a.clone(), bb.clone()], &|v| v[0].mul(&v[1]).unwrap());
        check("broadcast add", &[bb.clone(), a.clone()], &|v| v[0].add(&v[1]).unwrap());

        let (m, k, p) = (r.random_range(1..5), r.random_range(1..5), r.random_range(1..5));
        let x = random_param(&mut r, &[m, k]);
        let w = random_param(&mut r, &[k, p]);
        check("matmul", &[x.clone(), w], &|v| v[0].matmul(&v[1]).unwrap());
        check("transpose2d", &[x.clone()], &|v| v[0].transpose2d().unwrap());
        let t3 = random_param(&mut r, &[2, m, k]);
        check("transpose_last2", &[t3.clone()], &|v| v[0].transpose_last2().unwrap());
        check("reshape", &[t3.clone()], &|v| v[0].reshape(&[m * k, 2]).unwrap());
        let ax = r.random_range(0..3);
        check("mean_axis", &[t3.clone()], &move |v| v[0].mean_axis(ax).unwrap());
        check("mean", &[t3.clone()], &|v| v[0].mean());
        check("sum", &[t3], &|v| v[0].sum());
    }
}

#[test]
fn matmul_random_3x4_by_4x2() {
    let mut r = rng(77);
    let a = random_param(&mut r, &[3, 4]);
    let b = random_param(&mut r, &[4, 2]);
    let e = fd_max_rel_err(&[a, b], 1, FLOOR, |v| v[0].matmul(&v[1]).unwrap());
    assert!(e < TOL, "{e}");
}

fn brute_matmul(a: &[f64], b: &[f64], m: usize, k: usize, p: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * p];
    for i in 0..m {
        for j in 0..p {
            for l in 0..k {
                c[i * p + j] += a[i * k + l] * b[l * p + j];
            }
        }
    }
    c
}

proptest! {
    #[test]
    fn matmul_matches_triple_loop(m in 1usize..6, k in 1usize..20, p in 1usize..6, seed in any::<u64>()) {
        let mut r = rng(seed);
        let (av, bv) = (uniform(&mut r, m * k, -3.0, 3.0), uniform(&mut r, k * p, -3.0, 3.0));
        let c = Tensor::constant(&[m, k], av.clone()).unwrap().matmul(&Tensor::constant(&[k, p], bv.clone()).unwrap()).unwrap();
        let expect = brute_matmul(&av, &bv, m, k, p);
        for (x, y) in c.to_vec().iter().zip(&expect) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn transpose_is_an_involution(m in 1usize..7, n in 1usize..7, seed in any::<u64>()) {
        let v = uniform(&mut rng(seed), m * n, -1.0, 1.0);
        let t = Tensor::constant(&[m, n], v.clone()).unwrap();
        let tt = t.transpose2d().unwrap();
        prop_assert_eq!(tt.shape(), &[n, m][..]);
        prop_assert_eq!(tt.transpose2d().unwrap().to_vec(), v);
    }

    #[test]
    fn add_commutes_and_sub_inverts(n in 1usize..30, seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = Tensor::constant(&[n], uniform(&mut r, n, -5.0, 5.0)).unwrap();
        let b = Tensor::constant(&[n], uniform(&mut r, n, -5.0, 5.0)).unwrap();
        prop_assert_eq!(a.add(&b).unwrap().to_vec(), b.add(&a).unwrap().to_vec());
        let back = a.add(&b).unwrap().sub(&b).unwrap().to_vec();
        for (x, y) in back.iter().zip(a.to_vec()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn grad_shape_matches_data(d0 in 1usize..5, d1 in 1usize..5, seed in any::<u64>()) {
        let a = random_param(&mut rng(seed), &[d0, d1]);
        a.mul(&a).unwrap().mean_axis(0).unwrap().sum().backward().unwrap();
        prop_assert_eq!(a.grad().unwrap().len(), a.numel());
    }

    #[test]
    fn mean_axis_of_constant(d0 in 1usize..5, d1 in 1usize..5, d2 in 1usize..5, axis in 0usize..3, c in -10.0f64..10.0) {
        let t = Tensor::constant(&[d0, d1, d2], vec![c; d0 * d1 * d2]).unwrap();
        let m = t.mean_axis(axis).unwrap();
        let mut expect = vec![d0, d1, d2];
        expect.remove(axis);
        prop_assert_eq!(m.shape(), &expect[..]);
        for v in m.to_vec() {
            prop_assert!((v - c).abs() < 1e-12);
        }
    }
}

#[test]
fn precision_cast_round_trip() {
    let t = Tensor::<f64>::constant(&[3], vec![0.5, -1.25, 3.0]).unwrap();
    let s: Tensor<f32> = t.cast();
    assert_eq!(s.to_vec(), vec![0.5f32, -1.25, 3.0]);
    assert_eq!(s.cast::<f64>().to_vec(), t.to_vec());
}
