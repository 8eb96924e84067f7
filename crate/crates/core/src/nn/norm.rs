use super::{join, NamedTensor, Parameterized};
use crate::error::{contract_err, shape_err, Result};
use crate::tensor::{Element, Tensor};

/// Whether normalization layers use batch statistics or running estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Standardizes every row of the last axis with its own mean and biased
/// variance: `(x - mean) / sqrt(var + eps)`. No affine step.
pub fn normalize_last_axis<T: Element>(x: &Tensor<T>, eps: f64) -> Result<Tensor<T>> {
    let Some(&f) = x.shape().last() else {
        return shape_err("normalization needs rank >= 1");
    };
    let rows = x.numel() / f;
    let (xhat, inv) = standardize_groups(&x.data(), rows, f, 1, eps);
    let saved = xhat.clone();
    Ok(Tensor::from_op(x.shape().to_vec(), xhat, "layer_norm", vec![x.clone()], move |g, _| {
        let mut gx = vec![T::zero(); g.len()];
        group_backward(g, &saved, &inv, rows, f, 1, &mut gx);
        vec![Some(gx)]
    }))
}

/// Standardizes data laid out as `[outer × groups × len]`, where group `g`
/// is every `x[o, g, :]`. Returns the standardized values and `1/std` per group.
fn standardize_groups<T: Element>(
    x: &[T],
    groups: usize,
    len: usize,
    outer: usize,
    eps: f64,
) -> (Vec<T>, Vec<T>) {
    let count = T::of((outer * len) as f64);
    let mut out = vec![T::zero(); x.len()];
    let mut invs = Vec::with_capacity(groups);
    for gi in 0..groups {
        let seg = |o: usize| (o * groups + gi) * len..(o * groups + gi + 1) * len;
        let mut sum = T::zero();
        for o in 0..outer {
            sum += x[seg(o)].iter().copied().sum::<T>();
        }
        let mean = sum / count;
        let mut sq = T::zero();
        for o in 0..outer {
            sq += x[seg(o)].iter().map(|&v| (v - mean) * (v - mean)).sum::<T>();
        }
        let var = sq / count;
        let inv = T::one() / (var + T::of(eps)).sqrt();
        for o in 0..outer {
            for (dst, &v) in out[seg(o)].iter_mut().zip(&x[seg(o)]) {
                *dst = (v - mean) * inv;
            }
        }
        invs.push(inv);
    }
    (out, invs)
}

/// `dx = inv · (g − mean(g) − x̂ · mean(g ⊙ x̂))` per group.
fn group_backward<T: Element>(g: &[T], xhat: &[T], inv: &[T], groups: usize, len: usize, outer: usize, gx: &mut [T]) {
    let count = T::of((outer * len) as f64);
    for gi in 0..groups {
        let seg = |o: usize| (o * groups + gi) * len..(o * groups + gi + 1) * len;
        let (mut sg, mut sgx) = (T::zero(), T::zero());
        for o in 0..outer {
            for (&a, &b) in g[seg(o)].iter().zip(&xhat[seg(o)]) {
                sg += a;
                sgx += a * b;
            }
        }
        let (mg, mgx) = (sg / count, sgx / count);
        for o in 0..outer {
            let r = seg(o);
            for ((dst, &a), &b) in gx[r.clone()].iter_mut().zip(&g[r.clone()]).zip(&xhat[r]) {
                *dst = inv[gi] * (a - mg - b * mgx);
            }
        }
    }
}

/// Learnable affine parameters of a layer norm over the last axis.
#[derive(Debug, Clone)]
pub struct LayerNormParams<T: Element> {
    pub gamma: Tensor<T>,
    pub beta: Tensor<T>,
    pub eps: f64,
}

impl<T: Element> LayerNormParams<T> {
    /// Unit gain, zero shift.
    pub fn new(features: usize, eps: f64) -> Self {
        Self {
            gamma: Tensor::parameter(&[features], vec![T::one(); features]).expect("positive extent"),
            beta: Tensor::parameter(&[features], vec![T::zero(); features]).expect("positive extent"),
            eps,
        }
    }

    pub fn features(&self) -> usize {
        self.gamma.numel()
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let f = self.features();
        if x.shape().last() != Some(&f) {
            return shape_err(format!("layer norm over {f} features got input {:?}", x.shape()));
        }
        let mut affine_shape = vec![1; x.rank()];
        *affine_shape.last_mut().unwrap() = f;
        normalize_last_axis(x, self.eps)?
            .mul(&self.gamma.reshape(&affine_shape)?)?
            .add(&self.beta.reshape(&affine_shape)?)
    }
}

impl<T: Element> Parameterized<T> for LayerNormParams<T> {
    fn collect_parameters(&self, prefix: &str, out: &mut Vec<NamedTensor<T>>) {
        out.push(NamedTensor { name: join(prefix, "gamma"), tensor: self.gamma.clone() });
        out.push(NamedTensor { name: join(prefix, "beta"), tensor: self.beta.clone() });
    }
}

/// Batch normalization over `[N × features × T]`, normalizing each feature
/// across the batch and time axes.
#[derive(Debug, Clone)]
pub struct BatchNorm1d<T: Element> {
    pub gamma: Tensor<T>,
    pub beta: Tensor<T>,
    pub running_mean: Tensor<T>,
    pub running_var: Tensor<T>,
    pub momentum: f64,
    pub eps: f64,
    mode: Mode,
}

impl<T: Element> BatchNorm1d<T> {
    pub fn new(features: usize, momentum: f64, eps: f64) -> Self {
        let ones = vec![T::one(); features];
        let zeros = vec![T::zero(); features];
        Self {
            gamma: Tensor::parameter(&[features], ones.clone()).expect("positive extent"),
            beta: Tensor::parameter(&[features], zeros.clone()).expect("positive extent"),
            running_mean: Tensor::constant(&[features], zeros).expect("positive extent"),
            running_var: Tensor::constant(&[features], ones).expect("positive extent"),
            momentum,
            eps,
            mode: Mode::Train,
        }
    }

    pub fn features(&self) -> usize {
        self.gamma.numel()
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    /// Train mode normalizes with batch statistics (biased variance) and folds
    /// them into the running estimates; eval mode uses the running estimates.
    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let s = x.shape();
        let f = self.features();
        if s.len() != 3 || s[1] != f {
            return shape_err(format!("batch norm over {f} features expects [N, {f}, T], got {s:?}"));
        }
        let (n, t) = (s[0], s[2]);
        let normalized = match self.mode {
            Mode::Train => {
                if n * t < 2 {
                    return contract_err(format!(
                        "batch norm in train mode needs at least 2 values per feature, got {}",
                        n * t
                    ));
                }
                self.normalize_batch(x, n, t)
            }
            Mode::Eval => self.normalize_running(x, n, t),
        };
        normalized
            .mul(&self.gamma.reshape(&[1, f, 1])?)?
            .add(&self.beta.reshape(&[1, f, 1])?)
    }

    fn normalize_batch(&self, x: &Tensor<T>, n: usize, t: usize) -> Tensor<T> {
        let f = self.features();
        let (xhat, inv) = standardize_groups(&x.data(), f, t, n, self.eps);
        {
            let xd = x.data();
            let count = (n * t) as f64;
            let m = T::of(self.momentum);
            let keep = T::one() - m;
            let mut rm = self.running_mean.data_mut();
            let mut rv = self.running_var.data_mut();
            for fi in 0..f {
                let mut sum = 0.0;
                let mut sq = 0.0;
                for ni in 0..n {
                    let row = &xd[(ni * f + fi) * t..(ni * f + fi + 1) * t];
                    sum += row.iter().map(|v| v.as_f64()).sum::<f64>();
                    sq += row.iter().map(|v| v.as_f64() * v.as_f64()).sum::<f64>();
                }
                let mean = sum / count;
                let var = (sq / count - mean * mean).max(0.0);
                rm[fi] = keep * rm[fi] + m * T::of(mean);
                rv[fi] = keep * rv[fi] + m * T::of(var);
            }
        }
        let saved = xhat.clone();
        Tensor::from_op(x.shape().to_vec(), xhat, "batch_norm_train", vec![x.clone()], move |g, _| {
            let mut gx = vec![T::zero(); g.len()];
            group_backward(g, &saved, &inv, f, t, n, &mut gx);
            vec![Some(gx)]
        })
    }

    fn normalize_running(&self, x: &Tensor<T>, n: usize, t: usize) -> Tensor<T> {
        let f = self.features();
        let mean = self.running_mean.to_vec();
        let inv: Vec<T> = self
            .running_var
            .data()
            .iter()
            .map(|&v| T::one() / (v + T::of(self.eps)).sqrt())
            .collect();
        let mut out = x.to_vec();
        for ni in 0..n {
            for fi in 0..f {
                for v in &mut out[(ni * f + fi) * t..(ni * f + fi + 1) * t] {
                    *v = (*v - mean[fi]) * inv[fi];
                }
            }
        }
        Tensor::from_op(x.shape().to_vec(), out, "batch_norm_eval", vec![x.clone()], move |g, _| {
            let mut gx = g.to_vec();
            for ni in 0..n {
                for fi in 0..f {
                    for v in &mut gx[(ni * f + fi) * t..(ni * f + fi + 1) * t] {
                        *v *= inv[fi];
                    }
                }
            }
            vec![Some(gx)]
        })
    }
}

impl<T: Element> Parameterized<T> for BatchNorm1d<T> {
    fn collect_parameters(&self, prefix: &str, out: &mut Vec<NamedTensor<T>>) {
        out.push(NamedTensor { name: join(prefix, "gamma"), tensor: self.gamma.clone() });
        out.push(NamedTensor { name: join(prefix, "beta"), tensor: self.beta.clone() });
    }

    fn collect_buffers(&self, prefix: &str, out: &mut Vec<NamedTensor<T>>) {
        out.push(NamedTensor { name: join(prefix, "running_mean"), tensor: self.running_mean.clone() });
        out.push(NamedTensor { name: join(prefix, "running_var"), tensor: self.running_var.clone() });
    }
}
