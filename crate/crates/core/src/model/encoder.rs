use super::batched;
use crate::error::{shape_err, Result};
use crate::nn::{avg_pool1d, join, leaky_relu, BatchNorm1d, Conv1dLayer, Mode, NamedTensor, Parameterized};
use crate::tensor::{Element, Tensor};

/// 1-D convolutional front end applied to each EEG channel independently,
/// with weights shared across channels.
///
/// Per channel: `conv(1→n)+bn+σ → conv(n→2n)+bn+σ → avgpool(k) →
/// conv(2n→4n)+bn+σ → conv(4n→1, width 1)`, mapping `R^T → R^L`.
#[derive(Debug, Clone)]
pub struct LocalEncoder<T: Element> {
    pub conv1: Conv1dLayer<T>,
    pub bn1: BatchNorm1d<T>,
    pub conv2: Conv1dLayer<T>,
    pub bn2: BatchNorm1d<T>,
    pub conv3: Conv1dLayer<T>,
    pub bn3: BatchNorm1d<T>,
    pub collapse: Conv1dLayer<T>,
    pub pool: usize,
    pub slope: f64,
}

impl<T: Element> LocalEncoder<T> {
    pub fn new(filters: usize, kernel: usize, slope: f64, bn_momentum: f64, eps: f64, seeds: [u64; 4]) -> Result<Self> {
        let n = filters;
        Ok(Self {
            conv1: Conv1dLayer::new(1, n, kernel, seeds[0])?,
            bn1: BatchNorm1d::new(n, bn_momentum, eps),
            conv2: Conv1dLayer::new(n, 2 * n, kernel, seeds[1])?,
            bn2: BatchNorm1d::new(2 * n, bn_momentum, eps),
            conv3: Conv1dLayer::new(2 * n, 4 * n, kernel, seeds[2])?,
            bn3: BatchNorm1d::new(4 * n, bn_momentum, eps),
            collapse: Conv1dLayer::new(4 * n, 1, 1, seeds[3])?,
            pool: kernel,
            slope,
        })
    }

    pub fn set_mode(&mut self, mode: Mode) {
        for bn in [&mut self.bn1, &mut self.bn2, &mut self.bn3] {
            bn.set_mode(mode);
        }
    }

    /// `[C, T] → [C, L]` or `[B, C, T] → [B, C, L]`.
    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let (c, t) = match x.shape() {
            [c, t] | [_, c, t] => (*c, *t),
            s => return shape_err(format!("local encoder expects [C, T] or [B, C, T], got {s:?}")),
        };
        if t < self.pool {
            return shape_err(format!("slice length {t} is shorter than the pooling size {}", self.pool));
        }
        let (xb, squeeze) = batched(x, c, t)?;
        let b = xb.shape()[0];
        let l = t / self.pool;

        let h = xb.reshape(&[b * c, 1, t])?;
        let h = leaky_relu(&self.bn1.forward(&self.conv1.forward(&h)?)?, self.slope);
        let h = leaky_relu(&self.bn2.forward(&self.conv2.forward(&h)?)?, self.slope);
        let h = avg_pool1d(&h, self.pool)?;
        let h = leaky_relu(&self.bn3.forward(&self.conv3.forward(&h)?)?, self.slope);
        let h = self.collapse.forward(&h)?;

        if squeeze { h.reshape(&[c, l]) } else { h.reshape(&[b, c, l]) }
    }
}

impl<T: Element> Parameterized<T> for LocalEncoder<T> {
    fn collect_parameters(&self, prefix: &str, out: &mut Vec<NamedTensor<T>>) {
        self.conv1.collect_parameters(&join(prefix, "conv1"), out);
        self.bn1.collect_parameters(&join(prefix, "bn1"), out);
        self.conv2.collect_parameters(&join(prefix, "conv2"), out);
        self.bn2.collect_parameters(&join(prefix, "bn2"), out);
        self.conv3.collect_parameters(&join(prefix, "conv3"), out);
        self.bn3.collect_parameters(&join(prefix, "bn3"), out);
        self.collapse.collect_parameters(&join(prefix, "collapse"), out);
    }

    fn collect_buffers(&self, prefix: &str, out: &mut Vec<NamedTensor<T>>) {
        self.bn1.collect_buffers(&join(prefix, "bn1"), out);
        self.bn2.collect_buffers(&join(prefix, "bn2"), out);
        self.bn3.collect_buffers(&join(prefix, "bn3"), out);
    }
}
