//! Mixing unit, channel-attention unit, time-mixing unit and the block that
//! chains them.
//!
//! Feature maps are `[C × L]` per sample (channels × pooled time). Every
//! forward accepts either a single map `[C, L]` or a batch `[B, C, L]` and
//! returns the same rank it was given.

use super::batched;
use crate::error::{shape_err, Result};
use crate::nn::{join, leaky_relu, LayerNormParams, LinearLayer, NamedTensor, Parameterized};
use crate::tensor::{Element, Tensor};

/// Two-layer perceptron `outer(σ(inner(v)))` applied over the last axis,
/// mapping `R^in → R^hidden → R^in`.
#[derive(Debug, Clone)]
pub struct MixingUnit<T: Element> {
    pub inner: LinearLayer<T>,
    pub outer: LinearLayer<T>,
    pub slope: f64,
}

impl<T: Element> MixingUnit<T> {
    pub fn new(features: usize, hidden: usize, slope: f64, seeds: [u64; 2]) -> Self {
        Self {
            inner: LinearLayer::new(features, hidden, seeds[0]),
            outer: LinearLayer::new(hidden, features, seeds[1]),
            slope,
        }
    }

    pub fn features(&self) -> usize {
        self.inner.in_features()
    }

    pub fn hidden(&self) -> usize {
        self.inner.out_features()
    }

    pub fn forward(&self, v: &Tensor<T>) -> Result<Tensor<T>> {
        let h = self.inner.forward(v)?;
        self.outer.forward(&leaky_relu(&h, self.slope))
    }

    /// Sets every weight and bias to zero.
    pub fn zero(&self) {
        for p in self.parameters() {
            p.tensor.fill(T::zero());
        }
    }
}

impl<T: Element> Parameterized<T> for MixingUnit<T> {
    fn collect_parameters(&self, prefix: &str, out: &mut Vec<NamedTensor<T>>) {
        self.inner.collect_parameters(&join(prefix, "inner"), out);
        self.outer.collect_parameters(&join(prefix, "outer"), out);
    }
}

/// Channel mixing with learned per-channel scaling.
///
/// With `x` of shape `[C × L]`: transpose to `[L × C]`, layer-normalize over
/// `C`, scale channel `c` by `attention[c]`, mix channels through
/// `C → D → C`, transpose back and add the residual.
#[derive(Debug, Clone)]
pub struct ChannelAttentionUnit<T: Element> {
    /// `[1 × C]`
    pub attention: Tensor<T>,
    pub norm: LayerNormParams<T>,
    pub mixing: MixingUnit<T>,
}

impl<T: Element> ChannelAttentionUnit<T> {
    pub fn new(channels: usize, hidden: usize, slope: f64, eps: f64, seeds: [u64; 3]) -> Self {
        let t = crate::nn::kaiming_uniform(&[1, channels], channels, seeds[0]);
        Self {
            attention: Tensor::parameter(&[1, channels], t).expect("positive extent"),
            norm: LayerNormParams::new(channels, eps),
            mixing: MixingUnit::new(channels, hidden, slope, [seeds[1], seeds[2]]),
        }
    }

    pub fn channels(&self) -> usize {
        self.attention.numel()
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.apply(x, true)
    }

    /// The same computation with the attention scaling step removed.
    pub fn forward_unscaled(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.apply(x, false)
    }

    fn apply(&self, x: &Tensor<T>, scaled: bool) -> Result<Tensor<T>> {
        let c = self.channels();
        let Some(&l) = x.shape().last() else {
            return shape_err("channel attention input must be [C, L] or [B, C, L]");
        };
        let (xb, squeeze) = batched(x, c, l)?;
        let mut z = self.norm.forward(&xb.transpose_last2()?)?;
        if scaled {
            z = z.mul(&self.attention.reshape(&[1, 1, c])?)?;
        }
        let mixed = self.mixing.forward(&z)?.transpose_last2()?;
        let y = xb.add(&mixed)?;
        if squeeze { y.reshape(&[c, l]) } else { Ok(y) }
    }
}

impl<T: Element> Parameterized<T> for ChannelAttentionUnit<T> {
    fn collect_parameters(&self, prefix: &str, out: &mut Vec<NamedTensor<T>>) {
        out.push(NamedTensor { name: join(prefix, "attention"), tensor: self.attention.clone() });
        self.norm.collect_parameters(&join(prefix, "norm"), out);
        self.mixing.collect_parameters(&join(prefix, "mixing"), out);
    }
}

/// Time mixing: layer-normalize each channel's `L` samples, mix them through
/// `L → H → L`, add the residual.
#[derive(Debug, Clone)]
pub struct TimeMixingUnit<T: Element> {
    pub norm: LayerNormParams<T>,
    pub mixing: MixingUnit<T>,
}

impl<T: Element> TimeMixingUnit<T> {
    pub fn new(time_len: usize, hidden: usize, slope: f64, eps: f64, seeds: [u64; 2]) -> Self {
        Self {
            norm: LayerNormParams::new(time_len, eps),
            mixing: MixingUnit::new(time_len, hidden, slope, seeds),
        }
    }

    pub fn time_len(&self) -> usize {
        self.norm.features()
    }

    pub fn forward(&self, y1: &Tensor<T>) -> Result<Tensor<T>> {
        let l = self.time_len();
        let c = match y1.shape() {
            [c, ll] | [_, c, ll] if *ll == l => *c,
            s => return shape_err(format!("time mixing over L={l} got input {s:?}")),
        };
        let (yb, squeeze) = batched(y1, c, l)?;
        let y = yb.add(&self.mixing.forward(&self.norm.forward(&yb)?)?)?;
        if squeeze { y.reshape(&[c, l]) } else { Ok(y) }
    }
}

impl<T: Element> Parameterized<T> for TimeMixingUnit<T> {
    fn collect_parameters(&self, prefix: &str, out: &mut Vec<NamedTensor<T>>) {
        self.norm.collect_parameters(&join(prefix, "norm"), out);
        self.mixing.collect_parameters(&join(prefix, "mixing"), out);
    }
}

/// Channel attention followed by time mixing; shape-preserving on `[C × L]`.
#[derive(Debug, Clone)]
pub struct CamlpBlock<T: Element> {
    pub cau: ChannelAttentionUnit<T>,
    pub tmu: TimeMixingUnit<T>,
}

impl<T: Element> CamlpBlock<T> {
    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.tmu.forward(&self.cau.forward(x)?)
    }

    /// Zeroes both mixing units, turning the block into the identity map.
    pub fn zero_mixing(&self) {
        self.cau.mixing.zero();
        self.tmu.mixing.zero();
    }
}

impl<T: Element> Parameterized<T> for CamlpBlock<T> {
    fn collect_parameters(&self, prefix: &str, out: &mut Vec<NamedTensor<T>>) {
        self.cau.collect_parameters(&join(prefix, "cau"), out);
        self.tmu.collect_parameters(&join(prefix, "tmu"), out);
    }
}
