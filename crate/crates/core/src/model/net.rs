use std::fmt;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{batched, CamlpBlock, ChannelAttentionUnit, LocalEncoder, ModelConfig, TimeMixingUnit};
use crate::error::{shape_err, Result};
use crate::nn::{join, LinearLayer, Mode, NamedTensor, Parameterized};
use crate::tensor::{Element, Tensor};

/// Global average pooling over time followed by a linear layer:
/// `[C, L] → [classes]` or `[B, C, L] → [B, classes]`.
pub fn classifier_forward<T: Element>(head: &LinearLayer<T>, y: &Tensor<T>) -> Result<Tensor<T>> {
    let c = head.in_features();
    let Some(&l) = y.shape().last() else {
        return shape_err("classifier input must be [C, L] or [B, C, L]");
    };
    let (yb, squeeze) = batched(y, c, l)?;
    let logits = head.forward(&yb.mean_axis(2)?)?;
    if squeeze { logits.reshape(&[head.out_features()]) } else { Ok(logits) }
}

/// The full network.
#[derive(Debug, Clone)]
pub struct CamlpNet<T: Element> {
    config: ModelConfig,
    pub encoder: LocalEncoder<T>,
    pub blocks: Vec<CamlpBlock<T>>,
    pub head: LinearLayer<T>,
    mode: Mode,
}

impl<T: Element> CamlpNet<T> {
    /// Builds a freshly initialized network. Every weight tensor gets its own
    /// seed drawn from a stream keyed by `seed`, so initialization is
    /// reproducible and independent of precision.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut next = || rng.next_u64();
        let c = &config;
        let encoder = LocalEncoder::new(
            c.filters,
            c.kernel,
            c.slope,
            c.bn_momentum,
            c.norm_eps,
            [next(), next(), next(), next()],
        )?;
        let blocks = (0..c.blocks)
            .map(|_| CamlpBlock {
                cau: ChannelAttentionUnit::new(c.channels, c.channel_hidden, c.slope, c.norm_eps, [next(), next(), next()]),
                tmu: TimeMixingUnit::new(c.time_len(), c.time_hidden, c.slope, c.norm_eps, [next(), next()]),
            })
            .collect();
        let head = LinearLayer::new(c.channels, c.num_classes, next());
        Ok(Self { config, encoder, blocks, head, mode: Mode::Train })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
        self.encoder.set_mode(mode);
    }

    /// `[C, T] → [classes]` or `[B, C, T] → [B, classes]`.
    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let (c, t) = (self.config.channels, self.config.samples);
        match x.shape() {
            [cc, tt] | [_, cc, tt] if *cc == c && *tt == t => {}
            s => return shape_err(format!("network expects [{c}, {t}] or [B, {c}, {t}], got {s:?}")),
        }
        let mut h = self.encoder.forward(x)?;
        for block in &self.blocks {
            h = block.forward(&h)?;
        }
        classifier_forward(&self.head, &h)
    }

    /// Exact count of trainable scalars, itemized per parameter tensor.
    pub fn param_count(&self) -> ParamCount {
        ParamCount {
            items: self.parameters().into_iter().map(|p| (p.name, p.tensor.numel())).collect(),
        }
    }

    /// Copies all parameter and buffer values from `other`, which must have
    /// the same architecture.
    pub fn copy_from(&self, other: &CamlpNet<T>) -> Result<()> {
        let mine = self.parameters().into_iter().chain(self.buffers());
        let theirs = other.parameters().into_iter().chain(other.buffers());
        for (a, b) in mine.zip(theirs) {
            if a.name != b.name || a.tensor.shape() != b.tensor.shape() {
                return shape_err(format!("architecture mismatch at `{}`", a.name));
            }
            a.tensor.data_mut().copy_from_slice(&b.tensor.data());
        }
        Ok(())
    }
}

impl<T: Element> Parameterized<T> for CamlpNet<T> {
    fn collect_parameters(&self, prefix: &str, out: &mut Vec<NamedTensor<T>>) {
        self.encoder.collect_parameters(&join(prefix, "encoder"), out);
        for (i, b) in self.blocks.iter().enumerate() {
            b.collect_parameters(&join(prefix, &format!("blocks.{i}")), out);
        }
        self.head.collect_parameters(&join(prefix, "head"), out);
    }

    fn collect_buffers(&self, prefix: &str, out: &mut Vec<NamedTensor<T>>) {
        self.encoder.collect_buffers(&join(prefix, "encoder"), out);
    }
}

/// Trainable-scalar counts keyed by parameter name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamCount {
    pub items: Vec<(String, usize)>,
}

impl ParamCount {
    pub fn total(&self) -> usize {
        self.items.iter().map(|(_, n)| n).sum()
    }

    /// Sum over parameters whose name starts with `prefix`.
    pub fn under(&self, prefix: &str) -> usize {
        self.items.iter().filter(|(name, _)| name.starts_with(prefix)).map(|(_, n)| n).sum()
    }
}

impl fmt::Display for ParamCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, n) in &self.items {
            writeln!(f, "{name:<40} {n:>10}")?;
        }
        write!(f, "{:<40} {:>10}", "total", self.total())
    }
}
