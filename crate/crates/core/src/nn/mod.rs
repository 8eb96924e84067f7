//! Layer primitives built on the tensor engine.

mod activation;
mod conv;
mod init;
mod linear;
mod loss;
mod norm;
mod pool;

pub use activation::leaky_relu;
pub use conv::{conv1d_same, Conv1dLayer};
pub use init::kaiming_uniform;
pub use linear::LinearLayer;
pub use loss::{softmax, softmax_cross_entropy};
pub use norm::{normalize_last_axis, BatchNorm1d, LayerNormParams, Mode};
pub use pool::avg_pool1d;

use crate::tensor::{Element, Tensor};

/// A tensor together with its dotted path inside a model.
#[derive(Debug, Clone)]
pub struct NamedTensor<T: Element> {
    pub name: String,
    pub tensor: Tensor<T>,
}

pub(crate) fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

/// Anything that owns trainable tensors (and possibly non-trainable state).
pub trait Parameterized<T: Element> {
    fn collect_parameters(&self, prefix: &str, out: &mut Vec<NamedTensor<T>>);

    /// Non-trainable state that still belongs in a checkpoint.
    fn collect_buffers(&self, _prefix: &str, _out: &mut Vec<NamedTensor<T>>) {}

    fn parameters(&self) -> Vec<NamedTensor<T>> {
        let mut out = Vec::new();
        self.collect_parameters("", &mut out);
        out
    }

    fn buffers(&self) -> Vec<NamedTensor<T>> {
        let mut out = Vec::new();
        self.collect_buffers("", &mut out);
        out
    }

    fn num_parameters(&self) -> usize {
        self.parameters().iter().map(|p| p.tensor.numel()).sum()
    }

    fn zero_grad(&self) {
        for p in self.parameters() {
            p.tensor.zero_grad();
        }
    }
}
