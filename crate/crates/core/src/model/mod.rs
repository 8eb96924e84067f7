//! The CAMLP-Net architecture: local encoder, `N` mixer blocks, classifier.

mod checkpoint;
mod config;
mod encoder;
mod mixing;
mod net;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::ModelConfig;
pub use encoder::LocalEncoder;
pub use mixing::{CamlpBlock, ChannelAttentionUnit, MixingUnit, TimeMixingUnit};
pub use net::{classifier_forward, CamlpNet, ParamCount};

use crate::error::{shape_err, Result};
use crate::tensor::{Element, Tensor};

/// Views `x` as a batch `[B, rows, cols]`. Returns whether the input was a
/// single `[rows, cols]` map that should be squeezed back afterwards.
pub(crate) fn batched<T: Element>(x: &Tensor<T>, rows: usize, cols: usize) -> Result<(Tensor<T>, bool)> {
    match x.shape() {
        [r, c] if *r == rows && *c == cols => Ok((x.reshape(&[1, rows, cols])?, true)),
        [_, r, c] if *r == rows && *c == cols => Ok((x.clone(), false)),
        s => shape_err(format!("expected [{rows}, {cols}] or [B, {rows}, {cols}], got {s:?}")),
    }
}
