//! CAMLP-Net: a channel-attention MLP-Mixer for multi-channel time-series
//! classification (EEG motor imagery), built on a small reverse-mode
//! autodiff engine.
//!
//! Layout:
//! - [`tensor`]: dense tensors and gradient propagation
//! - [`nn`]: layer primitives (linear, conv, norms, pooling, loss, init)
//! - [`model`]: local encoder, channel-attention and time-mixing blocks, head
//! - [`data`]: trials, sliding windows, z-scoring, folds, synthetic data
//! - [`train`]: SGD with momentum, ensembles, metrics, cross-validation
//! - [`cli`]: the `camlp` command-line front end

pub mod cli;
pub mod data;
pub mod error;
pub mod nn;
pub mod model;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use tensor::{no_grad, Element, GradGraph, Precision, Tensor};
