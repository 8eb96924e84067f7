use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Architecture hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// EEG channel count `C`.
    pub channels: usize,
    /// Slice length `T` in samples.
    pub samples: usize,
    /// Convolution kernel width and pooling size `k`.
    pub kernel: usize,
    /// Base filter count `n`; the encoder uses `n, 2n, 4n`.
    pub filters: usize,
    /// Number of stacked mixer blocks `N`.
    pub blocks: usize,
    /// Channel-mixing hidden width `D`.
    pub channel_hidden: usize,
    /// Time-mixing hidden width `H`.
    pub time_hidden: usize,
    pub num_classes: usize,
    /// LeakyReLU negative slope.
    pub slope: f64,
    /// Epsilon shared by layer norm and batch norm.
    pub norm_eps: f64,
    /// Batch-norm running-statistics momentum.
    pub bn_momentum: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            channels: 62,
            samples: 150,
            kernel: 3,
            filters: 4,
            blocks: 4,
            channel_hidden: 256,
            time_hidden: 128,
            num_classes: 3,
            slope: 0.01,
            norm_eps: 1e-5,
            bn_momentum: 0.1,
        }
    }
}

impl ModelConfig {
    /// The small network used for finite-difference gradient checks.
    pub fn tiny() -> Self {
        Self {
            channels: 4,
            samples: 18,
            kernel: 3,
            filters: 2,
            blocks: 1,
            channel_hidden: 8,
            time_hidden: 6,
            ..Self::default()
        }
    }

    /// Time extent after the encoder's pooling step, `L = ⌊T / k⌋`.
    pub fn time_len(&self) -> usize {
        self.samples / self.kernel.max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("channels", self.channels),
            ("samples", self.samples),
            ("kernel", self.kernel),
            ("filters", self.filters),
            ("blocks", self.blocks),
            ("channel_hidden", self.channel_hidden),
            ("time_hidden", self.time_hidden),
            ("num_classes", self.num_classes),
        ];
        for (key, v) in positive {
            if v == 0 {
                return Err(invalid(key, "must be positive"));
            }
        }
        if self.channels < 2 {
            return Err(invalid("channels", "needs at least 2 channels"));
        }
        if self.kernel % 2 == 0 {
            return Err(invalid("kernel", "must be odd for same padding"));
        }
        if self.samples < self.kernel {
            return Err(invalid("samples", "must be at least the kernel size"));
        }
        if !self.slope.is_finite() {
            return Err(invalid("slope", "must be finite"));
        }
        if !(self.norm_eps > 0.0) {
            return Err(invalid("norm_eps", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.bn_momentum) {
            return Err(invalid("bn_momentum", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

fn invalid(key: &str, reason: &str) -> Error {
    Error::Config { key: key.to_string(), reason: reason.to_string() }
}
