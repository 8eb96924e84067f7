//! Run configuration: built-in defaults, then an INI-style `key = value`
//! file, then command-line flags; later layers win.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::tensor::Precision;
use crate::train::{CvOptions, TrainConfig};

/// Everything a subcommand needs, fully resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub precision: Precision,
    pub window: usize,
    pub overlap: usize,
    pub folds: usize,
    pub seed: u64,
    pub lr: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub kernel: usize,
    pub filters: usize,
    pub blocks: usize,
    pub channel_hidden: usize,
    pub time_hidden: usize,
    pub slope: f64,
    pub norm_eps: f64,
    pub bn_momentum: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let m = ModelConfig::default();
        let t = TrainConfig::default();
        let cv = CvOptions::default();
        Self {
            data: None,
            out: None,
            checkpoint: None,
            precision: Precision::Single,
            window: cv.window,
            overlap: cv.overlap,
            folds: cv.folds,
            seed: t.seed,
            lr: t.lr,
            momentum: t.momentum,
            batch_size: t.batch_size,
            epochs: t.epochs,
            kernel: m.kernel,
            filters: m.filters,
            blocks: m.blocks,
            channel_hidden: m.channel_hidden,
            time_hidden: m.time_hidden,
            slope: m.slope,
            norm_eps: m.norm_eps,
            bn_momentum: m.bn_momentum,
        }
    }
}

/// Recognized keys, in echo order.
pub const KEYS: &[&str] = &[
    "data",
    "out",
    "checkpoint",
    "precision",
    "window",
    "overlap",
    "folds",
    "seed",
    "lr",
    "momentum",
    "batch_size",
    "epochs",
    "kernel",
    "filters",
    "blocks",
    "channel_hidden",
    "time_hidden",
    "slope",
    "norm_eps",
    "bn_momentum",
];

fn parse<V: FromStr>(key: &str, value: &str, expected: &str) -> Result<V> {
    value.parse().map_err(|_| Error::Config { key: key.into(), reason: format!("expected {expected}, got `{value}`") })
}

impl RunConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        const UINT: &str = "a non-negative integer";
        const REAL: &str = "a real number";
        match key {
            "data" => self.data = Some(PathBuf::from(value)),
            "out" => self.out = Some(PathBuf::from(value)),
            "checkpoint" => self.checkpoint = Some(PathBuf::from(value)),
            "precision" => {
                let bits: u32 = parse(key, value, "32 or 64")?;
                self.precision = Precision::from_bits(bits)
                    .ok_or_else(|| Error::Config { key: key.into(), reason: format!("expected 32 or 64, got `{value}`") })?;
            }
            "window" => self.window = parse(key, value, UINT)?,
            "overlap" => self.overlap = parse(key, value, UINT)?,
            "folds" => self.folds = parse(key, value, UINT)?,
            "seed" => self.seed = parse(key, value, "an unsigned 64-bit integer")?,
            "lr" => self.lr = parse(key, value, REAL)?,
            "momentum" => self.momentum = parse(key, value, REAL)?,
            "batch_size" => self.batch_size = parse(key, value, UINT)?,
            "epochs" => self.epochs = parse(key, value, UINT)?,
            "kernel" => self.kernel = parse(key, value, UINT)?,
            "filters" => self.filters = parse(key, value, UINT)?,
            "blocks" => self.blocks = parse(key, value, UINT)?,
            "channel_hidden" => self.channel_hidden = parse(key, value, UINT)?,
            "time_hidden" => self.time_hidden = parse(key, value, UINT)?,
            "slope" => self.slope = parse(key, value, REAL)?,
            "norm_eps" => self.norm_eps = parse(key, value, REAL)?,
            "bn_momentum" => self.bn_momentum = parse(key, value, REAL)?,
            _ => return Err(Error::Config { key: key.into(), reason: "unknown key".into() }),
        }
        Ok(())
    }

    fn get(&self, key: &str) -> String {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        match key {
            "data" => path(&self.data),
            "out" => path(&self.out),
            "checkpoint" => path(&self.checkpoint),
            "precision" => self.precision.bits().to_string(),
            "window" => self.window.to_string(),
            "overlap" => self.overlap.to_string(),
            "folds" => self.folds.to_string(),
            "seed" => self.seed.to_string(),
            "lr" => self.lr.to_string(),
            "momentum" => self.momentum.to_string(),
            "batch_size" => self.batch_size.to_string(),
            "epochs" => self.epochs.to_string(),
            "kernel" => self.kernel.to_string(),
            "filters" => self.filters.to_string(),
            "blocks" => self.blocks.to_string(),
            "channel_hidden" => self.channel_hidden.to_string(),
            "time_hidden" => self.time_hidden.to_string(),
            "slope" => self.slope.to_string(),
            "norm_eps" => self.norm_eps.to_string(),
            "bn_momentum" => self.bn_momentum.to_string(),
            _ => unreachable!("unknown key {key}"),
        }
    }

    /// Flat `key = value` text that [`resolve_config`] reads back to an equal
    /// config. Unset paths are omitted.
    pub fn to_ini(&self) -> String {
        let mut s = String::new();
        for key in KEYS {
            let v = self.get(key);
            if !v.is_empty() {
                writeln!(s, "{key} = {v}").unwrap();
            }
        }
        s
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lr: self.lr,
            momentum: self.momentum,
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed: self.seed,
        }
    }

    /// Model hyperparameters; the data-dependent sizes come from the caller.
    pub fn model_config(&self, channels: usize, num_classes: usize) -> ModelConfig {
        ModelConfig {
            channels,
            samples: self.window,
            kernel: self.kernel,
            filters: self.filters,
            blocks: self.blocks,
            channel_hidden: self.channel_hidden,
            time_hidden: self.time_hidden,
            num_classes,
            slope: self.slope,
            norm_eps: self.norm_eps,
            bn_momentum: self.bn_momentum,
        }
    }

    pub fn cv_options(&self) -> CvOptions {
        CvOptions { folds: self.folds, fold_seed: self.seed, window: self.window, overlap: self.overlap }
    }

    pub fn validate(&self) -> Result<()> {
        self.train_config().validate()?;
        if self.overlap >= self.window {
            return Err(Error::Config { key: "overlap".into(), reason: format!("must be below window ({})", self.window) });
        }
        if self.folds < 2 {
            return Err(Error::Config { key: "folds".into(), reason: "need at least 2 folds".into() });
        }
        // channels and classes are placeholders here; the rest is checked for real
        self.model_config(2, 2).validate()
    }
}

/// Parses `key = value` lines. Blank lines and lines starting with `#` or
/// `;` are ignored.
pub fn parse_ini(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config { key: line.into(), reason: format!("line {}: expected `key = value`", n + 1) });
        };
        out.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

/// Merges `defaults`, the config file text (if any) and flag overrides, in
/// that order, then validates. Unknown keys are rejected in both layers.
pub fn resolve_config(defaults: RunConfig, file: Option<&str>, flags: &[(String, String)]) -> Result<RunConfig> {
    let mut cfg = defaults;
    if let Some(text) = file {
        for (k, v) in parse_ini(text)? {
            cfg.set(&k, &v)?;
        }
    }
    for (k, v) in flags {
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}
