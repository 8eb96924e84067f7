use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One raw recording: `channels × len` samples, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub id: String,
    pub label: usize,
    pub channels: usize,
    pub samples: Vec<f32>,
}

impl Trial {
    pub fn new(id: impl Into<String>, label: usize, channels: usize, samples: Vec<f32>) -> Result<Self> {
        let id = id.into();
        if channels == 0 || samples.len() % channels != 0 || samples.is_empty() {
            return Err(Error::Load {
                trial: id,
                reason: format!("{} samples do not form {channels} equal rows", samples.len()),
            });
        }
        Ok(Self { id, label, channels, samples })
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.samples.len() / self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn row(&self, channel: usize) -> &[f32] {
        let t = self.len();
        &self.samples[channel * t..(channel + 1) * t]
    }
}

/// A labelled collection of equally shaped trials.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub num_classes: usize,
    pub channels: usize,
    pub raw_len: usize,
    pub sample_rate_hz: f64,
    pub trials: Vec<Trial>,
}

/// `manifest.json` schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub num_classes: usize,
    #[serde(rename = "C")]
    pub channels: usize,
    #[serde(rename = "T_raw")]
    pub raw_len: usize,
    pub sample_rate_hz: f64,
    pub trials: Vec<ManifestTrial>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestTrial {
    pub id: String,
    pub label: usize,
    pub file: String,
}

fn manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join("manifest.json")
    } else {
        path.to_path_buf()
    }
}

/// Reads a dataset directory (or its `manifest.json`). Each trial file holds
/// raw little-endian `f32` values, row-major `C × T_raw`, with no header.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let manifest_file = manifest_path(path);
    let text = fs::read_to_string(&manifest_file)
        .map_err(|e| Error::Dataset(format!("cannot read {}: {e}", manifest_file.display())))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    let root = manifest_file.parent().unwrap_or(Path::new("."));

    let expected = manifest.channels * manifest.raw_len;
    let mut seen = HashSet::new();
    let mut trials = Vec::with_capacity(manifest.trials.len());
    for entry in &manifest.trials {
        let fail = |reason: String| Error::Load { trial: entry.id.clone(), reason };
        if !seen.insert(entry.id.as_str()) {
            return Err(fail("duplicate trial id".into()));
        }
        if entry.label >= manifest.num_classes {
            return Err(fail(format!("unknown label {} (num_classes = {})", entry.label, manifest.num_classes)));
        }
        let file = root.join(&entry.file);
        let bytes = fs::read(&file).map_err(|e| fail(format!("cannot read {}: {e}", file.display())))?;
        if bytes.len() % 4 != 0 || bytes.len() / 4 != expected {
            return Err(fail(format!(
                "shape mismatch: file holds {} bytes ({} values), manifest declares {}×{} = {expected} values",
                bytes.len(),
                bytes.len() as f64 / 4.0,
                manifest.channels,
                manifest.raw_len
            )));
        }
        let samples = bytes.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect();
        trials.push(Trial::new(entry.id.clone(), entry.label, manifest.channels, samples)?);
    }
    Ok(Dataset {
        num_classes: manifest.num_classes,
        channels: manifest.channels,
        raw_len: manifest.raw_len,
        sample_rate_hz: manifest.sample_rate_hz,
        trials,
    })
}

/// Writes `manifest.json` plus one `trials/trial_NNNNN.f32` file per trial.
pub fn save_dataset(dataset: &Dataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir.join("trials"))?;
    let mut entries = Vec::with_capacity(dataset.trials.len());
    for (i, trial) in dataset.trials.iter().enumerate() {
        if trial.channels != dataset.channels || trial.len() != dataset.raw_len {
            return Err(Error::Load {
                trial: trial.id.clone(),
                reason: format!(
                    "trial is {}×{}, dataset declares {}×{}",
                    trial.channels,
                    trial.len(),
                    dataset.channels,
                    dataset.raw_len
                ),
            });
        }
        let file = format!("trials/trial_{i:05}.f32");
        let bytes: Vec<u8> = trial.samples.iter().flat_map(|v| v.to_le_bytes()).collect();
        fs::write(dir.join(&file), bytes)?;
        entries.push(ManifestTrial { id: trial.id.clone(), label: trial.label, file });
    }
    let manifest = Manifest {
        num_classes: dataset.num_classes,
        channels: dataset.channels,
        raw_len: dataset.raw_len,
        sample_rate_hz: dataset.sample_rate_hz,
        trials: entries,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}
