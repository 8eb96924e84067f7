use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Dataset, Trial};
use crate::error::{Error, Result};

/// What distinguishes one synthetic class: a sinusoid on a set of channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSignature {
    pub channels: Vec<usize>,
    pub frequency_hz: f64,
    pub amplitude: f64,
}

/// Parameters of a synthetic multi-channel dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub num_classes: usize,
    pub trials_per_class: usize,
    pub channels: usize,
    pub raw_len: usize,
    pub sample_rate_hz: f64,
    pub signatures: Vec<ClassSignature>,
    pub noise_std: f64,
    pub seed: u64,
}

impl SynthSpec {
    /// Classes on disjoint channel groups with distinct frequencies
    /// (`8 + 6c` Hz), unit amplitude.
    pub fn separable(
        num_classes: usize,
        trials_per_class: usize,
        channels: usize,
        raw_len: usize,
        sample_rate_hz: f64,
        noise_std: f64,
        seed: u64,
    ) -> Self {
        let group = (channels / num_classes.max(1)).max(1);
        let signatures = (0..num_classes)
            .map(|c| ClassSignature {
                channels: (c * group..((c + 1) * group).min(channels)).map(|ch| ch % channels).collect(),
                frequency_hz: 8.0 + 6.0 * c as f64,
                amplitude: 1.0,
            })
            .collect();
        Self { num_classes, trials_per_class, channels, raw_len, sample_rate_hz, signatures, noise_std, seed }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, reason: String| Err(Error::Config { key: key.into(), reason });
        if self.num_classes == 0 || self.trials_per_class == 0 || self.channels == 0 || self.raw_len == 0 {
            return bad("synth", "class, trial, channel and sample counts must be positive".into());
        }
        if self.signatures.len() != self.num_classes {
            return bad("signatures", format!("{} signatures for {} classes", self.signatures.len(), self.num_classes));
        }
        if !(self.noise_std >= 0.0 && self.sample_rate_hz > 0.0) {
            return bad("noise_std", "noise must be non-negative and the sample rate positive".into());
        }
        for (c, sig) in self.signatures.iter().enumerate() {
            if !(sig.frequency_hz >= 0.0 && sig.frequency_hz < self.sample_rate_hz / 2.0) {
                return bad("frequency_hz", format!("class {c}: {} Hz is not below Nyquist", sig.frequency_hz));
            }
            if let Some(ch) = sig.channels.iter().find(|&&ch| ch >= self.channels) {
                return bad("channels", format!("class {c}: channel {ch} outside [0, {})", self.channels));
            }
        }
        Ok(())
    }
}

/// Generates `trials_per_class` trials per class. Class `c` adds
/// `amplitude · sin(2π f_c t / fs)` to its channels; white Gaussian noise
/// with `noise_std` is added everywhere. Deterministic per seed.
pub fn synth_generate(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_std).map_err(|e| Error::Config { key: "noise_std".into(), reason: e.to_string() })?;
    let (c, t) = (spec.channels, spec.raw_len);
    let mut trials = Vec::with_capacity(spec.num_classes * spec.trials_per_class);
    for i in 0..spec.trials_per_class {
        for (label, sig) in spec.signatures.iter().enumerate() {
            let wave: Vec<f64> = (0..t)
                .map(|s| sig.amplitude * (2.0 * PI * sig.frequency_hz * s as f64 / spec.sample_rate_hz).sin())
                .collect();
            let mut samples = vec![0.0f64; c * t];
            for &ch in &sig.channels {
                samples[ch * t..(ch + 1) * t].copy_from_slice(&wave);
            }
            if spec.noise_std > 0.0 {
                samples.iter_mut().for_each(|v| *v += noise.sample(&mut rng));
            }
            let samples = samples.into_iter().map(|v| v as f32).collect();
            trials.push(Trial::new(format!("c{label}-{i:04}"), label, c, samples)?);
        }
    }
    Ok(Dataset {
        num_classes: spec.num_classes,
        channels: c,
        raw_len: t,
        sample_rate_hz: spec.sample_rate_hz,
        trials,
    })
}
