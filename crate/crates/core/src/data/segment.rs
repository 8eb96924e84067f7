use super::Trial;
use crate::error::{contract_err, Result};

/// Guard against division by zero when standardizing constant rows.
pub const ZSCORE_EPS: f64 = 1e-8;

/// A fixed-length window cut from a trial, `channels × len`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice {
    pub trial_id: String,
    pub label: usize,
    /// Position of this window within its trial.
    pub index: usize,
    /// First raw sample covered by the window.
    pub offset: usize,
    pub channels: usize,
    pub len: usize,
    pub data: Vec<f64>,
}

impl Slice {
    pub fn row(&self, channel: usize) -> &[f64] {
        &self.data[channel * self.len..(channel + 1) * self.len]
    }
}

/// Number of full windows: `⌊(T_raw − window) / stride⌋ + 1`, where
/// `stride = window − overlap`.
pub fn window_count(raw_len: usize, window: usize, overlap: usize) -> Result<usize> {
    if window == 0 {
        return contract_err("window must be positive");
    }
    if overlap >= window {
        return contract_err(format!("overlap {overlap} must be smaller than the window {window}"));
    }
    if window > raw_len {
        return contract_err(format!("window {window} is longer than the trial ({raw_len} samples)"));
    }
    Ok((raw_len - window) / (window - overlap) + 1)
}

/// Cuts windows starting at `0, stride, 2·stride, …`; a trailing partial
/// window is dropped. Values are copied unchanged.
pub fn sliding_window_segment(trial: &Trial, window: usize, overlap: usize) -> Result<Vec<Slice>> {
    let t = trial.len();
    let count = window_count(t, window, overlap)
        .map_err(|e| crate::Error::Contract(format!("trial `{}`: {e}", trial.id)))?;
    let stride = window - overlap;
    Ok((0..count)
        .map(|i| {
            let offset = i * stride;
            let mut data = Vec::with_capacity(trial.channels * window);
            for c in 0..trial.channels {
                data.extend(trial.row(c)[offset..offset + window].iter().map(|&v| v as f64));
            }
            Slice {
                trial_id: trial.id.clone(),
                label: trial.label,
                index: i,
                offset,
                channels: trial.channels,
                len: window,
                data,
            }
        })
        .collect())
}

/// Per-channel z-score: `(x − mean) / max(std, eps)` with population std.
pub fn zscore_standardize(slice: &Slice) -> Slice {
    let mut out = slice.clone();
    let n = slice.len as f64;
    for row in out.data.chunks_mut(slice.len) {
        let mean = row.iter().sum::<f64>() / n;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = var.sqrt().max(ZSCORE_EPS);
        row.iter_mut().for_each(|v| *v = (*v - mean) / std);
    }
    out
}

/// Segments and standardizes every trial, preserving trial order.
pub fn prepare_slices<'a>(trials: impl IntoIterator<Item = &'a Trial>, window: usize, overlap: usize) -> Result<Vec<Slice>> {
    let mut out = Vec::new();
    for trial in trials {
        out.extend(sliding_window_segment(trial, window, overlap)?.iter().map(zscore_standardize));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp_trial(channels: usize, len: usize) -> Trial {
        Trial::new("t", 1, channels, (0..channels * len).map(|i| i as f32).collect()).unwrap()
    }

    #[test]
    fn standard_window_offsets() {
        let slices = sliding_window_segment(&ramp_trial(2, 800), 150, 10).unwrap();
        let offsets: Vec<usize> = slices.iter().map(|s| s.offset).collect();
        assert_eq!(offsets, vec![0, 140, 280, 420, 560]);
        assert_eq!(slices[3].row(1)[0], (800 + 420) as f64);
        assert!(slices.iter().all(|s| s.label == 1 && s.trial_id == "t"));
    }

    #[test]
    fn counts() {
        assert_eq!(window_count(150, 150, 10).unwrap(), 1);
        assert_eq!(window_count(300, 150, 10).unwrap(), 2);
        assert!(window_count(149, 150, 10).is_err());
        assert!(window_count(300, 150, 150).is_err());
        assert!(sliding_window_segment(&ramp_trial(1, 100), 150, 10).is_err());
    }

    #[test]
    fn zscore_rows() {
        let s = Slice {
            trial_id: "x".into(),
            label: 0,
            index: 0,
            offset: 0,
            channels: 2,
            len: 3,
            data: vec![1., 2., 3., 5., 5., 5.],
        };
        let z = zscore_standardize(&s);
        let k = (1.5f64).sqrt();
        for (a, b) in z.data.iter().zip([-k, 0., k, 0., 0., 0.]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((k - 1.22474).abs() < 1e-5);
    }
}
