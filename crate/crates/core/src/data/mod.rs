//! Trials, datasets on disk, sliding-window slices, standardization, trial
//! level fold planning and a synthetic data generator.

mod dataset;
mod folds;
mod segment;
mod synth;

pub use dataset::{load_dataset, save_dataset, Dataset, Manifest, ManifestTrial, Trial};
pub use folds::{stratified_trial_kfold, FoldPlan};
pub use segment::{prepare_slices, sliding_window_segment, window_count, zscore_standardize, Slice, ZSCORE_EPS};
pub use synth::{synth_generate, ClassSignature, SynthSpec};
