//! Optimization, inference and evaluation.

mod config;
mod cv;
mod ensemble;
mod gradcheck;
mod metrics;
mod sgd;
mod trainer;

pub use config::TrainConfig;
pub use cv::{run_cv, CvOptions, CvReport, FoldReport, Summary};
pub use ensemble::{ensemble_mean, ensemble_predict_trial, predict_slices};
pub use gradcheck::{grad_check, grad_check_with, GradCheckReport, GroupCheck};
pub use metrics::{argmax, compute_metrics, Level, Metrics};
pub use sgd::SgdMomentum;
pub use trainer::{slices_to_batch, train_model, TrainReport};
