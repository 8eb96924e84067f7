//! Python bindings. Networks run in 32-bit precision; arrays cross the
//! boundary as nested lists.

use std::path::PathBuf;

use camlp_core::data::{self, Dataset, SynthSpec, Trial};
use camlp_core::model::{self, CamlpNet};
use camlp_core::nn::Mode;
use camlp_core::train::{self, CvOptions, Level, TrainConfig};
use camlp_core::{Error, Tensor};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn flatten<T: Copy>(rows: &[Vec<T>]) -> PyResult<(usize, Vec<T>)> {
    let width = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || width == 0 || rows.iter().any(|r| r.len() != width) {
        return Err(PyValueError::new_err("expected a non-empty rectangular list of rows"));
    }
    Ok((rows.len(), rows.concat()))
}

#[pyclass(name = "ModelConfig", module = "camlp", skip_from_py_object)]
#[derive(Clone)]
struct PyModelConfig {
    inner: model::ModelConfig,
}

#[pymethods]
impl PyModelConfig {
    #[new]
    #[pyo3(signature = (channels, num_classes, samples=150, kernel=3, filters=4, blocks=4, channel_hidden=256, time_hidden=128, slope=0.01, norm_eps=1e-5, bn_momentum=0.1))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        channels: usize,
        num_classes: usize,
        samples: usize,
        kernel: usize,
        filters: usize,
        blocks: usize,
        channel_hidden: usize,
        time_hidden: usize,
        slope: f64,
        norm_eps: f64,
        bn_momentum: f64,
    ) -> PyResult<Self> {
        let inner = model::ModelConfig {
            channels,
            samples,
            kernel,
            filters,
            blocks,
            channel_hidden,
            time_hidden,
            num_classes,
            slope,
            norm_eps,
            bn_momentum,
        };
        inner.validate().map_err(py_err)?;
        Ok(Self { inner })
    }

    /// The gradient-check configuration.
    #[staticmethod]
    fn tiny() -> Self {
        Self { inner: model::ModelConfig::tiny() }
    }

    #[getter]
    fn channels(&self) -> usize {
        self.inner.channels
    }

    #[getter]
    fn samples(&self) -> usize {
        self.inner.samples
    }

    #[getter]
    fn blocks(&self) -> usize {
        self.inner.blocks
    }

    #[getter]
    fn num_classes(&self) -> usize {
        self.inner.num_classes
    }

    /// Length of the time axis after the local encoder.
    #[getter]
    fn time_len(&self) -> usize {
        self.inner.time_len()
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

#[pyclass(name = "Dataset", module = "camlp")]
struct PyDataset {
    inner: Dataset,
}

#[pymethods]
impl PyDataset {
    /// Reads a dataset directory (or its manifest.json).
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: data::load_dataset(&path).map_err(py_err)? })
    }

    fn save(&self, dir: PathBuf) -> PyResult<()> {
        data::save_dataset(&self.inner, &dir).map_err(py_err)
    }

    #[getter]
    fn num_classes(&self) -> usize {
        self.inner.num_classes
    }

    #[getter]
    fn channels(&self) -> usize {
        self.inner.channels
    }

    #[getter]
    fn raw_len(&self) -> usize {
        self.inner.raw_len
    }

    fn __len__(&self) -> usize {
        self.inner.trials.len()
    }

    fn trial_ids(&self) -> Vec<String> {
        self.inner.trials.iter().map(|t| t.id.clone()).collect()
    }

    fn labels(&self) -> Vec<usize> {
        self.inner.trials.iter().map(|t| t.label).collect()
    }

    /// `(id, label, rows)` of trial `index`.
    fn trial(&self, index: usize) -> PyResult<(String, usize, Vec<Vec<f32>>)> {
        let t = self.inner.trials.get(index).ok_or_else(|| PyValueError::new_err(format!("no trial {index}")))?;
        Ok((t.id.clone(), t.label, t.samples.chunks(t.len()).map(<[f32]>::to_vec).collect()))
    }
}

/// Class-separable sinusoids in white noise.
#[pyfunction]
#[pyo3(signature = (classes=3, trials_per_class=20, channels=12, raw_len=800, sample_rate=200.0, noise=0.5, seed=0))]
fn synth(classes: usize, trials_per_class: usize, channels: usize, raw_len: usize, sample_rate: f64, noise: f64, seed: u64) -> PyResult<PyDataset> {
    let spec = SynthSpec::separable(classes, trials_per_class, channels, raw_len, sample_rate, noise, seed);
    Ok(PyDataset { inner: data::synth_generate(&spec).map_err(py_err)? })
}

/// Cuts `rows` (channels × samples) into windows; returns `(offset, rows)` pairs.
#[pyfunction]
#[pyo3(signature = (rows, window=150, overlap=10, standardize=true))]
fn segment(rows: Vec<Vec<f32>>, window: usize, overlap: usize, standardize: bool) -> PyResult<Vec<(usize, Vec<Vec<f64>>)>> {
    let (channels, flat) = flatten(&rows)?;
    let trial = Trial::new("input", 0, channels, flat).map_err(py_err)?;
    let slices = data::sliding_window_segment(&trial, window, overlap).map_err(py_err)?;
    Ok(slices
        .into_iter()
        .map(|s| {
            let s = if standardize { data::zscore_standardize(&s) } else { s };
            (s.offset, s.data.chunks(s.len).map(<[f64]>::to_vec).collect())
        })
        .collect())
}

/// Per-row z-score with population standard deviation.
#[pyfunction]
fn zscore(rows: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    let (channels, flat) = flatten(&rows)?;
    let len = flat.len() / channels;
    let s = data::Slice { trial_id: String::new(), label: 0, index: 0, offset: 0, channels, len, data: flat };
    Ok(data::zscore_standardize(&s).data.chunks(len).map(<[f64]>::to_vec).collect())
}

fn metrics_dict<'py>(py: Python<'py>, m: &train::Metrics) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("accuracy", m.accuracy)?;
    d.set_item("macro_f1", m.macro_f1)?;
    d.set_item("precision", m.precision.clone())?;
    d.set_item("recall", m.recall.clone())?;
    d.set_item("f1", m.f1.clone())?;
    d.set_item("confusion", m.confusion.clone())?;
    Ok(d)
}

/// Accuracy, macro F1, per-class rates and the confusion matrix `[actual][predicted]`.
#[pyfunction]
fn compute_metrics<'py>(py: Python<'py>, predicted: Vec<usize>, labels: Vec<usize>, num_classes: usize) -> PyResult<Bound<'py, PyDict>> {
    let m = train::compute_metrics(&predicted, &labels, num_classes, Level::Slice).map_err(py_err)?;
    metrics_dict(py, &m)
}

/// Finite-difference check of every parameter tensor of a 64-bit network.
/// Returns `(passed, [(name, size, max_rel_err)])`.
#[pyfunction]
#[pyo3(signature = (config=None, tolerance=1e-4, seed=0))]
fn grad_check(config: Option<PyRef<'_, PyModelConfig>>, tolerance: f64, seed: u64) -> PyResult<(bool, Vec<(String, usize, f64)>)> {
    let cfg = config.map_or_else(model::ModelConfig::tiny, |c| c.inner.clone());
    let r = train::grad_check(&cfg, tolerance, seed).map_err(py_err)?;
    Ok((r.passed(), r.groups.iter().map(|g| (g.name.clone(), g.size, g.max_rel_err)).collect()))
}

#[pyclass(name = "CamlpNet", module = "camlp", unsendable)]
struct PyNet {
    inner: CamlpNet<f32>,
}

#[pymethods]
impl PyNet {
    #[new]
    #[pyo3(signature = (config, seed=0))]
    fn new(config: PyRef<'_, PyModelConfig>, seed: u64) -> PyResult<Self> {
        Ok(Self { inner: CamlpNet::new(config.inner.clone(), seed).map_err(py_err)? })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: model::load_checkpoint(&path).map_err(py_err)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        model::save_checkpoint(&self.inner, &path).map_err(py_err)
    }

    #[getter]
    fn config(&self) -> PyModelConfig {
        PyModelConfig { inner: self.inner.config().clone() }
    }

    #[getter]
    fn mode(&self) -> &'static str {
        match self.inner.mode() {
            Mode::Train => "train",
            Mode::Eval => "eval",
        }
    }

    /// `"train"` or `"eval"`; batch norm uses running statistics in eval mode.
    fn set_mode(&mut self, mode: &str) -> PyResult<()> {
        let mode = match mode {
            "train" => Mode::Train,
            "eval" => Mode::Eval,
            other => return Err(PyValueError::new_err(format!("mode must be \"train\" or \"eval\", got {other:?}"))),
        };
        self.inner.set_mode(mode);
        Ok(())
    }

    /// Trainable scalars per parameter tensor.
    fn param_count(&self) -> Vec<(String, usize)> {
        self.inner.param_count().items
    }

    fn num_parameters(&self) -> usize {
        self.inner.param_count().total()
    }

    /// Logits for a batch of `channels × samples` inputs.
    fn forward(&self, batch: Vec<Vec<Vec<f32>>>) -> PyResult<Vec<Vec<f32>>> {
        let b = batch.len();
        let mut flat = Vec::new();
        let mut shape = (0, 0);
        for x in &batch {
            let (c, v) = flatten(x)?;
            shape = (c, v.len() / c);
            flat.extend(v);
        }
        let x = Tensor::constant(&[b, shape.0, shape.1], flat).map_err(py_err)?;
        let logits = camlp_core::no_grad(|| self.inner.forward(&x)).map_err(py_err)?;
        let k = self.inner.config().num_classes;
        Ok(logits.to_vec().chunks(k).map(<[f32]>::to_vec).collect())
    }

    /// Ensemble prediction for one raw trial: `(class, mean probabilities)`.
    #[pyo3(signature = (rows, window=150, overlap=10))]
    fn predict_trial(&self, rows: Vec<Vec<f32>>, window: usize, overlap: usize) -> PyResult<(usize, Vec<f64>)> {
        let (channels, flat) = flatten(&rows)?;
        let trial = Trial::new("input", 0, channels, flat).map_err(py_err)?;
        train::ensemble_predict_trial(&self.inner, &trial, window, overlap).map_err(py_err)
    }

    /// Trains on every trial of `dataset`; returns the epoch-average losses.
    #[pyo3(signature = (dataset, epochs=100, lr=0.001, momentum=0.9, batch_size=64, seed=0, window=150, overlap=10))]
    #[allow(clippy::too_many_arguments)]
    fn fit(
        &mut self,
        dataset: PyRef<'_, PyDataset>,
        epochs: usize,
        lr: f64,
        momentum: f64,
        batch_size: usize,
        seed: u64,
        window: usize,
        overlap: usize,
    ) -> PyResult<Vec<f64>> {
        let cfg = TrainConfig { lr, momentum, batch_size, epochs, seed };
        let slices = data::prepare_slices(&dataset.inner.trials, window, overlap).map_err(py_err)?;
        Ok(train::train_model(&mut self.inner, &slices, &cfg).map_err(py_err)?.epoch_losses)
    }
}

/// Trial-stratified k-fold cross-validation. Model sizes come from `config`
/// when given, otherwise defaults matched to the dataset.
#[pyfunction]
#[pyo3(signature = (dataset, config=None, folds=5, epochs=100, lr=0.001, momentum=0.9, batch_size=64, seed=0, window=150, overlap=10))]
#[allow(clippy::too_many_arguments)]
fn cross_validate<'py>(
    py: Python<'py>,
    dataset: PyRef<'_, PyDataset>,
    config: Option<PyRef<'_, PyModelConfig>>,
    folds: usize,
    epochs: usize,
    lr: f64,
    momentum: f64,
    batch_size: usize,
    seed: u64,
    window: usize,
    overlap: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let ds = &dataset.inner;
    let model = config.map_or_else(
        || model::ModelConfig { channels: ds.channels, samples: window, num_classes: ds.num_classes, ..Default::default() },
        |c| c.inner.clone(),
    );
    let train_cfg = TrainConfig { lr, momentum, batch_size, epochs, seed };
    let options = CvOptions { folds, fold_seed: seed, window, overlap };
    let report = train::run_cv::<f32>(ds, &model, &train_cfg, &options, |_| {}).map_err(py_err)?;
    let out = PyDict::new(py);
    for level in [Level::Trial, Level::Slice] {
        let s = report.summary(level);
        out.set_item(format!("{level}_accuracy_mean"), s.accuracy_mean)?;
        out.set_item(format!("{level}_accuracy_std"), s.accuracy_std)?;
        out.set_item(format!("{level}_macro_f1_mean"), s.macro_f1_mean)?;
        out.set_item(format!("{level}_macro_f1_std"), s.macro_f1_std)?;
    }
    let per_fold = report
        .folds
        .iter()
        .map(|f| {
            let d = metrics_dict(py, &f.trial)?;
            d.set_item("fold", f.fold)?;
            d.set_item("epoch_losses", f.epoch_losses.clone())?;
            Ok(d)
        })
        .collect::<PyResult<Vec<_>>>()?;
    out.set_item("folds", per_fold)?;
    out.set_item("leak_free", report.leak_free())?;
    Ok(out)
}

#[pymodule]
fn camlp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModelConfig>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyNet>()?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_function(wrap_pyfunction!(segment, m)?)?;
    m.add_function(wrap_pyfunction!(zscore, m)?)?;
    m.add_function(wrap_pyfunction!(compute_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(grad_check, m)?)?;
    m.add_function(wrap_pyfunction!(cross_validate, m)?)?;
    Ok(())
}
