//! The `camlp` command line.

mod config;
mod report;

pub use config::{parse_ini, resolve_config, RunConfig, KEYS};
pub use report::{cv_table, write_cv_outputs, write_losses_csv, write_metrics_csv, write_summary_csv};

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::data::{load_dataset, prepare_slices, save_dataset, synth_generate, Dataset, SynthSpec};
use crate::error::{Error, Result};
use crate::model::{load_checkpoint, save_checkpoint, CamlpNet};
use crate::nn::Mode;
use crate::tensor::{Element, Precision};
use crate::train::{
    argmax, compute_metrics, ensemble_mean, grad_check, predict_slices, run_cv, train_model, Level, Summary,
};

#[derive(Debug, Parser)]
#[command(name = "camlp", version, about = "Channel-attention MLP-Mixer for EEG motor-imagery decoding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset directory.
    Synth(SynthArgs),
    /// Cut a dataset into standardized slices.
    Segment(RunArgs),
    /// Train on every trial of a dataset and save a checkpoint.
    Train(RunArgs),
    /// Evaluate a checkpoint on a dataset, per slice and per trial.
    Eval(RunArgs),
    /// Trial-stratified k-fold cross-validation.
    Cv(RunArgs),
    /// Cross-validate once per block count.
    SweepBlocks(SweepArgs),
    /// Compare analytic and numerical gradients on a tiny 64-bit net.
    Gradcheck(GradcheckArgs),
}

/// Flags shared by the data-driven subcommands. Unset flags fall back to the
/// config file, then to built-in defaults.
#[derive(Debug, Args)]
struct RunArgs {
    /// Dataset directory (or its manifest.json)
    #[arg(long)]
    data: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<String>,
    /// INI-style `key = value` config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Checkpoint file (written by `train`, read by `eval`)
    #[arg(long)]
    checkpoint: Option<String>,
    /// Seed for initialization, shuffling and fold assignment [default: 0]
    #[arg(long)]
    seed: Option<String>,
    /// Cross-validation folds [default: 5]
    #[arg(long)]
    folds: Option<String>,
    /// Training epochs [default: 100]
    #[arg(long)]
    epochs: Option<String>,
    /// Learning rate [default: 0.001]
    #[arg(long)]
    lr: Option<String>,
    /// SGD momentum [default: 0.9]
    #[arg(long)]
    momentum: Option<String>,
    /// Minibatch size [default: 64]
    #[arg(long)]
    batch: Option<String>,
    /// Number of CAMLP blocks [default: 4]
    #[arg(long)]
    blocks: Option<String>,
    /// Slice length in samples [default: 150]
    #[arg(long)]
    window: Option<String>,
    /// Overlap between consecutive slices [default: 10]
    #[arg(long)]
    overlap: Option<String>,
    /// Floating-point width [default: 32]
    #[arg(long, value_parser = ["32", "64"])]
    precision: Option<String>,
}

impl RunArgs {
    fn flag_pairs(&self) -> Vec<(String, String)> {
        [
            ("data", &self.data),
            ("out", &self.out),
            ("checkpoint", &self.checkpoint),
            ("seed", &self.seed),
            ("folds", &self.folds),
            ("epochs", &self.epochs),
            ("lr", &self.lr),
            ("momentum", &self.momentum),
            ("batch_size", &self.batch),
            ("blocks", &self.blocks),
            ("window", &self.window),
            ("overlap", &self.overlap),
            ("precision", &self.precision),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
        .collect()
    }

    fn resolve(&self) -> Result<RunConfig> {
        let text = match &self.config {
            Some(p) => Some(fs::read_to_string(p)?),
            None => None,
        };
        resolve_config(RunConfig::default(), text.as_deref(), &self.flag_pairs())
    }
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Smallest block count
    #[arg(long, default_value_t = 1)]
    min: usize,
    /// Largest block count
    #[arg(long, default_value_t = 6)]
    max: usize,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Output dataset directory
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 3)]
    classes: usize,
    #[arg(long, default_value_t = 20)]
    trials_per_class: usize,
    #[arg(long, default_value_t = 12)]
    channels: usize,
    /// Samples per trial
    #[arg(long, default_value_t = 800)]
    raw_len: usize,
    #[arg(long, default_value_t = 200.0)]
    sample_rate: f64,
    /// Standard deviation of the additive white noise
    #[arg(long, default_value_t = 0.5)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    /// Maximum accepted relative error per parameter tensor
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optional directory for gradcheck.csv
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Runs the command line `argv` (including the program name) and returns the
/// process exit status.
pub fn run_command<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// `Ok(false)` means the command ran but its check failed.
fn dispatch(command: Command) -> Result<bool> {
    match command {
        Command::Synth(a) => synth(&a).map(|_| true),
        Command::Segment(a) => segment(&a.resolve()?).map(|_| true),
        Command::Train(a) => by_precision(&a.resolve()?, train::<f32>, train::<f64>).map(|_| true),
        Command::Eval(a) => by_precision(&a.resolve()?, eval::<f32>, eval::<f64>).map(|_| true),
        Command::Cv(a) => by_precision(&a.resolve()?, cv::<f32>, cv::<f64>).map(|_| true),
        Command::SweepBlocks(a) => {
            let cfg = a.run.resolve()?;
            let range = (a.min, a.max);
            match cfg.precision {
                Precision::Single => sweep::<f32>(&cfg, range),
                Precision::Double => sweep::<f64>(&cfg, range),
            }
            .map(|_| true)
        }
        Command::Gradcheck(a) => gradcheck(&a),
    }
}

fn by_precision(cfg: &RunConfig, single: fn(&RunConfig) -> Result<()>, double: fn(&RunConfig) -> Result<()>) -> Result<()> {
    match cfg.precision {
        Precision::Single => single(cfg),
        Precision::Double => double(cfg),
    }
}

fn required<'a>(value: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    value.as_deref().ok_or_else(|| Error::Config { key: key.into(), reason: "required for this command".into() })
}

fn dataset_dir(path: &Path) -> PathBuf {
    if path.is_dir() { path.to_path_buf() } else { path.parent().map(Path::to_path_buf).unwrap_or_default() }
}

/// Loads the dataset and prepares the output directory, which must differ
/// from the dataset directory. The resolved config is echoed there.
fn open_run(cfg: &RunConfig) -> Result<(Dataset, PathBuf)> {
    let data = required(&cfg.data, "data")?;
    let out = required(&cfg.out, "out")?.to_path_buf();
    let dataset = load_dataset(data)?;
    fs::create_dir_all(&out)?;
    if fs::canonicalize(&out)? == fs::canonicalize(dataset_dir(data))? {
        return Err(Error::Config { key: "out".into(), reason: "must not be the dataset directory".into() });
    }
    fs::write(out.join("config.ini"), cfg.to_ini())?;
    Ok((dataset, out))
}

fn synth(a: &SynthArgs) -> Result<()> {
    let spec = SynthSpec::separable(a.classes, a.trials_per_class, a.channels, a.raw_len, a.sample_rate, a.noise, a.seed);
    let dataset = synth_generate(&spec)?;
    save_dataset(&dataset, &a.out)?;
    fs::write(a.out.join("synth.json"), serde_json::to_string_pretty(&spec)?)?;
    println!("wrote {} trials ({} classes, {} channels × {} samples) to {}", dataset.trials.len(), a.classes, a.channels, a.raw_len, a.out.display());
    Ok(())
}

/// Writes `slices.csv` (one row per slice) and `slices.f32`, the standardized
/// slices back to back as little-endian `f32`, each `C × window`.
fn segment(cfg: &RunConfig) -> Result<()> {
    let (dataset, out) = open_run(cfg)?;
    let slices = prepare_slices(&dataset.trials, cfg.window, cfg.overlap)?;
    let mut index = csv::Writer::from_path(out.join("slices.csv"))?;
    index.write_record(["slice", "trial_id", "label", "index", "offset"])?;
    let mut raw = Vec::with_capacity(slices.len() * dataset.channels * cfg.window * 4);
    for (i, s) in slices.iter().enumerate() {
        index.write_record([i.to_string(), s.trial_id.clone(), s.label.to_string(), s.index.to_string(), s.offset.to_string()])?;
        raw.extend(s.data.iter().flat_map(|&v| (v as f32).to_le_bytes()));
    }
    index.flush()?;
    fs::write(out.join("slices.f32"), raw)?;
    println!("{} slices of {} × {} from {} trials", slices.len(), dataset.channels, cfg.window, dataset.trials.len());
    Ok(())
}

fn train<T: Element>(cfg: &RunConfig) -> Result<()> {
    let (dataset, out) = open_run(cfg)?;
    let model = cfg.model_config(dataset.channels, dataset.num_classes);
    let slices = prepare_slices(&dataset.trials, cfg.window, cfg.overlap)?;
    let mut net = CamlpNet::<T>::new(model, cfg.seed)?;
    eprintln!("{} trainable parameters, {} slices", net.param_count().total(), slices.len());
    let report = train_model(&mut net, &slices, &cfg.train_config())?;
    net.set_mode(Mode::Eval);
    let ckpt = cfg.checkpoint.clone().unwrap_or_else(|| out.join("model.ckpt"));
    save_checkpoint(&net, &ckpt)?;
    write_losses_csv(&out.join("losses.csv"), &[("all".to_string(), report.epoch_losses.as_slice())])?;
    if let Some(last) = report.epoch_losses.last() {
        println!("final epoch loss {last:.6}; checkpoint {}", ckpt.display());
    }
    Ok(())
}

fn eval<T: Element>(cfg: &RunConfig) -> Result<()> {
    let (dataset, out) = open_run(cfg)?;
    let ckpt = required(&cfg.checkpoint, "checkpoint")?;
    let mut net = load_checkpoint::<T>(ckpt)?;
    net.set_mode(Mode::Eval);
    let (c, t) = (net.config().channels, net.config().samples);
    if c != dataset.channels || t != cfg.window {
        return Err(Error::Config {
            key: "window".into(),
            reason: format!("checkpoint expects {c} × {t} slices, data gives {} × {}", dataset.channels, cfg.window),
        });
    }
    let k = net.config().num_classes;
    let (mut sp, mut sy, mut tp, mut ty) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut preds = csv::Writer::from_path(out.join("predictions.csv"))?;
    let mut header = vec!["trial_id".to_string(), "label".to_string(), "predicted".to_string()];
    header.extend((0..k).map(|c| format!("p_{c}")));
    preds.write_record(&header)?;
    for trial in &dataset.trials {
        let probs = predict_slices(&net, &prepare_slices([trial], cfg.window, cfg.overlap)?)?;
        for p in &probs {
            sp.push(argmax(p));
            sy.push(trial.label);
        }
        let (class, mean) = ensemble_mean(&probs)?;
        tp.push(class);
        ty.push(trial.label);
        let mut row = vec![trial.id.clone(), trial.label.to_string(), class.to_string()];
        row.extend(mean.iter().map(f64::to_string));
        preds.write_record(&row)?;
    }
    preds.flush()?;
    let slice = compute_metrics(&sp, &sy, k, Level::Slice)?;
    let trial = compute_metrics(&tp, &ty, k, Level::Trial)?;
    write_metrics_csv(&out.join("metrics.csv"), &[("all".into(), &slice), ("all".into(), &trial)])?;
    println!("slice accuracy {:.2}%  macro-F1 {:.2}%", 100.0 * slice.accuracy, 100.0 * slice.macro_f1);
    println!("trial accuracy {:.2}%  macro-F1 {:.2}%", 100.0 * trial.accuracy, 100.0 * trial.macro_f1);
    Ok(())
}

fn cv<T: Element>(cfg: &RunConfig) -> Result<()> {
    let (dataset, out) = open_run(cfg)?;
    let model = cfg.model_config(dataset.channels, dataset.num_classes);
    let report = run_cv::<T>(&dataset, &model, &cfg.train_config(), &cfg.cv_options(), |f| {
        eprintln!("fold {}: trial accuracy {:.2}%", f.fold, 100.0 * f.trial.accuracy);
    })?;
    if !report.leak_free() {
        return Err(Error::Contract("a held-out trial appeared in a training batch".into()));
    }
    write_cv_outputs(&out, &report.folds)?;
    print!("{}", cv_table(&report.folds));
    std::io::stdout().flush()?;
    Ok(())
}

fn sweep<T: Element>(cfg: &RunConfig, (min, max): (usize, usize)) -> Result<()> {
    if min == 0 || min > max {
        return Err(Error::Config { key: "min".into(), reason: format!("need 1 ≤ min ≤ max, got {min}..{max}") });
    }
    let (dataset, out) = open_run(cfg)?;
    let mut w = csv::Writer::from_path(out.join("sweep.csv"))?;
    w.write_record([
        "blocks",
        "parameters",
        "trial_accuracy_mean",
        "trial_accuracy_std",
        "trial_macro_f1_mean",
        "trial_macro_f1_std",
        "slice_accuracy_mean",
        "slice_accuracy_std",
    ])?;
    println!("{:<7} {:>11} {:>18} {:>18}", "blocks", "parameters", "trial acc (%)", "slice acc (%)");
    for n in min..=max {
        let model = crate::model::ModelConfig { blocks: n, ..cfg.model_config(dataset.channels, dataset.num_classes) };
        let params = CamlpNet::<T>::new(model.clone(), 0)?.param_count().total();
        let report = run_cv::<T>(&dataset, &model, &cfg.train_config(), &cfg.cv_options(), |_| {})?;
        let (t, s) = (Summary::over(&report.folds, Level::Trial), Summary::over(&report.folds, Level::Slice));
        w.write_record([
            n.to_string(),
            params.to_string(),
            t.accuracy_mean.to_string(),
            t.accuracy_std.to_string(),
            t.macro_f1_mean.to_string(),
            t.macro_f1_std.to_string(),
            s.accuracy_mean.to_string(),
            s.accuracy_std.to_string(),
        ])?;
        w.flush()?;
        let fold_dir = out.join(format!("blocks_{n}"));
        fs::create_dir_all(&fold_dir)?;
        write_cv_outputs(&fold_dir, &report.folds)?;
        println!(
            "{n:<7} {params:>11} {:>18} {:>18}",
            format!("{:.2} ± {:.2}", 100.0 * t.accuracy_mean, 100.0 * t.accuracy_std),
            format!("{:.2} ± {:.2}", 100.0 * s.accuracy_mean, 100.0 * s.accuracy_std)
        );
    }
    Ok(())
}

fn gradcheck(a: &GradcheckArgs) -> Result<bool> {
    let report = grad_check(&crate::model::ModelConfig::tiny(), a.tolerance, a.seed)?;
    println!("{report}");
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("gradcheck.csv"))?;
        w.write_record(["group", "size", "max_rel_err", "max_abs_err", "passed"])?;
        for g in &report.groups {
            w.write_record([g.name.clone(), g.size.to_string(), g.max_rel_err.to_string(), g.max_abs_err.to_string(), g.passed.to_string()])?;
        }
        w.flush()?;
    }
    Ok(report.passed())
}
