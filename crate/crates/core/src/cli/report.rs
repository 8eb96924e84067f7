//! CSV and console output.

use std::path::Path;

use crate::error::Result;
use crate::train::{FoldReport, Level, Metrics, Summary};

fn metrics_header(num_classes: usize) -> Vec<String> {
    let mut h: Vec<String> = ["fold", "level", "n", "accuracy", "macro_f1"].iter().map(|s| s.to_string()).collect();
    for stat in ["precision", "recall", "f1", "support"] {
        h.extend((0..num_classes).map(|c| format!("{stat}_{c}")));
    }
    h
}

fn metrics_record(fold: &str, m: &Metrics) -> Vec<String> {
    let mut r = vec![fold.to_string(), m.level.to_string(), m.count().to_string(), m.accuracy.to_string(), m.macro_f1.to_string()];
    for v in [&m.precision, &m.recall, &m.f1] {
        r.extend(v.iter().map(f64::to_string));
    }
    r.extend(m.support().iter().map(usize::to_string));
    r
}

/// One row per `(fold label, metrics)`; per-class columns are suffixed with
/// the class index.
pub fn write_metrics_csv(path: &Path, rows: &[(String, &Metrics)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let k = rows.first().map_or(0, |(_, m)| m.num_classes());
    w.write_record(metrics_header(k))?;
    for (fold, m) in rows {
        w.write_record(metrics_record(fold, m))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv(path: &Path, folds: usize, summaries: &[Summary]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["level", "folds", "accuracy_mean", "accuracy_std", "macro_f1_mean", "macro_f1_std"])?;
    for s in summaries {
        w.write_record([
            s.level.to_string(),
            folds.to_string(),
            s.accuracy_mean.to_string(),
            s.accuracy_std.to_string(),
            s.macro_f1_mean.to_string(),
            s.macro_f1_std.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `fold,epoch,loss` with 1-based epochs.
pub fn write_losses_csv(path: &Path, curves: &[(String, &[f64])]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["fold", "epoch", "loss"])?;
    for (fold, losses) in curves {
        for (e, l) in losses.iter().enumerate() {
            w.write_record([fold.clone(), (e + 1).to_string(), l.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_cv_outputs(dir: &Path, folds: &[FoldReport]) -> Result<()> {
    let rows: Vec<(String, &Metrics)> = folds
        .iter()
        .flat_map(|f| [(f.fold.to_string(), &f.slice), (f.fold.to_string(), &f.trial)])
        .collect();
    write_metrics_csv(&dir.join("metrics.csv"), &rows)?;
    let summaries = [Summary::over(folds, Level::Slice), Summary::over(folds, Level::Trial)];
    write_summary_csv(&dir.join("summary.csv"), folds.len(), &summaries)?;
    let curves: Vec<(String, &[f64])> = folds.iter().map(|f| (f.fold.to_string(), f.epoch_losses.as_slice())).collect();
    write_losses_csv(&dir.join("losses.csv"), &curves)
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

/// Per-fold table followed by mean ± std rows, in percent.
pub fn cv_table(folds: &[FoldReport]) -> String {
    let mut s = format!("{:<6} {:>10} {:>10} {:>10} {:>10}\n", "fold", "slice acc", "slice F1", "trial acc", "trial F1");
    for f in folds {
        s += &format!(
            "{:<6} {:>10} {:>10} {:>10} {:>10}\n",
            f.fold,
            pct(f.slice.accuracy),
            pct(f.slice.macro_f1),
            pct(f.trial.accuracy),
            pct(f.trial.macro_f1)
        );
    }
    for level in [Level::Slice, Level::Trial] {
        let m = Summary::over(folds, level);
        s += &format!(
            "{level:<6} accuracy {} ± {}   macro-F1 {} ± {}\n",
            pct(m.accuracy_mean),
            pct(m.accuracy_std),
            pct(m.macro_f1_mean),
            pct(m.macro_f1_std)
        );
    }
    s
}
