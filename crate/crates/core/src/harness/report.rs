use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::data::SplitId;
use crate::error::{Error, Result};

pub const REPORT_FILE: &str = "report.json";
pub const CURVES_FILE: &str = "curves.csv";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_cost: f64,
    pub val_cost: f64,
    /// Milliseconds since the start of training, taken at the end of the epoch.
    pub elapsed_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub seed: u64,
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_cost: f64,
    /// Test accuracy in `[0, 1]` at `best_epoch`.
    pub test_accuracy: f64,
    pub kfac_refreshes: usize,
}

impl RunMetrics {
    pub fn final_val_cost(&self) -> f64 {
        self.epochs.last().map_or(f64::NAN, |r| r.val_cost)
    }

    pub fn total_ms(&self) -> f64 {
        self.epochs.last().map_or(0.0, |r| r.elapsed_ms)
    }
}

/// Mean and 95% confidence half-width (`1.96 sd / sqrt(runs)`, sample standard
/// deviation); the half-width is absent for a single run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub half_width: Option<f64>,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let half_width = (values.len() >= 2).then(|| {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            1.96 * var.sqrt() / n.sqrt()
        });
        Summary { mean, half_width }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub method: String,
    pub dataset: String,
    pub split: SplitId,
    pub runs: usize,
    pub seeds: Vec<u64>,
    pub test_accuracy: Summary,
    pub best_val_cost: Summary,
    pub final_val_cost: Summary,
    pub total_ms: Summary,
    pub config: ExperimentConfig,
}

pub fn aggregate(config: &ExperimentConfig, dataset: &str, runs: &[RunMetrics]) -> AggregateReport {
    let collect = |f: fn(&RunMetrics) -> f64| runs.iter().map(f).collect::<Vec<_>>();
    AggregateReport {
        method: config.method(),
        dataset: dataset.to_string(),
        split: config.split,
        runs: runs.len(),
        seeds: runs.iter().map(|r| r.seed).collect(),
        test_accuracy: Summary::of(&collect(|r| r.test_accuracy)),
        best_val_cost: Summary::of(&collect(|r| r.best_val_cost)),
        final_val_cost: Summary::of(&collect(RunMetrics::final_val_cost)),
        total_ms: Summary::of(&collect(RunMetrics::total_ms)),
        config: config.clone(),
    }
}

fn writer(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Writes `epoch,train_cost,val_cost,elapsed_ms`, one row per epoch.
pub fn write_run_csv(run: &RunMetrics, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    let mut body = String::from("epoch,train_cost,val_cost,elapsed_ms\n");
    for r in &run.epochs {
        body.push_str(&format!("{},{},{},{:.3}\n", r.epoch, r.train_cost, r.val_cost, r.elapsed_ms));
    }
    w.write_all(body.as_bytes()).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

/// Long-format series for plotting: `method,seed,epoch,elapsed_ms,metric,value`.
pub fn write_curves(method: &str, runs: &[RunMetrics], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    let mut body = String::from("method,seed,epoch,elapsed_ms,metric,value\n");
    for run in runs {
        for r in &run.epochs {
            for (metric, value) in [("train_cost", r.train_cost), ("val_cost", r.val_cost)] {
                body.push_str(&format!(
                    "{method},{},{},{:.3},{metric},{value}\n",
                    run.seed, r.epoch, r.elapsed_ms
                ));
            }
        }
    }
    w.write_all(body.as_bytes()).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn write_report(report: &AggregateReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    serde_json::to_writer_pretty(&mut w, report).map_err(|e| Error::io(path, e.into()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}
