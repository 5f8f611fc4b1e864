//! Experiment driver: the full-graph training loop, multi-seed runs and
//! metric export.

mod report;

use std::path::PathBuf;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{load_bundle, make_split, GraphBundle, SplitId, SplitMask};
use crate::error::{Error, Result};
use crate::gcn::{
    accuracy, backward, forward, forward_eval, init_glorot, loss, GcnConfig, GraphInput, Mode,
};
use crate::kfac::{pseudo_labels, KfacConfig, KfacMode, KfacState};
use crate::optim::{Optimizer, OptimizerConfig, OptimizerKind};

pub use report::{
    aggregate, write_curves, write_report, write_run_csv, AggregateReport, EpochRecord, RunMetrics,
    Summary, CURVES_FILE, REPORT_FILE,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Bundle directory.
    pub dataset: PathBuf,
    pub split: SplitId,
    pub optimizer: OptimizerConfig,
    pub kfac: Option<KfacConfig>,
    pub epochs: usize,
    pub hidden: usize,
    pub dropout: f64,
    pub bias: bool,
    pub seeds: Vec<u64>,
    /// Directory for metric files; nothing is written when absent.
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(dataset: impl Into<PathBuf>, split: SplitId, optimizer: OptimizerConfig) -> Self {
        ExperimentConfig {
            dataset: dataset.into(),
            split,
            optimizer,
            kfac: None,
            epochs: 200,
            hidden: 64,
            dropout: 0.5,
            bias: true,
            seeds: (0..10).collect(),
            out: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::usage("epochs must be at least 1"));
        }
        if self.seeds.is_empty() {
            return Err(Error::usage("at least one seed is required"));
        }
        if self.hidden == 0 {
            return Err(Error::usage("hidden size must be at least 1"));
        }
        self.optimizer.validate()?;
        if let Some(k) = &self.kfac {
            k.validate()?;
        }
        Ok(())
    }

    /// Short method name such as `Adam`, `SGD-KFAC_eps` or `Adam-KFAC_gamma`.
    pub fn method(&self) -> String {
        let base = match self.optimizer.kind {
            OptimizerKind::Sgd => "SGD",
            OptimizerKind::Adam => "Adam",
        };
        match self.kfac.as_ref().map(|k| k.mode) {
            None => base.to_string(),
            Some(KfacMode::LabeledOnly) => format!("{base}-KFAC_eps"),
            Some(KfacMode::PseudoLabel) => format!("{base}-KFAC_gamma"),
        }
    }
}

/// A bundle prepared for training on one split.
#[derive(Clone, Debug)]
pub struct TrainingData {
    pub dataset: String,
    pub split: SplitId,
    pub input: GraphInput,
    pub labels: Vec<usize>,
    pub mask: SplitMask,
    pub num_classes: usize,
}

impl TrainingData {
    pub fn new(bundle: &GraphBundle, split: SplitId) -> Result<Self> {
        let mask = make_split(bundle, split)?;
        let input = GraphInput::new(bundle.adjacency.normalize(), &bundle.features)?;
        Ok(TrainingData {
            dataset: bundle.dataset.clone(),
            split,
            input,
            labels: bundle.labels.clone(),
            mask,
            num_classes: bundle.num_classes,
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }
}

fn mean_weights(mask: &[bool]) -> Vec<f64> {
    let count = mask.iter().filter(|&&b| b).count().max(1) as f64;
    mask.iter().map(|&b| if b { 1.0 / count } else { 0.0 }).collect()
}

fn diverged(epoch: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::NonFinite(detail) => Error::Diverged { epoch, detail },
        e @ Error::NotPositiveDefinite { .. } => Error::Diverged { epoch, detail: e.to_string() },
        other => other,
    }
}

/// Trains one model from `seed` and records per-epoch metrics.
///
/// Each epoch runs a training-mode forward pass, refreshes the Kronecker
/// factors when due, preconditions the gradient of the mean labeled NLL,
/// takes an optimizer step, and then evaluates train/validation costs with
/// dropout off. Test accuracy is taken at the epoch with the lowest
/// validation cost.
pub fn train_one(data: &TrainingData, config: &ExperimentConfig, seed: u64) -> Result<RunMetrics> {
    config.validate()?;
    let gcn = GcnConfig {
        layer_dims: vec![data.input.feature_dim(), config.hidden, data.num_classes],
        dropout: config.dropout,
        bias: config.bias,
    };
    let mut params = init_glorot(&gcn, seed)?;
    let mut optimizer = Optimizer::new(config.optimizer.clone(), &params)?;
    let mut kfac = config.kfac.clone().map(KfacState::new).transpose()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9E37_79B9_7F4A_7C15);

    let train_w = mean_weights(&data.mask.train);
    let val_w = mean_weights(&data.mask.val);
    let z = data.mask.z();
    let all_ones = vec![1.0; data.n()];

    let start = Instant::now();
    let mut records = Vec::with_capacity(config.epochs);
    let mut best: Option<(usize, f64, f64)> = None;
    for t in 1..=config.epochs {
        let on_err = diverged(t);
        let cache = forward(&gcn, &params, &data.input, Mode::Train, &mut rng).map_err(&on_err)?;

        if let Some(state) = kfac.as_mut() {
            if state.is_refresh_epoch(t) {
                let lambda = state.lambda_at(t, config.epochs);
                let stats = if state.config().mode == KfacMode::PseudoLabel && lambda > 0.0 {
                    let targets = pseudo_labels(&cache, &data.mask, &data.labels, &mut rng);
                    backward(&params, &data.input, &cache, &targets, &all_ones)
                } else {
                    backward(&params, &data.input, &cache, &data.labels, &z)
                }
                .map_err(&on_err)?;
                state.update_factors(&stats, &data.mask, lambda, t).map_err(&on_err)?;
            }
        }

        let grads = backward(&params, &data.input, &cache, &data.labels, &train_w).map_err(&on_err)?.grads;
        let grads = match &kfac {
            Some(state) => state.precondition(&grads)?,
            None => grads,
        };
        optimizer.step(&mut params, &grads)?;
        if !params.is_finite() {
            return Err(Error::Diverged { epoch: t, detail: "non-finite parameters after update".into() });
        }

        let eval = forward_eval(&gcn, &params, &data.input).map_err(&on_err)?;
        let train_cost = loss(&eval, &data.labels, &train_w)?;
        let val_cost = loss(&eval, &data.labels, &val_w)?;
        if !train_cost.is_finite() || !val_cost.is_finite() {
            return Err(Error::Diverged { epoch: t, detail: "non-finite cost".into() });
        }
        let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
        if best.is_none_or(|(_, v, _)| val_cost < v) {
            let acc = accuracy(&eval, &data.labels, &data.mask.test);
            best = Some((t, val_cost, acc));
        }
        records.push(EpochRecord { epoch: t, train_cost, val_cost, elapsed_ms });
    }
    let (best_epoch, best_val_cost, test_accuracy) = best.expect("at least one epoch");
    Ok(RunMetrics {
        seed,
        epochs: records,
        best_epoch,
        best_val_cost,
        test_accuracy,
        kfac_refreshes: kfac.map_or(0, |s| s.refresh_count()),
    })
}

/// Runs every seed on prepared data, writing metric files when `config.out`
/// is set.
pub fn run_prepared(data: &TrainingData, config: &ExperimentConfig) -> Result<(AggregateReport, Vec<RunMetrics>)> {
    config.validate()?;
    let runs = config
        .seeds
        .iter()
        .map(|&seed| train_one(data, config, seed))
        .collect::<Result<Vec<_>>>()?;
    let report = aggregate(config, &data.dataset, &runs);
    if let Some(out) = &config.out {
        std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        for run in &runs {
            write_run_csv(run, out.join(format!("run_{}.csv", run.seed)))?;
        }
        write_curves(&report.method, &runs, out.join(CURVES_FILE))?;
        write_report(&report, out.join(REPORT_FILE))?;
    }
    Ok((report, runs))
}

/// Loads the configured bundle and runs every seed.
pub fn run_experiment(config: &ExperimentConfig) -> Result<AggregateReport> {
    config.validate()?;
    let bundle = load_bundle(&config.dataset)?;
    let data = TrainingData::new(&bundle, config.split)?;
    run_prepared(&data, config).map(|(report, _)| report)
}
