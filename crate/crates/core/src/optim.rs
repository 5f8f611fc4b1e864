//! Parameter updates: SGD with momentum and Adam.
//!
//! Both consume either raw gradients or preconditioned ones; L2 weight decay
//! is added to the incoming gradient before the update rule runs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gcn::GcnParams;
use crate::linalg::DenseMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    /// SGD only.
    pub momentum: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    pub weight_decay: f64,
    /// Decay every layer's weights, or only the first layer's.
    pub decay_all_layers: bool,
}

impl OptimizerConfig {
    /// Adam with the usual GCN settings: lr 0.01, weight decay 5e-4.
    pub fn adam() -> Self {
        OptimizerConfig {
            kind: OptimizerKind::Adam,
            learning_rate: 0.01,
            momentum: 0.0,
            beta1: 0.9,
            beta2: 0.999,
            adam_epsilon: 1e-8,
            weight_decay: 5e-4,
            decay_all_layers: true,
        }
    }

    /// SGD with lr 0.01, momentum 0.9 and no weight decay.
    pub fn sgd() -> Self {
        OptimizerConfig {
            kind: OptimizerKind::Sgd,
            momentum: 0.9,
            weight_decay: 0.0,
            ..OptimizerConfig::adam()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::usage(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::usage(format!("momentum must be in [0, 1), got {}", self.momentum)));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::usage("Adam betas must be in [0, 1)"));
        }
        if self.adam_epsilon.is_nan() || self.adam_epsilon <= 0.0 {
            return Err(Error::usage("Adam epsilon must be positive"));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::usage(format!(
                "weight decay must be >= 0, got {}",
                self.weight_decay
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum OptimizerState {
    Sgd { buffers: Vec<DenseMatrix> },
    Adam { m: Vec<DenseMatrix>, v: Vec<DenseMatrix>, t: u64 },
}

#[derive(Clone, Debug)]
pub struct Optimizer {
    config: OptimizerConfig,
    state: OptimizerState,
}

impl Optimizer {
    pub fn new(config: OptimizerConfig, params: &GcnParams) -> Result<Self> {
        config.validate()?;
        let zeros = || {
            params
                .weights
                .iter()
                .map(|w| DenseMatrix::zeros(w.rows(), w.cols()))
                .collect::<Vec<_>>()
        };
        let state = match config.kind {
            OptimizerKind::Sgd => OptimizerState::Sgd { buffers: zeros() },
            OptimizerKind::Adam => OptimizerState::Adam { m: zeros(), v: zeros(), t: 0 },
        };
        Ok(Optimizer { config, state })
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.config
    }

    pub fn state(&self) -> &OptimizerState {
        &self.state
    }

    /// Applies one update in place.
    pub fn step(&mut self, params: &mut GcnParams, grads: &[DenseMatrix]) -> Result<()> {
        let buffers = match &self.state {
            OptimizerState::Sgd { buffers } => buffers,
            OptimizerState::Adam { m, .. } => m,
        };
        if grads.len() != params.weights.len() || buffers.len() != params.weights.len() {
            return Err(Error::usage(format!(
                "{} gradients for {} layers",
                grads.len(),
                params.weights.len()
            )));
        }
        for (k, ((w, g), b)) in params.weights.iter().zip(grads).zip(buffers).enumerate() {
            if w.shape() != g.shape() || w.shape() != b.shape() {
                return Err(Error::usage(format!(
                    "layer {} gradient is {}x{} but the weight is {}x{}",
                    k + 1,
                    g.rows(),
                    g.cols(),
                    w.rows(),
                    w.cols()
                )));
            }
        }

        let cfg = &self.config;
        let eta = cfg.learning_rate;
        let decay = |k: usize| {
            if cfg.decay_all_layers || k == 0 {
                cfg.weight_decay
            } else {
                0.0
            }
        };
        match &mut self.state {
            OptimizerState::Sgd { buffers } => {
                for (k, (w, g)) in params.weights.iter_mut().zip(grads).enumerate() {
                    let wd = decay(k);
                    let buf = buffers[k].as_mut_slice();
                    for ((p, &gi), b) in w.as_mut_slice().iter_mut().zip(g.as_slice()).zip(buf) {
                        *b = cfg.momentum * *b + gi + wd * *p;
                        *p -= eta * *b;
                    }
                }
            }
            OptimizerState::Adam { m, v, t } => {
                *t += 1;
                let c1 = 1.0 - cfg.beta1.powi(*t as i32);
                let c2 = 1.0 - cfg.beta2.powi(*t as i32);
                for (k, (w, g)) in params.weights.iter_mut().zip(grads).enumerate() {
                    let wd = decay(k);
                    let (mk, vk) = (m[k].as_mut_slice(), v[k].as_mut_slice());
                    for (((p, &gi), mi), vi) in
                        w.as_mut_slice().iter_mut().zip(g.as_slice()).zip(mk).zip(vk)
                    {
                        let gi = gi + wd * *p;
                        *mi = cfg.beta1 * *mi + (1.0 - cfg.beta1) * gi;
                        *vi = cfg.beta2 * *vi + (1.0 - cfg.beta2) * gi * gi;
                        *p -= eta * (*mi / c1) / ((*vi / c2).sqrt() + cfg.adam_epsilon);
                    }
                }
            }
        }
        Ok(())
    }
}
