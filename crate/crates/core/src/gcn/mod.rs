//! Graph convolutional network: `X_k = sigma_k(W_k [X_{k-1} Ã; 1])`, with
//! ReLU on hidden layers, a log-softmax output and a weighted NLL cost.
//!
//! Matrices are feature-by-node (`d x n`): node `i` is column `i`.

mod backward;
mod forward;
mod input;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

pub use backward::{backward, BackwardResult};
pub use forward::{accuracy, forward, forward_eval, log_softmax, loss, predictions, ForwardCache};
pub use input::{GraphInput, LayerInput};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }

    pub fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Dropout active.
    Train,
    /// Dropout disabled.
    Eval,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GcnConfig {
    /// `[d0, d1, ..., dm]`; the last entry is the number of classes.
    pub layer_dims: Vec<usize>,
    /// Drop probability applied to the first layer's output during training.
    pub dropout: f64,
    /// Append a constant-1 row to every layer input.
    pub bias: bool,
}

impl GcnConfig {
    pub fn two_layer(d0: usize, hidden: usize, classes: usize, dropout: f64) -> Self {
        GcnConfig {
            layer_dims: vec![d0, hidden, classes],
            dropout,
            bias: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_dims.len() < 2 || self.layer_dims.contains(&0) {
            return Err(Error::usage(format!(
                "layer dims must list at least an input and output size, all positive, got {:?}",
                self.layer_dims
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::usage(format!("dropout must be in [0, 1), got {}", self.dropout)));
        }
        Ok(())
    }

    pub fn num_layers(&self) -> usize {
        self.layer_dims.len() - 1
    }

    pub fn num_classes(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    /// Activation of layer `k` (0-based): identity on the last layer, whose
    /// output feeds the log-softmax.
    pub fn activation(&self, k: usize) -> Activation {
        if k + 1 == self.num_layers() {
            Activation::Identity
        } else {
            Activation::Relu
        }
    }

    /// Shape of `W_k` (0-based), including the bias column.
    pub fn weight_shape(&self, k: usize) -> (usize, usize) {
        (self.layer_dims[k + 1], self.layer_dims[k] + self.bias as usize)
    }
}

/// Layer weights `W_k`, each `d_k x (d_{k-1} + bias)`; the bias is the last
/// column.
#[derive(Clone, Debug, PartialEq)]
pub struct GcnParams {
    pub weights: Vec<DenseMatrix>,
    pub bias: bool,
}

impl GcnParams {
    pub fn zeros(config: &GcnConfig) -> Self {
        let weights = (0..config.num_layers())
            .map(|k| {
                let (r, c) = config.weight_shape(k);
                DenseMatrix::zeros(r, c)
            })
            .collect();
        GcnParams {
            weights,
            bias: config.bias,
        }
    }

    /// Wraps explicit weights after checking that consecutive layers chain.
    pub fn from_weights(weights: Vec<DenseMatrix>, bias: bool) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::usage("a network needs at least one layer"));
        }
        for k in 1..weights.len() {
            let expected = weights[k - 1].rows() + bias as usize;
            if weights[k].cols() != expected {
                return Err(Error::usage(format!(
                    "layer {} weight is {}x{} but layer {} has {} outputs",
                    k + 1,
                    weights[k].rows(),
                    weights[k].cols(),
                    k,
                    weights[k - 1].rows()
                )));
            }
        }
        Ok(GcnParams { weights, bias })
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn input_dim(&self) -> usize {
        self.weights[0].cols() - self.bias as usize
    }

    pub fn num_params(&self) -> usize {
        self.weights.iter().map(|w| w.rows() * w.cols()).sum()
    }

    /// All weights concatenated in row-major layer order.
    pub fn to_flat(&self) -> Vec<f64> {
        self.weights.iter().flat_map(|w| w.as_slice().iter().copied()).collect()
    }

    /// Overwrites the weights from a vector laid out as in [`to_flat`](Self::to_flat).
    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::usage(format!(
                "{} values for {} parameters",
                flat.len(),
                self.num_params()
            )));
        }
        let mut offset = 0;
        for w in &mut self.weights {
            let len = w.rows() * w.cols();
            w.as_mut_slice().copy_from_slice(&flat[offset..offset + len]);
            offset += len;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(DenseMatrix::is_finite)
    }
}

/// Glorot-uniform weights in `±sqrt(6 / (d_k + d_{k-1}))`; bias columns start
/// at zero.
pub fn init_glorot(config: &GcnConfig, seed: u64) -> Result<GcnParams> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = GcnParams::zeros(config);
    for (k, w) in params.weights.iter_mut().enumerate() {
        let (fan_out, fan_in) = (config.layer_dims[k + 1], config.layer_dims[k]);
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for r in 0..fan_out {
            for c in 0..fan_in {
                w.set(r, c, rng.random_range(-limit..limit));
            }
        }
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn glorot_shapes_bounds_and_zero_bias() {
        let cfg = GcnConfig::two_layer(10, 6, 3, 0.5);
        let p = init_glorot(&cfg, 7).unwrap();
        assert_eq!(p.weights[0].shape(), (6, 11));
        assert_eq!(p.weights[1].shape(), (3, 7));
        let limit = (6.0f64 / 16.0).sqrt();
        for r in 0..6 {
            assert_eq!(p.weights[0].get(r, 10), 0.0);
            for c in 0..10 {
                assert!(p.weights[0].get(r, c).abs() <= limit);
            }
        }
        assert_eq!(p, init_glorot(&cfg, 7).unwrap());
        assert_ne!(p, init_glorot(&cfg, 8).unwrap());
    }

    #[test]
    fn config_validation() {
        assert!(GcnConfig::two_layer(4, 2, 2, 1.0).validate().is_err());
        assert!(GcnConfig::two_layer(4, 0, 2, 0.0).validate().is_err());
        let cfg = GcnConfig { layer_dims: vec![3], dropout: 0.0, bias: false };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn flat_round_trip() {
        let cfg = GcnConfig::two_layer(3, 2, 2, 0.0);
        let p = init_glorot(&cfg, 1).unwrap();
        let mut q = GcnParams::zeros(&cfg);
        q.set_flat(&p.to_flat()).unwrap();
        assert_eq!(p, q);
        assert!(q.set_flat(&[1.0]).is_err());
    }

    #[test]
    fn from_weights_checks_chaining() {
        let ok = GcnParams::from_weights(vec![DenseMatrix::zeros(2, 4), DenseMatrix::zeros(3, 3)], true);
        assert!(ok.is_ok());
        let bad = GcnParams::from_weights(vec![DenseMatrix::zeros(2, 4), DenseMatrix::zeros(3, 2)], true);
        assert!(bad.is_err());
    }
}
