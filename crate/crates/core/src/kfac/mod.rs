//! Kronecker-factored natural-gradient preconditioner for the GCN layers.
//!
//! For layer `k` the Fisher block is approximated by `U_k ⊗ V_k`, where `U_k`
//! collects the backpropagated signals `u_{k,i}` and `V_k` the aggregated
//! layer inputs `v_{k,i}` of labeled and (optionally) pseudo-labeled nodes.
//! Gradients are preconditioned in matrix form as `U_k^{-1} G_k V_k^{-1}`.

pub mod fisher_check;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::SplitMask;
use crate::error::{Error, Result};
use crate::gcn::{BackwardResult, ForwardCache, LayerInput};
use crate::linalg::{damped_inverse, DenseMatrix};

/// Which nodes feed the factor estimates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KfacMode {
    /// Labeled nodes only (`lambda = 0` throughout).
    LabeledOnly,
    /// Labeled nodes plus unlabeled nodes with labels sampled from the model,
    /// weighted by the schedule `lambda(t)`.
    PseudoLabel,
}

/// Per-node weighting of the factor sums.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// `c_i = (z_i + (1 - z_i) lambda) / (n + lambda * n_bar)`: one normalizer
    /// shared by labeled and pseudo-labeled nodes.
    Pooled,
    /// `c_i = z_i / n_bar + (1 - z_i) lambda / (n - n_bar)`, the weights of
    /// the semi-supervised cost.
    CostConsistent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KfacConfig {
    pub epsilon: f64,
    pub gamma: f64,
    pub mode: KfacMode,
    /// Epochs between factor refreshes.
    pub update_every: usize,
    pub weighting: Weighting,
    /// Factors are damped by `epsilon^damping_exponent` before inversion.
    pub damping_exponent: f64,
}

impl Default for KfacConfig {
    fn default() -> Self {
        KfacConfig {
            epsilon: 0.01,
            gamma: 1.0,
            mode: KfacMode::LabeledOnly,
            update_every: 50,
            weighting: Weighting::Pooled,
            damping_exponent: -0.5,
        }
    }
}

impl KfacConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::usage(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::usage(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        if self.update_every == 0 {
            return Err(Error::usage("update_every must be at least 1"));
        }
        if !self.damping_exponent.is_finite() {
            return Err(Error::usage("damping exponent must be finite"));
        }
        Ok(())
    }

    /// The value added to the diagonal of each factor before inversion.
    pub fn damping(&self) -> f64 {
        self.epsilon.powf(self.damping_exponent)
    }
}

/// `(t / t_max)^gamma`, clamped to `[0, 1]`.
pub fn lambda_schedule(t: usize, t_max: usize, gamma: f64) -> f64 {
    if t_max == 0 {
        return 1.0;
    }
    let ratio = (t.min(t_max) as f64) / t_max as f64;
    if gamma == 0.0 {
        1.0
    } else {
        ratio.powf(gamma)
    }
}

/// Draws a class for every unlabeled node from its softmax distribution.
/// Labeled nodes keep their true label.
pub fn pseudo_labels<R: Rng + ?Sized>(
    cache: &ForwardCache,
    mask: &SplitMask,
    labels: &[usize],
    rng: &mut R,
) -> Vec<usize> {
    let c = cache.num_classes();
    (0..cache.n())
        .map(|i| {
            if mask.train[i] {
                return labels[i];
            }
            let draw: f64 = rng.random();
            let mut acc = 0.0;
            for j in 0..c {
                acc += cache.log_probs.get(j, i).exp();
                if draw < acc {
                    return j;
                }
            }
            // Rounding left the cumulative sum just under 1.
            (0..c)
                .rev()
                .find(|&j| cache.log_probs.get(j, i) > f64::NEG_INFINITY)
                .unwrap_or(c - 1)
        })
        .collect()
}

/// Node weights `c_i` used in the factor sums (denominators included).
pub fn factor_weights(mask: &SplitMask, lambda: f64, weighting: Weighting) -> Vec<f64> {
    let n = mask.n() as f64;
    let n_bar = mask.n_bar as f64;
    let unlabeled = n - n_bar;
    mask.train
        .iter()
        .map(|&labeled| match weighting {
            Weighting::Pooled => {
                let c = if labeled { 1.0 } else { lambda };
                c / (n + lambda * n_bar)
            }
            Weighting::CostConsistent => {
                if labeled {
                    1.0 / n_bar
                } else if unlabeled > 0.0 {
                    lambda / unlabeled
                } else {
                    0.0
                }
            }
        })
        .collect()
}

/// Factors and damped inverses of one layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerFactors {
    /// `d_k x d_k`.
    pub u: DenseMatrix,
    /// `(d_{k-1} + bias) x (d_{k-1} + bias)`.
    pub v: DenseMatrix,
    pub u_inv: DenseMatrix,
    pub v_inv: DenseMatrix,
}

impl LayerFactors {
    /// Builds the layer's factors from explicit matrices, damping and inverting them.
    pub fn from_factors(u: DenseMatrix, v: DenseMatrix, damping: f64) -> Result<Self> {
        let u_inv = damped_inverse(&u, damping)?;
        let v_inv = damped_inverse(&v, damping)?;
        Ok(LayerFactors { u, v, u_inv, v_inv })
    }
}

/// Preconditioner state for one training run.
#[derive(Clone, Debug)]
pub struct KfacState {
    config: KfacConfig,
    layers: Vec<LayerFactors>,
    epoch_of_last_update: Option<usize>,
    lambda: f64,
    refreshes: usize,
}

impl KfacState {
    pub fn new(config: KfacConfig) -> Result<Self> {
        config.validate()?;
        Ok(KfacState {
            config,
            layers: Vec::new(),
            epoch_of_last_update: None,
            lambda: 0.0,
            refreshes: 0,
        })
    }

    /// A state with the given factors already inverted.
    pub fn with_factors(config: KfacConfig, factors: Vec<(DenseMatrix, DenseMatrix)>) -> Result<Self> {
        let mut state = KfacState::new(config)?;
        let damping = state.config.damping();
        state.layers = factors
            .into_iter()
            .map(|(u, v)| LayerFactors::from_factors(u, v, damping))
            .collect::<Result<_>>()?;
        Ok(state)
    }

    pub fn config(&self) -> &KfacConfig {
        &self.config
    }

    pub fn layers(&self) -> &[LayerFactors] {
        &self.layers
    }

    pub fn epoch_of_last_update(&self) -> Option<usize> {
        self.epoch_of_last_update
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn refresh_count(&self) -> usize {
        self.refreshes
    }

    /// Whether epoch `t` (1-based) refreshes the factors: epochs 1,
    /// `1 + update_every`, `1 + 2 * update_every`, ...
    pub fn is_refresh_epoch(&self, t: usize) -> bool {
        t >= 1 && (t - 1).is_multiple_of(self.config.update_every)
    }

    /// `lambda(t)` for this configuration; always 0 when only labeled nodes count.
    pub fn lambda_at(&self, t: usize, t_max: usize) -> f64 {
        match self.config.mode {
            KfacMode::LabeledOnly => 0.0,
            KfacMode::PseudoLabel => lambda_schedule(t, t_max, self.config.gamma),
        }
    }

    /// Recomputes every `U_k`, `V_k` and their inverses.
    ///
    /// `backward` must come from a pass whose node weights are 1 on every node
    /// that contributes to the statistics; the per-node weights `c_i` are
    /// applied here.
    pub fn update_factors(
        &mut self,
        backward: &BackwardResult,
        mask: &SplitMask,
        lambda: f64,
        epoch: usize,
    ) -> Result<()> {
        let lambda = match self.config.mode {
            KfacMode::LabeledOnly => 0.0,
            KfacMode::PseudoLabel => lambda,
        };
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::usage(format!("lambda must be in [0, 1], got {lambda}")));
        }
        if mask.n() != backward.node_weights.len() {
            return Err(Error::usage(format!(
                "mask covers {} nodes, backward pass {}",
                mask.n(),
                backward.node_weights.len()
            )));
        }
        let weights = factor_weights(mask, lambda, self.config.weighting);
        let damping = self.config.damping();
        let mut layers = Vec::with_capacity(backward.grads.len());
        for (signals, inputs) in backward.signals.iter().zip(&backward.inputs) {
            let u = LayerInput::Dense(signals.clone()).weighted_gram(&weights, false)?;
            let v = inputs.weighted_gram(&weights, backward.bias)?;
            layers.push(LayerFactors::from_factors(u, v, damping)?);
        }
        self.layers = layers;
        self.lambda = lambda;
        self.epoch_of_last_update = Some(epoch);
        self.refreshes += 1;
        Ok(())
    }

    /// `U_k^{-1} G_k V_k^{-1}` for every layer.
    pub fn precondition(&self, grads: &[DenseMatrix]) -> Result<Vec<DenseMatrix>> {
        if self.layers.is_empty() {
            return Err(Error::State("factors have not been estimated yet".into()));
        }
        if grads.len() != self.layers.len() {
            return Err(Error::State(format!(
                "{} gradients for {} factored layers",
                grads.len(),
                self.layers.len()
            )));
        }
        grads
            .iter()
            .zip(&self.layers)
            .enumerate()
            .map(|(k, (g, f))| {
                if g.rows() != f.u_inv.rows() || g.cols() != f.v_inv.rows() {
                    return Err(Error::State(format!(
                        "layer {} gradient is {}x{} but its factors are {}x{} and {}x{}",
                        k + 1,
                        g.rows(),
                        g.cols(),
                        f.u_inv.rows(),
                        f.u_inv.cols(),
                        f.v_inv.rows(),
                        f.v_inv.cols()
                    )));
                }
                f.u_inv.matmul(g)?.matmul(&f.v_inv)
            })
            .collect()
    }
}
