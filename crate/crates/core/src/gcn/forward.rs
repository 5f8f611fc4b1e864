use rand::{Rng, SeedableRng};

use super::input::{GraphInput, LayerInput};
use super::{Activation, GcnConfig, GcnParams, Mode};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Everything the backward pass and the preconditioner need from a forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    /// `X̃_{k-1}` per layer, without the bias row.
    pub inputs: Vec<LayerInput>,
    /// `Z_k = W_k [X̃_{k-1}; 1]`.
    pub pre_activations: Vec<DenseMatrix>,
    /// `X_k`, after activation and dropout. The last entry equals the logits.
    pub outputs: Vec<DenseMatrix>,
    /// Dropout scale factors (`0` or `1/(1-p)`) where dropout was applied.
    pub dropout_masks: Vec<Option<DenseMatrix>>,
    pub activations: Vec<Activation>,
    /// `c x n` log-probabilities.
    pub log_probs: DenseMatrix,
    pub mode: Mode,
}

impl ForwardCache {
    pub fn n(&self) -> usize {
        self.log_probs.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.log_probs.rows()
    }

    /// Softmax probabilities of node `i`.
    pub fn probabilities(&self, i: usize) -> Vec<f64> {
        self.log_probs.column(i).into_iter().map(f64::exp).collect()
    }
}

/// Column-wise log-softmax with max subtraction.
pub fn log_softmax(logits: &DenseMatrix) -> DenseMatrix {
    let (c, n) = logits.shape();
    let mut out = logits.clone();
    for i in 0..n {
        let max = (0..c).map(|j| logits.get(j, i)).fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = (0..c).map(|j| (logits.get(j, i) - max).exp()).sum();
        let lse = max + sum.ln();
        for j in 0..c {
            out.set(j, i, logits.get(j, i) - lse);
        }
    }
    out
}

/// Runs the network. `rng` drives dropout and is untouched in [`Mode::Eval`].
pub fn forward<R: Rng + ?Sized>(
    config: &GcnConfig,
    params: &GcnParams,
    input: &GraphInput,
    mode: Mode,
    rng: &mut R,
) -> Result<ForwardCache> {
    config.validate()?;
    if params.num_layers() != config.num_layers() || params.bias != config.bias {
        return Err(Error::usage(format!(
            "parameters have {} layers (bias {}) but the config describes {} (bias {})",
            params.num_layers(),
            params.bias,
            config.num_layers(),
            config.bias
        )));
    }
    for (k, w) in params.weights.iter().enumerate() {
        if w.shape() != config.weight_shape(k) {
            let (r, c) = config.weight_shape(k);
            return Err(Error::usage(format!(
                "layer {} weight is {}x{}, expected {r}x{c}",
                k + 1,
                w.rows(),
                w.cols()
            )));
        }
    }
    if input.feature_dim() != config.layer_dims[0] {
        return Err(Error::usage(format!(
            "graph has {} features but the network expects {}",
            input.feature_dim(),
            config.layer_dims[0]
        )));
    }

    let m = config.num_layers();
    let mut cache = ForwardCache {
        inputs: Vec::with_capacity(m),
        pre_activations: Vec::with_capacity(m),
        outputs: Vec::with_capacity(m),
        dropout_masks: Vec::with_capacity(m),
        activations: Vec::with_capacity(m),
        log_probs: DenseMatrix::zeros(0, 0),
        mode,
    };
    let mut layer_input = LayerInput::Graph(input.clone());
    for (k, w) in params.weights.iter().enumerate() {
        let act = config.activation(k);
        let z = layer_input.affine(w, config.bias)?;
        if !z.is_finite() {
            return Err(Error::NonFinite(format!("layer {} pre-activations", k + 1)));
        }
        let mut x = z.map(|v| act.apply(v));
        let mask = if k == 0 && k + 1 < m && mode == Mode::Train && config.dropout > 0.0 {
            let keep = 1.0 - config.dropout;
            let mask = DenseMatrix::from_fn(x.rows(), x.cols(), |_, _| {
                if rng.random_bool(keep) {
                    1.0 / keep
                } else {
                    0.0
                }
            });
            x = x.hadamard(&mask)?;
            Some(mask)
        } else {
            None
        };
        let next = if k + 1 < m {
            Some(LayerInput::Dense(input.norm().spmm(&x)?))
        } else {
            None
        };
        cache.inputs.push(layer_input);
        cache.pre_activations.push(z);
        cache.outputs.push(x);
        cache.dropout_masks.push(mask);
        cache.activations.push(act);
        if let Some(next) = next {
            layer_input = next;
        } else {
            break;
        }
    }
    cache.log_probs = log_softmax(cache.outputs.last().unwrap());
    Ok(cache)
}

/// Forward pass with dropout disabled.
pub fn forward_eval(config: &GcnConfig, params: &GcnParams, input: &GraphInput) -> Result<ForwardCache> {
    forward(config, params, input, Mode::Eval, &mut rand_chacha::ChaCha8Rng::seed_from_u64(0))
}

pub(crate) fn check_targets(cache: &ForwardCache, labels: &[usize], weights: &[f64]) -> Result<()> {
    let n = cache.n();
    if labels.len() != n || weights.len() != n {
        return Err(Error::usage(format!(
            "{} labels and {} weights for {n} nodes",
            labels.len(),
            weights.len()
        )));
    }
    let c = cache.num_classes();
    for (i, (&y, &w)) in labels.iter().zip(weights).enumerate() {
        if w != 0.0 && y >= c {
            return Err(Error::usage(format!("node {i} has label {y}, outside 0..{c}")));
        }
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::usage(format!("node {i} has invalid weight {w}")));
        }
    }
    if weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::usage("node weights sum to zero"));
    }
    Ok(())
}

/// `sum_i w_i * -log p(y_i | node i)`. Labels of zero-weight nodes are ignored.
pub fn loss(cache: &ForwardCache, labels: &[usize], weights: &[f64]) -> Result<f64> {
    check_targets(cache, labels, weights)?;
    Ok(labels
        .iter()
        .zip(weights)
        .enumerate()
        .filter(|(_, (_, &w))| w != 0.0)
        .map(|(i, (&y, &w))| -w * cache.log_probs.get(y, i))
        .sum())
}

/// Arg-max class per node (lowest index wins ties).
pub fn predictions(cache: &ForwardCache) -> Vec<usize> {
    let c = cache.num_classes();
    (0..cache.n())
        .map(|i| {
            (1..c).fold(0, |best, j| {
                if cache.log_probs.get(j, i) > cache.log_probs.get(best, i) {
                    j
                } else {
                    best
                }
            })
        })
        .collect()
}

/// Fraction of nodes in `mask` whose prediction matches the label.
pub fn accuracy(cache: &ForwardCache, labels: &[usize], mask: &[bool]) -> f64 {
    let pred = predictions(cache);
    let (hit, total) = mask
        .iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .fold((0usize, 0usize), |(h, t), (i, _)| (h + (pred[i] == labels[i]) as usize, t + 1));
    if total == 0 {
        0.0
    } else {
        hit as f64 / total as f64
    }
}
