use super::forward::{check_targets, ForwardCache};
use super::input::{split_bias, GraphInput, LayerInput};
use super::GcnParams;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Weight gradients plus the per-node factors they are built from:
/// `G_k = sum_i u_{k,i} v_{k,i}^T`.
#[derive(Clone, Debug)]
pub struct BackwardResult {
    /// `dL/dW_k`, shaped like `W_k`.
    pub grads: Vec<DenseMatrix>,
    /// `u_{k,i}`: column `i` of `dL/dZ_k` (`d_k x n`), loss weights included.
    pub signals: Vec<DenseMatrix>,
    /// `v_{k,i}` without the bias entry: the layer inputs from the forward pass.
    pub inputs: Vec<LayerInput>,
    pub node_weights: Vec<f64>,
    pub bias: bool,
}

impl BackwardResult {
    pub fn u(&self, k: usize, i: usize) -> Vec<f64> {
        self.signals[k].column(i)
    }

    pub fn v(&self, k: usize, i: usize) -> Vec<f64> {
        self.inputs[k].node_vector(i, self.bias)
    }
}

/// Gradient of `sum_i w_i * -log p(y_i | node i)` with respect to every `W_k`.
pub fn backward(
    params: &GcnParams,
    input: &GraphInput,
    cache: &ForwardCache,
    labels: &[usize],
    weights: &[f64],
) -> Result<BackwardResult> {
    check_targets(cache, labels, weights)?;
    let m = params.num_layers();
    if cache.inputs.len() != m {
        return Err(Error::usage(format!(
            "forward cache has {} layers, parameters have {m}",
            cache.inputs.len()
        )));
    }
    let (c, n) = cache.log_probs.shape();

    let mut delta = DenseMatrix::zeros(c, n);
    for (i, (&y, &w)) in labels.iter().zip(weights).enumerate() {
        if w == 0.0 {
            continue;
        }
        for j in 0..c {
            let p = cache.log_probs.get(j, i).exp();
            let target = if j == y { 1.0 } else { 0.0 };
            delta.set(j, i, w * (p - target));
        }
    }

    let mut grads = vec![DenseMatrix::zeros(0, 0); m];
    let mut signals = vec![DenseMatrix::zeros(0, 0); m];
    for k in (0..m).rev() {
        grads[k] = cache.inputs[k].weight_gradient(&delta, params.bias)?;
        if k > 0 {
            let (main, _) = split_bias(&params.weights[k], params.bias);
            let d_input = main.t_matmul(&delta)?;
            let mut d_out = input.norm().spmm(&d_input)?;
            if let Some(mask) = &cache.dropout_masks[k - 1] {
                d_out = d_out.hadamard(mask)?;
            }
            let act = cache.activations[k - 1];
            let pre = &cache.pre_activations[k - 1];
            for r in 0..d_out.rows() {
                for (g, &z) in d_out.row_mut(r).iter_mut().zip(pre.row(r)) {
                    *g *= act.derivative(z);
                }
            }
            signals[k] = std::mem::replace(&mut delta, d_out);
        } else {
            signals[k] = std::mem::replace(&mut delta, DenseMatrix::zeros(0, 0));
        }
        if !grads[k].is_finite() {
            return Err(Error::NonFinite(format!("layer {} gradient", k + 1)));
        }
    }

    Ok(BackwardResult {
        grads,
        signals,
        inputs: cache.inputs.clone(),
        node_weights: weights.to_vec(),
        bias: params.bias,
    })
}
