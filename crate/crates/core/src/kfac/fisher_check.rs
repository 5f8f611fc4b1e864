//! Brute-force check that the Fisher information of a softmax classifier
//! equals the expected Hessian of its negative log-likelihood.
//!
//! The model is `p(y | x_i) = softmax(W x_i)` with `W` a `c x d` matrix whose
//! rows are stacked into the parameter vector `theta`. Both matrices are
//! summed over the input points, with the expectation over `y` enumerated
//! exactly under the model distribution.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Largest model the check enumerates.
pub const MAX_PARAMS: usize = 20;
pub const MAX_CLASSES: usize = 3;

const FD_STEP: f64 = 1e-5;

#[derive(Clone, Debug)]
pub struct SoftmaxModel {
    inputs: Vec<Vec<f64>>,
    classes: usize,
}

impl SoftmaxModel {
    pub fn new(inputs: Vec<Vec<f64>>, classes: usize) -> Result<Self> {
        let d = inputs.first().map_or(0, Vec::len);
        if inputs.is_empty() || d == 0 || inputs.iter().any(|x| x.len() != d) {
            return Err(Error::usage("inputs must be non-empty vectors of equal length"));
        }
        if classes == 0 || classes > MAX_CLASSES || classes * d > MAX_PARAMS {
            return Err(Error::usage(format!(
                "model with {classes} classes and {d} features is too large to enumerate"
            )));
        }
        Ok(SoftmaxModel { inputs, classes })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn num_params(&self) -> usize {
        self.classes * self.inputs[0].len()
    }

    /// Returns a copy whose input set is the current one listed twice.
    pub fn duplicated(&self) -> Self {
        let mut inputs = self.inputs.clone();
        inputs.extend(self.inputs.iter().cloned());
        SoftmaxModel { inputs, classes: self.classes }
    }

    pub fn probabilities(&self, theta: &[f64], i: usize) -> Vec<f64> {
        let x = &self.inputs[i];
        let d = x.len();
        let logits: Vec<f64> = (0..self.classes)
            .map(|j| theta[j * d..(j + 1) * d].iter().zip(x).map(|(w, v)| w * v).sum())
            .collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
        let sum: f64 = exp.iter().sum();
        exp.into_iter().map(|e| e / sum).collect()
    }

    /// Gradient of `-log p(y | x_i)` with respect to `theta`: `(p - e_y) x_i^T`.
    pub fn nll_gradient(&self, theta: &[f64], i: usize, y: usize) -> Vec<f64> {
        let p = self.probabilities(theta, i);
        let x = &self.inputs[i];
        (0..self.classes)
            .flat_map(|j| {
                let delta = p[j] - if j == y { 1.0 } else { 0.0 };
                x.iter().map(move |v| delta * v)
            })
            .collect()
    }
}

/// Returns `(fisher, expected_hessian)`. The Hessian of each label's NLL is
/// taken by central differences of the analytic gradient.
pub fn fisher_hessian_check(model: &SoftmaxModel, theta: &[f64]) -> Result<(DenseMatrix, DenseMatrix)> {
    let p_len = model.num_params();
    if theta.len() != p_len {
        return Err(Error::usage(format!("{} parameters for a model with {p_len}", theta.len())));
    }
    let mut fisher = DenseMatrix::zeros(p_len, p_len);
    let mut hessian = DenseMatrix::zeros(p_len, p_len);
    for i in 0..model.inputs.len() {
        let p = model.probabilities(theta, i);
        for (y, &py) in p.iter().enumerate() {
            let g = model.nll_gradient(theta, i, y);
            for r in 0..p_len {
                for c in 0..p_len {
                    fisher.set(r, c, fisher.get(r, c) + py * g[r] * g[c]);
                }
            }
            for c in 0..p_len {
                let mut plus = theta.to_vec();
                let mut minus = theta.to_vec();
                plus[c] += FD_STEP;
                minus[c] -= FD_STEP;
                let gp = model.nll_gradient(&plus, i, y);
                let gm = model.nll_gradient(&minus, i, y);
                for r in 0..p_len {
                    let h = (gp[r] - gm[r]) / (2.0 * FD_STEP);
                    hessian.set(r, c, hessian.get(r, c) + py * h);
                }
            }
        }
    }
    Ok((fisher, hessian))
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn random_model(classes: usize, d: usize, points: usize, seed: u64) -> (SoftmaxModel, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inputs = (0..points)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let theta = (0..classes * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        (SoftmaxModel::new(inputs, classes).unwrap(), theta)
    }

    #[test]
    fn fisher_equals_expected_hessian() {
        for seed in 0..5 {
            let (model, theta) = random_model(3, 4, 6, seed);
            let (f, h) = fisher_hessian_check(&model, &theta).unwrap();
            assert!(f.sub(&h).unwrap().frobenius_norm() < 1e-6);
            assert!(f.frobenius_norm() > 1e-3);
        }
    }

    #[test]
    fn single_class_gives_zero_matrices() {
        let (model, theta) = random_model(1, 5, 3, 1);
        let (f, h) = fisher_hessian_check(&model, &theta).unwrap();
        assert!(f.max_abs() < 1e-12 && h.max_abs() < 1e-12);
    }

    #[test]
    fn duplicating_points_doubles_both() {
        let (model, theta) = random_model(2, 3, 4, 2);
        let (f1, h1) = fisher_hessian_check(&model, &theta).unwrap();
        let (f2, h2) = fisher_hessian_check(&model.duplicated(), &theta).unwrap();
        assert!(f2.sub(&f1.scale(2.0)).unwrap().max_abs() < 1e-12);
        assert!(h2.sub(&h1.scale(2.0)).unwrap().max_abs() < 1e-9);
    }

    #[test]
    fn rejects_large_models() {
        assert!(SoftmaxModel::new(vec![vec![0.0; 7]], 3).is_err());
        assert!(SoftmaxModel::new(vec![vec![0.0; 2]], 4).is_err());
        assert!(SoftmaxModel::new(vec![], 2).is_err());
    }
}
