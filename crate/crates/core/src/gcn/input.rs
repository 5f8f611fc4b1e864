use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;
use crate::linalg::{CsrMatrix, DenseMatrix};

/// The graph plus the first layer's aggregated input `X̃_0 = X_0 Ã`, computed
/// once per dataset since the raw features never change.
#[derive(Clone, Debug)]
pub struct GraphInput {
    norm: Arc<NormalizedAdjacency>,
    raw: Arc<CsrMatrix>,
    aggregated: Arc<CsrMatrix>,
}

impl GraphInput {
    /// `features` is `d0 x n`.
    pub fn new(norm: NormalizedAdjacency, features: &DenseMatrix) -> Result<Self> {
        if features.cols() != norm.n() {
            return Err(Error::usage(format!(
                "features are {}x{} but the graph has {} nodes",
                features.rows(),
                features.cols(),
                norm.n()
            )));
        }
        let raw = CsrMatrix::from_dense_transposed(features);
        let aggregated = Arc::new(norm.aggregate_rows(&raw)?);
        Ok(GraphInput { norm: Arc::new(norm), raw: Arc::new(raw), aggregated })
    }

    pub fn norm(&self) -> &NormalizedAdjacency {
        &self.norm
    }

    pub fn n(&self) -> usize {
        self.norm.n()
    }

    pub fn feature_dim(&self) -> usize {
        self.aggregated.cols()
    }

    /// Per-node aggregated features, `n x d0`.
    pub fn aggregated(&self) -> &Arc<CsrMatrix> {
        &self.aggregated
    }

    /// Per-node raw features, `n x d0`.
    pub fn raw(&self) -> &Arc<CsrMatrix> {
        &self.raw
    }
}

/// The aggregated input `X̃_{k-1}` seen by one layer, without the bias row.
///
/// `Sparse` holds per-node rows (`n x d`). `Graph` is the first layer with
/// the aggregation left unapplied, so products run as `Ã (X W^T)`, which is
/// cheaper when `X` is much sparser than `Ã X`. Deeper layers hold a dense
/// feature-by-node matrix (`d x n`).
#[derive(Clone, Debug)]
pub enum LayerInput {
    Sparse(Arc<CsrMatrix>),
    Graph(GraphInput),
    Dense(DenseMatrix),
}

/// Splits `W = [W_main | b]` into its main block and optional bias column.
pub(crate) fn split_bias(w: &DenseMatrix, bias: bool) -> (DenseMatrix, Option<Vec<f64>>) {
    if !bias {
        return (w.clone(), None);
    }
    let d = w.cols() - 1;
    let main = DenseMatrix::from_fn(w.rows(), d, |r, c| w.get(r, c));
    let b = (0..w.rows()).map(|r| w.get(r, d)).collect();
    (main, Some(b))
}

impl LayerInput {
    pub fn dim(&self) -> usize {
        match self {
            LayerInput::Sparse(m) => m.cols(),
            LayerInput::Graph(g) => g.feature_dim(),
            LayerInput::Dense(m) => m.rows(),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            LayerInput::Sparse(m) => m.rows(),
            LayerInput::Graph(g) => g.n(),
            LayerInput::Dense(m) => m.cols(),
        }
    }

    /// Per-node rows for the sparse layouts.
    fn rows(&self) -> Option<&CsrMatrix> {
        match self {
            LayerInput::Sparse(m) => Some(m),
            LayerInput::Graph(g) => Some(g.aggregated()),
            LayerInput::Dense(_) => None,
        }
    }

    /// `v_i`: node `i`'s input vector, with a trailing 1 when `bias` is set.
    pub fn node_vector(&self, i: usize, bias: bool) -> Vec<f64> {
        let mut v = match self {
            LayerInput::Sparse(_) | LayerInput::Graph(_) => {
                let m = self.rows().expect("sparse layout");
                let mut v = vec![0.0; m.cols()];
                let (idx, vals) = m.row(i);
                for (&j, &x) in idx.iter().zip(vals) {
                    v[j] = x;
                }
                v
            }
            LayerInput::Dense(m) => m.column(i),
        };
        if bias {
            v.push(1.0);
        }
        v
    }

    /// Dense `d x n` copy.
    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            LayerInput::Sparse(m) => m.to_dense().transpose(),
            LayerInput::Graph(g) => g.aggregated().to_dense().transpose(),
            LayerInput::Dense(m) => m.clone(),
        }
    }

    /// `W [X̃; 1]`, a `d_k x n` pre-activation.
    pub fn affine(&self, w: &DenseMatrix, bias: bool) -> Result<DenseMatrix> {
        let expected = self.dim() + bias as usize;
        if w.cols() != expected {
            return Err(Error::usage(format!(
                "weight is {}x{} but the layer input needs {expected} columns",
                w.rows(),
                w.cols()
            )));
        }
        let (main, b) = split_bias(w, bias);
        let mut z = match self {
            LayerInput::Sparse(m) => m.matmul_dense(&main.transpose())?.transpose(),
            LayerInput::Graph(g) => g.norm().spmm(&g.raw().matmul_dense(&main.transpose())?.transpose())?,
            LayerInput::Dense(m) => main.matmul(m)?,
        };
        if let Some(b) = b {
            for (r, &br) in b.iter().enumerate() {
                for v in z.row_mut(r) {
                    *v += br;
                }
            }
        }
        Ok(z)
    }

    /// `delta [X̃; 1]^T = sum_i delta_i v_i^T`, shaped like the weight.
    pub fn weight_gradient(&self, delta: &DenseMatrix, bias: bool) -> Result<DenseMatrix> {
        if delta.cols() != self.n() {
            return Err(Error::usage(format!(
                "backprop signal has {} columns for {} nodes",
                delta.cols(),
                self.n()
            )));
        }
        let main = match self {
            LayerInput::Sparse(m) => m.left_matmul_dense(delta)?,
            LayerInput::Graph(g) => g.raw().left_matmul_dense(&g.norm().spmm(delta)?)?,
            LayerInput::Dense(m) => delta.matmul_t(m)?,
        };
        if !bias {
            return Ok(main);
        }
        let d = main.cols();
        Ok(DenseMatrix::from_fn(delta.rows(), d + 1, |r, c| {
            if c < d {
                main.get(r, c)
            } else {
                delta.row(r).iter().sum()
            }
        }))
    }

    /// `sum_i w_i v_i v_i^T` with the bias entry appended to each `v_i`.
    pub fn weighted_gram(&self, weights: &[f64], bias: bool) -> Result<DenseMatrix> {
        if weights.len() != self.n() {
            return Err(Error::usage(format!("{} weights for {} nodes", weights.len(), self.n())));
        }
        if weights.iter().any(|&w| !(w >= 0.0 && w.is_finite())) {
            return Err(Error::usage("node weights must be finite and non-negative"));
        }
        let (main, sums) = match self {
            LayerInput::Sparse(_) | LayerInput::Graph(_) => {
                let m = self.rows().expect("sparse layout");
                (m.weighted_row_gram(weights)?, m.weighted_row_sum(weights))
            }
            LayerInput::Dense(m) => {
                let roots: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
                let scaled = DenseMatrix::from_fn(m.rows(), m.cols(), |r, c| m.get(r, c) * roots[c]);
                let mut gram = scaled.matmul_t(&scaled)?;
                symmetrize(&mut gram);
                let sums = (0..m.rows())
                    .map(|r| m.row(r).iter().zip(weights).map(|(x, w)| x * w).sum())
                    .collect();
                (gram, sums)
            }
        };
        if !bias {
            return Ok(main);
        }
        let d = main.rows();
        let total: f64 = weights.iter().sum();
        Ok(DenseMatrix::from_fn(d + 1, d + 1, |r, c| match (r < d, c < d) {
            (true, true) => main.get(r, c),
            (true, false) => sums[r],
            (false, true) => sums[c],
            (false, false) => total,
        }))
    }
}

/// Replaces `m` with `(m + m^T) / 2`.
pub(crate) fn symmetrize(m: &mut DenseMatrix) {
    let n = m.rows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m.get(i, j) + m.get(j, i));
            m.set(i, j, avg);
            m.set(j, i, avg);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SparseAdjacency;

    fn inputs() -> (LayerInput, LayerInput) {
        let x = DenseMatrix::from_rows(&[[1.0, 0.0, 2.0, 0.0], [0.0, 0.5, 0.0, 0.0], [3.0, 0.0, 0.0, 1.0]])
            .unwrap();
        let sparse = LayerInput::Sparse(Arc::new(CsrMatrix::from_dense_transposed(&x)));
        (sparse, LayerInput::Dense(x))
    }

    #[test]
    fn sparse_and_dense_layouts_agree() {
        let (s, d) = inputs();
        let w = DenseMatrix::from_fn(2, 4, |r, c| r as f64 - 0.3 * c as f64);
        assert_eq!(s.affine(&w, true).unwrap(), d.affine(&w, true).unwrap());
        let delta = DenseMatrix::from_fn(2, 4, |r, c| (r + c) as f64 * 0.1 - 0.2);
        let gs = s.weight_gradient(&delta, true).unwrap();
        let gd = d.weight_gradient(&delta, true).unwrap();
        assert!(gs.sub(&gd).unwrap().max_abs() < 1e-15);
        let wts = [1.0, 0.0, 2.5, 0.5];
        let a = s.weighted_gram(&wts, true).unwrap();
        let b = d.weighted_gram(&wts, true).unwrap();
        assert!(a.sub(&b).unwrap().max_abs() < 1e-14);
        assert!(a.is_symmetric(0.0) && b.is_symmetric(0.0));
    }

    #[test]
    fn gram_is_sum_of_outer_products() {
        let (s, _) = inputs();
        let wts = [0.5, 1.0, 0.0, 2.0];
        let gram = s.weighted_gram(&wts, true).unwrap();
        let mut expected = DenseMatrix::zeros(4, 4);
        for (i, &w) in wts.iter().enumerate() {
            let v = s.node_vector(i, true);
            expected.axpy(w, &DenseMatrix::from_fn(4, 4, |r, c| v[r] * v[c])).unwrap();
        }
        assert!(gram.sub(&expected).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn graph_input_aggregates_features() {
        let norm = SparseAdjacency::new(2, [(0, 1)]).unwrap().normalize();
        let x = DenseMatrix::from_rows(&[[1.0, 3.0]]).unwrap();
        let gi = GraphInput::new(norm, &x).unwrap();
        assert_eq!(gi.aggregated().to_dense(), DenseMatrix::from_rows(&[[2.0], [2.0]]).unwrap());
        assert!(GraphInput::new(gi.norm().clone(), &DenseMatrix::zeros(1, 3)).is_err());
    }

    #[test]
    fn factored_first_layer_matches_aggregated_rows() {
        let norm = SparseAdjacency::new(4, [(0, 1), (1, 2), (1, 3)]).unwrap().normalize();
        let x = DenseMatrix::from_rows(&[[1.0, 0.0, 2.0, 0.0], [0.0, 0.5, 0.0, 0.0], [3.0, 0.0, 0.0, 1.0]])
            .unwrap();
        let gi = GraphInput::new(norm, &x).unwrap();
        let g = LayerInput::Graph(gi.clone());
        let s = LayerInput::Sparse(gi.aggregated().clone());
        let w = DenseMatrix::from_fn(2, 4, |r, c| r as f64 - 0.3 * c as f64);
        assert!(g.affine(&w, true).unwrap().sub(&s.affine(&w, true).unwrap()).unwrap().max_abs() < 1e-14);
        let delta = DenseMatrix::from_fn(2, 4, |r, c| (r + 2 * c) as f64 * 0.1 - 0.4);
        let a = g.weight_gradient(&delta, true).unwrap();
        let b = s.weight_gradient(&delta, true).unwrap();
        assert!(a.sub(&b).unwrap().max_abs() < 1e-14);
        assert_eq!(g.to_dense(), s.to_dense());
        assert_eq!(g.node_vector(1, true), s.node_vector(1, true));
    }
}
