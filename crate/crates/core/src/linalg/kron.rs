//! Explicit Kronecker products, kept as a brute-force reference for the
//! matrix-form preconditioner.
//!
//! Vectorization stacks rows: `vec(G)[i * cols + j] = G[i][j]`. Under that
//! convention `(U ⊗ V) vec(G) = vec(U G V^T)`, which is `vec(U G V)` whenever
//! `V` is symmetric.

use super::dense::DenseMatrix;
use crate::error::{Error, Result};

/// Largest Kronecker dimension the reference will materialize.
pub const MAX_KRON_DIM: usize = 64;

/// Row-stacked vectorization.
pub fn vec_rows(m: &DenseMatrix) -> Vec<f64> {
    m.as_slice().to_vec()
}

/// Inverse of [`vec_rows`].
pub fn unvec_rows(v: &[f64], rows: usize, cols: usize) -> Result<DenseMatrix> {
    DenseMatrix::from_vec(rows, cols, v.to_vec())
}

/// The explicit `(p*r) x (q*s)` Kronecker product `u ⊗ v`.
pub fn kronecker(u: &DenseMatrix, v: &DenseMatrix) -> DenseMatrix {
    let (p, q) = u.shape();
    let (r, s) = v.shape();
    DenseMatrix::from_fn(p * r, q * s, |row, col| {
        u.get(row / r, col / s) * v.get(row % r, col % s)
    })
}

/// Literal `(u ⊗ v) · g_vec` through the materialized Kronecker product.
pub fn kron_matvec_oracle(u: &DenseMatrix, v: &DenseMatrix, g_vec: &[f64]) -> Result<Vec<f64>> {
    let cols = u.cols() * v.cols();
    if g_vec.len() != cols {
        return Err(Error::usage(format!(
            "kron matvec: vector of length {} against a {}x{} ⊗ {}x{} product",
            g_vec.len(),
            u.rows(),
            u.cols(),
            v.rows(),
            v.cols()
        )));
    }
    if u.rows() * v.rows() > MAX_KRON_DIM || cols > MAX_KRON_DIM {
        return Err(Error::usage(format!(
            "kron matvec reference limited to {MAX_KRON_DIM}x{MAX_KRON_DIM} products"
        )));
    }
    let k = kronecker(u, v);
    Ok((0..k.rows())
        .map(|i| k.row(i).iter().zip(g_vec).map(|(a, b)| a * b).sum())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_factors_leave_vector_unchanged() {
        let g: Vec<f64> = (0..6).map(|i| i as f64 - 2.5).collect();
        let out = kron_matvec_oracle(&DenseMatrix::identity(2), &DenseMatrix::identity(3), &g).unwrap();
        assert_eq!(out, g);
    }

    #[test]
    fn scalar_factors_multiply() {
        let u = DenseMatrix::identity(2).scale(2.0);
        let v = DenseMatrix::identity(3).scale(3.0);
        let out = kron_matvec_oracle(&u, &v, &[1.0; 6]).unwrap();
        assert_eq!(out, vec![6.0; 6]);
    }

    #[test]
    fn matches_matrix_identity_for_symmetric_right_factor() {
        let u = DenseMatrix::from_rows(&[[1.0, -2.0], [0.5, 3.0]]).unwrap();
        let v = DenseMatrix::from_rows(&[[2.0, 0.3, -1.0], [0.3, 1.0, 0.25], [-1.0, 0.25, 4.0]]).unwrap();
        let g = DenseMatrix::from_rows(&[[0.1, 0.2, 0.3], [-0.4, 0.5, -0.6]]).unwrap();
        let via_kron = kron_matvec_oracle(&u, &v, &vec_rows(&g)).unwrap();
        let via_matrix = u.matmul(&g).unwrap().matmul(&v).unwrap();
        for (a, b) in via_kron.iter().zip(vec_rows(&via_matrix)) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn wrong_length_rejected() {
        assert!(kron_matvec_oracle(&DenseMatrix::identity(2), &DenseMatrix::identity(2), &[1.0; 3]).is_err());
    }
}
