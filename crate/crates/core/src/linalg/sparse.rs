//! Compressed sparse row storage and the few sparse kernels the model needs.

use super::dense::DenseMatrix;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets; duplicates are summed
    /// and explicit zeros kept out of the structure.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); rows];
        for (r, c, v) in triplets {
            if r >= rows || c >= cols {
                return Err(Error::usage(format!(
                    "entry ({r}, {c}) outside a {rows}x{cols} matrix"
                )));
            }
            per_row[r].push((c, v));
        }
        let mut indptr = Vec::with_capacity(rows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in per_row {
            row.sort_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut sum = 0.0;
                while k < row.len() && row[k].0 == c {
                    sum += row[k].1;
                    k += 1;
                }
                if sum != 0.0 {
                    indices.push(c);
                    values.push(sum);
                }
            }
            indptr.push(indices.len());
        }
        Ok(CsrMatrix {
            rows,
            cols,
            indptr,
            indices,
            values,
        })
    }

    /// Sparse copy of `m^T`, keeping only nonzero entries. Converts a
    /// feature-by-node matrix into per-node sparse rows.
    pub fn from_dense_transposed(m: &DenseMatrix) -> Self {
        let (r, c) = m.shape();
        let mut counts = vec![0usize; c];
        for i in 0..r {
            for (j, &v) in m.row(i).iter().enumerate() {
                if v != 0.0 {
                    counts[j] += 1;
                }
            }
        }
        let mut indptr = Vec::with_capacity(c + 1);
        indptr.push(0);
        for &k in &counts {
            indptr.push(indptr.last().unwrap() + k);
        }
        let nnz = *indptr.last().unwrap();
        let mut indices = vec![0; nnz];
        let mut values = vec![0.0; nnz];
        let mut cursor = indptr[..c].to_vec();
        for i in 0..r {
            for (j, &v) in m.row(i).iter().enumerate() {
                if v != 0.0 {
                    indices[cursor[j]] = i;
                    values[cursor[j]] = v;
                    cursor[j] += 1;
                }
            }
        }
        CsrMatrix {
            rows: c,
            cols: r,
            indptr,
            indices,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`, sorted by column.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[s..e], &self.values[s..e])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (idx, vals) = self.row(i);
        idx.binary_search(&j).map_or(0.0, |k| vals[k])
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            let (idx, vals) = self.row(i);
            for (&j, &v) in idx.iter().zip(vals) {
                out.set(i, j, v);
            }
        }
        out
    }

    /// Sparse product `self * other` (row-by-row accumulation).
    pub fn matmul_sparse(&self, other: &CsrMatrix) -> Result<CsrMatrix> {
        if self.cols != other.rows {
            return Err(Error::usage(format!(
                "sparse matmul: dimension mismatch between {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut acc = vec![0.0; other.cols];
        let mut touched = vec![false; other.cols];
        let mut pattern = Vec::new();
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for i in 0..self.rows {
            let (ai, av) = self.row(i);
            for (&k, &a) in ai.iter().zip(av) {
                let (bi, bv) = other.row(k);
                for (&j, &b) in bi.iter().zip(bv) {
                    if !touched[j] {
                        touched[j] = true;
                        pattern.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            pattern.sort_unstable();
            for &j in &pattern {
                if acc[j] != 0.0 {
                    indices.push(j);
                    values.push(acc[j]);
                }
                acc[j] = 0.0;
                touched[j] = false;
            }
            pattern.clear();
            indptr.push(indices.len());
        }
        Ok(CsrMatrix {
            rows: self.rows,
            cols: other.cols,
            indptr,
            indices,
            values,
        })
    }

    /// Dense product `self * dense`.
    pub fn matmul_dense(&self, dense: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != dense.rows() {
            return Err(Error::usage(format!(
                "sparse-dense matmul: dimension mismatch between {}x{} and {}x{}",
                self.rows,
                self.cols,
                dense.rows(),
                dense.cols()
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, dense.cols());
        for i in 0..self.rows {
            let (idx, vals) = self.row(i);
            let out_row = out.row_mut(i);
            for (&k, &a) in idx.iter().zip(vals) {
                for (o, &b) in out_row.iter_mut().zip(dense.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Dense product `dense * self`.
    pub fn left_matmul_dense(&self, dense: &DenseMatrix) -> Result<DenseMatrix> {
        if dense.cols() != self.rows {
            return Err(Error::usage(format!(
                "dense-sparse matmul: dimension mismatch between {}x{} and {}x{}",
                dense.rows(),
                dense.cols(),
                self.rows,
                self.cols
            )));
        }
        let dense_t = dense.transpose();
        let mut out_t = DenseMatrix::zeros(self.cols, dense.rows());
        for i in 0..self.rows {
            let (idx, vals) = self.row(i);
            let src = dense_t.row(i);
            for (&j, &v) in idx.iter().zip(vals) {
                for (o, &a) in out_t.row_mut(j).iter_mut().zip(src) {
                    *o += v * a;
                }
            }
        }
        Ok(out_t.transpose())
    }

    /// `sum_i w_i r_i r_i^T` over the sparse rows `r_i`, as a dense
    /// `cols x cols` matrix. Rows with zero weight are skipped.
    pub fn weighted_row_gram(&self, weights: &[f64]) -> Result<DenseMatrix> {
        if weights.len() != self.rows {
            return Err(Error::usage(format!(
                "{} weights for {} rows",
                weights.len(),
                self.rows
            )));
        }
        let d = self.cols;
        let mut out = DenseMatrix::zeros(d, d);
        let data = out.as_mut_slice();
        for (i, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let (idx, vals) = self.row(i);
            for (a, (&p, &vp)) in idx.iter().zip(vals).enumerate() {
                let wp = w * vp;
                let base = p * d;
                for (&q, &vq) in idx[..=a].iter().zip(&vals[..=a]) {
                    data[base + q] += wp * vq;
                }
            }
        }
        for p in 0..d {
            for q in (p + 1)..d {
                data[p * d + q] = data[q * d + p];
            }
        }
        Ok(out)
    }

    /// `sum_i w_i r_i` (a weighted sum of rows), length `cols`.
    pub fn weighted_row_sum(&self, weights: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (i, &w) in weights.iter().enumerate().take(self.rows) {
            if w == 0.0 {
                continue;
            }
            let (idx, vals) = self.row(i);
            for (&j, &v) in idx.iter().zip(vals) {
                out[j] += w * v;
            }
        }
        out
    }
}
