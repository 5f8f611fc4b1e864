//! Blocked Cholesky factorization and the damped symmetric inverse built on it.

use super::dense::DenseMatrix;
use super::gemm::{gemm, Strided};
use crate::error::{Error, Result};

const BLOCK: usize = 64;

/// Largest asymmetry accepted by [`damped_inverse`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

fn blocks(n: usize) -> Vec<(usize, usize)> {
    (0..n).step_by(BLOCK).map(|s| (s, (s + BLOCK).min(n))).collect()
}

/// Overwrites the lower triangle of the row-major `n x n` buffer with its
/// Cholesky factor and zeroes the strict upper triangle. Only the lower
/// triangle of the input is read.
fn factor_in_place(a: &mut [f64], n: usize) -> Result<()> {
    let mut panel = Vec::new();
    for (kb, ke) in blocks(n) {
        for j in kb..ke {
            let row_j = j * n;
            let mut s = a[row_j + j];
            for p in kb..j {
                s -= a[row_j + p] * a[row_j + p];
            }
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::NotPositiveDefinite { pivot: j, value: s });
            }
            let d = s.sqrt();
            a[row_j + j] = d;
            for i in (j + 1)..n {
                let row_i = i * n;
                let mut t = a[row_i + j];
                for p in kb..j {
                    t -= a[row_i + p] * a[row_j + p];
                }
                a[row_i + j] = t / d;
            }
        }
        if ke == n {
            break;
        }
        // Trailing update of the lower part: A22 -= L21 L21^T.
        let (m, w) = (n - ke, ke - kb);
        panel.clear();
        for i in ke..n {
            panel.extend_from_slice(&a[i * n + kb..i * n + ke]);
        }
        for (rb, re) in blocks(m) {
            gemm(
                -1.0,
                &panel,
                Strided::block(w, rb, 0, re - rb, w),
                &panel,
                Strided::block(w, 0, 0, re, w).t(),
                1.0,
                a,
                Strided::block(n, ke + rb, ke, re - rb, re),
            );
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            a[i * n + j] = 0.0;
        }
    }
    Ok(())
}

/// Inverse of a lower-triangular row-major matrix with positive diagonal.
fn lower_triangular_inverse(l: &[f64], n: usize) -> Vec<f64> {
    let mut inv = vec![0.0; n * n];
    let bl = blocks(n);
    let mut diag = Vec::new();
    let mut tmp = Vec::new();
    for (bi, &(is, ie)) in bl.iter().enumerate() {
        for j in is..ie {
            inv[j * n + j] = 1.0 / l[j * n + j];
            for i in (j + 1)..ie {
                let mut s = 0.0;
                for p in j..i {
                    s += l[i * n + p] * inv[p * n + j];
                }
                inv[i * n + j] = -s / l[i * n + i];
            }
        }
        let h = ie - is;
        diag.clear();
        for i in is..ie {
            diag.extend_from_slice(&inv[i * n + is..i * n + ie]);
        }
        for &(js, je) in &bl[..bi] {
            let w = je - js;
            tmp.clear();
            tmp.resize(h * w, 0.0);
            // T = L[i, j..i] * Linv[j..i, j]
            gemm(
                1.0,
                l,
                Strided::block(n, is, js, h, is - js),
                &inv,
                Strided::block(n, js, js, is - js, w),
                0.0,
                &mut tmp,
                Strided::full(h, w),
            );
            gemm(
                -1.0,
                &diag,
                Strided::full(h, h),
                &tmp,
                Strided::full(h, w),
                0.0,
                &mut inv,
                Strided::block(n, is, js, h, w),
            );
        }
    }
    inv
}

/// `L^{-T} L^{-1}` from the inverse factor, filled symmetrically.
fn gram_of_inverse_factor(linv: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    let bl = blocks(n);
    for (bi, &(is, ie)) in bl.iter().enumerate() {
        for &(js, je) in &bl[..=bi] {
            gemm(
                1.0,
                linv,
                Strided::block(n, is, is, n - is, ie - is).t(),
                linv,
                Strided::block(n, is, js, n - is, je - js),
                0.0,
                &mut out,
                Strided::block(n, is, js, ie - is, je - js),
            );
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            out[i * n + j] = out[j * n + i];
        }
    }
    out
}

fn check_symmetric_input(x: &DenseMatrix) -> Result<()> {
    if !x.is_square() {
        return Err(Error::usage(format!(
            "expected a square matrix, got {}x{}",
            x.rows(),
            x.cols()
        )));
    }
    if !x.is_finite() {
        return Err(Error::NonFinite("matrix passed to symmetric inverse".into()));
    }
    let asym = x.asymmetry();
    if asym > SYMMETRY_TOLERANCE {
        return Err(Error::usage(format!(
            "matrix is not symmetric (max |a_ij - a_ji| = {asym:e})"
        )));
    }
    Ok(())
}

/// Lower Cholesky factor `L` with `L L^T = x`.
pub fn cholesky(x: &DenseMatrix) -> Result<DenseMatrix> {
    check_symmetric_input(x)?;
    let n = x.rows();
    let mut a = x.clone();
    factor_in_place(a.as_mut_slice(), n)?;
    Ok(a)
}

/// `(x + damping * I)^{-1}` for symmetric positive semi-definite `x`.
///
/// The damping is added before factorizing; a non-positive pivot is reported
/// with its index.
pub fn damped_inverse(x: &DenseMatrix, damping: f64) -> Result<DenseMatrix> {
    if !(damping >= 0.0 && damping.is_finite()) {
        return Err(Error::usage(format!("damping must be finite and >= 0, got {damping}")));
    }
    check_symmetric_input(x)?;
    let n = x.rows();
    let mut a = x.clone();
    a.add_to_diagonal(damping);
    factor_in_place(a.as_mut_slice(), n)?;
    let linv = lower_triangular_inverse(a.as_slice(), n);
    DenseMatrix::from_vec(n, n, gram_of_inverse_factor(&linv, n))
}

/// `(x + epsilon^{-1/2} I)^{-1}`.
pub fn damped_spd_inverse(x: &DenseMatrix, epsilon: f64) -> Result<DenseMatrix> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::usage(format!("epsilon must be positive, got {epsilon}")));
    }
    damped_inverse(x, epsilon.powf(-0.5))
}
