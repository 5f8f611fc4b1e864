//! Dense and sparse matrix kernels.

mod cholesky;
mod dense;
mod gemm;
mod kron;
mod sparse;

pub use cholesky::{cholesky, damped_inverse, damped_spd_inverse, SYMMETRY_TOLERANCE};
pub use dense::{matmul, DenseMatrix};
pub use kron::{kron_matvec_oracle, kronecker, unvec_rows, vec_rows, MAX_KRON_DIM};
pub use sparse::CsrMatrix;
