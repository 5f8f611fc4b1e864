//! Graph convolutional networks trained with a semi-supervised,
//! Kronecker-factored natural-gradient preconditioner.
//!
//! The crate is organized bottom-up:
//!
//! - [`linalg`]: dense/sparse kernels and the damped symmetric inverse.
//! - [`graph`]: adjacency storage and symmetric renormalization.
//! - [`data`]: on-disk graph bundles and train/validation/test splits.
//! - [`gcn`]: the network, its loss, and an explicit backward pass.
//! - [`kfac`]: per-layer Kronecker factors and gradient preconditioning.
//! - [`optim`]: SGD with momentum and Adam.
//! - [`harness`]: the training loop, multi-seed runs and metric export.

pub mod data;
pub mod error;
pub mod gcn;
pub mod graph;
pub mod harness;
pub mod kfac;
pub mod linalg;
pub mod optim;

pub use data::{GraphBundle, SplitId, SplitMask};
pub use error::{Error, Result};
pub use gcn::{GcnConfig, GcnParams, GraphInput, Mode};
pub use graph::{NormalizedAdjacency, SparseAdjacency};
pub use harness::{AggregateReport, ExperimentConfig, RunMetrics};
pub use kfac::{KfacConfig, KfacState};
pub use linalg::{CsrMatrix, DenseMatrix};
pub use optim::{Optimizer, OptimizerConfig, OptimizerKind};
