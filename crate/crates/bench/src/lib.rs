//! Shared fixtures for the benchmarks.

use gcn_kfac::data::synthetic::{generate, SyntheticConfig};
use gcn_kfac::harness::TrainingData;
use gcn_kfac::{DenseMatrix, SplitId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// `a a^T / cols` for a random `n x 2n` matrix `a`.
pub fn random_psd(n: usize, seed: u64) -> DenseMatrix {
    let a = random_matrix(n, 2 * n, seed);
    a.matmul_t(&a).unwrap().scale(1.0 / (2 * n) as f64)
}

/// A citation-sized synthetic graph prepared on the fixed split.
pub fn citation_like(nodes: usize, features: usize, classes: usize) -> TrainingData {
    let cfg = SyntheticConfig {
        nodes,
        features,
        classes,
        train_per_class: 20,
        val: 500.min(nodes / 4),
        test: 1000.min(nodes / 3),
        words_per_node: 18,
        ..SyntheticConfig::default()
    };
    TrainingData::new(&generate(&cfg).unwrap(), SplitId::First).unwrap()
}
