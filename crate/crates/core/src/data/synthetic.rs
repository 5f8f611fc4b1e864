//! Planted-partition graphs with bag-of-words features, shaped like the
//! citation benchmarks (sparse binary features, homophilous edges, a fixed
//! split of a few labels per class).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::bundle::{row_normalize, FixedSplit, GraphBundle};
use crate::error::{Error, Result};
use crate::graph::SparseAdjacency;
use crate::linalg::DenseMatrix;

#[derive(Clone, Debug)]
pub struct SyntheticConfig {
    pub nodes: usize,
    pub classes: usize,
    pub features: usize,
    /// Expected undirected degree.
    pub avg_degree: f64,
    /// Probability that an edge stays inside its class.
    pub homophily: f64,
    pub words_per_node: usize,
    /// Probability that a word is drawn from the node's class vocabulary.
    pub topic_strength: f64,
    pub train_per_class: usize,
    pub val: usize,
    pub test: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            nodes: 600,
            classes: 4,
            features: 200,
            avg_degree: 4.0,
            homophily: 0.8,
            words_per_node: 12,
            topic_strength: 0.35,
            train_per_class: 5,
            val: 150,
            test: 250,
            seed: 0,
        }
    }
}

/// Generates a row-normalized bundle.
pub fn generate(cfg: &SyntheticConfig) -> Result<GraphBundle> {
    let SyntheticConfig { nodes: n, classes: c, features: d, .. } = *cfg;
    if c == 0 || d < c || n < c * cfg.train_per_class + cfg.val + cfg.test {
        return Err(Error::usage(format!(
            "cannot fit {} train/class + {} val + {} test into {n} nodes with {c} classes and {d} features",
            cfg.train_per_class, cfg.val, cfg.test
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
    let mut members = vec![Vec::new(); c];
    for (i, &y) in labels.iter().enumerate() {
        members[y].push(i);
    }

    let stubs = (cfg.avg_degree * n as f64 / 2.0).round() as usize;
    let mut edges = Vec::with_capacity(stubs);
    for _ in 0..stubs {
        let i = rng.random_range(0..n);
        let j = if rng.random_bool(cfg.homophily) {
            let own = &members[labels[i]];
            own[rng.random_range(0..own.len())]
        } else {
            rng.random_range(0..n)
        };
        edges.push((i, j));
    }
    let adjacency = SparseAdjacency::new(n, edges)?;

    let block = d / c;
    let mut features = DenseMatrix::zeros(d, n);
    for (i, &y) in labels.iter().enumerate() {
        for _ in 0..cfg.words_per_node {
            let w = if rng.random_bool(cfg.topic_strength) {
                y * block + rng.random_range(0..block)
            } else {
                rng.random_range(0..d)
            };
            features.set(w, i, 1.0);
        }
    }
    row_normalize(&mut features);

    let mut taken = vec![0usize; c];
    let mut train = Vec::new();
    let mut rest = Vec::new();
    for (i, &y) in labels.iter().enumerate() {
        if taken[y] < cfg.train_per_class {
            taken[y] += 1;
            train.push(i);
        } else {
            rest.push(i);
        }
    }
    if taken.iter().any(|&t| t < cfg.train_per_class) {
        return Err(Error::usage("some class is too small for the requested training labels"));
    }
    let val = rest[..cfg.val].to_vec();
    let test = rest[rest.len() - cfg.test..].to_vec();
    GraphBundle::new(
        format!("synthetic-{}", cfg.seed),
        features,
        adjacency,
        labels,
        c,
        FixedSplit { train, val, test },
    )
}
