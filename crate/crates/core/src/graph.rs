//! Undirected adjacency storage and the self-loop renormalization
//! `Ã = (D + I)^{-1/2} (A + I) (D + I)^{-1/2}`.

use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, DenseMatrix};

/// Unweighted undirected graph without self-loops.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseAdjacency {
    n: usize,
    neighbors: Vec<Vec<usize>>,
}

impl SparseAdjacency {
    /// Builds the symmetric closure of `edges`. Duplicates and both
    /// orientations collapse to one undirected edge; self-loops are dropped.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut neighbors = vec![Vec::new(); n];
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::usage(format!("edge ({i}, {j}) out of range for {n} nodes")));
            }
            if i != j {
                neighbors[i].push(j);
                neighbors[j].push(i);
            }
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        Ok(SparseAdjacency { n, neighbors })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i < self.n && self.neighbors[i].binary_search(&j).is_ok()
    }

    /// Undirected edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    pub fn normalize(&self) -> NormalizedAdjacency {
        normalize(self)
    }
}

/// The renormalized adjacency `Ã`, symmetric with a positive diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedAdjacency {
    csr: CsrMatrix,
}

/// `(D + I)^{-1/2} (A + I) (D + I)^{-1/2}` with `D = diag(sum_j a_ij)`.
pub fn normalize(adj: &SparseAdjacency) -> NormalizedAdjacency {
    let deg: Vec<f64> = (0..adj.n()).map(|i| (adj.degree(i) + 1) as f64).collect();
    let triplets = (0..adj.n()).flat_map(|i| {
        let deg = &deg;
        std::iter::once((i, i, 1.0 / deg[i]))
            .chain(adj.neighbors(i).iter().map(move |&j| (i, j, 1.0 / (deg[i] * deg[j]).sqrt())))
    });
    let csr = CsrMatrix::from_triplets(adj.n(), adj.n(), triplets)
        .expect("adjacency indices validated at construction");
    NormalizedAdjacency { csr }
}

impl NormalizedAdjacency {
    pub fn n(&self) -> usize {
        self.csr.rows()
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.csr.get(i, j)
    }

    pub fn csr(&self) -> &CsrMatrix {
        &self.csr
    }

    pub fn to_dense(&self) -> DenseMatrix {
        self.csr.to_dense()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.csr.row(i).1.iter().sum()).collect()
    }

    /// Neighborhood aggregation `x Ã` for a feature-by-node matrix `x`:
    /// column `i` of the result is `sum_j ã_ij x[:, j]`.
    pub fn spmm(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        let n = self.n();
        if x.cols() != n {
            return Err(Error::usage(format!(
                "spmm: features are {}x{} but the graph has {n} nodes",
                x.rows(),
                x.cols()
            )));
        }
        Ok(self.csr.matmul_dense(&x.transpose())?.transpose())
    }

    /// Aggregates per-node sparse rows (`n x d`): row `i` of the result is
    /// `sum_j ã_ij rows[j]`.
    pub fn aggregate_rows(&self, rows: &CsrMatrix) -> Result<CsrMatrix> {
        self.csr.matmul_sparse(rows)
    }
}

/// Free-function form of [`NormalizedAdjacency::spmm`].
pub fn spmm(norm: &NormalizedAdjacency, x: &DenseMatrix) -> Result<DenseMatrix> {
    norm.spmm(x)
}
