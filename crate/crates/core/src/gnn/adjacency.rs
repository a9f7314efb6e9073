use crate::graph::{AdjacencyView, Csr, PropertyGraph};
use crate::scalar::Scalar;

/// Message-passing structure shared by all layers.
///
/// `neighbors` holds each vertex's distinct neighbors without itself (used
/// by GIN). The weighted rows hold `N(i) ∪ {i}` with the symmetric
/// normalization `1 / sqrt((d_i + 1)(d_j + 1))` (used by GCN; GAT attends
/// over the same rows).
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency<T> {
    n: usize,
    neighbors: Csr,
    with_self: Csr,
    weights: Vec<T>,
}

impl<T: Scalar> NormalizedAdjacency<T> {
    /// Builds from a CSR over vertex positions; self-loops and repeated
    /// edges are collapsed so the self-loop is counted exactly once.
    pub fn from_csr(csr: &Csr) -> Self {
        let n = csr.rows();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::with_capacity(csr.nnz());
        offsets.push(0);
        for i in 0..n {
            let start = targets.len();
            for &j in csr.row(i) {
                // rows are sorted, so duplicates are adjacent
                if j != i && targets[start..].last() != Some(&j) {
                    targets.push(j);
                }
            }
            offsets.push(targets.len());
        }
        let neighbors = Csr { offsets, targets };
        let degree: Vec<f64> = (0..n).map(|i| neighbors.row(i).len() as f64).collect();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::with_capacity(neighbors.nnz() + n);
        let mut weights = Vec::with_capacity(neighbors.nnz() + n);
        offsets.push(0);
        for i in 0..n {
            let row = neighbors.row(i);
            let split = row.partition_point(|&j| j < i);
            for &j in row[..split].iter().chain(std::iter::once(&i)).chain(&row[split..]) {
                targets.push(j);
                weights.push(T::from_f64_lossy(1.0 / ((degree[i] + 1.0) * (degree[j] + 1.0)).sqrt()));
            }
            offsets.push(targets.len());
        }
        NormalizedAdjacency { n, neighbors, with_self: Csr { offsets, targets }, weights }
    }

    pub fn from_graph(graph: &PropertyGraph, view: AdjacencyView) -> Self {
        Self::from_csr(graph.csr(view))
    }

    /// Undirected structure from an edge list over `0..n`.
    pub fn from_undirected_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let (_, sym) = crate::graph::build_csr(n, edges);
        Self::from_csr(&sym)
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    /// Distinct neighbors of `i`, excluding `i`, ascending.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        self.neighbors.row(i)
    }

    /// `N(i) ∪ {i}` ascending, with matching normalized weights.
    pub fn weighted_row(&self, i: usize) -> (&[usize], &[T]) {
        let range = self.with_self.offsets[i]..self.with_self.offsets[i + 1];
        (&self.with_self.targets[range.clone()], &self.weights[range])
    }

    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        self.with_self.offsets[i]..self.with_self.offsets[i + 1]
    }

    pub fn weighted_nnz(&self) -> usize {
        self.with_self.nnz()
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<T> {
        let (cols, w) = self.weighted_row(i);
        cols.binary_search(&j).ok().map(|k| w[k])
    }
}
