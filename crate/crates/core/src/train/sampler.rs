use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{induced_csr, Csr};

/// How each optimizer step picks its training graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Sampler {
    FullBatch,
    /// Uniform node sample and its induced subgraph; `None` picks
    /// [`default_nodes_per_batch`].
    NodeSubgraph { nodes_per_batch: Option<usize> },
}

impl Default for Sampler {
    fn default() -> Self {
        Sampler::NodeSubgraph { nodes_per_batch: None }
    }
}

impl Sampler {
    /// Nodes drawn per step on an `n`-vertex graph; `n` means the whole graph.
    pub fn budget(&self, n: usize) -> usize {
        match *self {
            Sampler::FullBatch => n,
            Sampler::NodeSubgraph { nodes_per_batch: Some(k) } => k.min(n),
            Sampler::NodeSubgraph { nodes_per_batch: None } => default_nodes_per_batch(n),
        }
    }
}

/// `max(n/32, 256)`, capped at `n`.
pub fn default_nodes_per_batch(n: usize) -> usize {
    (n / 32).max(256).min(n)
}

/// Samples `k` distinct positions uniformly and returns them ascending with
/// the induced subgraph over them (local indices follow the returned order).
pub fn sample_node_subgraph<R: Rng>(csr: &Csr, k: usize, rng: &mut R) -> (Vec<usize>, Csr) {
    let n = csr.rows();
    let mut positions = index::sample(rng, n, k.min(n)).into_vec();
    positions.sort_unstable();
    let sub = induced_csr(csr, &positions);
    (positions, sub)
}
