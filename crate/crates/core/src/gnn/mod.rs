//! Dense-feature, sparse-adjacency GNN layers with manual backpropagation.
//!
//! Every layer instantiates the same message-passing pattern: transform
//! neighbor features, aggregate them, then update the vertex state. GCN
//! aggregates with symmetric-normalized weights, GIN sums, and GAT learns
//! per-edge attention coefficients.

mod adjacency;
mod checkpoint;
mod gat;
mod gcn;
mod gin;
mod linear;
mod matrix;
mod model;

pub use adjacency::NormalizedAdjacency;
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use gat::{GatCache, GatLayer, GAT_NEGATIVE_SLOPE};
pub use gcn::{GcnCache, GcnLayer};
pub use gin::{GinCache, GinLayer};
pub use linear::{Linear, PRelu, DEFAULT_PRELU_SLOPE};
pub use matrix::DenseMatrix;
pub use model::{Conv, ConvKind, GnnModel, ModelConfig};

/// Gradients aligned with [`Parameterized::params`].
pub type Gradients<T> = Vec<Vec<T>>;

/// Flat access to trainable parameters in a fixed order.
pub trait Parameterized<T> {
    fn param_names(&self) -> Vec<String>;
    fn params(&self) -> Vec<&[T]>;
    fn params_mut(&mut self) -> Vec<&mut [T]>;

    fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }
}
