//! Labeled property graph toolkit: load LPGs, encode labels and properties
//! into fixed-width feature vectors, and train small GCN/GIN/GAT models on
//! the resulting features.
//!
//! The numeric core (`gnn`, `train`) is generic over [`Scalar`]; the aliases
//! below fix the common precisions.

pub mod ablation;
pub mod encoder;
pub mod error;
pub mod gnn;
pub mod graph;
pub mod heatmap;
pub mod io;
pub mod scalar;
pub mod schema;
pub mod synth;
pub mod tasks;
pub mod train;

pub use error::{Error, Result};
pub use graph::{Edge, EntityKind, GraphBuilder, PropertyGraph, PropertyValue, Vertex};
pub use scalar::Scalar;


/// Double-precision dense matrix.
pub type Matrix = gnn::DenseMatrix<f64>;
/// Single-precision dense matrix.
pub type MatrixF32 = gnn::DenseMatrix<f32>;
/// Double-precision model; the default for training and gradient checks.
pub type Model = gnn::GnnModel<f64>;
/// Single-precision model.
pub type ModelF32 = gnn::GnnModel<f32>;
/// Double-precision normalized adjacency.
pub type Adjacency = gnn::NormalizedAdjacency<f64>;
/// Double-precision trainer output.
pub type TrainedModel = (Model, train::TrainReport);
