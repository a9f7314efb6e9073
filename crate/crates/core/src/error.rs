use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate {entity} id {id}")]
    DuplicateId { entity: &'static str, id: u64 },
    #[error("invalid property {key:?}: {reason}")]
    InvalidProperty { key: String, reason: String },
    #[error("edge {edge} references missing vertex {vertex}")]
    DanglingEndpoint { edge: u64, vertex: u64 },
    #[error("unknown vertex {0}")]
    UnknownVertex(u64),
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("manifest mismatch: {0}")]
    ManifestMismatch(String),
    #[error("invalid split ratios {0:?}")]
    InvalidRatios([f64; 3]),
    #[error("class {class} has {count} members, fewer than the number of splits")]
    EmptyClass { class: usize, count: usize },
    #[error("property {0:?} mixes value kinds")]
    MixedKinds(String),
    #[error("property {0:?} has vectors of different dimensions")]
    RaggedVector(String),
    #[error("graph has no {0} entities to infer a schema from")]
    EmptyGraph(&'static str),
    #[error("unknown label or property {0:?}")]
    UnknownName(String),
    #[error("schema encodes {expected} entities, got {found}")]
    SchemaMismatch { expected: &'static str, found: &'static str },
    #[error("row count mismatch: {expected} vs {found}")]
    RowMismatch { expected: usize, found: usize },
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("backward called without a cached forward pass")]
    NoForwardCache,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("mask selects no entities")]
    EmptyMask,
    #[error("unknown target {0:?}")]
    UnknownTarget(String),
    #[error("degenerate target {0:?}: {1}")]
    DegenerateTarget(String, String),
    #[error("invalid fixture spec: {0}")]
    InvalidSpec(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("schema digest mismatch: checkpoint {expected}, features {found}")]
    DigestMismatch { expected: String, found: String },
    #[error("bad file format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
