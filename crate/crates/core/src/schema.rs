//! Encoding schema: the frozen catalog of labels and per-key property
//! encoders that fixes the feature layout.
//!
//! Labels come first in byte order, followed by one block per property key.
//! In [`Layout::KeyOrder`] every property block follows key order; in
//! [`Layout::Appendix`] hashed-text blocks are moved behind all other
//! property blocks.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{Entity, EntityKind, PropertyGraph, PropertyValue};

pub const DEFAULT_CATEGORICAL_THRESHOLD: usize = 32;
pub const DEFAULT_TEXT_DIM: usize = 64;
pub const DEFAULT_MAX_CATEGORY_CHARS: usize = 32;
pub const FNV1A64: &str = "fnv1a64";

/// A categorical vocabulary entry.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Bool(bool),
    Int(i64),
    Text(String),
}

impl Category {
    pub fn of(value: &PropertyValue) -> Option<Category> {
        match value {
            PropertyValue::Boolean(b) => Some(Category::Bool(*b)),
            PropertyValue::Integer(i) => Some(Category::Int(*i)),
            PropertyValue::Text(s) => Some(Category::Text(s.clone())),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EncoderKind {
    /// One-hot over a sorted vocabulary.
    Categorical { vocab: Vec<Category> },
    /// Min-max normalization to `[0, 1]`.
    Scalar { min: f64, max: f64 },
    /// One-hot over `bins` equal-width bins of `[min, max]`.
    Binned { min: f64, max: f64, bins: usize },
    /// Per-component standardization followed by L2 normalization.
    NumericVector { dim: usize, mean: Vec<f64>, std: Vec<f64> },
    /// Signed feature hashing of text tokens.
    HashedText { dim: usize, hash: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyEncoderSpec {
    pub key: String,
    pub kind: EncoderKind,
}

impl PropertyEncoderSpec {
    pub fn block_width(&self) -> usize {
        match &self.kind {
            EncoderKind::Categorical { vocab } => vocab.len(),
            EncoderKind::Scalar { .. } => 1,
            EncoderKind::Binned { bins, .. } => *bins,
            EncoderKind::NumericVector { dim, .. } => *dim,
            EncoderKind::HashedText { dim, .. } => *dim,
        }
    }

    pub fn is_text(&self) -> bool {
        matches!(self.kind, EncoderKind::HashedText { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    #[default]
    KeyOrder,
    Appendix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockSource {
    Label,
    /// Index into `property_order`.
    Property(usize),
}

/// One contiguous column range of the feature vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub name: String,
    pub source: BlockSource,
    pub start: usize,
    pub width: usize,
}

impl Block {
    pub fn columns(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.width
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RawSchema {
    entity_kind: EntityKind,
    label_order: Vec<String>,
    property_order: Vec<PropertyEncoderSpec>,
    layout: Layout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawSchema", into = "RawSchema")]
pub struct EncodingSchema {
    pub entity_kind: EntityKind,
    pub label_order: Vec<String>,
    pub property_order: Vec<PropertyEncoderSpec>,
    pub layout: Layout,
    blocks: Vec<Block>,
    total_dim: usize,
}

impl From<RawSchema> for EncodingSchema {
    fn from(raw: RawSchema) -> Self {
        EncodingSchema::new(raw.entity_kind, raw.label_order, raw.property_order, raw.layout)
    }
}

impl From<EncodingSchema> for RawSchema {
    fn from(s: EncodingSchema) -> Self {
        RawSchema {
            entity_kind: s.entity_kind,
            label_order: s.label_order,
            property_order: s.property_order,
            layout: s.layout,
        }
    }
}

impl EncodingSchema {
    pub fn new(
        entity_kind: EntityKind,
        label_order: Vec<String>,
        property_order: Vec<PropertyEncoderSpec>,
        layout: Layout,
    ) -> Self {
        let mut blocks = Vec::with_capacity(label_order.len() + property_order.len());
        let mut start = 0;
        for label in &label_order {
            blocks.push(Block { name: label.clone(), source: BlockSource::Label, start, width: 1 });
            start += 1;
        }
        let mut order: Vec<usize> = (0..property_order.len()).collect();
        if layout == Layout::Appendix {
            order.sort_by_key(|&i| (property_order[i].is_text(), i));
        }
        for i in order {
            let width = property_order[i].block_width();
            blocks.push(Block { name: property_order[i].key.clone(), source: BlockSource::Property(i), start, width });
            start += width;
        }
        EncodingSchema { entity_kind, label_order, property_order, layout, blocks, total_dim: start }
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    /// Blocks in column order; offsets are contiguous and cover `[0, d)`.
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn label_block(&self, label: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.source == BlockSource::Label && b.name == label)
    }

    pub fn property_block(&self, key: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| matches!(b.source, BlockSource::Property(_)) && b.name == key)
    }

    pub fn property(&self, key: &str) -> Option<&PropertyEncoderSpec> {
        self.property_order.iter().find(|p| p.key == key)
    }

    /// Labels and property keys, in column order.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.blocks.iter().map(|b| b.name.as_str())
    }

    pub fn contains_name(&self, name: &str) -> bool {
        self.names().any(|n| n == name)
    }

    pub fn property_keys(&self) -> Vec<String> {
        self.property_order.iter().map(|p| p.key.clone()).collect()
    }

    pub fn to_canonical_json(&self) -> String {
        // serde_json maps keep keys sorted
        let value = serde_json::to_value(self).expect("schema serializes");
        value.to_string()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Hex SHA-256 of the canonical JSON rendering.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.to_canonical_json().as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemaOptions {
    pub categorical_threshold: usize,
    /// Text values longer than this (in chars) mark a key as free text.
    pub max_category_chars: usize,
    pub text_dim: usize,
    /// Integer keys with few distinct values become categorical.
    pub integers_as_categorical: bool,
    /// Permit mixing Integer and Real values under one key.
    pub coerce: bool,
    /// Encode scalars as one-hot over this many equal-width bins.
    pub discretize_scalars: Option<usize>,
    pub appendix_layout: bool,
}

impl Default for SchemaOptions {
    fn default() -> Self {
        SchemaOptions {
            categorical_threshold: DEFAULT_CATEGORICAL_THRESHOLD,
            max_category_chars: DEFAULT_MAX_CATEGORY_CHARS,
            text_dim: DEFAULT_TEXT_DIM,
            integers_as_categorical: false,
            coerce: false,
            discretize_scalars: None,
            appendix_layout: false,
        }
    }
}

#[derive(Default)]
struct KeyValues<'a> {
    all: Vec<&'a PropertyValue>,
    stats: Vec<&'a PropertyValue>,
}

fn collect<'a, E: Entity>(
    entities: &'a [E],
    stats_on: Option<&BTreeSet<u64>>,
    labels: &mut BTreeSet<String>,
    keys: &mut BTreeMap<&'a str, KeyValues<'a>>,
) {
    for e in entities {
        labels.extend(e.labels().iter().cloned());
        let in_stats = stats_on.is_none_or(|s| s.contains(&e.id()));
        for (k, values) in e.properties() {
            let entry = keys.entry(k.as_str()).or_default();
            entry.all.extend(values.iter());
            if in_stats {
                entry.stats.extend(values.iter());
            }
        }
    }
}

fn resolve_key(key: &str, values: &KeyValues<'_>, opts: &SchemaOptions) -> Result<EncoderKind> {
    let kinds: BTreeSet<&str> = values.all.iter().map(|v| v.kind_name()).collect();
    let stats = if values.stats.is_empty() { &values.all } else { &values.stats };
    let categorical = |vals: &[&PropertyValue]| {
        let vocab: BTreeSet<Category> = vals.iter().filter_map(|v| Category::of(v)).collect();
        vocab.into_iter().collect::<Vec<_>>()
    };
    let numeric = || {
        let nums = stats.iter().filter_map(|v| v.as_number());
        let (min, max) = nums.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
        match opts.discretize_scalars {
            Some(bins) => EncoderKind::Binned { min, max, bins },
            None => EncoderKind::Scalar { min, max },
        }
    };
    let kinds: Vec<&str> = kinds.into_iter().collect();
    Ok(match kinds.as_slice() {
        ["boolean"] => EncoderKind::Categorical { vocab: categorical(&values.all) },
        ["text"] => {
            let vocab = categorical(&values.all);
            let short = vocab.iter().all(|c| matches!(c, Category::Text(t) if t.chars().count() <= opts.max_category_chars));
            if short && vocab.len() <= opts.categorical_threshold {
                EncoderKind::Categorical { vocab }
            } else {
                EncoderKind::HashedText { dim: opts.text_dim, hash: FNV1A64.to_owned() }
            }
        }
        ["integer"] => {
            let vocab = categorical(&values.all);
            if opts.integers_as_categorical && vocab.len() <= opts.categorical_threshold {
                EncoderKind::Categorical { vocab }
            } else {
                numeric()
            }
        }
        ["real"] => numeric(),
        ["integer", "real"] if opts.coerce => numeric(),
        ["realvec"] => {
            let dim = match values.all.first() {
                Some(PropertyValue::RealVector(v)) => v.len(),
                _ => unreachable!("realvec kind"),
            };
            let vectors: Vec<&Vec<f64>> = stats
                .iter()
                .filter_map(|v| match v {
                    PropertyValue::RealVector(x) => Some(x),
                    _ => None,
                })
                .collect();
            if values.all.iter().any(|v| matches!(v, PropertyValue::RealVector(x) if x.len() != dim)) {
                return Err(Error::RaggedVector(key.to_owned()));
            }
            let count = vectors.len() as f64;
            let mut mean = vec![0.0; dim];
            for v in &vectors {
                for (m, x) in mean.iter_mut().zip(v.iter()) {
                    *m += x;
                }
            }
            mean.iter_mut().for_each(|m| *m /= count);
            let mut std = vec![0.0; dim];
            for v in &vectors {
                for ((s, x), m) in std.iter_mut().zip(v.iter()).zip(&mean) {
                    *s += (x - m) * (x - m);
                }
            }
            std.iter_mut().for_each(|s| *s = (*s / count).sqrt());
            EncoderKind::NumericVector { dim, mean, std }
        }
        _ => return Err(Error::MixedKinds(key.to_owned())),
    })
}

/// Infers a schema from every entity of `kind`.
pub fn infer_schema(graph: &PropertyGraph, kind: EntityKind, opts: &SchemaOptions) -> Result<EncodingSchema> {
    infer_schema_on(graph, kind, opts, None)
}

/// Like [`infer_schema`], but scalar ranges and vector moments come only
/// from the entities in `stats_on` (typically the training split). Keys with
/// no value inside `stats_on` fall back to the whole graph.
pub fn infer_schema_on(
    graph: &PropertyGraph,
    kind: EntityKind,
    opts: &SchemaOptions,
    stats_on: Option<&[u64]>,
) -> Result<EncodingSchema> {
    let stats_set: Option<BTreeSet<u64>> = stats_on.map(|ids| ids.iter().copied().collect());
    let mut labels = BTreeSet::new();
    let mut keys = BTreeMap::new();
    match kind {
        EntityKind::Vertex => {
            if graph.vertex_count() == 0 {
                return Err(Error::EmptyGraph("vertex"));
            }
            collect(graph.vertices(), stats_set.as_ref(), &mut labels, &mut keys)
        }
        EntityKind::Edge => {
            if graph.edge_count() == 0 {
                return Err(Error::EmptyGraph("edge"));
            }
            collect(graph.edges(), stats_set.as_ref(), &mut labels, &mut keys)
        }
    }
    let mut property_order = Vec::with_capacity(keys.len());
    for (key, values) in &keys {
        let kind = resolve_key(key, values, opts)?;
        property_order.push(PropertyEncoderSpec { key: (*key).to_owned(), kind });
    }
    let layout = if opts.appendix_layout { Layout::Appendix } else { Layout::KeyOrder };
    Ok(EncodingSchema::new(kind, labels.into_iter().collect(), property_order, layout))
}

/// Keeps only the named labels and property keys, preserving order.
pub fn restrict_schema(schema: &EncodingSchema, include: &BTreeSet<String>) -> Result<EncodingSchema> {
    if let Some(unknown) = include.iter().find(|n| !schema.contains_name(n)) {
        return Err(Error::UnknownName(unknown.clone()));
    }
    let labels = schema.label_order.iter().filter(|l| include.contains(*l)).cloned().collect();
    let props = schema.property_order.iter().filter(|p| include.contains(&p.key)).cloned().collect();
    Ok(EncodingSchema::new(schema.entity_kind, labels, props, schema.layout))
}

/// Removes the named labels and property keys; unknown names are ignored.
pub fn exclude_from_schema(schema: &EncodingSchema, exclude: &BTreeSet<String>) -> EncodingSchema {
    let labels = schema.label_order.iter().filter(|l| !exclude.contains(*l)).cloned().collect();
    let props = schema.property_order.iter().filter(|p| !exclude.contains(&p.key)).cloned().collect();
    EncodingSchema::new(schema.entity_kind, labels, props, schema.layout)
}
