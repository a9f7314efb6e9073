//! Maps vertices and edges through a frozen [`EncodingSchema`] to
//! fixed-width feature vectors and assembles feature matrices.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{Entity, PropertyGraph, PropertyValue};
use crate::schema::{BlockSource, Category, EncoderKind, EncodingSchema, PropertyEncoderSpec};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
const STD_FLOOR: f64 = 1e-12;

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

fn is_separator(c: char) -> bool {
    c.is_whitespace()
        || c.is_ascii_punctuation()
        || ('\u{2000}'..='\u{206f}').contains(&c)
        || ('\u{3000}'..='\u{303f}').contains(&c)
        || ('\u{ff01}'..='\u{ff0f}').contains(&c)
        || matches!(c, '\u{a1}' | '\u{a7}' | '\u{ab}' | '\u{b6}' | '\u{b7}' | '\u{bb}' | '\u{bf}')
}

/// Lowercased tokens split on whitespace and punctuation.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(is_separator).filter(|t| !t.is_empty()).map(str::to_lowercase).collect()
}

fn l2_normalize(block: &mut [f64]) {
    let norm = block.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        block.iter_mut().for_each(|x| *x /= norm);
    }
}

fn mean_number(values: &[PropertyValue]) -> Option<f64> {
    let nums: Vec<f64> = values.iter().filter_map(PropertyValue::as_number).collect();
    (!nums.is_empty()).then(|| nums.iter().sum::<f64>() / nums.len() as f64)
}

fn unit_position(v: f64, min: f64, max: f64) -> f64 {
    if max > min {
        ((v - min) / (max - min)).clamp(0.0, 1.0)
    } else {
        0.5
    }
}

fn encode_property(spec: &PropertyEncoderSpec, values: &[PropertyValue], out: &mut [f64]) {
    match &spec.kind {
        EncoderKind::Categorical { vocab } => {
            for v in values {
                if let Some(i) = Category::of(v).and_then(|c| vocab.binary_search(&c).ok()) {
                    out[i] = 1.0;
                }
            }
        }
        EncoderKind::Scalar { min, max } => {
            if let Some(v) = mean_number(values) {
                out[0] = unit_position(v, *min, *max);
            }
        }
        EncoderKind::Binned { min, max, bins } => {
            if let (Some(v), true) = (mean_number(values), *bins > 0) {
                let t = unit_position(v, *min, *max);
                let idx = ((t * *bins as f64).floor() as usize).min(bins - 1);
                out[idx] = 1.0;
            }
        }
        EncoderKind::NumericVector { dim, mean, std } => {
            let vectors: Vec<&Vec<f64>> = values
                .iter()
                .filter_map(|v| match v {
                    PropertyValue::RealVector(x) if x.len() == *dim => Some(x),
                    _ => None,
                })
                .collect();
            if vectors.is_empty() {
                return;
            }
            let count = vectors.len() as f64;
            for (j, slot) in out.iter_mut().enumerate() {
                let avg = vectors.iter().map(|v| v[j]).sum::<f64>() / count;
                *slot = (avg - mean[j]) / std[j].max(STD_FLOOR);
            }
            l2_normalize(out);
        }
        EncoderKind::HashedText { dim, .. } => {
            if *dim == 0 {
                return;
            }
            for v in values {
                if let PropertyValue::Text(text) = v {
                    for token in tokenize(text) {
                        let h = fnv1a64(token.as_bytes());
                        let idx = (h % *dim as u64) as usize;
                        out[idx] += if h >> 63 == 0 { 1.0 } else { -1.0 };
                    }
                }
            }
            l2_normalize(out);
        }
    }
}

/// Writes the encoding of `entity` into `out` (length `schema.total_dim()`).
pub fn encode_into<E: Entity>(schema: &EncodingSchema, entity: &E, out: &mut [f64]) -> Result<()> {
    if schema.entity_kind != E::KIND {
        return Err(Error::SchemaMismatch { expected: schema.entity_kind.as_str(), found: E::KIND.as_str() });
    }
    if out.len() != schema.total_dim() {
        return Err(Error::DimMismatch(format!("buffer {} vs schema {}", out.len(), schema.total_dim())));
    }
    out.fill(0.0);
    for block in schema.blocks() {
        let slot = &mut out[block.columns()];
        match block.source {
            BlockSource::Label => {
                if entity.labels().contains(&block.name) {
                    slot[0] = 1.0;
                }
            }
            BlockSource::Property(i) => {
                let spec = &schema.property_order[i];
                if let Some(values) = entity.properties().get(&spec.key) {
                    encode_property(spec, values, slot);
                }
            }
        }
    }
    Ok(())
}

/// Feature vector of one entity.
pub fn encode_entity<E: Entity>(schema: &EncodingSchema, entity: &E) -> Result<Vec<f64>> {
    let mut out = vec![0.0; schema.total_dim()];
    encode_into(schema, entity, &mut out)?;
    Ok(out)
}

/// Dense row-major feature matrix with one row per entity id.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub ids: Vec<u64>,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(ids: Vec<u64>, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != ids.len() * cols {
            return Err(Error::ShapeMismatch(format!("{} values for {}x{}", data.len(), ids.len(), cols)));
        }
        Ok(FeatureMatrix { ids, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.ids.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    /// Keeps the given columns, in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(self.rows() * columns.len());
        for r in 0..self.rows() {
            let row = self.row(r);
            data.extend(columns.iter().map(|&c| row[c]));
        }
        FeatureMatrix { ids: self.ids.clone(), cols: columns.len(), data }
    }

    /// Columns of `full_schema`'s layout that survive in `sub_schema`, in
    /// `sub_schema` order.
    pub fn restrict(&self, full_schema: &EncodingSchema, sub_schema: &EncodingSchema) -> Result<FeatureMatrix> {
        if self.cols != full_schema.total_dim() {
            return Err(Error::DimMismatch(format!("matrix {} vs schema {}", self.cols, full_schema.total_dim())));
        }
        let mut columns = Vec::with_capacity(sub_schema.total_dim());
        for block in sub_schema.blocks() {
            let src = match block.source {
                BlockSource::Label => full_schema.label_block(&block.name),
                BlockSource::Property(_) => full_schema.property_block(&block.name),
            }
            .ok_or_else(|| Error::UnknownName(block.name.clone()))?;
            if src.width != block.width {
                return Err(Error::DimMismatch(format!("block {:?} width differs", block.name)));
            }
            columns.extend(src.columns());
        }
        Ok(self.select_columns(&columns))
    }

    /// Writes the LPGF binary: magic, version, n, d, then row-major
    /// little-endian doubles.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(b"LPGF")?;
        w.write_all(&LPGF_VERSION.to_le_bytes())?;
        w.write_all(&(self.rows() as u64).to_le_bytes())?;
        w.write_all(&(self.cols as u64).to_le_bytes())?;
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads an LPGF binary; row ids default to `0..n`.
    pub fn read_binary<R: Read>(mut r: R) -> Result<FeatureMatrix> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"LPGF" {
            return Err(Error::Format("not an LPGF file".into()));
        }
        let mut u32buf = [0u8; 4];
        r.read_exact(&mut u32buf)?;
        let version = u32::from_le_bytes(u32buf);
        if version != LPGF_VERSION {
            return Err(Error::Format(format!("unsupported LPGF version {version}")));
        }
        let mut u64buf = [0u8; 8];
        r.read_exact(&mut u64buf)?;
        let n = u64::from_le_bytes(u64buf) as usize;
        r.read_exact(&mut u64buf)?;
        let d = u64::from_le_bytes(u64buf) as usize;
        let mut data = Vec::with_capacity(n * d);
        for _ in 0..n * d {
            r.read_exact(&mut u64buf)?;
            data.push(f64::from_le_bytes(u64buf));
        }
        Ok(FeatureMatrix { ids: (0..n as u64).collect(), cols: d, data })
    }

    /// Writes `<path>` (LPGF) and `<path>.ids` (one id per line).
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.write_binary(BufWriter::new(File::create(path)?))?;
        let mut ids = BufWriter::new(File::create(id_map_path(path))?);
        for id in &self.ids {
            writeln!(ids, "{id}")?;
        }
        ids.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
        let path = path.as_ref();
        let mut m = Self::read_binary(BufReader::new(File::open(path)?))?;
        let ids_path = id_map_path(path);
        if ids_path.exists() {
            let ids = BufReader::new(File::open(ids_path)?)
                .lines()
                .map(|l| l?.trim().parse::<u64>().map_err(|e| Error::Format(format!("id map: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            if ids.len() != m.rows() {
                return Err(Error::RowMismatch { expected: m.rows(), found: ids.len() });
            }
            m.ids = ids;
        }
        Ok(m)
    }
}

pub const LPGF_VERSION: u32 = 1;

pub fn id_map_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".ids");
    s.into()
}

fn encode_all<E: Entity>(schema: &EncodingSchema, entities: &[E]) -> Result<FeatureMatrix> {
    let d = schema.total_dim();
    let mut data = vec![0.0; entities.len() * d];
    if d > 0 {
        for (e, row) in entities.iter().zip(data.chunks_exact_mut(d)) {
            encode_into(schema, e, row)?;
        }
    } else if let Some(e) = entities.first() {
        encode_into(schema, e, &mut [])?;
    }
    Ok(FeatureMatrix { ids: entities.iter().map(Entity::id).collect(), cols: d, data })
}

/// Vertex features, rows in ascending id order.
pub fn encode_vertices(schema: &EncodingSchema, graph: &PropertyGraph) -> Result<FeatureMatrix> {
    encode_all(schema, graph.vertices())
}

/// Edge features, rows in ascending id order.
pub fn encode_edges(schema: &EncodingSchema, graph: &PropertyGraph) -> Result<FeatureMatrix> {
    encode_all(schema, graph.edges())
}

pub fn encode_graph(
    vertex_schema: &EncodingSchema,
    edge_schema: &EncodingSchema,
    graph: &PropertyGraph,
) -> Result<(FeatureMatrix, FeatureMatrix)> {
    Ok((encode_vertices(vertex_schema, graph)?, encode_edges(edge_schema, graph)?))
}

/// Appends per-row extra columns after the existing ones.
pub fn augment_features(features: &FeatureMatrix, extra: &[Vec<f64>]) -> Result<FeatureMatrix> {
    if extra.len() != features.rows() {
        return Err(Error::RowMismatch { expected: features.rows(), found: extra.len() });
    }
    let width = extra.first().map_or(0, Vec::len);
    if let Some(bad) = extra.iter().find(|r| r.len() != width) {
        return Err(Error::DimMismatch(format!("extra rows of width {width} and {}", bad.len())));
    }
    let cols = features.cols + width;
    let mut data = Vec::with_capacity(features.rows() * cols);
    for (r, ext) in extra.iter().enumerate() {
        data.extend_from_slice(features.row(r));
        data.extend_from_slice(ext);
    }
    Ok(FeatureMatrix { ids: features.ids.clone(), cols, data })
}

/// One constant column.
pub fn constant_column(rows: usize, value: f64) -> Vec<Vec<f64>> {
    vec![vec![value]; rows]
}

/// Degree of every vertex under the graph's default view.
pub fn degree_column(graph: &PropertyGraph) -> Vec<Vec<f64>> {
    let csr = graph.csr(graph.default_view());
    (0..graph.vertex_count()).map(|i| vec![csr.row(i).len() as f64]).collect()
}
