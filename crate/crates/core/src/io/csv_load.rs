use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{Edge, GraphBuilder, Properties, PropertyGraph, PropertyValue, Vertex};

/// Meaning of one CSV column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Id,
    Src,
    Dst,
    /// `;`-separated label list.
    Labels,
    Int,
    Real,
    Bool,
    Text,
    /// `;`-separated real vector.
    RealVec,
}

impl ColumnKind {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "id" => ColumnKind::Id,
            "src" => ColumnKind::Src,
            "dst" => ColumnKind::Dst,
            "labels(;)" => ColumnKind::Labels,
            "prop:int" => ColumnKind::Int,
            "prop:real" => ColumnKind::Real,
            "prop:bool" => ColumnKind::Bool,
            "prop:text" => ColumnKind::Text,
            "prop:realvec(;)" => ColumnKind::RealVec,
            _ => return None,
        })
    }
}

/// Column name to kind mapping shared by the node and edge files.
#[derive(Debug, Clone, Default)]
pub struct CsvManifest {
    pub columns: BTreeMap<String, ColumnKind>,
}

impl CsvManifest {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: BTreeMap<String, String> = serde_json::from_str(text)
            .map_err(|e| Error::ManifestMismatch(format!("manifest is not a string map: {e}")))?;
        let mut columns = BTreeMap::new();
        for (col, kind) in raw {
            let k = ColumnKind::parse(&kind)
                .ok_or_else(|| Error::ManifestMismatch(format!("column {col:?}: unknown kind {kind:?}")))?;
            columns.insert(col, k);
        }
        Ok(CsvManifest { columns })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Loads a tabular export as a directed graph.
pub fn load_lpg_csv(
    nodes_path: impl AsRef<Path>,
    edges_path: impl AsRef<Path>,
    manifest_path: impl AsRef<Path>,
) -> Result<PropertyGraph> {
    let manifest = CsvManifest::load(manifest_path)?;
    load_lpg_csv_with(File::open(nodes_path)?, File::open(edges_path)?, &manifest, true)
}

struct Row {
    line: usize,
    id: Option<u64>,
    src: Option<u64>,
    dst: Option<u64>,
    labels: BTreeSet<String>,
    props: Properties,
}

fn read_rows<R: std::io::Read>(reader: R, manifest: &CsvManifest, file: &str) -> Result<Vec<Row>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut kinds = Vec::with_capacity(headers.len());
    for h in headers.iter() {
        let k = manifest
            .columns
            .get(h)
            .ok_or_else(|| Error::ManifestMismatch(format!("{file} column {h:?} not in manifest")))?;
        kinds.push((h.to_owned(), *k));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        // header is line 1
        let line = i + 2;
        let perr = |reason: String| Error::Parse { line, reason: format!("{file}: {reason}") };
        let mut row = Row { line, id: None, src: None, dst: None, labels: BTreeSet::new(), props: Properties::new() };
        for ((name, kind), cell) in kinds.iter().zip(rec.iter()) {
            let cell = cell.trim();
            let parse_u64 = |s: &str| s.parse::<u64>().map_err(|e| perr(format!("{name}: {e}")));
            match kind {
                ColumnKind::Id => row.id = Some(parse_u64(cell)?),
                ColumnKind::Src => row.src = Some(parse_u64(cell)?),
                ColumnKind::Dst => row.dst = Some(parse_u64(cell)?),
                ColumnKind::Labels => {
                    row.labels.extend(cell.split(';').map(str::trim).filter(|s| !s.is_empty()).map(str::to_owned))
                }
                _ if cell.is_empty() => {}
                ColumnKind::Int => {
                    let v = cell.parse::<i64>().map_err(|e| perr(format!("{name}: {e}")))?;
                    row.props.entry(name.clone()).or_default().push(PropertyValue::Integer(v));
                }
                ColumnKind::Real => {
                    let v = cell.parse::<f64>().map_err(|e| perr(format!("{name}: {e}")))?;
                    row.props.entry(name.clone()).or_default().push(PropertyValue::Real(v));
                }
                ColumnKind::Bool => {
                    let v = match cell.to_ascii_lowercase().as_str() {
                        "true" => true,
                        "false" => false,
                        other => return Err(perr(format!("{name}: not a boolean: {other:?}"))),
                    };
                    row.props.entry(name.clone()).or_default().push(PropertyValue::Boolean(v));
                }
                ColumnKind::Text => {
                    row.props.entry(name.clone()).or_default().push(PropertyValue::Text(cell.to_owned()))
                }
                ColumnKind::RealVec => {
                    let v = cell
                        .split(';')
                        .map(|s| s.trim().parse::<f64>().map_err(|e| perr(format!("{name}: {e}"))))
                        .collect::<Result<Vec<_>>>()?;
                    row.props.entry(name.clone()).or_default().push(PropertyValue::RealVector(v));
                }
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Loads node and edge tables driven by a column manifest. Edge rows without
/// an id column are numbered by row order.
pub fn load_lpg_csv_with<R1: std::io::Read, R2: std::io::Read>(
    nodes: R1,
    edges: R2,
    manifest: &CsvManifest,
    directed: bool,
) -> Result<PropertyGraph> {
    let node_rows = read_rows(nodes, manifest, "nodes")?;
    let edge_rows = read_rows(edges, manifest, "edges")?;
    let mut builder = GraphBuilder::new(directed);
    for row in node_rows {
        if row.src.is_some() || row.dst.is_some() {
            return Err(Error::ManifestMismatch("nodes file carries src/dst columns".into()));
        }
        let id = row.id.ok_or_else(|| Error::ManifestMismatch("nodes file lacks an id column".into()))?;
        builder.add_vertex(Vertex { id, labels: row.labels, properties: row.props })?;
    }
    for (i, row) in edge_rows.into_iter().enumerate() {
        let (Some(src), Some(dst)) = (row.src, row.dst) else {
            return Err(Error::ManifestMismatch(format!("edges file row at line {} lacks src/dst", row.line)));
        };
        let id = row.id.unwrap_or(i as u64);
        builder.add_edge(Edge { id, src, dst, labels: row.labels, properties: row.props })?;
    }
    Ok(builder.freeze())
}
