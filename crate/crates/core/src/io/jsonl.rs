use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::graph::{Edge, GraphBuilder, Properties, PropertyGraph, PropertyValue, Vertex};

const FORMAT_VERSION: u64 = 1;

pub fn load_lpg_jsonl(path: impl AsRef<Path>) -> Result<PropertyGraph> {
    let file = File::open(path)?;
    read_lpg_jsonl(BufReader::new(file))
}

fn parse_err(line: usize, reason: impl Into<String>) -> Error {
    Error::Parse { line, reason: reason.into() }
}

fn parse_value(line: usize, v: &Value) -> Result<PropertyValue> {
    match v {
        Value::Bool(b) => Ok(PropertyValue::Boolean(*b)),
        Value::String(s) => Ok(PropertyValue::Text(s.clone())),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(PropertyValue::Integer(i))
            } else if n.is_u64() {
                Err(parse_err(line, format!("integer {n} out of range")))
            } else {
                Ok(PropertyValue::Real(n.as_f64().expect("float number")))
            }
        }
        Value::Array(items) => {
            if items.is_empty() {
                return Err(parse_err(line, "empty real vector"));
            }
            items
                .iter()
                .map(|x| x.as_f64().ok_or_else(|| parse_err(line, "real vector holds a non-number")))
                .collect::<Result<Vec<_>>>()
                .map(PropertyValue::RealVector)
        }
        other => Err(parse_err(line, format!("unsupported property value {other}"))),
    }
}

fn parse_props(line: usize, rec: &Map<String, Value>) -> Result<Properties> {
    let mut props = Properties::new();
    let Some(raw) = rec.get("props") else {
        return Ok(props);
    };
    let obj = raw.as_object().ok_or_else(|| parse_err(line, "\"props\" is not an object"))?;
    for (key, values) in obj {
        let arr = values
            .as_array()
            .ok_or_else(|| parse_err(line, format!("values of {key:?} are not an array")))?;
        let parsed = arr.iter().map(|v| parse_value(line, v)).collect::<Result<Vec<_>>>()?;
        props.insert(key.clone(), parsed);
    }
    Ok(props)
}

fn parse_labels(line: usize, rec: &Map<String, Value>) -> Result<std::collections::BTreeSet<String>> {
    let Some(raw) = rec.get("labels") else {
        return Ok(Default::default());
    };
    let arr = raw.as_array().ok_or_else(|| parse_err(line, "\"labels\" is not an array"))?;
    let mut labels = std::collections::BTreeSet::new();
    for l in arr {
        let s = l.as_str().ok_or_else(|| parse_err(line, "label is not a string"))?;
        if !labels.insert(s.to_owned()) {
            return Err(parse_err(line, format!("duplicate label {s:?}")));
        }
    }
    Ok(labels)
}

fn get_u64(line: usize, rec: &Map<String, Value>, field: &str) -> Result<u64> {
    rec.get(field)
        .and_then(Value::as_u64)
        .ok_or_else(|| parse_err(line, format!("missing or invalid {field:?}")))
}

/// Reads LPG-JSONL. Vertices are inserted before edges, so record order
/// within the file does not matter.
pub fn read_lpg_jsonl<R: BufRead>(reader: R) -> Result<PropertyGraph> {
    let mut directed = None;
    let mut vertices = Vec::new();
    let mut edges = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Value = serde_json::from_str(&line).map_err(|e| parse_err(lineno, e.to_string()))?;
        let rec = rec.as_object().ok_or_else(|| parse_err(lineno, "record is not an object"))?;
        let kind = rec.get("kind").and_then(Value::as_str).unwrap_or("");
        if directed.is_none() {
            if kind != "header" {
                return Err(parse_err(lineno, "first record must be the header"));
            }
            let version = rec.get("version").and_then(Value::as_u64);
            if version != Some(FORMAT_VERSION) {
                return Err(parse_err(lineno, format!("unsupported version {version:?}")));
            }
            let d = rec
                .get("directed")
                .and_then(Value::as_bool)
                .ok_or_else(|| parse_err(lineno, "header lacks \"directed\""))?;
            directed = Some(d);
            continue;
        }
        match kind {
            "vertex" => {
                let v = Vertex {
                    id: get_u64(lineno, rec, "id")?,
                    labels: parse_labels(lineno, rec)?,
                    properties: parse_props(lineno, rec)?,
                };
                vertices.push(v);
            }
            "edge" => {
                let e = Edge {
                    id: get_u64(lineno, rec, "id")?,
                    src: get_u64(lineno, rec, "src")?,
                    dst: get_u64(lineno, rec, "dst")?,
                    labels: parse_labels(lineno, rec)?,
                    properties: parse_props(lineno, rec)?,
                };
                edges.push(e);
            }
            "header" => return Err(parse_err(lineno, "duplicate header")),
            other => return Err(parse_err(lineno, format!("unknown record kind {other:?}"))),
        }
    }
    let directed = directed.ok_or_else(|| parse_err(1, "missing header"))?;
    let mut builder = GraphBuilder::new(directed);
    for v in vertices {
        builder.add_vertex(v)?;
    }
    for e in edges {
        builder.add_edge(e)?;
    }
    Ok(builder.freeze())
}

fn value_json(v: &PropertyValue) -> Value {
    match v {
        PropertyValue::Integer(i) => json!(i),
        PropertyValue::Real(r) => json!(r),
        PropertyValue::Boolean(b) => json!(b),
        PropertyValue::Text(s) => json!(s),
        PropertyValue::RealVector(xs) => json!(xs),
    }
}

fn props_json(props: &Properties) -> Value {
    let map: BTreeMap<&str, Vec<Value>> =
        props.iter().map(|(k, vs)| (k.as_str(), vs.iter().map(value_json).collect())).collect();
    json!(map)
}

/// Writes the canonical rendering: header, vertices then edges by ascending
/// id, object keys sorted.
pub fn write_lpg_jsonl<W: Write>(graph: &PropertyGraph, mut w: W) -> Result<()> {
    let header = json!({"kind": "header", "version": FORMAT_VERSION, "directed": graph.directed()});
    writeln!(w, "{header}")?;
    for v in graph.vertices() {
        let rec = json!({
            "kind": "vertex",
            "id": v.id,
            "labels": v.labels,
            "props": props_json(&v.properties),
        });
        writeln!(w, "{rec}")?;
    }
    for e in graph.edges() {
        let rec = json!({
            "kind": "edge",
            "id": e.id,
            "src": e.src,
            "dst": e.dst,
            "labels": e.labels,
            "props": props_json(&e.properties),
        });
        writeln!(w, "{rec}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_lpg_jsonl(graph: &PropertyGraph, path: impl AsRef<Path>) -> Result<()> {
    write_lpg_jsonl(graph, BufWriter::new(File::create(path)?))
}
