//! In-memory labeled property graph.
//!
//! Mutation goes through [`GraphBuilder`]; [`GraphBuilder::freeze`] sorts
//! entities by id and builds the CSR neighbor index, producing an immutable
//! [`PropertyGraph`] that can be shared across threads.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single property value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PropertyValue {
    Integer(i64),
    Real(f64),
    Boolean(bool),
    Text(String),
    RealVector(Vec<f64>),
}

impl PropertyValue {
    pub fn kind_name(&self) -> &'static str {
        match self {
            PropertyValue::Integer(_) => "integer",
            PropertyValue::Real(_) => "real",
            PropertyValue::Boolean(_) => "boolean",
            PropertyValue::Text(_) => "text",
            PropertyValue::RealVector(_) => "realvec",
        }
    }

    /// Integer or real as `f64`.
    pub fn as_number(&self) -> Option<f64> {
        match *self {
            PropertyValue::Integer(v) => Some(v as f64),
            PropertyValue::Real(v) => Some(v),
            _ => None,
        }
    }

    fn check(&self) -> std::result::Result<(), String> {
        match self {
            PropertyValue::Real(v) if !v.is_finite() => Err(format!("non-finite real {v}")),
            PropertyValue::RealVector(v) if v.is_empty() => Err("empty real vector".into()),
            PropertyValue::RealVector(v) if v.iter().any(|x| !x.is_finite()) => {
                Err("non-finite vector component".into())
            }
            _ => Ok(()),
        }
    }
}

/// Multi-valued property map: each key holds a sequence of distinct values.
pub type Properties = BTreeMap<String, Vec<PropertyValue>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Vertex,
    Edge,
}

impl EntityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Vertex => "vertex",
            EntityKind::Edge => "edge",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Vertex {
    pub id: u64,
    pub labels: BTreeSet<String>,
    pub properties: Properties,
}

impl Vertex {
    pub fn new(id: u64) -> Self {
        Vertex { id, ..Default::default() }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.labels.insert(label.into());
        self
    }

    pub fn with_property(mut self, key: impl Into<String>, value: PropertyValue) -> Self {
        self.properties.entry(key.into()).or_default().push(value);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Edge {
    pub id: u64,
    pub src: u64,
    pub dst: u64,
    pub labels: BTreeSet<String>,
    pub properties: Properties,
}

impl Edge {
    pub fn new(id: u64, src: u64, dst: u64) -> Self {
        Edge { id, src, dst, ..Default::default() }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.labels.insert(label.into());
        self
    }

    pub fn with_property(mut self, key: impl Into<String>, value: PropertyValue) -> Self {
        self.properties.entry(key.into()).or_default().push(value);
        self
    }
}

/// Read access shared by vertices and edges.
pub trait Entity {
    const KIND: EntityKind;
    fn id(&self) -> u64;
    fn labels(&self) -> &BTreeSet<String>;
    fn properties(&self) -> &Properties;
}

impl Entity for Vertex {
    const KIND: EntityKind = EntityKind::Vertex;
    fn id(&self) -> u64 {
        self.id
    }
    fn labels(&self) -> &BTreeSet<String> {
        &self.labels
    }
    fn properties(&self) -> &Properties {
        &self.properties
    }
}

impl Entity for Edge {
    const KIND: EntityKind = EntityKind::Edge;
    fn id(&self) -> u64 {
        self.id
    }
    fn labels(&self) -> &BTreeSet<String> {
        &self.labels
    }
    fn properties(&self) -> &Properties {
        &self.properties
    }
}

fn validate_properties(props: &Properties) -> Result<()> {
    for (key, values) in props {
        for (i, v) in values.iter().enumerate() {
            v.check().map_err(|reason| Error::InvalidProperty { key: key.clone(), reason })?;
            if values[..i].contains(v) {
                return Err(Error::InvalidProperty {
                    key: key.clone(),
                    reason: format!("duplicate value {v:?}"),
                });
            }
        }
    }
    Ok(())
}

/// Mutable graph under construction.
#[derive(Debug, Clone, Default)]
pub struct GraphBuilder {
    directed: bool,
    vertices: BTreeMap<u64, Vertex>,
    edges: BTreeMap<u64, Edge>,
}

impl GraphBuilder {
    pub fn new(directed: bool) -> Self {
        GraphBuilder { directed, ..Default::default() }
    }

    pub fn directed(&self) -> bool {
        self.directed
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains_vertex(&self, id: u64) -> bool {
        self.vertices.contains_key(&id)
    }

    pub fn vertex_mut(&mut self, id: u64) -> Option<&mut Vertex> {
        self.vertices.get_mut(&id)
    }

    pub fn add_vertex(&mut self, vertex: Vertex) -> Result<u64> {
        if self.vertices.contains_key(&vertex.id) {
            return Err(Error::DuplicateId { entity: "vertex", id: vertex.id });
        }
        validate_properties(&vertex.properties)?;
        let id = vertex.id;
        self.vertices.insert(id, vertex);
        Ok(id)
    }

    pub fn add_edge(&mut self, edge: Edge) -> Result<u64> {
        for endpoint in [edge.src, edge.dst] {
            if !self.vertices.contains_key(&endpoint) {
                return Err(Error::DanglingEndpoint { edge: edge.id, vertex: endpoint });
            }
        }
        if self.edges.contains_key(&edge.id) {
            return Err(Error::DuplicateId { entity: "edge", id: edge.id });
        }
        validate_properties(&edge.properties)?;
        let id = edge.id;
        self.edges.insert(id, edge);
        Ok(id)
    }

    /// Sorts entities by id and builds the neighbor index.
    pub fn freeze(self) -> PropertyGraph {
        let vertices: Vec<Vertex> = self.vertices.into_values().collect();
        let edges: Vec<Edge> = self.edges.into_values().collect();
        let vertex_index: HashMap<u64, usize> =
            vertices.iter().enumerate().map(|(i, v)| (v.id, i)).collect();
        let edge_index = edges.iter().enumerate().map(|(i, e)| (e.id, i)).collect();
        let endpoints: Vec<(usize, usize)> =
            edges.iter().map(|e| (vertex_index[&e.src], vertex_index[&e.dst])).collect();
        let (out, sym) = build_csr(vertices.len(), &endpoints);
        PropertyGraph { directed: self.directed, vertices, edges, vertex_index, edge_index, out, sym }
    }
}

/// Compressed sparse row neighbor index over vertex positions.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Csr {
    pub offsets: Vec<usize>,
    pub targets: Vec<usize>,
}

impl Csr {
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Self {
        let mut offsets = vec![0usize; n + 1];
        for &(s, _) in pairs {
            offsets[s + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets.clone();
        let mut targets = vec![0usize; pairs.len()];
        for &(s, t) in pairs {
            targets[cursor[s]] = t;
            cursor[s] += 1;
        }
        for i in 0..n {
            targets[offsets[i]..offsets[i + 1]].sort_unstable();
        }
        Csr { offsets, targets }
    }

    pub fn rows(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn nnz(&self) -> usize {
        self.targets.len()
    }
}

/// Builds the out-neighbor and symmetrized CSR indices. In the symmetrized
/// view every edge appears in both endpoint rows, self-loops once.
pub fn build_csr(n: usize, endpoints: &[(usize, usize)]) -> (Csr, Csr) {
    let out = Csr::from_pairs(n, endpoints);
    let mut both = Vec::with_capacity(endpoints.len() * 2);
    for &(s, t) in endpoints {
        both.push((s, t));
        if s != t {
            both.push((t, s));
        }
    }
    (out, Csr::from_pairs(n, &both))
}

/// Which adjacency message passing and neighbor queries follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdjacencyView {
    Out,
    Symmetric,
}

/// Frozen labeled property graph.
#[derive(Debug, Clone)]
pub struct PropertyGraph {
    directed: bool,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    vertex_index: HashMap<u64, usize>,
    edge_index: HashMap<u64, usize>,
    out: Csr,
    sym: Csr,
}

/// Indexes are derived from the entity lists, so equality compares only those.
impl PartialEq for PropertyGraph {
    fn eq(&self, other: &Self) -> bool {
        self.directed == other.directed && self.vertices == other.vertices && self.edges == other.edges
    }
}

impl PropertyGraph {
    pub fn empty(directed: bool) -> Self {
        GraphBuilder::new(directed).freeze()
    }

    pub fn directed(&self) -> bool {
        self.directed
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Vertices in ascending id order.
    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    /// Edges in ascending id order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex(&self, id: u64) -> Option<&Vertex> {
        self.vertex_index.get(&id).map(|&i| &self.vertices[i])
    }

    pub fn edge(&self, id: u64) -> Option<&Edge> {
        self.edge_index.get(&id).map(|&i| &self.edges[i])
    }

    /// Row position of a vertex id.
    pub fn vertex_position(&self, id: u64) -> Option<usize> {
        self.vertex_index.get(&id).copied()
    }

    pub fn vertex_ids(&self) -> Vec<u64> {
        self.vertices.iter().map(|v| v.id).collect()
    }

    /// Default view: out-neighbors for directed graphs, symmetrized otherwise.
    pub fn default_view(&self) -> AdjacencyView {
        if self.directed {
            AdjacencyView::Out
        } else {
            AdjacencyView::Symmetric
        }
    }

    pub fn csr(&self, view: AdjacencyView) -> &Csr {
        match view {
            AdjacencyView::Out => &self.out,
            AdjacencyView::Symmetric => &self.sym,
        }
    }

    /// Neighbor ids in ascending order under the default view.
    pub fn neighbors(&self, id: u64) -> Result<Vec<u64>> {
        self.neighbors_in(self.default_view(), id)
    }

    pub fn neighbors_in(&self, view: AdjacencyView, id: u64) -> Result<Vec<u64>> {
        let pos = self.vertex_position(id).ok_or(Error::UnknownVertex(id))?;
        Ok(self.csr(view).row(pos).iter().map(|&j| self.vertices[j].id).collect())
    }

    pub fn degree(&self, id: u64) -> Result<usize> {
        let pos = self.vertex_position(id).ok_or(Error::UnknownVertex(id))?;
        Ok(self.csr(self.default_view()).row(pos).len())
    }

    /// Rebuilds both CSR indices from the edge list.
    pub fn rebuild_adjacency(&self) -> (Csr, Csr) {
        let endpoints: Vec<(usize, usize)> = self
            .edges
            .iter()
            .map(|e| (self.vertex_index[&e.src], self.vertex_index[&e.dst]))
            .collect();
        build_csr(self.vertices.len(), &endpoints)
    }

    /// Sorted union of vertex and edge labels.
    pub fn label_universe(&self) -> Vec<String> {
        let mut set: BTreeSet<&str> = BTreeSet::new();
        set.extend(self.vertices.iter().flat_map(|v| v.labels.iter().map(String::as_str)));
        set.extend(self.edges.iter().flat_map(|e| e.labels.iter().map(String::as_str)));
        set.into_iter().map(str::to_owned).collect()
    }

    /// Sorted union of vertex and edge property keys.
    pub fn key_universe(&self) -> Vec<String> {
        let mut set: BTreeSet<&str> = BTreeSet::new();
        set.extend(self.vertices.iter().flat_map(|v| v.properties.keys().map(String::as_str)));
        set.extend(self.edges.iter().flat_map(|e| e.properties.keys().map(String::as_str)));
        set.into_iter().map(str::to_owned).collect()
    }

    /// Sorted labels appearing on entities of one kind.
    pub fn labels_of(&self, kind: EntityKind) -> Vec<String> {
        let set: BTreeSet<&str> = match kind {
            EntityKind::Vertex => {
                self.vertices.iter().flat_map(|v| v.labels.iter().map(String::as_str)).collect()
            }
            EntityKind::Edge => {
                self.edges.iter().flat_map(|e| e.labels.iter().map(String::as_str)).collect()
            }
        };
        set.into_iter().map(str::to_owned).collect()
    }

    /// Sorted property keys appearing on entities of one kind.
    pub fn keys_of(&self, kind: EntityKind) -> Vec<String> {
        let set: BTreeSet<&str> = match kind {
            EntityKind::Vertex => {
                self.vertices.iter().flat_map(|v| v.properties.keys().map(String::as_str)).collect()
            }
            EntityKind::Edge => {
                self.edges.iter().flat_map(|e| e.properties.keys().map(String::as_str)).collect()
            }
        };
        set.into_iter().map(str::to_owned).collect()
    }

    /// Returns to a builder for further mutation.
    pub fn thaw(self) -> GraphBuilder {
        GraphBuilder {
            directed: self.directed,
            vertices: self.vertices.into_iter().map(|v| (v.id, v)).collect(),
            edges: self.edges.into_iter().map(|e| (e.id, e)).collect(),
        }
    }

    /// Induced subgraph on the given vertex positions (ascending); returns
    /// the symmetric-view CSR of the subgraph over local positions.
    pub fn induced_csr(&self, view: AdjacencyView, positions: &[usize]) -> Csr {
        induced_csr(self.csr(view), positions)
    }
}

/// Restricts a CSR to the given sorted row positions, renumbering locally.
pub fn induced_csr(csr: &Csr, positions: &[usize]) -> Csr {
    let mut local = vec![usize::MAX; csr.rows()];
    for (i, &p) in positions.iter().enumerate() {
        local[p] = i;
    }
    let mut offsets = Vec::with_capacity(positions.len() + 1);
    let mut targets = Vec::new();
    offsets.push(0);
    for &p in positions {
        for t in csr.row(p) {
            if local[*t] != usize::MAX {
                targets.push(local[*t]);
            }
        }
        offsets.push(targets.len());
    }
    Csr { offsets, targets }
}
