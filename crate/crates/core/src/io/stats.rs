use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph::{EntityKind, PropertyGraph};

/// Table-style summary of a graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_vertices: usize,
    pub n_edges: usize,
    /// Distinct vertex labels.
    pub n_labels: usize,
    pub n_edge_labels: usize,
    /// Distinct vertex property keys.
    pub n_property_keys: usize,
    pub n_edge_property_keys: usize,
    /// Fraction of vertices carrying each label.
    pub label_fractions: BTreeMap<String, f64>,
}

pub fn dataset_stats(graph: &PropertyGraph) -> DatasetStats {
    let n = graph.vertex_count();
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for v in graph.vertices() {
        for l in &v.labels {
            *counts.entry(l.clone()).or_default() += 1;
        }
    }
    let label_fractions = counts.into_iter().map(|(l, c)| (l, c as f64 / n as f64)).collect();
    DatasetStats {
        n_vertices: n,
        n_edges: graph.edge_count(),
        n_labels: graph.labels_of(EntityKind::Vertex).len(),
        n_edge_labels: graph.labels_of(EntityKind::Edge).len(),
        n_property_keys: graph.keys_of(EntityKind::Vertex).len(),
        n_edge_property_keys: graph.keys_of(EntityKind::Edge).len(),
        label_fractions,
    }
}

impl std::fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "n_vertices={}", self.n_vertices)?;
        writeln!(f, "n_edges={}", self.n_edges)?;
        writeln!(f, "n_labels={}", self.n_labels)?;
        writeln!(f, "n_edge_labels={}", self.n_edge_labels)?;
        writeln!(f, "n_property_keys={}", self.n_property_keys)?;
        writeln!(f, "n_edge_property_keys={}", self.n_edge_property_keys)?;
        for (label, frac) in &self.label_fractions {
            writeln!(f, "fraction[{label}]={frac:.4}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{GraphBuilder, Vertex};

    #[test]
    fn empty_graph_is_all_zeros() {
        let s = dataset_stats(&PropertyGraph::empty(false));
        assert_eq!((s.n_vertices, s.n_edges, s.n_labels, s.n_property_keys), (0, 0, 0, 0));
        assert!(s.label_fractions.is_empty());
    }

    #[test]
    fn label_fraction() {
        let mut b = GraphBuilder::new(false);
        for i in 0..10 {
            let v = if i < 6 { Vertex::new(i).with_label("author") } else { Vertex::new(i) };
            b.add_vertex(v).unwrap();
        }
        let s = dataset_stats(&b.freeze());
        assert_eq!(s.label_fractions["author"], 0.6);
        assert_eq!(s.n_labels, 1);
    }
}
