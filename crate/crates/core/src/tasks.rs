//! Completion tasks: predict missing labels (classification) or property
//! values (regression), with the target kept out of its own encoding.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::encoder::{encode_vertices, FeatureMatrix};
use crate::error::{Error, Result};
use crate::graph::{EntityKind, PropertyGraph};
use crate::schema::{exclude_from_schema, infer_schema, EncodingSchema, SchemaOptions};
use crate::train::TaskKind;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CompletionKind {
    /// One label: binary presence. Several sibling labels: multi-class over
    /// vertices carrying exactly one of them.
    LabelPrediction { targets: Vec<String> },
    PropertyPrediction { key: String },
}

impl CompletionKind {
    pub fn label(name: impl Into<String>) -> Self {
        CompletionKind::LabelPrediction { targets: vec![name.into()] }
    }

    pub fn property(key: impl Into<String>) -> Self {
        CompletionKind::PropertyPrediction { key: key.into() }
    }

    /// Names that must never reach the input encoding.
    pub fn exclusions(&self) -> BTreeSet<String> {
        match self {
            CompletionKind::LabelPrediction { targets } => targets.iter().cloned().collect(),
            CompletionKind::PropertyPrediction { key } => BTreeSet::from([key.clone()]),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            CompletionKind::LabelPrediction { targets } => format!("label:{}", targets.join("|")),
            CompletionKind::PropertyPrediction { key } => format!("property:{key}"),
        }
    }
}

/// A prepared vertex-level prediction problem.
#[derive(Debug, Clone)]
pub struct CompletionTask {
    pub kind: CompletionKind,
    pub task: TaskKind,
    /// Per vertex position; NaN where the vertex is not eligible.
    pub targets: Vec<f64>,
    /// Eligible vertex ids, ascending.
    pub eligible: Vec<u64>,
    /// Class names for classification (index = class id).
    pub class_names: Vec<String>,
    pub exclusions: BTreeSet<String>,
}

impl CompletionTask {
    /// Class of every eligible vertex, aligned with `eligible`; used to
    /// stratify splits. `None` for regression.
    pub fn strata(&self, graph: &PropertyGraph) -> Option<Vec<usize>> {
        match self.task {
            TaskKind::Regression => None,
            TaskKind::Classification { .. } => Some(
                self.eligible
                    .iter()
                    .map(|&id| self.targets[graph.vertex_position(id).expect("eligible vertex exists")] as usize)
                    .collect(),
            ),
        }
    }

    /// Classification over externally supplied classes (one per vertex
    /// position), e.g. fixture ground truth. Nothing is excluded.
    pub fn from_classes(graph: &PropertyGraph, classes: &[usize], class_names: Vec<String>) -> Result<Self> {
        if classes.len() != graph.vertex_count() {
            return Err(Error::RowMismatch { expected: graph.vertex_count(), found: classes.len() });
        }
        let num_classes = class_names.len();
        if let Some(&c) = classes.iter().find(|&&c| c >= num_classes) {
            return Err(Error::InvalidConfig(format!("class {c} has no name")));
        }
        let distinct: BTreeSet<usize> = classes.iter().copied().collect();
        if distinct.len() < 2 {
            return Err(Error::DegenerateTarget("classes".into(), "fewer than two classes present".into()));
        }
        Ok(CompletionTask {
            kind: CompletionKind::LabelPrediction { targets: Vec::new() },
            task: TaskKind::Classification { num_classes },
            targets: classes.iter().map(|&c| c as f64).collect(),
            eligible: graph.vertex_ids(),
            class_names,
            exclusions: BTreeSet::new(),
        })
    }

    /// The task's input schema: `full` minus every excluded name.
    pub fn restrict_schema(&self, full: &EncodingSchema) -> EncodingSchema {
        let schema = exclude_from_schema(full, &self.exclusions);
        debug_assert!(self.exclusions.iter().all(|n| !schema.contains_name(n)));
        schema
    }
}

pub fn build_completion_task(graph: &PropertyGraph, kind: CompletionKind) -> Result<CompletionTask> {
    let n = graph.vertex_count();
    let mut targets = vec![f64::NAN; n];
    let mut eligible = Vec::new();
    let exclusions = kind.exclusions();
    let (task, class_names) = match &kind {
        CompletionKind::LabelPrediction { targets: names } => {
            if names.is_empty() {
                return Err(Error::UnknownTarget("empty label list".into()));
            }
            let universe = graph.labels_of(EntityKind::Vertex);
            if let Some(missing) = names.iter().find(|l| !universe.contains(l)) {
                return Err(Error::UnknownTarget(missing.clone()));
            }
            let distinct: BTreeSet<&String> = names.iter().collect();
            if distinct.len() != names.len() {
                return Err(Error::InvalidConfig("target labels repeat".into()));
            }
            if names.len() == 1 {
                for (i, v) in graph.vertices().iter().enumerate() {
                    targets[i] = if v.labels.contains(&names[0]) { 1.0 } else { 0.0 };
                    eligible.push(v.id);
                }
                (TaskKind::Classification { num_classes: 2 }, vec![format!("not {}", names[0]), names[0].clone()])
            } else {
                for (i, v) in graph.vertices().iter().enumerate() {
                    let present: Vec<usize> = (0..names.len()).filter(|&k| v.labels.contains(&names[k])).collect();
                    if let [k] = present[..] {
                        targets[i] = k as f64;
                        eligible.push(v.id);
                    }
                }
                (TaskKind::Classification { num_classes: names.len() }, names.clone())
            }
        }
        CompletionKind::PropertyPrediction { key } => {
            if !graph.keys_of(EntityKind::Vertex).contains(key) {
                return Err(Error::UnknownTarget(key.clone()));
            }
            for (i, v) in graph.vertices().iter().enumerate() {
                if let Some(values) = v.properties.get(key) {
                    let nums: Option<Vec<f64>> = values.iter().map(|x| x.as_number()).collect();
                    let nums = nums.ok_or_else(|| {
                        Error::DegenerateTarget(key.clone(), "values are not scalar numbers".into())
                    })?;
                    targets[i] = nums.iter().sum::<f64>() / nums.len() as f64;
                    eligible.push(v.id);
                }
            }
            (TaskKind::Regression, Vec::new())
        }
    };
    let name = kind.describe();
    let present: Vec<f64> = targets.iter().copied().filter(|t| !t.is_nan()).collect();
    if present.is_empty() {
        return Err(Error::DegenerateTarget(name, "no eligible vertices".into()));
    }
    if present.iter().all(|&t| t == present[0]) {
        let what = if task == TaskKind::Regression { "constant value" } else { "single class" };
        return Err(Error::DegenerateTarget(name, what.into()));
    }
    Ok(CompletionTask { kind, task, targets, eligible, class_names, exclusions })
}

/// Task schema and full-graph encoding under it.
pub fn encode_for_task(
    graph: &PropertyGraph,
    task: &CompletionTask,
    opts: &SchemaOptions,
) -> Result<(EncodingSchema, FeatureMatrix)> {
    let full = infer_schema(graph, EntityKind::Vertex, opts)?;
    let schema = task.restrict_schema(&full);
    let features = encode_vertices(&schema, graph)?;
    Ok((schema, features))
}
