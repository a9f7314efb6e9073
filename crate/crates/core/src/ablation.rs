//! Feature uplift and ablation sweeps: train the same task under different
//! input feature subsets and compare against the structure-only baseline.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoder::{augment_features, constant_column, degree_column, FeatureMatrix};
use crate::error::{Error, Result};
use crate::gnn::{ConvKind, ModelConfig};
use crate::graph::PropertyGraph;
use crate::io::{make_splits, SplitMasks, DEFAULT_RATIOS};
use crate::schema::{restrict_schema, EncodingSchema};
use crate::tasks::CompletionTask;
use crate::train::{train_on, RepeatSummary, TaskKind, TrainConfig, TrainReport, TrainingData, REPEAT_SEEDS};

/// Which label/property blocks feed the model.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "type", content = "names", rename_all = "snake_case")]
pub enum FeatureConfig {
    /// Structure only: a constant 1 column.
    None,
    /// Every label as one group.
    Labels,
    Label(String),
    Property(String),
    LabelsAndProperty(String),
    /// Several property keys, e.g. an ablation pair.
    Properties(Vec<String>),
    All,
}

impl FeatureConfig {
    /// Labels and keys of `schema` this configuration keeps.
    pub fn names(&self, schema: &EncodingSchema) -> BTreeSet<String> {
        let labels = || schema.label_order.iter().cloned();
        match self {
            FeatureConfig::None => BTreeSet::new(),
            FeatureConfig::Labels => labels().collect(),
            FeatureConfig::Label(l) => BTreeSet::from([l.clone()]),
            FeatureConfig::Property(k) => BTreeSet::from([k.clone()]),
            FeatureConfig::LabelsAndProperty(k) => labels().chain(std::iter::once(k.clone())).collect(),
            FeatureConfig::Properties(keys) => keys.iter().cloned().collect(),
            FeatureConfig::All => schema.names().map(str::to_string).collect(),
        }
    }
}

impl fmt::Display for FeatureConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureConfig::None => write!(f, "none"),
            FeatureConfig::Labels => write!(f, "labels"),
            FeatureConfig::Label(l) => write!(f, "label:{l}"),
            FeatureConfig::Property(k) => write!(f, "prop:{k}"),
            FeatureConfig::LabelsAndProperty(k) => write!(f, "labels+prop:{k}"),
            FeatureConfig::Properties(keys) => {
                let parts: Vec<String> = keys.iter().map(|k| format!("prop:{k}")).collect();
                write!(f, "{}", parts.join("+"))
            }
            FeatureConfig::All => write!(f, "all"),
        }
    }
}

/// Parses the [`Display`](fmt::Display) form.
impl FromStr for FeatureConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("unknown feature configuration {s:?}"));
        Ok(match s {
            "none" => FeatureConfig::None,
            "labels" => FeatureConfig::Labels,
            "all" => FeatureConfig::All,
            _ => {
                if let Some(l) = s.strip_prefix("label:") {
                    FeatureConfig::Label(l.to_string())
                } else if let Some(k) = s.strip_prefix("labels+prop:") {
                    FeatureConfig::LabelsAndProperty(k.to_string())
                } else if s.starts_with("prop:") {
                    let keys: Vec<String> = s
                        .split('+')
                        .map(|p| p.strip_prefix("prop:").map(str::to_string).ok_or_else(bad))
                        .collect::<Result<_>>()?;
                    if keys.len() == 1 {
                        FeatureConfig::Property(keys.into_iter().next().unwrap())
                    } else {
                        FeatureConfig::Properties(keys)
                    }
                } else {
                    return Err(bad());
                }
            }
        })
    }
}

/// A task, its encoded features and the training recipe shared by every
/// cell of an experiment.
pub struct Experiment<'a> {
    pub graph: &'a PropertyGraph,
    pub task: &'a CompletionTask,
    /// Task schema (target already excluded).
    pub schema: EncodingSchema,
    /// Full encoding under `schema`; every configuration slices it.
    pub features: FeatureMatrix,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub seeds: Vec<u64>,
    /// Adds a degree column to the structure-only input.
    pub degree_feature: bool,
}

impl<'a> Experiment<'a> {
    pub fn new(
        graph: &'a PropertyGraph,
        task: &'a CompletionTask,
        schema: EncodingSchema,
        features: FeatureMatrix,
        model: ModelConfig,
        train: TrainConfig,
    ) -> Self {
        let base = train.seed;
        Experiment {
            graph,
            task,
            schema,
            features,
            model,
            train: TrainConfig { task: task.task, ..train },
            seeds: (0..REPEAT_SEEDS as u64).map(|i| base + i).collect(),
            degree_feature: false,
        }
    }

    /// Column slice of the full matrix for `config`; empty selections fall
    /// back to the constant structure-only input.
    pub fn features_for(&self, config: &FeatureConfig) -> Result<FeatureMatrix> {
        let sub = restrict_schema(&self.schema, &config.names(&self.schema))?;
        let sliced = self.features.restrict(&self.schema, &sub)?;
        if sliced.cols > 0 {
            return Ok(sliced);
        }
        let mut extra = constant_column(sliced.rows(), 1.0);
        if self.degree_feature {
            for (row, d) in extra.iter_mut().zip(degree_column(self.graph)) {
                row.extend(d);
            }
        }
        augment_features(&sliced, &extra)
    }

    /// Stratified splits of the eligible vertices, shared by all cells with
    /// the same seed.
    pub fn splits(&self, seed: u64) -> Result<SplitMasks> {
        let strata = self.task.strata(self.graph);
        make_splits(&self.task.eligible, DEFAULT_RATIOS, seed, strata.as_deref())
    }

    pub fn run_cell(&self, kind: ConvKind, config: &FeatureConfig, seed: u64) -> Result<TrainReport> {
        let features = self.features_for(config)?;
        let splits = self.splits(seed)?;
        let data = TrainingData::<f64>::new(self.graph, &features, &self.task.targets, &splits)?;
        let model = ModelConfig { kind, ..self.model.clone() };
        Ok(train_on(&data, &model, &TrainConfig { seed, ..self.train.clone() })?.1)
    }

    /// Runs every (cell, seed) job on the current rayon pool; results keep
    /// the order of `cells`.
    pub fn run_cells(&self, cells: &[(ConvKind, FeatureConfig)]) -> Result<Vec<CellResult>> {
        let jobs: Vec<(usize, u64)> =
            (0..cells.len()).flat_map(|c| self.seeds.iter().map(move |&s| (c, s))).collect();
        let reports: Vec<TrainReport> = jobs
            .par_iter()
            .map(|&(c, seed)| self.run_cell(cells[c].0, &cells[c].1, seed))
            .collect::<Result<_>>()?;
        let per_cell = self.seeds.len();
        Ok(cells
            .iter()
            .zip(reports.chunks(per_cell.max(1)))
            .map(|((kind, config), reps)| CellResult {
                model: *kind,
                features: config.clone(),
                summary: RepeatSummary::from_values(reps.iter().map(|r| r.test_metric).collect()),
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub model: ConvKind,
    pub features: FeatureConfig,
    pub summary: RepeatSummary,
}

fn fmt_metric(v: f64) -> String {
    format!("{v:.6}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpliftTable {
    pub metric: String,
    pub rows: Vec<CellResult>,
}

impl UpliftTable {
    pub fn get(&self, model: ConvKind, features: &FeatureConfig) -> Option<&RepeatSummary> {
        self.rows.iter().find(|r| r.model == model && &r.features == features).map(|r| &r.summary)
    }

    /// `model,features,mean,std,runs`.
    pub fn to_csv(&self) -> String {
        let mut s = format!("model,features,mean_{m},std_{m},runs\n", m = self.metric);
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.model.as_str(),
                r.features,
                fmt_metric(r.summary.mean),
                fmt_metric(r.summary.std),
                r.summary.values.len()
            );
        }
        s
    }
}

/// One model per (model kind, configuration, seed).
pub fn run_uplift_experiment(
    exp: &Experiment<'_>,
    kinds: &[ConvKind],
    configs: &[FeatureConfig],
) -> Result<UpliftTable> {
    let cells: Vec<(ConvKind, FeatureConfig)> =
        kinds.iter().flat_map(|&k| configs.iter().map(move |c| (k, c.clone()))).collect();
    Ok(UpliftTable { metric: exp.train.task.metric_name().into(), rows: exp.run_cells(&cells)? })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AblationOptions {
    /// Train every unordered pair of property keys.
    pub pairs: bool,
    /// One row per label instead of the label group.
    pub per_label: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub model: ConvKind,
    pub task: String,
    pub metric: String,
    pub baseline: RepeatSummary,
    /// Label group or individual labels.
    pub labels: Vec<(FeatureConfig, RepeatSummary)>,
    pub keys: Vec<String>,
    pub singles: Vec<RepeatSummary>,
    /// Upper triangle `(i, j)` with `i < j`, row-major.
    pub pairs: Vec<(usize, usize, RepeatSummary)>,
}

impl AblationReport {
    fn lower_is_better(&self) -> bool {
        self.metric == TaskKind::Regression.metric_name()
    }

    /// Improvement over the baseline: positive is better for both accuracy
    /// and MAE.
    pub fn delta(&self, metric: f64) -> f64 {
        if self.lower_is_better() {
            self.baseline.mean - metric
        } else {
            metric - self.baseline.mean
        }
    }

    pub fn single(&self, key: &str) -> Option<&RepeatSummary> {
        self.keys.iter().position(|k| k == key).map(|i| &self.singles[i])
    }

    /// Symmetric key × key summary matrix; the diagonal holds single keys.
    pub fn matrix(&self) -> Vec<Vec<Option<&RepeatSummary>>> {
        let n = self.keys.len();
        let mut m: Vec<Vec<Option<&RepeatSummary>>> = vec![vec![None; n]; n];
        for (i, s) in self.singles.iter().enumerate() {
            m[i][i] = Some(s);
        }
        for (i, j, s) in &self.pairs {
            m[*i][*j] = Some(s);
            m[*j][*i] = Some(s);
        }
        m
    }

    pub fn delta_matrix(&self) -> Vec<Vec<Option<f64>>> {
        self.matrix().iter().map(|row| row.iter().map(|c| c.map(|s| self.delta(s.mean))).collect()).collect()
    }

    /// `feature,mean,std,delta` with `delta` the signed improvement.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("feature,mean,std,delta\n");
        let mut row = |name: String, r: &RepeatSummary| {
            let _ = writeln!(s, "{name},{},{},{}", fmt_metric(r.mean), fmt_metric(r.std), fmt_metric(self.delta(r.mean)));
        };
        row(FeatureConfig::None.to_string(), &self.baseline);
        for (cfg, r) in &self.labels {
            row(cfg.to_string(), r);
        }
        for (k, r) in self.keys.iter().zip(&self.singles) {
            row(FeatureConfig::Property(k.clone()).to_string(), r);
        }
        for (i, j, r) in &self.pairs {
            row(FeatureConfig::Properties(vec![self.keys[*i].clone(), self.keys[*j].clone()]).to_string(), r);
        }
        s
    }
}

/// Baseline, labels, every property key and (optionally) every unordered
/// key pair for one model kind.
pub fn run_pairwise_ablation(exp: &Experiment<'_>, kind: ConvKind, opts: AblationOptions) -> Result<AblationReport> {
    let keys = exp.schema.property_keys();
    if opts.pairs && keys.len() < 2 {
        return Err(Error::InvalidConfig(format!("pairwise ablation needs two property keys, found {}", keys.len())));
    }
    let label_cfgs: Vec<FeatureConfig> = if exp.schema.label_order.is_empty() {
        Vec::new()
    } else if opts.per_label {
        exp.schema.label_order.iter().map(|l| FeatureConfig::Label(l.clone())).collect()
    } else {
        vec![FeatureConfig::Labels]
    };
    let mut configs = vec![FeatureConfig::None];
    configs.extend(label_cfgs.iter().cloned());
    configs.extend(keys.iter().map(|k| FeatureConfig::Property(k.clone())));
    let mut pair_index = Vec::new();
    if opts.pairs {
        for i in 0..keys.len() {
            for j in i + 1..keys.len() {
                pair_index.push((i, j));
                configs.push(FeatureConfig::Properties(vec![keys[i].clone(), keys[j].clone()]));
            }
        }
    }
    let cells: Vec<(ConvKind, FeatureConfig)> = configs.into_iter().map(|c| (kind, c)).collect();
    let mut results = exp.run_cells(&cells)?.into_iter().map(|c| c.summary);
    let baseline = results.next().expect("baseline cell");
    let labels = label_cfgs.into_iter().zip(results.by_ref()).collect();
    let singles: Vec<RepeatSummary> = results.by_ref().take(keys.len()).collect();
    let pairs = pair_index.into_iter().zip(results).map(|((i, j), s)| (i, j, s)).collect();
    Ok(AblationReport {
        model: kind,
        task: exp.task.kind.describe(),
        metric: exp.train.task.metric_name().into(),
        baseline,
        labels,
        keys,
        singles,
        pairs,
    })
}
