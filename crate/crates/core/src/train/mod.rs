//! Optimization loop: Adam with cosine-annealed learning rate over node
//! subgraph mini-batches, best-validation model selection.

mod loss;
mod optim;
mod sampler;

use std::fmt::Write as _;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use loss::{argmax_rows, evaluate, loss_and_grad, TaskKind};
pub use optim::{cosine_lr, Adam, AdamConfig};
pub use sampler::{default_nodes_per_batch, sample_node_subgraph, Sampler};

use crate::encoder::FeatureMatrix;
use crate::error::{Error, Result};
use crate::gnn::{DenseMatrix, GnnModel, ModelConfig, NormalizedAdjacency, Parameterized};
use crate::graph::{AdjacencyView, PropertyGraph};
use crate::io::SplitMasks;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Optimizer steps (sampled subgraphs) per epoch.
    pub batch_size: usize,
    pub lr0: f64,
    pub adam: AdamConfig,
    pub seed: u64,
    pub task: TaskKind,
    pub sampler: Sampler,
}

impl TrainConfig {
    pub fn new(task: TaskKind) -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 32,
            lr0: 0.01,
            adam: AdamConfig::default(),
            seed: 0,
            task,
            sampler: Sampler::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
        }
        if !(self.lr0 >= 0.0 && self.lr0.is_finite()) {
            return Err(Error::InvalidConfig(format!("lr0 must be a finite non-negative number, got {}", self.lr0)));
        }
        if let TaskKind::Classification { num_classes } = self.task {
            if num_classes < 2 {
                return Err(Error::InvalidConfig("classification needs at least two classes".into()));
            }
        }
        if let Sampler::NodeSubgraph { nodes_per_batch: Some(0) } = self.sampler {
            return Err(Error::InvalidConfig("nodes_per_batch must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub val_metric: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub metric: String,
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_metric: f64,
    pub test_metric: f64,
    pub wall_time_secs: f64,
}

/// Equality ignores wall time.
impl PartialEq for TrainReport {
    fn eq(&self, other: &Self) -> bool {
        self.metric == other.metric
            && self.epochs == other.epochs
            && self.best_epoch == other.best_epoch
            && self.best_val_metric.to_bits() == other.best_val_metric.to_bits()
            && self.test_metric.to_bits() == other.test_metric.to_bits()
    }
}

impl TrainReport {
    /// `epoch,lr,train_loss,val_metric`, one row per epoch.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,lr,train_loss,val_metric\n");
        for e in &self.epochs {
            let _ = writeln!(s, "{},{:e},{:.12e},{:.12e}", e.epoch, e.lr, e.train_loss, e.val_metric);
        }
        s
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "metric": self.metric,
            "epochs": self.epochs.len(),
            "best_epoch": self.best_epoch,
            "best_val_metric": self.best_val_metric,
            "test_metric": self.test_metric,
        })
    }
}

/// Mean and sample standard deviation of repeated runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatSummary {
    pub values: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl RepeatSummary {
    pub fn from_values(values: Vec<f64>) -> Self {
        let n = values.len() as f64;
        let mean = if values.is_empty() { f64::NAN } else { values.iter().sum::<f64>() / n };
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        RepeatSummary { values, mean, std }
    }
}

/// Default number of seeds behind a mean/std.
pub const REPEAT_SEEDS: usize = 5;

/// Vertex positions of each split part, in id order.
pub fn split_positions(graph: &PropertyGraph, splits: &SplitMasks) -> Result<[Vec<usize>; 3]> {
    let map = |ids: &[u64]| -> Result<Vec<usize>> {
        let mut out: Vec<usize> =
            ids.iter().map(|&id| graph.vertex_position(id).ok_or(Error::UnknownVertex(id))).collect::<Result<_>>()?;
        out.sort_unstable();
        Ok(out)
    };
    Ok([map(&splits.train)?, map(&splits.val)?, map(&splits.test)?])
}

/// Everything a run needs besides the configs: the message-passing graph,
/// inputs and per-vertex targets (class index or real value).
pub struct TrainingData<'a, T> {
    pub csr: &'a crate::graph::Csr,
    pub adjacency: NormalizedAdjacency<T>,
    pub features: DenseMatrix<T>,
    pub targets: &'a [f64],
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl<'a, T: Scalar> TrainingData<'a, T> {
    /// Message passing always runs on the symmetric view of the graph.
    pub fn new(
        graph: &'a PropertyGraph,
        features: &FeatureMatrix,
        targets: &'a [f64],
        splits: &SplitMasks,
    ) -> Result<Self> {
        let n = graph.vertex_count();
        if features.rows() != n || features.ids.iter().zip(graph.vertices()).any(|(&id, v)| id != v.id) {
            return Err(Error::RowMismatch { expected: n, found: features.rows() });
        }
        if targets.len() != n {
            return Err(Error::RowMismatch { expected: n, found: targets.len() });
        }
        let [train, val, test] = split_positions(graph, splits)?;
        let csr = graph.csr(AdjacencyView::Symmetric);
        Ok(TrainingData {
            csr,
            adjacency: NormalizedAdjacency::from_csr(csr),
            features: DenseMatrix::from_features(features),
            targets,
            train,
            val,
            test,
        })
    }
}

/// Train/val/test positions must be non-empty and targets finite on them.
fn check_masks<T>(data: &TrainingData<'_, T>) -> Result<()> {
    for mask in [&data.train, &data.val, &data.test] {
        if mask.is_empty() {
            return Err(Error::EmptyMask);
        }
        if let Some(&r) = mask.iter().find(|&&r| !data.targets[r].is_finite()) {
            return Err(Error::InvalidConfig(format!("target of vertex position {r} is not finite")));
        }
    }
    Ok(())
}

/// Regression targets are standardized with train statistics during
/// optimization; the returned model is rescaled to predict raw values.
fn target_scale<T>(data: &TrainingData<'_, T>, task: TaskKind) -> (f64, f64) {
    if task != TaskKind::Regression {
        return (0.0, 1.0);
    }
    let vals: Vec<f64> = data.train.iter().map(|&r| data.targets[r]).collect();
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
    let std = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
    (mean, std)
}

fn fold_scale_into_output<T: Scalar>(model: &mut GnnModel<T>, (mean, std): (f64, f64)) {
    let s = T::from_f64_lossy(std);
    let m = T::from_f64_lossy(mean);
    for w in model.post.weight.data_mut() {
        *w *= s;
    }
    for b in &mut model.post.bias {
        *b = *b * s + m;
    }
}

/// Full pipeline for one seed: build the model, optimize, pick the best
/// validation epoch and score it on the test part.
pub fn train<T: Scalar>(
    graph: &PropertyGraph,
    features: &FeatureMatrix,
    targets: &[f64],
    splits: &SplitMasks,
    model: &ModelConfig,
    config: &TrainConfig,
) -> Result<(GnnModel<T>, TrainReport)> {
    let data = TrainingData::new(graph, features, targets, splits)?;
    train_on(&data, model, config)
}

/// [`train`] on prepared data; `model.in_dim`, `out_dim` and `seed` are
/// overridden from the data and `config`.
pub fn train_on<T: Scalar>(
    data: &TrainingData<'_, T>,
    model: &ModelConfig,
    config: &TrainConfig,
) -> Result<(GnnModel<T>, TrainReport)> {
    config.validate()?;
    check_masks(data)?;
    let start = Instant::now();
    let task = config.task;
    let mut model = GnnModel::<T>::new(ModelConfig {
        in_dim: data.features.cols(),
        out_dim: task.output_dim(),
        seed: config.seed,
        ..model.clone()
    })?;
    let (mean, std) = target_scale(data, task);
    let scaled: Vec<f64> =
        if task == TaskKind::Regression { data.targets.iter().map(|t| (t - mean) / std).collect() } else { data.targets.to_vec() };
    let shapes: Vec<usize> = model.params().iter().map(|p| p.len()).collect();
    let mut adam = Adam::new(config.adam, &shapes);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);

    let n = data.features.rows();
    let budget = config.sampler.budget(n);
    let mut in_train = vec![false; n];
    for &r in &data.train {
        in_train[r] = true;
    }

    let mut records = Vec::with_capacity(config.epochs);
    let mut best: Option<(usize, f64, Vec<Vec<T>>)> = None;
    for epoch in 0..config.epochs {
        let lr = cosine_lr(epoch, config.epochs, config.lr0);
        let mut loss_sum = 0.0;
        let mut steps = 0usize;
        for _ in 0..config.batch_size {
            let sub;
            let (adj, x, targets, mask): (&NormalizedAdjacency<T>, &DenseMatrix<T>, Vec<f64>, Vec<usize>);
            if budget >= n {
                (adj, x, targets, mask) = (&data.adjacency, &data.features, Vec::new(), data.train.clone());
            } else {
                let (positions, csr) = sample_node_subgraph(data.csr, budget, &mut rng);
                let local_mask: Vec<usize> = (0..positions.len()).filter(|&i| in_train[positions[i]]).collect();
                let local_targets: Vec<f64> = positions.iter().map(|&p| scaled[p]).collect();
                sub = (NormalizedAdjacency::from_csr(&csr), data.features.select_rows(&positions));
                (adj, x, targets, mask) = (&sub.0, &sub.1, local_targets, local_mask);
            }
            if mask.is_empty() {
                continue;
            }
            let targets = if targets.is_empty() { &scaled[..] } else { &targets[..] };
            let out = model.forward(adj, x)?;
            let (loss, grad) = loss_and_grad(task, &out, targets, &mask)?;
            let grads = model.backward_params(adj, &grad)?;
            adam.step(model.params_mut(), &grads, lr)?;
            loss_sum += loss;
            steps += 1;
        }
        let full = model.predict(&data.adjacency, &data.features)?;
        let train_loss =
            if steps > 0 { loss_sum / steps as f64 } else { loss_and_grad(task, &full, &scaled, &data.train)?.0 };
        let val_metric = scored(task, &full, data.targets, &data.val, (mean, std))?;
        if !train_loss.is_finite() || !val_metric.is_finite() {
            return Err(Error::InvalidConfig(format!("training diverged at epoch {}", epoch + 1)));
        }
        if best.as_ref().is_none_or(|(_, b, _)| task.improves(val_metric, *b)) {
            best = Some((epoch + 1, val_metric, model.snapshot()));
        }
        records.push(EpochRecord { epoch: epoch + 1, lr, train_loss, val_metric });
    }
    let (best_epoch, best_val_metric, params) = best.expect("at least one epoch");
    model.restore(&params)?;
    if task == TaskKind::Regression {
        fold_scale_into_output(&mut model, (mean, std));
    }
    let full = model.predict(&data.adjacency, &data.features)?;
    let test_metric = evaluate(task, &full, data.targets, &data.test)?;
    Ok((
        model,
        TrainReport {
            metric: task.metric_name().to_string(),
            epochs: records,
            best_epoch,
            best_val_metric,
            test_metric,
            wall_time_secs: start.elapsed().as_secs_f64(),
        },
    ))
}

/// Metric on raw targets for a model whose outputs are still standardized.
fn scored<T: Scalar>(
    task: TaskKind,
    outputs: &DenseMatrix<T>,
    targets: &[f64],
    mask: &[usize],
    (mean, std): (f64, f64),
) -> Result<f64> {
    if task == TaskKind::Regression {
        let raw = outputs.map(|v| T::from_f64_lossy(v.to_f64_lossy() * std + mean));
        evaluate(task, &raw, targets, mask)
    } else {
        evaluate(task, outputs, targets, mask)
    }
}

/// Test metric over `seeds` (each run uses `config` with that seed).
pub fn repeat_train<T: Scalar>(
    data: &TrainingData<'_, T>,
    model: &ModelConfig,
    config: &TrainConfig,
    seeds: &[u64],
) -> Result<(RepeatSummary, Vec<TrainReport>)> {
    let mut reports = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        reports.push(train_on(data, model, &TrainConfig { seed, ..config.clone() })?.1);
    }
    Ok((RepeatSummary::from_values(reports.iter().map(|r| r.test_metric).collect()), reports))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repeat_summary_stats() {
        let s = RepeatSummary::from_values(vec![1.0, 2.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.std, 1.0);
        assert_eq!(RepeatSummary::from_values(vec![4.0]).std, 0.0);
    }

    #[test]
    fn validation() {
        let mut c = TrainConfig::new(TaskKind::Regression);
        assert!(c.validate().is_ok());
        c.epochs = 0;
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
        let c = TrainConfig { batch_size: 0, ..TrainConfig::new(TaskKind::Regression) };
        assert!(c.validate().is_err());
    }
}
