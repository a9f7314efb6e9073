use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnn::DenseMatrix;
use crate::scalar::Scalar;

/// What the output layer predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TaskKind {
    Classification { num_classes: usize },
    Regression,
}

impl TaskKind {
    pub fn output_dim(&self) -> usize {
        match *self {
            TaskKind::Classification { num_classes } => num_classes,
            TaskKind::Regression => 1,
        }
    }

    pub fn metric_name(&self) -> &'static str {
        match self {
            TaskKind::Classification { .. } => "accuracy",
            TaskKind::Regression => "mae",
        }
    }

    /// True when `a` is a strictly better metric value than `b`.
    pub fn improves(&self, a: f64, b: f64) -> bool {
        match self {
            TaskKind::Classification { .. } => a > b,
            TaskKind::Regression => a < b,
        }
    }
}

fn softmax_row<T: Scalar>(row: &[T]) -> Vec<f64> {
    let max = row.iter().map(|v| v.to_f64_lossy()).fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|v| (v.to_f64_lossy() - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn class_of(target: f64, classes: usize) -> Result<usize> {
    if target < 0.0 || target.fract() != 0.0 || target as usize >= classes {
        return Err(Error::InvalidConfig(format!("class target {target} outside 0..{classes}")));
    }
    Ok(target as usize)
}

/// Mean loss over `mask` rows and its gradient w.r.t. `outputs`.
///
/// Classification uses softmax cross-entropy with `targets[r]` the class
/// index; regression uses squared error against `targets[r]`.
pub fn loss_and_grad<T: Scalar>(
    task: TaskKind,
    outputs: &DenseMatrix<T>,
    targets: &[f64],
    mask: &[usize],
) -> Result<(f64, DenseMatrix<T>)> {
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    if outputs.cols() != task.output_dim() {
        return Err(Error::DimMismatch(format!("{} outputs for {} targets per row", outputs.cols(), task.output_dim())));
    }
    let scale = 1.0 / mask.len() as f64;
    let mut grad = DenseMatrix::zeros(outputs.rows(), outputs.cols());
    let mut loss = 0.0;
    match task {
        TaskKind::Classification { num_classes } => {
            for &r in mask {
                let class = class_of(targets[r], num_classes)?;
                let probs = softmax_row(outputs.row(r));
                // log-sum-exp form keeps saturated logits finite
                let row = outputs.row(r);
                let max = row.iter().map(|v| v.to_f64_lossy()).fold(f64::NEG_INFINITY, f64::max);
                let lse = max + row.iter().map(|v| (v.to_f64_lossy() - max).exp()).sum::<f64>().ln();
                loss += lse - row[class].to_f64_lossy();
                let g = grad.row_mut(r);
                for (c, p) in probs.into_iter().enumerate() {
                    let onehot = if c == class { 1.0 } else { 0.0 };
                    g[c] = T::from_f64_lossy((p - onehot) * scale);
                }
            }
        }
        TaskKind::Regression => {
            for &r in mask {
                let diff = outputs.get(r, 0).to_f64_lossy() - targets[r];
                loss += diff * diff;
                grad.set(r, 0, T::from_f64_lossy(2.0 * diff * scale));
            }
        }
    }
    Ok((loss * scale, grad))
}

/// Predicted class per row (first maximum on ties).
pub fn argmax_rows<T: Scalar>(outputs: &DenseMatrix<T>) -> Vec<usize> {
    (0..outputs.rows())
        .map(|r| {
            let row = outputs.row(r);
            let mut best = 0;
            for c in 1..row.len() {
                if row[c] > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Accuracy (classification) or mean absolute error (regression) on `mask`.
pub fn evaluate<T: Scalar>(task: TaskKind, outputs: &DenseMatrix<T>, targets: &[f64], mask: &[usize]) -> Result<f64> {
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let n = mask.len() as f64;
    match task {
        TaskKind::Classification { num_classes } => {
            let mut correct = 0usize;
            for &r in mask {
                let class = class_of(targets[r], num_classes)?;
                let row = outputs.row(r);
                let pred = (1..row.len()).fold(0, |b, c| if row[c] > row[b] { c } else { b });
                correct += usize::from(pred == class);
            }
            Ok(correct as f64 / n)
        }
        TaskKind::Regression => {
            Ok(mask.iter().map(|&r| (outputs.get(r, 0).to_f64_lossy() - targets[r]).abs()).sum::<f64>() / n)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO: TaskKind = TaskKind::Classification { num_classes: 2 };

    #[test]
    fn two_class_uniform_logits() {
        let out = DenseMatrix::new(1, 2, vec![0.0, 0.0]).unwrap();
        let (loss, g) = loss_and_grad(TWO, &out, &[0.0], &[0]).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(g.row(0), &[-0.5, 0.5]);
        let out = DenseMatrix::new(2, 2, vec![0.0; 4]).unwrap();
        let (_, g) = loss_and_grad(TWO, &out, &[0.0, 0.0], &[0, 1]).unwrap();
        assert_eq!(g.row(1), &[-0.25, 0.25]);
    }

    #[test]
    fn saturated_correct_prediction() {
        let out = DenseMatrix::new(1, 2, vec![20.0, -20.0]).unwrap();
        let (loss, _) = loss_and_grad(TWO, &out, &[0.0], &[0]).unwrap();
        assert!(loss < 1e-8);
    }

    #[test]
    fn regression_exact() {
        let out = DenseMatrix::new(3, 1, vec![1.0, 2.0, 3.0]).unwrap();
        let (loss, g) = loss_and_grad(TaskKind::Regression, &out, &[1.0, 2.0, 3.0], &[0, 1, 2]).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn regression_gradient_matches_difference() {
        let out = DenseMatrix::new(2, 1, vec![0.3, -1.2]).unwrap();
        let t = [0.1, 0.4];
        let (_, g) = loss_and_grad(TaskKind::Regression, &out, &t, &[0, 1]).unwrap();
        let h = 1e-6;
        let mut plus = out.clone();
        plus.set(1, 0, -1.2 + h);
        let mut minus = out.clone();
        minus.set(1, 0, -1.2 - h);
        let num = (loss_and_grad(TaskKind::Regression, &plus, &t, &[0, 1]).unwrap().0
            - loss_and_grad(TaskKind::Regression, &minus, &t, &[0, 1]).unwrap().0)
            / (2.0 * h);
        assert!((g.get(1, 0) - num).abs() < 1e-8);
    }

    #[test]
    fn masked_rows_get_no_gradient() {
        let out = DenseMatrix::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let (_, g) = loss_and_grad(TWO, &out, &[0.0, 0.0], &[0]).unwrap();
        assert_eq!(g.row(1), &[0.0, 0.0]);
    }

    #[test]
    fn metrics() {
        let out = DenseMatrix::new(3, 2, vec![1.0, 0.0, 0.0, 1.0, 2.0, 1.0]).unwrap();
        assert_eq!(evaluate(TWO, &out, &[0.0, 1.0, 0.0], &[0, 1, 2]).unwrap(), 1.0);
        let constant = DenseMatrix::new(4, 1, vec![0.0; 4]).unwrap();
        let t = [1.5, -1.5, 0.5, -0.5];
        assert_eq!(evaluate(TaskKind::Regression, &constant, &t, &[0, 1, 2, 3]).unwrap(), 1.0);
        assert!(matches!(evaluate(TWO, &out, &[0.0; 3], &[]), Err(Error::EmptyMask)));
        assert!(matches!(loss_and_grad(TWO, &out, &[0.0; 3], &[]), Err(Error::EmptyMask)));
    }

    #[test]
    fn bad_class_target() {
        let out = DenseMatrix::new(1, 2, vec![0.0, 0.0]).unwrap();
        assert!(loss_and_grad(TWO, &out, &[2.0], &[0]).is_err());
    }
}
