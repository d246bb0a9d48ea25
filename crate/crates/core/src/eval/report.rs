use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::metrics::{accuracy, argmax, macro_f1, regression_metrics};
use crate::data::{Label, Sample};
use crate::error::{Error, Result};
use crate::model::stack_windows;
use crate::model::{MultiTaskNet, TaskKind, TaskOutput};

/// Forward batch size used during evaluation.
pub const EVAL_BATCH: usize = 256;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskMetrics {
    pub task_id: String,
    /// `classification` or `regression`.
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub classes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub macro_f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mae: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rmse: Option<f64>,
    pub n: usize,
}

/// Per-task metrics with the run metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub split: String,
    pub seed: u64,
    pub config_hash: String,
    /// Omitted unless set, so identical runs serialize identically.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timestamp: Option<String>,
    pub tasks: Vec<TaskMetrics>,
}

impl MetricsReport {
    pub fn task(&self, id: &str) -> Option<&TaskMetrics> {
        self.tasks.iter().find(|t| t.task_id == id)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serde(e.to_string()))
    }

    /// Table with accuracy and F1 as percentages to one decimal.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "split {} (seed {}, config {})\n",
            self.split, self.seed, self.config_hash
        );
        for t in &self.tasks {
            match (t.accuracy, t.macro_f1, t.mae, t.rmse) {
                (Some(a), Some(f), _, _) => {
                    let _ = writeln!(
                        s,
                        "  {:<16} n={:<6} Acc {:.1}  Macro F1 {:.1}",
                        t.task_id,
                        t.n,
                        a * 100.0,
                        f * 100.0
                    );
                }
                (_, _, Some(mae), Some(rmse)) => {
                    let _ = writeln!(
                        s,
                        "  {:<16} n={:<6} MAE {mae:.6}  RMSE {rmse:.6}",
                        t.task_id, t.n
                    );
                }
                _ => {}
            }
        }
        s
    }
}

/// Model outputs for one task over a sample set.
#[derive(Clone, Debug, PartialEq)]
pub enum TaskPredictions {
    /// Argmax class (lowest index on ties) and the full distribution.
    Classes {
        classes: Vec<usize>,
        probs: Vec<Vec<f64>>,
    },
    Values(Vec<f64>),
}

/// Runs the model over `samples` in fixed-size batches.
pub fn predict(net: &MultiTaskNet, samples: &[Sample]) -> Result<Vec<TaskPredictions>> {
    let mut out: Vec<TaskPredictions> = net
        .tasks()
        .iter()
        .map(|t| match t.kind {
            TaskKind::Classification { .. } => TaskPredictions::Classes {
                classes: Vec::with_capacity(samples.len()),
                probs: Vec::with_capacity(samples.len()),
            },
            TaskKind::Regression => TaskPredictions::Values(Vec::with_capacity(samples.len())),
        })
        .collect();
    for chunk in samples.chunks(EVAL_BATCH) {
        let fp = net.forward(&stack_windows(chunk)?)?;
        for (i, slot) in out.iter_mut().enumerate() {
            match (fp.output(i), slot) {
                (TaskOutput::Probabilities(p), TaskPredictions::Classes { classes, probs }) => {
                    let k = p.shape()[1];
                    for row in p.data().chunks(k) {
                        classes.push(argmax(row));
                        probs.push(row.to_vec());
                    }
                }
                (TaskOutput::Values(v), TaskPredictions::Values(values)) => values.extend(v),
                _ => unreachable!("task output kind is fixed by its spec"),
            }
        }
    }
    Ok(out)
}

/// Metrics of every task over `samples`.
pub fn evaluate(
    net: &MultiTaskNet,
    samples: &[Sample],
    split: &str,
    seed: u64,
    config_hash: &str,
) -> Result<MetricsReport> {
    if samples.is_empty() {
        return Err(Error::invalid(
            "evaluate",
            format!("split `{split}` has no samples"),
        ));
    }
    let preds = predict(net, samples)?;
    report_from_predictions(net, samples, preds, split, seed, config_hash)
}

/// Builds the report from predictions already computed by [`predict`].
pub fn report_from_predictions(
    net: &MultiTaskNet,
    samples: &[Sample],
    preds: Vec<TaskPredictions>,
    split: &str,
    seed: u64,
    config_hash: &str,
) -> Result<MetricsReport> {
    let mut tasks = Vec::with_capacity(preds.len());
    for (task, pred) in net.tasks().iter().zip(preds) {
        let missing = || {
            Error::invalid(
                format!("label for task `{}`", task.id),
                "missing or of the wrong kind in evaluation samples",
            )
        };
        let n = samples.len();
        let m = match (task.kind, pred) {
            (TaskKind::Classification { classes: k }, TaskPredictions::Classes { classes, .. }) => {
                let labels = samples
                    .iter()
                    .map(|s| match s.label(&task.id) {
                        Some(Label::Class(c)) => Ok(c),
                        _ => Err(missing()),
                    })
                    .collect::<Result<Vec<_>>>()?;
                TaskMetrics {
                    task_id: task.id.clone(),
                    kind: "classification".into(),
                    classes: Some(k),
                    accuracy: Some(accuracy(&classes, &labels)?),
                    macro_f1: Some(macro_f1(&classes, &labels, k)?),
                    mae: None,
                    rmse: None,
                    n,
                }
            }
            (TaskKind::Regression, TaskPredictions::Values(values)) => {
                let targets = samples
                    .iter()
                    .map(|s| match s.label(&task.id) {
                        Some(Label::Value(v)) => Ok(v),
                        _ => Err(missing()),
                    })
                    .collect::<Result<Vec<_>>>()?;
                let r = regression_metrics(&values, &targets)?;
                TaskMetrics {
                    task_id: task.id.clone(),
                    kind: "regression".into(),
                    classes: None,
                    accuracy: None,
                    macro_f1: None,
                    mae: Some(r.mae),
                    rmse: Some(r.rmse),
                    n,
                }
            }
            _ => unreachable!("prediction kind matches task kind"),
        };
        tasks.push(m);
    }
    Ok(MetricsReport {
        split: split.to_string(),
        seed,
        config_hash: config_hash.to_string(),
        timestamp: None,
        tasks,
    })
}
