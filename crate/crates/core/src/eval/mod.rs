//! Accuracy, macro F1, MAE and RMSE, constant baselines, and metrics reports.

mod metrics;
mod report;

pub use metrics::{
    accuracy, argmax, baseline_predict, macro_f1, regression_metrics, BaselineKind,
    ConfusionMatrix, RegressionMetrics,
};
pub use report::{
    evaluate, predict, report_from_predictions, MetricsReport, TaskMetrics, TaskPredictions,
    EVAL_BATCH,
};
