//! ResNeXt feature extractor, per-task adapters and heads, and the weighted
//! joint objective.

mod config;
mod loss;
mod net;

pub(crate) use config::validate_alphas;
pub use config::{validate_tasks, ExtractorConfig, StageConfig, TaskKind, TaskSpec};
pub use loss::multi_task_loss;
pub use net::{
    stack_windows, Architecture, BatchGradients, ForwardPass, MultiTaskNet, Prediction, TaskOutput,
};

use crate::error::Result;
use crate::nn::Rng;

/// Builds and initializes a network; see [`MultiTaskNet::build`].
pub fn build_model(
    cfg: &ExtractorConfig,
    tasks: &[TaskSpec],
    rng: &mut Rng,
) -> Result<MultiTaskNet> {
    MultiTaskNet::build(cfg, tasks, rng)
}
