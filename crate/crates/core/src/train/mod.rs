//! Adam, step-decay learning rates, phased training and checkpoints.

mod adam;
mod checkpoint;
mod schedule;
mod trainer;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{Checkpoint, CheckpointMeta, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use schedule::lr_at;
pub use trainer::{
    pretrain_single_task, train_joint, EpochLog, Phase, PhasePlan, Progress, TrainConfig,
    TrainData, Trainer,
};
