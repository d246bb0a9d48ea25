//! Run configuration and the `synth`, `ingest`, `train`, `eval` and
//! `gradcheck` commands.

mod commands;
mod config;

pub use commands::{
    baseline_text, cmd_eval, cmd_gradcheck, cmd_ingest, cmd_synth, cmd_train, SynthOutcome,
    TrainOutcome, CHECKPOINT_FILE, DATASET_FILE, LOG_FILE, MACRO_FILE, PRICES_FILE,
    RESOLVED_CONFIG_FILE, SUMMARY_FILE,
};
pub use config::{DataConfig, RunConfig};
