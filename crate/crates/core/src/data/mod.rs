//! CSV ingestion, alignment, interpolation, z-scoring, windowing, labeling,
//! chronological splitting, augmentation, and a synthetic data generator.

mod augment;
mod dataset;
mod features;
mod norm;
mod sample;
pub mod synth;
mod tables;
mod window;

pub use augment::{augment, AugmentPolicy};
pub use dataset::{
    build_dataset, Block, Dataset, IngestSummary, PipelineOptions, SampleRef, SplitName,
    TickerSummary, DATASET_VERSION,
};
pub use features::{align_and_join, interpolate_missing, FeatureTable, PRICE_FEATURES};
pub use norm::{apply_zscore, fit_norm_stats, fit_norm_stats_pooled, NormStats, DEGENERATE_STD};
pub use sample::{Label, Sample};
pub use synth::{generate, SynthConfig, SynthData};
pub use tables::{
    load_tables, read_macro, read_prices, write_macro, write_prices, MacroRow, MacroTable,
    PriceRow, PriceTable, PRICE_COLUMNS,
};
pub use window::{
    make_labels, make_windows, reference_closes, split_chronological, window_ranges, LabelStats,
    LabeledWindow, Span, Split, SplitRatios, Target, Window,
};
