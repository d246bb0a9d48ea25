use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::features::{align_and_join, interpolate_missing, FeatureTable};
use super::norm::{apply_zscore, fit_norm_stats_pooled, NormStats};
use super::sample::{Label, Sample};
use super::tables::{MacroTable, PriceTable};
use super::window::{
    make_labels, reference_closes, split_chronological, window_ranges, Span, Split, SplitRatios,
    Target,
};
use crate::error::{Error, Result};
use crate::model::{TaskKind, TaskSpec};
use crate::nn::Tensor;

pub const DATASET_VERSION: u32 = 1;

/// Windowing, labeling and split settings for [`build_dataset`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineOptions {
    /// Tickers to pool. Empty means the first ticker of the price table.
    pub tickers: Vec<String>,
    pub window: usize,
    pub stride: usize,
    pub horizon: usize,
    pub split: SplitRatios,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            tickers: Vec::new(),
            window: 32,
            stride: 1,
            horizon: 1,
            split: SplitRatios::default(),
        }
    }
}

impl PipelineOptions {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || self.stride == 0 || self.horizon == 0 {
            return Err(Error::invalid(
                "data",
                format!(
                    "window ({}), stride ({}) and horizon ({}) must be >= 1",
                    self.window, self.stride, self.horizon
                ),
            ));
        }
        self.split.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Val,
    Test,
}

impl SplitName {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Val => "val",
            SplitName::Test => "test",
        }
    }
}

impl FromStr for SplitName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(SplitName::Train),
            "val" => Ok(SplitName::Val),
            "test" => Ok(SplitName::Test),
            _ => Err(Error::invalid(
                "split",
                format!("`{s}` is not one of train, val, test"),
            )),
        }
    }
}

/// One ticker's normalized feature rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub ticker: String,
    pub dates: Vec<NaiveDate>,
    /// Row-major `dates.len() x columns.len()`.
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRef {
    pub block: usize,
    /// Row index of the window's last row.
    pub anchor_row: usize,
    pub labels: BTreeMap<String, Label>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TickerSummary {
    pub ticker: String,
    pub rows: usize,
    pub windows: usize,
    pub dropped_no_horizon: usize,
    pub dropped_missing_close: usize,
    pub filled_cells: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub tickers: Vec<TickerSummary>,
    pub samples: usize,
    /// Train/val/test sizes before and after the embargo purge.
    pub pre_embargo: [usize; 3],
    pub post_embargo: [usize; 3],
    pub degenerate_columns: Vec<String>,
    pub warnings: Vec<String>,
}

impl IngestSummary {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for t in &self.tickers {
            let _ = writeln!(
                s,
                "ticker {}: {} rows, {} windows, dropped {} (no horizon) + {} (missing close), {} cells interpolated",
                t.ticker, t.rows, t.windows, t.dropped_no_horizon, t.dropped_missing_close, t.filled_cells
            );
        }
        let [a, b, c] = self.pre_embargo;
        let [x, y, z] = self.post_embargo;
        let _ = writeln!(s, "samples: {}", self.samples);
        let _ = writeln!(s, "split (pre-embargo):  train {a} / val {b} / test {c}");
        let _ = writeln!(s, "split (post-embargo): train {x} / val {y} / test {z}");
        if self.degenerate_columns.is_empty() {
            let _ = writeln!(s, "degenerate columns: none");
        } else {
            let _ = writeln!(
                s,
                "degenerate columns: {}",
                self.degenerate_columns.join(", ")
            );
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        s
    }
}

/// Normalized feature blocks, labeled window references and their split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub version: u32,
    pub seed: u64,
    pub config_hash: String,
    pub columns: Vec<String>,
    pub window: usize,
    pub horizon: usize,
    pub tasks: Vec<String>,
    pub blocks: Vec<Block>,
    pub samples: Vec<SampleRef>,
    pub split: Split,
    pub norm: NormStats,
    pub summary: IngestSummary,
}

fn target_for(task: &TaskSpec) -> Result<Target> {
    match task.kind {
        TaskKind::Classification { classes: 2 } => Ok(Target::Direction),
        TaskKind::Classification { classes } => Err(Error::invalid(
            format!("task `{}`", task.id),
            format!("direction labels have 2 classes, task declares {classes}"),
        )),
        TaskKind::Regression => Ok(Target::LogReturn),
    }
}

/// Runs align, interpolate, window, label, split and z-score over the given
/// tables. Classification tasks get next-horizon direction labels and
/// regression tasks the next-horizon log return of the window's own ticker.
pub fn build_dataset(
    prices: &PriceTable,
    macros: &MacroTable,
    opts: &PipelineOptions,
    tasks: &[TaskSpec],
) -> Result<Dataset> {
    opts.validate()?;
    let targets: Vec<(String, Target)> = tasks
        .iter()
        .map(|t| Ok((t.id.clone(), target_for(t)?)))
        .collect::<Result<_>>()?;
    let tickers: Vec<String> = if opts.tickers.is_empty() {
        let first = prices
            .tickers
            .keys()
            .next()
            .ok_or_else(|| Error::data("load", "price table has no tickers"))?;
        vec![first.clone()]
    } else {
        opts.tickers.clone()
    };

    let mut tables: Vec<FeatureTable> = Vec::with_capacity(tickers.len());
    let mut summary = IngestSummary::default();
    let mut refs: Vec<(NaiveDate, usize, SampleRef, Span)> = Vec::new();
    for (bi, ticker) in tickers.iter().enumerate() {
        let joined = align_and_join(prices, ticker, macros).map_err(|e| e.in_stage("align"))?;
        let filled = interpolate_missing(&joined).map_err(|e| e.in_stage("interpolate"))?;
        let windows = window_ranges(filled.n_rows(), opts.window, opts.stride)?;
        if windows.is_empty() {
            summary.warnings.push(format!(
                "ticker {ticker}: {} rows is shorter than the window {}",
                filled.n_rows(),
                opts.window
            ));
        }
        let closes = reference_closes(prices, ticker)?;
        let (labeled, stats) = make_labels(&windows, &closes, &targets, opts.horizon)
            .map_err(|e| e.in_stage("label"))?;
        summary.tickers.push(TickerSummary {
            ticker: ticker.clone(),
            rows: filled.n_rows(),
            windows: windows.len(),
            dropped_no_horizon: stats.dropped_no_horizon,
            dropped_missing_close: stats.dropped_missing_close,
            filled_cells: filled.missing_count(),
        });
        for lw in labeled {
            let span = Span {
                start: filled.dates[lw.window.start],
                anchor: filled.dates[lw.window.end],
            };
            let r = SampleRef {
                block: bi,
                anchor_row: lw.window.end,
                labels: lw.labels,
            };
            refs.push((span.anchor, bi, r, span));
        }
        tables.push(filled);
    }
    refs.sort_by_key(|(anchor, block, r, _)| (*anchor, *block, r.anchor_row));
    let spans: Vec<Span> = refs.iter().map(|r| r.3).collect();
    let split = split_chronological(&spans, opts.split).map_err(|e| e.in_stage("split"))?;
    for (name, seg) in [("validation", &split.val), ("test", &split.test)] {
        if seg.is_empty() {
            summary
                .warnings
                .push(format!("{name} segment is empty after the embargo"));
        }
    }

    let fit_start = split
        .train
        .iter()
        .map(|&i| spans[i].start)
        .min()
        .expect("train nonempty");
    let fit_end = split
        .train
        .iter()
        .map(|&i| spans[i].anchor)
        .max()
        .expect("train nonempty");
    let table_refs: Vec<&FeatureTable> = tables.iter().collect();
    let norm = fit_norm_stats_pooled(&table_refs, fit_start, fit_end)
        .map_err(|e| e.in_stage("normalize"))?;
    let mut blocks = Vec::with_capacity(tables.len());
    for (ticker, table) in tickers.iter().zip(&tables) {
        let z = apply_zscore(table, &norm)?;
        blocks.push(Block {
            ticker: ticker.clone(),
            dates: z.dates,
            values: z.values,
        });
    }

    summary.samples = refs.len();
    summary.pre_embargo = split.pre_embargo;
    summary.post_embargo = [split.train.len(), split.val.len(), split.test.len()];
    summary.degenerate_columns = norm
        .degenerate_columns()
        .iter()
        .map(|s| s.to_string())
        .collect();
    Ok(Dataset {
        version: DATASET_VERSION,
        seed: 0,
        config_hash: String::new(),
        columns: norm.columns.clone(),
        window: opts.window,
        horizon: opts.horizon,
        tasks: tasks.iter().map(|t| t.id.clone()).collect(),
        blocks,
        samples: refs.into_iter().map(|r| r.2).collect(),
        split,
        norm,
        summary,
    })
}

impl Dataset {
    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn indices(&self, split: SplitName) -> &[usize] {
        match split {
            SplitName::Train => &self.split.train,
            SplitName::Val => &self.split.val,
            SplitName::Test => &self.split.test,
        }
    }

    /// Sample `i` with `extra_rows` additional leading rows. Rows before the
    /// start of the block repeat its first row.
    pub fn materialize(&self, i: usize, extra_rows: usize) -> Result<Sample> {
        let r = self.samples.get(i).ok_or_else(|| {
            Error::invalid(
                "sample index",
                format!("{i} out of range ({})", self.samples.len()),
            )
        })?;
        let block = &self.blocks[r.block];
        let f = self.n_features();
        let rows = self.window + extra_rows;
        let mut data = Vec::with_capacity(rows * f);
        let first = r.anchor_row as i64 + 1 - rows as i64;
        for k in 0..rows as i64 {
            let row = (first + k).max(0) as usize;
            data.extend_from_slice(&block.values[row * f..(row + 1) * f]);
        }
        Ok(Sample {
            x: Tensor::new([rows, f], data)?,
            labels: r.labels.clone(),
            anchor: block.dates[r.anchor_row],
        })
    }

    pub fn split_samples(&self, split: SplitName, extra_rows: usize) -> Result<Vec<Sample>> {
        self.indices(split)
            .iter()
            .map(|&i| self.materialize(i, extra_rows))
            .collect()
    }

    /// Training-range std of each normalized column: 1, or 0 where degenerate.
    pub fn feature_std(&self) -> Vec<f64> {
        self.norm
            .degenerate
            .iter()
            .map(|&d| if d { 0.0 } else { 1.0 })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let d: Dataset = serde_json::from_str(text).map_err(|e| Error::Serde(e.to_string()))?;
        if d.version != DATASET_VERSION {
            return Err(Error::data(
                "dataset",
                format!("format version {} (expected {DATASET_VERSION})", d.version),
            ));
        }
        Ok(d)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth::{generate, SynthConfig};

    fn tasks() -> Vec<TaskSpec> {
        vec![
            TaskSpec::classification("direction", 2, 0.5),
            TaskSpec::regression("log_return", 0.5),
        ]
    }

    fn synth(n: usize) -> (PriceTable, MacroTable) {
        let cfg = SynthConfig {
            n_days: n,
            window: 8,
            ..SynthConfig::default()
        };
        let d = generate(&cfg, 1).unwrap();
        (d.prices, d.macros)
    }

    #[test]
    fn builds_and_round_trips() {
        let (p, m) = synth(300);
        let opts = PipelineOptions {
            window: 8,
            ..PipelineOptions::default()
        };
        let d = build_dataset(&p, &m, &opts, &tasks()).unwrap();
        assert_eq!(d.columns.len(), 8);
        // 300 rows, T=8: 293 windows, the last has no horizon row.
        assert_eq!(d.summary.tickers[0].windows, 293);
        assert_eq!(d.samples.len(), 292);
        assert_eq!(d.split.pre_embargo, [206, 43, 43]);
        let back = Dataset::from_json(&d.to_json().unwrap()).unwrap();
        assert_eq!(back, d);
        let s = d.materialize(d.split.test[0], 4).unwrap();
        assert_eq!(s.x.shape(), [12, 8]);
        assert!(d.split.test.iter().all(|&i| d.samples[i].labels.len() == 2));
    }

    #[test]
    fn edge_rows_replicated() {
        let (p, m) = synth(100);
        let opts = PipelineOptions {
            window: 8,
            ..PipelineOptions::default()
        };
        let d = build_dataset(&p, &m, &opts, &tasks()).unwrap();
        let s = d.materialize(0, 3).unwrap();
        assert_eq!(s.x.row(0), s.x.row(3));
        assert_eq!(s.x.row(3), &d.blocks[0].values[..8]);
    }

    #[test]
    fn unknown_ticker_rejected() {
        let (p, m) = synth(100);
        let opts = PipelineOptions {
            tickers: vec!["NOPE".into()],
            ..PipelineOptions::default()
        };
        let e = build_dataset(&p, &m, &opts, &tasks()).unwrap_err();
        assert!(e.to_string().starts_with("align:"), "{e}");
        assert!(e.to_string().contains("NOPE"));
    }
}
