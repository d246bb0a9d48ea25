use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::features::FeatureTable;
use crate::error::{Error, Result};

/// Columns whose standard deviation falls below this are mapped to zero.
pub const DEGENERATE_STD: f64 = 1e-12;

/// Per-feature z-score statistics (population standard deviation).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub columns: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub degenerate: Vec<bool>,
    /// Inclusive date span the statistics were fitted on.
    pub fit_start: NaiveDate,
    pub fit_end: NaiveDate,
    pub fit_rows: usize,
}

impl NormStats {
    pub fn degenerate_columns(&self) -> Vec<&str> {
        self.columns
            .iter()
            .zip(&self.degenerate)
            .filter(|(_, &d)| d)
            .map(|(c, _)| c.as_str())
            .collect()
    }
}

/// Fits statistics on the rows of `table` dated within `[start, end]`.
pub fn fit_norm_stats(table: &FeatureTable, start: NaiveDate, end: NaiveDate) -> Result<NormStats> {
    fit_norm_stats_pooled(&[table], start, end)
}

/// Fits statistics over the in-range rows of several tables sharing one column schema.
pub fn fit_norm_stats_pooled(
    tables: &[&FeatureTable],
    start: NaiveDate,
    end: NaiveDate,
) -> Result<NormStats> {
    let first = tables
        .first()
        .ok_or_else(|| Error::data("normalize", "no tables to fit on"))?;
    let c = first.n_cols();
    if tables.iter().any(|t| t.columns != first.columns) {
        return Err(Error::data(
            "normalize",
            "tables have different column schemas",
        ));
    }
    let rows: Vec<&[f64]> = tables
        .iter()
        .flat_map(|t| {
            t.dates
                .iter()
                .enumerate()
                .filter(|(_, d)| **d >= start && **d <= end)
                .map(move |(r, _)| t.row(r))
        })
        .collect();
    if rows.is_empty() {
        return Err(Error::data(
            "normalize",
            format!("empty fit range {start}..={end}"),
        ));
    }
    if rows.iter().any(|r| r.iter().any(|v| !v.is_finite())) {
        return Err(Error::data(
            "normalize",
            "fit range contains missing or non-finite cells",
        ));
    }
    let n = rows.len() as f64;
    let mut mean = vec![0.0; c];
    for r in &rows {
        for (m, v) in mean.iter_mut().zip(*r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; c];
    for r in &rows {
        for ((s, v), m) in var.iter_mut().zip(*r).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let std: Vec<f64> = var.iter().map(|s| (s / n).sqrt()).collect();
    Ok(NormStats {
        columns: first.columns.clone(),
        degenerate: std.iter().map(|&s| s < DEGENERATE_STD).collect(),
        mean,
        std,
        fit_start: start,
        fit_end: end,
        fit_rows: rows.len(),
    })
}

/// `(x - mean) / std` per cell; degenerate columns become all zeros.
pub fn apply_zscore(table: &FeatureTable, stats: &NormStats) -> Result<FeatureTable> {
    if table.columns != stats.columns {
        return Err(Error::data(
            "normalize",
            "statistics were fitted on a different column set",
        ));
    }
    let c = table.n_cols();
    let mut out = table.clone();
    for (i, v) in out.values.iter_mut().enumerate() {
        let j = i % c;
        *v = if stats.degenerate[j] {
            0.0
        } else {
            (*v - stats.mean[j]) / stats.std[j]
        };
    }
    Ok(out)
}
