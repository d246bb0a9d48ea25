use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::tables::{MacroTable, PriceRow, PriceTable};
use crate::error::{Error, Result};

/// Per-ticker features derived from OHLCV rows, in column order.
pub const PRICE_FEATURES: [&str; 5] = [
    "log_return",
    "log_range",
    "body",
    "log_volume",
    "volume_change",
];

/// Date-indexed feature matrix. Missing cells hold `NaN` until
/// [`interpolate_missing`] fills them; `missing` keeps the original gaps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    pub dates: Vec<NaiveDate>,
    pub columns: Vec<String>,
    /// Row-major, `dates.len() x columns.len()`.
    pub values: Vec<f64>,
    /// `true` where the cell was absent before filling.
    pub missing: Vec<bool>,
}

impl FeatureTable {
    pub fn n_rows(&self) -> usize {
        self.dates.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let c = self.n_cols();
        &self.values[row * c..(row + 1) * c]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|r| self.get(r, col)).collect()
    }

    pub fn has_gaps(&self) -> bool {
        self.values.iter().any(|v| v.is_nan())
    }

    pub fn missing_count(&self) -> usize {
        self.missing.iter().filter(|&&m| m).count()
    }
}

fn ln_ratio(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(a), Some(b)) => Some((a / b).ln()),
        _ => None,
    }
}

fn price_features(rows: &[PriceRow], r: usize) -> [Option<f64>; 5] {
    let cur = &rows[r];
    let prev = r.checked_sub(1).map(|p| &rows[p]);
    let log1p_vol = |row: &PriceRow| row.volume.map(f64::ln_1p);
    [
        prev.and_then(|p| ln_ratio(cur.close, p.close)),
        ln_ratio(cur.high, cur.low),
        ln_ratio(cur.close, cur.open),
        log1p_vol(cur),
        prev.and_then(|p| match (log1p_vol(cur), log1p_vol(p)) {
            (Some(a), Some(b)) => Some(a - b),
            _ => None,
        }),
    ]
}

/// Joins one ticker's derived price features with the macro indicators on
/// that ticker's trading days. Macro columns are forward-filled (each day
/// takes the latest observation at or before it); days before a column's
/// first observation are marked missing.
pub fn align_and_join(
    prices: &PriceTable,
    ticker: &str,
    macros: &MacroTable,
) -> Result<FeatureTable> {
    let rows = prices.rows(ticker)?;
    let (Some(first), Some(last)) = (rows.first(), rows.last()) else {
        return Err(Error::data(
            "align",
            format!("ticker `{ticker}` has no rows"),
        ));
    };
    let overlap = match (macros.rows.first(), macros.rows.last()) {
        (Some(m0), Some(m1)) => m0.date <= last.date && m1.date >= first.date,
        _ => false,
    };
    if !overlap {
        return Err(Error::data(
            "align",
            format!(
                "macro dates do not overlap price dates {}..{} for `{ticker}`",
                first.date, last.date
            ),
        ));
    }
    let n_macro = macros.names.len();
    let mut columns: Vec<String> = PRICE_FEATURES.iter().map(|s| s.to_string()).collect();
    columns.extend(macros.names.iter().cloned());
    let width = columns.len();
    let mut values = Vec::with_capacity(rows.len() * width);
    let mut missing = Vec::with_capacity(rows.len() * width);
    let mut latest: Vec<Option<f64>> = vec![None; n_macro];
    let mut next_macro = 0;
    for (r, row) in rows.iter().enumerate() {
        for f in price_features(rows, r) {
            values.push(f.unwrap_or(f64::NAN));
            missing.push(f.is_none());
        }
        while next_macro < macros.rows.len() && macros.rows[next_macro].date <= row.date {
            for (slot, v) in latest.iter_mut().zip(&macros.rows[next_macro].values) {
                if v.is_some() {
                    *slot = *v;
                }
            }
            next_macro += 1;
        }
        for v in &latest {
            values.push(v.unwrap_or(f64::NAN));
            missing.push(v.is_none());
        }
    }
    Ok(FeatureTable {
        dates: rows.iter().map(|r| r.date).collect(),
        columns,
        values,
        missing,
    })
}

/// Fills gaps column by column: interior gaps linearly on the row index,
/// leading gaps with the first observation, trailing gaps with the last.
pub fn interpolate_missing(table: &FeatureTable) -> Result<FeatureTable> {
    let mut out = table.clone();
    let (n, c) = (table.n_rows(), table.n_cols());
    for col in 0..c {
        let observed: Vec<usize> = (0..n).filter(|&r| !table.get(r, col).is_nan()).collect();
        let (Some(&first), Some(&last)) = (observed.first(), observed.last()) else {
            return Err(Error::data(
                "interpolate",
                format!("column `{}` has no observed values", table.columns[col]),
            ));
        };
        let fv = table.get(first, col);
        let lv = table.get(last, col);
        for r in 0..first {
            out.values[r * c + col] = fv;
        }
        for r in last + 1..n {
            out.values[r * c + col] = lv;
        }
        for pair in observed.windows(2) {
            let (i, j) = (pair[0], pair[1]);
            let (a, b) = (table.get(i, col), table.get(j, col));
            for r in i + 1..j {
                let w = (r - i) as f64 / (j - i) as f64;
                out.values[r * c + col] = a + (b - a) * w;
            }
        }
    }
    Ok(out)
}
