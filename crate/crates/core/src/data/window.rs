use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::features::FeatureTable;
use super::sample::Label;
use super::tables::PriceTable;
use crate::error::{Error, Result};
use crate::nn::Tensor;

/// Consecutive rows `start..=end`; `end` is the anchor row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: usize,
    pub end: usize,
}

/// Row ranges of every length-`t` window with the given stride, in order.
/// Returns no windows when `n_rows < t`.
pub fn window_ranges(n_rows: usize, t: usize, stride: usize) -> Result<Vec<Window>> {
    if t == 0 || stride == 0 {
        return Err(Error::invalid(
            "window",
            format!("T = {t} and stride = {stride} must be >= 1"),
        ));
    }
    if n_rows < t {
        return Ok(Vec::new());
    }
    Ok((0..=n_rows - t)
        .step_by(stride)
        .map(|start| Window {
            start,
            end: start + t - 1,
        })
        .collect())
}

/// Materializes `[T x F]` windows with their anchor dates.
pub fn make_windows(
    table: &FeatureTable,
    t: usize,
    stride: usize,
) -> Result<Vec<(Tensor, NaiveDate)>> {
    let c = table.n_cols();
    window_ranges(table.n_rows(), t, stride)?
        .into_iter()
        .map(|w| {
            let data = table.values[w.start * c..(w.end + 1) * c].to_vec();
            Ok((Tensor::new([t, c], data)?, table.dates[w.end]))
        })
        .collect()
}

/// How a task's label is derived from the reference close series.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// Class 1 if `close[t+h] > close[t]`, else 0 (a flat move is "down").
    Direction,
    /// `ln(close[t+h] / close[t])`.
    LogReturn,
}

impl Target {
    pub fn label(self, close_now: f64, close_ahead: f64) -> Label {
        match self {
            Target::Direction => Label::Class(usize::from(close_ahead > close_now)),
            Target::LogReturn => Label::Value((close_ahead / close_now).ln()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledWindow {
    pub window: Window,
    pub labels: BTreeMap<String, Label>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelStats {
    /// Windows whose horizon row lies past the end of the series.
    pub dropped_no_horizon: usize,
    /// Windows whose anchor or horizon close is missing.
    pub dropped_missing_close: usize,
}

/// Close prices of `ticker` aligned to its trading days.
pub fn reference_closes(prices: &PriceTable, ticker: &str) -> Result<Vec<Option<f64>>> {
    Ok(prices.rows(ticker)?.iter().map(|r| r.close).collect())
}

/// Attaches per-task labels looking `horizon` rows past each anchor.
/// `closes` must be aligned with the rows the windows index.
pub fn make_labels(
    windows: &[Window],
    closes: &[Option<f64>],
    targets: &[(String, Target)],
    horizon: usize,
) -> Result<(Vec<LabeledWindow>, LabelStats)> {
    if horizon == 0 {
        return Err(Error::invalid("horizon", "must be >= 1"));
    }
    let mut stats = LabelStats::default();
    let mut out = Vec::with_capacity(windows.len());
    for &w in windows {
        let ahead = w.end + horizon;
        if ahead >= closes.len() {
            stats.dropped_no_horizon += 1;
            continue;
        }
        let (Some(now), Some(later)) = (closes[w.end], closes[ahead]) else {
            stats.dropped_missing_close += 1;
            continue;
        };
        let labels = targets
            .iter()
            .map(|(id, t)| (id.clone(), t.label(now, later)))
            .collect();
        out.push(LabeledWindow { window: w, labels });
    }
    Ok((out, stats))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.70,
            val: 0.15,
            test: 0.15,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let all = [self.train, self.val, self.test];
        if all.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::invalid(
                "split ratios",
                format!("{all:?} must all be positive"),
            ));
        }
        if (all.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(
                "split ratios",
                format!("{all:?} must sum to 1"),
            ));
        }
        Ok(())
    }
}

/// Date span of one sample's window.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Span {
    pub start: NaiveDate,
    pub anchor: NaiveDate,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    /// Segment sizes before the embargo purge.
    pub pre_embargo: [usize; 3],
    pub purged_val: usize,
    pub purged_test: usize,
}

/// Contiguous chronological split. Validation and test take
/// `floor(n * ratio)` samples each and the remainder goes to training. A
/// validation sample whose window starts on or before the last training
/// anchor is purged, as is a test sample whose window reaches back into the
/// training or validation segment.
pub fn split_chronological(spans: &[Span], ratios: SplitRatios) -> Result<Split> {
    ratios.validate()?;
    if spans.windows(2).any(|w| w[0].anchor > w[1].anchor) {
        return Err(Error::data(
            "split",
            "samples are not sorted by anchor date",
        ));
    }
    let n = spans.len();
    let n_val = (n as f64 * ratios.val + 1e-9).floor() as usize;
    let n_test = (n as f64 * ratios.test + 1e-9).floor() as usize;
    let n_train = n.saturating_sub(n_val + n_test);
    if n_train == 0 || n_val == 0 || n_test == 0 {
        return Err(Error::data(
            "split",
            format!("{n} samples cannot fill three nonempty segments ({n_train}/{n_val}/{n_test})"),
        ));
    }
    let train: Vec<usize> = (0..n_train).collect();
    let train_end = spans[n_train - 1].anchor;
    let val_range = n_train..n_train + n_val;
    let val_end = spans[val_range.end - 1].anchor;
    let val: Vec<usize> = val_range
        .clone()
        .filter(|&i| spans[i].start > train_end)
        .collect();
    let test: Vec<usize> = (val_range.end..n)
        .filter(|&i| spans[i].start > train_end && spans[i].start > val_end)
        .collect();
    Ok(Split {
        purged_val: n_val - val.len(),
        purged_test: n_test - test.len(),
        pre_embargo: [n_train, n_val, n_test],
        train,
        val,
        test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_count_examples() {
        let w = window_ranges(10, 4, 2).unwrap();
        assert_eq!(w.iter().map(|w| w.start).collect::<Vec<_>>(), [0, 2, 4, 6]);
        assert_eq!(window_ranges(5, 5, 1).unwrap().len(), 1);
        assert_eq!(window_ranges(9, 3, 1).unwrap().len(), 7);
        assert!(window_ranges(3, 4, 1).unwrap().is_empty());
    }

    #[test]
    fn label_examples() {
        let d = Target::Direction.label(100.0, 101.0);
        assert_eq!(d, Label::Class(1));
        let Label::Value(r) = Target::LogReturn.label(100.0, 101.0) else {
            panic!()
        };
        assert!((r - 1.01f64.ln()).abs() < 1e-15);
        assert!((r - 0.00995).abs() < 1e-5);
        assert_eq!(Target::Direction.label(50.0, 50.0), Label::Class(0));
        assert_eq!(Target::LogReturn.label(50.0, 50.0), Label::Value(0.0));
    }

    #[test]
    fn last_window_dropped() {
        let windows = window_ranges(5, 2, 1).unwrap();
        let closes = vec![Some(1.0), Some(2.0), Some(1.5), None, Some(3.0)];
        let targets = vec![("dir".to_string(), Target::Direction)];
        let (lw, stats) = make_labels(&windows, &closes, &targets, 1).unwrap();
        assert_eq!(stats.dropped_no_horizon, 1);
        assert_eq!(stats.dropped_missing_close, 2);
        assert_eq!(lw.len(), 1);
        assert_eq!(lw[0].labels["dir"], Label::Class(0));
    }

    fn daily_spans(n: usize, t: u64) -> Vec<Span> {
        let d0: NaiveDate = "2020-01-01".parse().unwrap();
        (0..n as u64)
            .map(|i| Span {
                start: d0 + chrono::Days::new(i),
                anchor: d0 + chrono::Days::new(i + t - 1),
            })
            .collect()
    }

    #[test]
    fn split_counts() {
        let s = split_chronological(&daily_spans(100, 1), SplitRatios::default()).unwrap();
        assert_eq!(s.pre_embargo, [70, 15, 15]);
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (70, 15, 15));
        let s = split_chronological(&daily_spans(101, 1), SplitRatios::default()).unwrap();
        assert_eq!(s.pre_embargo, [71, 15, 15]);
        assert!(split_chronological(&daily_spans(5, 1), SplitRatios::default()).is_err());
    }

    #[test]
    fn embargo_purges_overlapping_windows() {
        let spans = daily_spans(200, 5);
        let s = split_chronological(&spans, SplitRatios::default()).unwrap();
        assert_eq!(s.pre_embargo, [140, 30, 30]);
        assert_eq!(s.purged_val, 4);
        assert_eq!(s.purged_test, 4);
        let train_end = spans[*s.train.last().unwrap()].anchor;
        assert!(s.val.iter().all(|&i| spans[i].start > train_end));
        assert!(s.test.iter().all(|&i| spans[i].anchor > train_end));
    }
}
