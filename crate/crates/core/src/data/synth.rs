//! Synthetic price and macro series with a planted, learnable signal.
//!
//! Two daily macro drivers `driver_a`, `driver_b` are i.i.d. `N(0, 1)`; a
//! third column `rate` is a slow random walk observed every 21 rows. For the
//! row `t` ending a window of `window` rows, the planted statistic is
//!
//! ```text
//! s_t = a * z_a(t) + b * z_b(t),   z_k(t) = sum(driver_k[t-window+1..=t]) / sqrt(window)
//! ```
//!
//! and each ticker's next log return is `vol * (s_t + sigma * eps)` with
//! `eps ~ N(0, 1)` drawn per ticker. Closes are `100 * exp(cumsum(returns))`.
//! Since `s_t ~ N(0, a^2 + b^2)`, the best achievable next-day direction
//! accuracy is `1/2 + atan(sqrt(a^2 + b^2) / sigma) / pi` and the best
//! achievable log-return RMSE is `vol * sigma`.

use std::f64::consts::PI;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use super::tables::{MacroRow, MacroTable, PriceRow, PriceTable};
use crate::error::{Error, Result};
use crate::nn::{Rng, Stream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_days: usize,
    pub tickers: Vec<String>,
    pub start: NaiveDate,
    /// Window length the planted statistic is summed over.
    pub window: usize,
    pub a: f64,
    pub b: f64,
    /// Return noise relative to the unit-variance signal terms.
    pub sigma: f64,
    /// Daily return scale.
    pub vol: f64,
    /// Fraction of open/high/low/volume cells left empty.
    pub missing_rate: f64,
    pub rate_every: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_days: 20_032,
            tickers: vec!["SYN".into()],
            start: NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid date"),
            window: 32,
            a: 1.0,
            b: 0.5,
            sigma: 0.3,
            vol: 0.01,
            missing_rate: 0.0,
            rate_every: 21,
        }
    }
}

pub const MACRO_COLUMNS: [&str; 3] = ["driver_a", "driver_b", "rate"];

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, field: &str, detail: String| {
            if ok {
                Ok(())
            } else {
                Err(Error::invalid(format!("synth.{field}"), detail))
            }
        };
        check(self.window >= 1, "window", "must be >= 1".into())?;
        check(
            self.n_days > self.window,
            "n_days",
            format!("{} must exceed window {}", self.n_days, self.window),
        )?;
        check(
            !self.tickers.is_empty(),
            "tickers",
            "need at least one ticker".into(),
        )?;
        check(
            self.sigma >= 0.0 && self.sigma.is_finite(),
            "sigma",
            format!("{} must be >= 0", self.sigma),
        )?;
        check(
            self.vol > 0.0 && self.vol.is_finite(),
            "vol",
            format!("{} must be > 0", self.vol),
        )?;
        check(
            self.a.is_finite() && self.b.is_finite(),
            "a",
            "signal strengths must be finite".into(),
        )?;
        check(
            (0.0..1.0).contains(&self.missing_rate),
            "missing_rate",
            format!("{} must be in [0, 1)", self.missing_rate),
        )?;
        check(self.rate_every >= 1, "rate_every", "must be >= 1".into())
    }

    /// Best achievable next-day direction accuracy.
    pub fn bayes_accuracy(&self) -> f64 {
        let s = self.a.hypot(self.b);
        if self.sigma == 0.0 {
            return if s > 0.0 { 1.0 } else { 0.5 };
        }
        0.5 + (s / self.sigma).atan() / PI
    }

    /// Best achievable next-day log-return RMSE.
    pub fn bayes_rmse(&self) -> f64 {
        self.vol * self.sigma
    }

    /// RMSE of always predicting zero, which is approximately the mean baseline.
    pub fn baseline_rmse(&self) -> f64 {
        self.vol * (self.a * self.a + self.b * self.b + self.sigma * self.sigma).sqrt()
    }
}

/// Weekdays starting at `start` (or the next weekday).
pub fn business_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

/// `a * z_a(t) + b * z_b(t)`, or `None` before a full window is available.
pub fn planted_statistic(
    driver_a: &[f64],
    driver_b: &[f64],
    t: usize,
    window: usize,
    a: f64,
    b: f64,
) -> Option<f64> {
    if t + 1 < window {
        return None;
    }
    let lo = t + 1 - window;
    let norm = (window as f64).sqrt();
    let za: f64 = driver_a[lo..=t].iter().sum::<f64>() / norm;
    let zb: f64 = driver_b[lo..=t].iter().sum::<f64>() / norm;
    Some(a * za + b * zb)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthData {
    pub prices: PriceTable,
    pub macros: MacroTable,
    /// Planted statistic per row (`None` before a full window).
    pub statistic: Vec<Option<f64>>,
}

pub fn generate(cfg: &SynthConfig, seed: u64) -> Result<SynthData> {
    cfg.validate()?;
    let n = cfg.n_days;
    let mut rng = Rng::stream(seed, Stream::Synth);
    let dates = business_days(cfg.start, n);
    let mut da = Vec::with_capacity(n);
    let mut db = Vec::with_capacity(n);
    for _ in 0..n {
        da.push(rng.normal());
        db.push(rng.normal());
    }
    let mut rate = 3.0;
    let mut macro_rows = Vec::with_capacity(n);
    for (i, &date) in dates.iter().enumerate() {
        let r = if i % cfg.rate_every == 0 {
            if i > 0 {
                rate += 0.05 * rng.normal();
            }
            Some(rate)
        } else {
            None
        };
        macro_rows.push(MacroRow {
            date,
            values: vec![Some(da[i]), Some(db[i]), r],
        });
    }
    let statistic: Vec<Option<f64>> = (0..n)
        .map(|t| planted_statistic(&da, &db, t, cfg.window, cfg.a, cfg.b))
        .collect();
    let mut prices = PriceTable::default();
    for ticker in &cfg.tickers {
        let mut log_close = 100f64.ln();
        let mut rows = Vec::with_capacity(n);
        let mut prev_close = 100.0;
        for (i, &date) in dates.iter().enumerate() {
            if i > 0 {
                let eps = rng.normal();
                let s = statistic[i - 1].unwrap_or(0.0);
                log_close += cfg.vol * (s + cfg.sigma * eps);
            }
            let close = log_close.exp();
            let open = prev_close * (0.2 * cfg.vol * rng.normal()).exp();
            let up = (0.3 * cfg.vol * rng.normal().abs()).exp();
            let down = (0.3 * cfg.vol * rng.normal().abs()).exp();
            let high = open.max(close) * up;
            let low = open.min(close) / down;
            let volume = (1e6 * (0.3 * rng.normal()).exp()).round();
            let mut blank = |v: f64| {
                if cfg.missing_rate > 0.0 && rng.uniform() < cfg.missing_rate {
                    None
                } else {
                    Some(v)
                }
            };
            rows.push(PriceRow {
                date,
                open: blank(open),
                high: blank(high),
                low: blank(low),
                close: Some(close),
                volume: blank(volume),
            });
            prev_close = close;
        }
        prices.tickers.insert(ticker.clone(), rows);
    }
    Ok(SynthData {
        prices,
        macros: MacroTable {
            names: MACRO_COLUMNS.iter().map(|s| s.to_string()).collect(),
            rows: macro_rows,
        },
        statistic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(sigma: f64) -> SynthConfig {
        SynthConfig {
            n_days: 400,
            window: 8,
            sigma,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn bayes_bound_examples() {
        let c = SynthConfig::default();
        let expect = 0.5 + (1.25f64.sqrt() / 0.3).atan() / PI;
        assert_eq!(c.bayes_accuracy(), expect);
        assert!((c.bayes_accuracy() - 0.9166).abs() < 1e-4);
        assert_eq!(small(0.0).bayes_accuracy(), 1.0);
        assert!((c.bayes_rmse() - 0.003).abs() < 1e-15);
    }

    #[test]
    fn noiseless_direction_follows_statistic() {
        let d = generate(&small(0.0), 5).unwrap();
        let rows = &d.prices.tickers["SYN"];
        let mut checked = 0;
        for t in 0..rows.len() - 1 {
            if let Some(s) = d.statistic[t] {
                let up = rows[t + 1].close.unwrap() > rows[t].close.unwrap();
                assert_eq!(up, s > 0.0, "row {t}");
                checked += 1;
            }
        }
        assert!(checked > 300);
    }

    #[test]
    fn deterministic_and_consistent() {
        let a = generate(&small(0.3), 11).unwrap();
        assert_eq!(a, generate(&small(0.3), 11).unwrap());
        assert_ne!(a, generate(&small(0.3), 12).unwrap());
        for r in &a.prices.tickers["SYN"] {
            let (o, h, l, c) = (
                r.open.unwrap(),
                r.high.unwrap(),
                r.low.unwrap(),
                r.close.unwrap(),
            );
            assert!(h >= o.max(c) && o.min(c) >= l);
        }
        assert!(a
            .macros
            .rows
            .iter()
            .all(|r| r.date.weekday().number_from_monday() <= 5));
    }
}
