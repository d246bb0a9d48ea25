//! Price and macro CSV tables.
//!
//! Price files carry the header `date,ticker,open,high,low,close,volume`
//! (any column order); macro files carry `date` followed by one column per
//! indicator. Dates are ISO-8601 days, decimals use `.`, and an empty field
//! is a missing value.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};

pub const PRICE_COLUMNS: [&str; 7] = ["date", "ticker", "open", "high", "low", "close", "volume"];

#[derive(Clone, Debug, PartialEq)]
pub struct PriceRow {
    pub date: NaiveDate,
    pub open: Option<f64>,
    pub high: Option<f64>,
    pub low: Option<f64>,
    pub close: Option<f64>,
    pub volume: Option<f64>,
}

/// Per-ticker rows sorted by strictly increasing date.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PriceTable {
    pub tickers: BTreeMap<String, Vec<PriceRow>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MacroRow {
    pub date: NaiveDate,
    pub values: Vec<Option<f64>>,
}

/// Indicator table sorted by strictly increasing date.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MacroTable {
    pub names: Vec<String>,
    pub rows: Vec<MacroRow>,
}

impl PriceTable {
    pub fn rows(&self, ticker: &str) -> Result<&[PriceRow]> {
        self.tickers.get(ticker).map(Vec::as_slice).ok_or_else(|| {
            Error::invalid("ticker", format!("`{ticker}` not present in price table"))
        })
    }

    pub fn row_count(&self) -> usize {
        self.tickers.values().map(Vec::len).sum()
    }
}

struct Ctx<'a> {
    path: &'a str,
    line: u64,
}

impl Ctx<'_> {
    fn err(&self, detail: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_string(),
            line: self.line,
            detail: detail.into(),
        }
    }

    fn date(&self, s: &str) -> Result<NaiveDate> {
        NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
            .map_err(|_| self.err(format!("invalid date `{s}` (expected YYYY-MM-DD)")))
    }

    fn number(&self, column: &str, s: &str) -> Result<Option<f64>> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(None);
        }
        let v: f64 = s
            .parse()
            .map_err(|_| self.err(format!("non-numeric `{column}` value `{s}`")))?;
        if !v.is_finite() {
            return Err(self.err(format!("non-finite `{column}` value `{s}`")));
        }
        Ok(Some(v))
    }
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader)
}

fn csv_error(path: &str, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    Error::Parse {
        path: path.to_string(),
        line,
        detail: e.to_string(),
    }
}

fn check_price_row(ctx: &Ctx, r: &PriceRow) -> Result<()> {
    for (name, v) in [
        ("open", r.open),
        ("high", r.high),
        ("low", r.low),
        ("close", r.close),
    ] {
        if let Some(v) = v {
            if v <= 0.0 {
                return Err(ctx.err(format!("`{name}` must be positive, got {v}")));
            }
        }
    }
    if let Some(v) = r.volume {
        if v < 0.0 {
            return Err(ctx.err(format!("`volume` must be >= 0, got {v}")));
        }
    }
    if let Some(h) = r.high {
        for (name, v) in [("open", r.open), ("close", r.close), ("low", r.low)] {
            if matches!(v, Some(v) if v > h) {
                return Err(ctx.err(format!("`high` {h} below `{name}`")));
            }
        }
    }
    if let Some(l) = r.low {
        for (name, v) in [("open", r.open), ("close", r.close)] {
            if matches!(v, Some(v) if v < l) {
                return Err(ctx.err(format!("`low` {l} above `{name}`")));
            }
        }
    }
    Ok(())
}

/// Parses a price CSV. `path` is used in diagnostics only.
pub fn read_prices<R: Read>(reader: R, path: &str) -> Result<PriceTable> {
    let mut rdr = csv_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let mut index = HashMap::new();
    for (i, h) in headers.iter().enumerate() {
        let h = h.trim();
        if !PRICE_COLUMNS.contains(&h) {
            return Err(Error::Parse {
                path: path.into(),
                line: 1,
                detail: format!("unknown column `{h}`"),
            });
        }
        if index.insert(h, i).is_some() {
            return Err(Error::Parse {
                path: path.into(),
                line: 1,
                detail: format!("duplicate column `{h}`"),
            });
        }
    }
    if let Some(missing) = PRICE_COLUMNS.iter().find(|c| !index.contains_key(*c)) {
        return Err(Error::Parse {
            path: path.into(),
            line: 1,
            detail: format!("missing column `{missing}`"),
        });
    }
    let col = |name: &str| index[name];
    let mut raw: BTreeMap<String, Vec<(u64, PriceRow)>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let ctx = Ctx {
            path,
            line: rec.position().map(|p| p.line()).unwrap_or(0),
        };
        let ticker = rec[col("ticker")].trim();
        if ticker.is_empty() {
            return Err(ctx.err("empty ticker"));
        }
        let row = PriceRow {
            date: ctx.date(&rec[col("date")])?,
            open: ctx.number("open", &rec[col("open")])?,
            high: ctx.number("high", &rec[col("high")])?,
            low: ctx.number("low", &rec[col("low")])?,
            close: ctx.number("close", &rec[col("close")])?,
            volume: ctx.number("volume", &rec[col("volume")])?,
        };
        check_price_row(&ctx, &row)?;
        raw.entry(ticker.to_string())
            .or_default()
            .push((ctx.line, row));
    }
    let mut tickers = BTreeMap::new();
    for (ticker, mut rows) in raw {
        rows.sort_by_key(|(line, r)| (r.date, *line));
        for pair in rows.windows(2) {
            if pair[0].1.date == pair[1].1.date {
                return Err(Error::Parse {
                    path: path.into(),
                    line: pair[1].0.max(pair[0].0),
                    detail: format!("duplicate date {} for ticker `{ticker}`", pair[1].1.date),
                });
            }
        }
        tickers.insert(ticker, rows.into_iter().map(|(_, r)| r).collect());
    }
    Ok(PriceTable { tickers })
}

/// Parses a macro CSV: `date` then indicator columns.
pub fn read_macro<R: Read>(reader: R, path: &str) -> Result<MacroTable> {
    let mut rdr = csv_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let header_err = |detail: String| Error::Parse {
        path: path.into(),
        line: 1,
        detail,
    };
    let mut cols = headers.iter().map(str::trim);
    match cols.next() {
        Some("date") => {}
        Some(other) => {
            return Err(header_err(format!(
                "first column must be `date`, got `{other}`"
            )))
        }
        None => return Err(header_err("empty header".into())),
    }
    let names: Vec<String> = cols.map(String::from).collect();
    for (i, n) in names.iter().enumerate() {
        if n.is_empty() || n == "date" || names[..i].contains(n) {
            return Err(header_err(format!(
                "invalid or duplicate indicator column `{n}`"
            )));
        }
    }
    let mut rows: Vec<(u64, MacroRow)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let ctx = Ctx {
            path,
            line: rec.position().map(|p| p.line()).unwrap_or(0),
        };
        let date = ctx.date(&rec[0])?;
        let values = names
            .iter()
            .enumerate()
            .map(|(i, n)| ctx.number(n, &rec[i + 1]))
            .collect::<Result<Vec<_>>>()?;
        rows.push((ctx.line, MacroRow { date, values }));
    }
    rows.sort_by_key(|(line, r)| (r.date, *line));
    for pair in rows.windows(2) {
        if pair[0].1.date == pair[1].1.date {
            return Err(Error::Parse {
                path: path.into(),
                line: pair[1].0.max(pair[0].0),
                detail: format!("duplicate macro date {}", pair[1].1.date),
            });
        }
    }
    Ok(MacroTable {
        names,
        rows: rows.into_iter().map(|(_, r)| r).collect(),
    })
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::io(path, e))
}

pub fn load_tables(price_path: &Path, macro_path: &Path) -> Result<(PriceTable, MacroTable)> {
    let prices = read_prices(open(price_path)?, &price_path.display().to_string())?;
    let macros = read_macro(open(macro_path)?, &macro_path.display().to_string())?;
    Ok((prices, macros))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes a price CSV, tickers in table order. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_prices<W: Write>(out: W, table: &PriceTable) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PRICE_COLUMNS)?;
    for (ticker, rows) in &table.tickers {
        for r in rows {
            w.write_record([
                r.date.format("%Y-%m-%d").to_string(),
                ticker.clone(),
                fmt_opt(r.open),
                fmt_opt(r.high),
                fmt_opt(r.low),
                fmt_opt(r.close),
                fmt_opt(r.volume),
            ])?;
        }
    }
    w.flush()
}

pub fn write_macro<W: Write>(out: W, table: &MacroTable) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["date".to_string()];
    header.extend(table.names.iter().cloned());
    w.write_record(&header)?;
    for r in &table.rows {
        let mut rec = vec![r.date.format("%Y-%m-%d").to_string()];
        rec.extend(r.values.iter().map(|v| fmt_opt(*v)));
        w.write_record(&rec)?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "date,ticker,open,high,low,close,volume\n\
        2024-01-03,AAA,10,11,9,10.5,1000\n\
        2024-01-02,AAA,9.5,10.2,9.1,10,1200\n\
        2024-01-04,AAA,10.5,10.9,10.1,10.8,\n";

    #[test]
    fn parses_and_sorts() {
        let t = read_prices(GOOD.as_bytes(), "p.csv").unwrap();
        let rows = t.rows("AAA").unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.windows(2).all(|w| w[0].date < w[1].date));
        assert_eq!(rows[2].volume, None);
        assert_eq!(rows[0].close, Some(10.0));
    }

    #[test]
    fn duplicate_date_rejected() {
        let s = "date,ticker,open,high,low,close,volume\n\
            2024-01-02,AAA,1,1,1,1,1\n2024-01-02,AAA,1,1,1,1,1\n";
        let err = read_prices(s.as_bytes(), "p.csv").unwrap_err().to_string();
        assert!(err.contains("duplicate date"), "{err}");
        assert!(err.contains("p.csv:3"), "{err}");
    }

    #[test]
    fn non_numeric_close_reports_line() {
        let s = "date,ticker,open,high,low,close,volume\n\
            2024-01-02,AAA,1,1,1,1,1\n2024-01-03,AAA,1,1,1,abc,1\n";
        let err = read_prices(s.as_bytes(), "p.csv").unwrap_err().to_string();
        assert!(err.starts_with("p.csv:3:"), "{err}");
        assert!(err.contains("`close`"), "{err}");
    }

    #[test]
    fn unknown_column_named() {
        let s = "date,ticker,open,high,low,close,volume,vwap\n";
        let err = read_prices(s.as_bytes(), "p.csv").unwrap_err().to_string();
        assert!(err.contains("unknown column `vwap`"), "{err}");
    }

    #[test]
    fn ohlc_consistency_enforced() {
        let s = "date,ticker,open,high,low,close,volume\n2024-01-02,AAA,1,0.5,0.4,0.45,1\n";
        assert!(read_prices(s.as_bytes(), "p.csv").is_err());
    }

    #[test]
    fn macro_round_trip() {
        let s = "date,gdp,rate\n2024-01-01,1.5,\n2024-02-01,,4.25\n";
        let m = read_macro(s.as_bytes(), "m.csv").unwrap();
        assert_eq!(m.names, ["gdp", "rate"]);
        let mut buf = Vec::new();
        write_macro(&mut buf, &m).unwrap();
        assert_eq!(read_macro(buf.as_slice(), "m.csv").unwrap(), m);
    }
}
