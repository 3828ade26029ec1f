//! Daily market-data ingestion and period slicing.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};

/// Dated daily closing prices, the calibration input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    pub dates: Vec<NaiveDate>,
    pub closes: Vec<f64>,
    pub label: String,
}

impl PriceSeries {
    pub fn new(dates: Vec<NaiveDate>, closes: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        let s = Self {
            dates,
            closes,
            label: label.into(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dates.len() != self.closes.len() {
            return Err(Error::invalid("dates and closes must have equal length"));
        }
        if self.dates.len() < 2 {
            return Err(Error::invalid("price series needs at least 2 observations"));
        }
        if self.closes.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::invalid("closes must all be > 0 and finite"));
        }
        if self.dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("dates must be strictly increasing"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.closes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.closes.is_empty()
    }

    /// Writes `Date,Close` with ISO dates.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "Date,Close")?;
        for (d, c) in self.dates.iter().zip(&self.closes) {
            writeln!(w, "{d},{c}")?;
        }
        Ok(())
    }
}

/// A price series restricted to an inclusive date window.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodSlice {
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub series: PriceSeries,
}

fn parse_date(raw: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(raw, "%Y-%m-%d")
        .or_else(|_| NaiveDate::parse_from_str(raw, "%m/%d/%Y"))
        .ok()
}

/// Loads a daily price CSV, sorting rows ascending by date.
///
/// Dates parse as ISO-8601 with an `MM/DD/YYYY` fallback; duplicate dates
/// and non-positive prices are rejected with the offending line numbers.
pub fn load_price_csv(
    path: impl AsRef<Path>,
    date_column: &str,
    price_column: &str,
) -> Result<PriceSeries> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;

    let headers = reader.headers()?.clone();
    let date_idx = headers
        .iter()
        .position(|h| h == date_column)
        .ok_or_else(|| Error::data(&display, format!("missing column '{date_column}'")))?;
    let price_idx = headers
        .iter()
        .position(|h| h == price_column)
        .ok_or_else(|| Error::data(&display, format!("missing column '{price_column}'")))?;

    // (date, close, 1-based line number of the row)
    let mut rows: Vec<(NaiveDate, f64, u64)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i as u64 + 2;
        let record = record?;
        let raw_date = record
            .get(date_idx)
            .ok_or_else(|| Error::data(&display, format!("line {line}: short row")))?;
        let date = parse_date(raw_date)
            .ok_or_else(|| Error::data(&display, format!("line {line}: unparseable date '{raw_date}'")))?;
        let raw_price = record
            .get(price_idx)
            .ok_or_else(|| Error::data(&display, format!("line {line}: short row")))?;
        let close: f64 = raw_price.parse().map_err(|_| {
            Error::data(&display, format!("line {line}: unparseable price '{raw_price}'"))
        })?;
        if !(close.is_finite() && close > 0.0) {
            return Err(Error::data(
                &display,
                format!("line {line}: non-positive price {close}"),
            ));
        }
        rows.push((date, close, line));
    }

    rows.sort_by_key(|(d, _, _)| *d);
    for w in rows.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(Error::data(
                &display,
                format!("duplicate date {} on lines {} and {}", w[0].0, w[0].2, w[1].2),
            ));
        }
    }

    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| display.clone());
    let (dates, closes) = rows.into_iter().map(|(d, c, _)| (d, c)).unzip();
    PriceSeries::new(dates, closes, label)
}

/// Restricts a series to `start..=end`.
pub fn slice_period(series: &PriceSeries, start: NaiveDate, end: NaiveDate) -> Result<PeriodSlice> {
    if start > end {
        return Err(Error::invalid("start date must be <= end date"));
    }
    let mut dates = Vec::new();
    let mut closes = Vec::new();
    for (d, c) in series.dates.iter().zip(&series.closes) {
        if *d >= start && *d <= end {
            dates.push(*d);
            closes.push(*c);
        }
    }
    if dates.is_empty() {
        return Err(Error::invalid(format!(
            "no observations in window {start}..{end}"
        )));
    }
    if dates.len() < 2 {
        return Err(Error::invalid(format!(
            "window {start}..{end} retains fewer than 2 observations"
        )));
    }
    Ok(PeriodSlice {
        start,
        end,
        series: PriceSeries {
            dates,
            closes,
            label: series.label.clone(),
        },
    })
}
