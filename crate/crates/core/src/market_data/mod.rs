//! Daily OHLCV ingestion, cleaning, moving averages and the chronological
//! train/test split.

mod csv_io;
mod fetch;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use csv_io::{parse_csv, serialize_csv};
pub use fetch::{expand_template, fetch_remote, FetchError};

#[derive(Debug, Error, PartialEq)]
pub enum MarketDataError {
    #[error("missing required column `{0}` in header")]
    MissingColumn(&'static str),
    #[error("line {line}: unparseable date `{value}` (expected YYYY-MM-DD)")]
    BadDate { line: u64, value: String },
    #[error("duplicate date {date}")]
    DuplicateDate { date: NaiveDate },
    #[error("dates are not strictly increasing at {date}")]
    Unordered { date: NaiveDate },
    #[error("malformed csv{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Csv { line: Option<u64>, message: String },
    #[error("moving-average window must be at least 1")]
    InvalidWindow,
    #[error("series of length {len} is shorter than window {window}")]
    InsufficientData { len: usize, window: usize },
    #[error("split ratio {0} is outside (0, 1)")]
    BadRatio(f64),
    #[error("series is empty")]
    EmptySeries,
}

/// One trading day. Any value may be missing (`None`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OhlcvBar {
    pub date: NaiveDate,
    pub open: Option<f64>,
    pub high: Option<f64>,
    pub low: Option<f64>,
    pub close: Option<f64>,
    pub adj_close: Option<f64>,
    pub volume: Option<f64>,
}

impl OhlcvBar {
    pub fn new(date: NaiveDate) -> Self {
        Self {
            date,
            open: None,
            high: None,
            low: None,
            close: None,
            adj_close: None,
            volume: None,
        }
    }

    pub fn price(&self, field: PriceField) -> Option<f64> {
        match field {
            PriceField::Close => self.close,
            PriceField::AdjClose => self.adj_close,
        }
    }
}

/// Which optional columns the source actually carried. `Date` and `Close`
/// are always required and therefore not tracked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSet {
    pub open: bool,
    pub high: bool,
    pub low: bool,
    pub adj_close: bool,
    pub volume: bool,
}

impl ColumnSet {
    pub const ALL: ColumnSet = ColumnSet {
        open: true,
        high: true,
        low: true,
        adj_close: true,
        volume: true,
    };
}

/// The price channel fed to the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceField {
    #[default]
    Close,
    AdjClose,
}

/// Bars for one ticker with strictly increasing dates.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    symbol: String,
    bars: Vec<OhlcvBar>,
    columns: ColumnSet,
}

impl PriceSeries {
    pub fn new(
        symbol: impl Into<String>,
        bars: Vec<OhlcvBar>,
        columns: ColumnSet,
    ) -> Result<Self, MarketDataError> {
        for pair in bars.windows(2) {
            if pair[1].date == pair[0].date {
                return Err(MarketDataError::DuplicateDate { date: pair[1].date });
            }
            if pair[1].date < pair[0].date {
                return Err(MarketDataError::Unordered { date: pair[1].date });
            }
        }
        Ok(Self {
            symbol: symbol.into(),
            bars,
            columns,
        })
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn bars(&self) -> &[OhlcvBar] {
        &self.bars
    }

    pub fn columns(&self) -> ColumnSet {
        self.columns
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.bars.iter().map(|b| b.date).collect()
    }

    /// Values of `field`, with missing entries as `None`.
    pub fn prices(&self, field: PriceField) -> Vec<Option<f64>> {
        self.bars.iter().map(|b| b.price(field)).collect()
    }

    /// Values of `field` for a cleaned series. Missing values become NaN, so
    /// call [`drop_missing`] first.
    pub fn values(&self, field: PriceField) -> Vec<f64> {
        self.bars
            .iter()
            .map(|b| b.price(field).unwrap_or(f64::NAN))
            .collect()
    }

    /// Bars with `start <= date <= end`.
    pub fn between(&self, start: NaiveDate, end: NaiveDate) -> PriceSeries {
        let bars = self
            .bars
            .iter()
            .filter(|b| b.date >= start && b.date <= end)
            .cloned()
            .collect();
        PriceSeries {
            symbol: self.symbol.clone(),
            bars,
            columns: self.columns,
        }
    }

    fn with_bars(&self, bars: Vec<OhlcvBar>) -> PriceSeries {
        PriceSeries {
            symbol: self.symbol.clone(),
            bars,
            columns: self.columns,
        }
    }
}

/// Removes every bar with a missing price among the columns the series
/// carries. Returns the cleaned series and the number of bars removed.
pub fn drop_missing(series: &PriceSeries) -> (PriceSeries, usize) {
    let cols = series.columns;
    let complete = |b: &OhlcvBar| {
        b.close.is_some()
            && (!cols.open || b.open.is_some())
            && (!cols.high || b.high.is_some())
            && (!cols.low || b.low.is_some())
            && (!cols.adj_close || b.adj_close.is_some())
    };
    let kept: Vec<OhlcvBar> = series.bars.iter().filter(|b| complete(b)).cloned().collect();
    let dropped = series.len() - kept.len();
    (series.with_bars(kept), dropped)
}

/// Simple moving average over `n` points.
///
/// Element `k` of the result is the mean of `values[k..k + n]`, i.e. it is
/// aligned to input index `k + n - 1`. Each window is summed independently
/// with compensated summation, so the result carries no accumulated drift.
pub fn sma(values: &[f64], n: usize) -> Result<Vec<f64>, MarketDataError> {
    if n < 1 {
        return Err(MarketDataError::InvalidWindow);
    }
    if values.len() < n {
        return Err(MarketDataError::InsufficientData {
            len: values.len(),
            window: n,
        });
    }
    let denom = n as f64;
    Ok(values
        .windows(n)
        .map(|w| compensated_sum(w) / denom)
        .collect())
}

/// Neumaier summation.
fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// SMA aligned to the input: `None` for the first `n - 1` positions (or for
/// every position when the series is too short).
pub fn sma_aligned(values: &[f64], n: usize) -> Result<Vec<Option<f64>>, MarketDataError> {
    let mut out = vec![None; values.len()];
    match sma(values, n) {
        Ok(defined) => {
            for (slot, v) in out[n - 1..].iter_mut().zip(defined) {
                *slot = Some(v);
            }
            Ok(out)
        }
        Err(MarketDataError::InsufficientData { .. }) => Ok(out),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    pub train: PriceSeries,
    pub test: PriceSeries,
    pub ratio: f64,
}

/// Number of leading items that go to the training side: `floor(ratio * len)`.
///
/// A tolerance of 1e-9 absorbs representation error so that e.g. 0.29 * 100
/// yields 29 rather than 28.
pub fn split_index(len: usize, ratio: f64) -> usize {
    let raw = ratio * len as f64;
    ((raw + 1e-9).floor() as usize).min(len)
}

/// Leading `floor(ratio * len)` bars for training, the rest for testing.
pub fn chronological_split(
    series: &PriceSeries,
    ratio: f64,
) -> Result<SplitResult, MarketDataError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(MarketDataError::BadRatio(ratio));
    }
    if series.is_empty() {
        return Err(MarketDataError::EmptySeries);
    }
    let cut = split_index(series.len(), ratio);
    Ok(SplitResult {
        train: series.with_bars(series.bars[..cut].to_vec()),
        test: series.with_bars(series.bars[cut..].to_vec()),
        ratio,
    })
}
