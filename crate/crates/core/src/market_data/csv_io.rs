use std::fmt::Write as _;

use chrono::NaiveDate;

use super::{ColumnSet, MarketDataError, OhlcvBar, PriceSeries};

const DATE_FORMAT: &str = "%Y-%m-%d";

#[derive(Default)]
struct ColumnMap {
    date: Option<usize>,
    open: Option<usize>,
    high: Option<usize>,
    low: Option<usize>,
    close: Option<usize>,
    adj_close: Option<usize>,
    volume: Option<usize>,
}

impl ColumnMap {
    fn from_header(header: &csv::StringRecord) -> Result<Self, MarketDataError> {
        let mut map = ColumnMap::default();
        for (idx, name) in header.iter().enumerate() {
            let key: String = name
                .trim()
                .trim_start_matches('\u{feff}')
                .chars()
                .filter(|c| !c.is_whitespace() && *c != '_')
                .collect::<String>()
                .to_ascii_lowercase();
            let slot = match key.as_str() {
                "date" => &mut map.date,
                "open" => &mut map.open,
                "high" => &mut map.high,
                "low" => &mut map.low,
                "close" => &mut map.close,
                "adjclose" => &mut map.adj_close,
                "volume" => &mut map.volume,
                _ => continue,
            };
            slot.get_or_insert(idx);
        }
        if map.date.is_none() {
            return Err(MarketDataError::MissingColumn("Date"));
        }
        if map.close.is_none() {
            return Err(MarketDataError::MissingColumn("Close"));
        }
        Ok(map)
    }

    fn columns(&self) -> ColumnSet {
        ColumnSet {
            open: self.open.is_some(),
            high: self.high.is_some(),
            low: self.low.is_some(),
            adj_close: self.adj_close.is_some(),
            volume: self.volume.is_some(),
        }
    }
}

/// Interprets a numeric cell. Empty, whitespace, `null`, `NaN` and anything
/// else that is not a finite number come back as missing.
fn parse_cell(cell: Option<&str>) -> Option<f64> {
    let text = cell?.trim();
    if text.is_empty() || text.eq_ignore_ascii_case("null") {
        return None;
    }
    text.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Parses vendor OHLCV csv text. Columns are matched by name,
/// case-insensitively, in any order; only `Date` and `Close` are required.
/// Rows come back sorted by ascending date.
pub fn parse_csv(text: &str, symbol: &str) -> Result<PriceSeries, MarketDataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(csv_error)?.clone();
    let map = ColumnMap::from_header(&header)?;
    let date_col = map.date.expect("checked in from_header");

    let mut bars = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        let raw_date = record.get(date_col).unwrap_or("").trim();
        let date = NaiveDate::parse_from_str(raw_date, DATE_FORMAT).map_err(|_| {
            MarketDataError::BadDate {
                line,
                value: raw_date.to_string(),
            }
        })?;
        let cell = |col: Option<usize>| parse_cell(col.and_then(|c| record.get(c)));
        bars.push(OhlcvBar {
            date,
            open: cell(map.open),
            high: cell(map.high),
            low: cell(map.low),
            close: cell(map.close),
            adj_close: cell(map.adj_close),
            volume: cell(map.volume).filter(|v| *v >= 0.0),
        });
    }
    bars.sort_by_key(|b| b.date);
    PriceSeries::new(symbol, bars, map.columns())
}

fn csv_error(err: csv::Error) -> MarketDataError {
    MarketDataError::Csv {
        line: err.position().map(|p| p.line()),
        message: err.to_string(),
    }
}

/// Writes the series back out with the columns it was read with.
/// Missing values become empty cells.
pub fn serialize_csv(series: &PriceSeries) -> String {
    let cols = series.columns();
    let mut out = String::from("Date");
    for (present, name) in [
        (cols.open, "Open"),
        (cols.high, "High"),
        (cols.low, "Low"),
        (true, "Close"),
        (cols.adj_close, "Adj Close"),
        (cols.volume, "Volume"),
    ] {
        if present {
            out.push(',');
            out.push_str(name);
        }
    }
    out.push('\n');
    for bar in series.bars() {
        out.push_str(&bar.date.format(DATE_FORMAT).to_string());
        for (present, value) in [
            (cols.open, bar.open),
            (cols.high, bar.high),
            (cols.low, bar.low),
            (true, bar.close),
            (cols.adj_close, bar.adj_close),
            (cols.volume, bar.volume),
        ] {
            if present {
                out.push(',');
                if let Some(v) = value {
                    write!(out, "{v}").expect("writing to a String");
                }
            }
        }
        out.push('\n');
    }
    out
}
