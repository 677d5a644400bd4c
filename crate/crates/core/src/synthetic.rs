//! Seeded geometric-random-walk OHLCV series used as offline fixtures.

use chrono::{Datelike, NaiveDate, Weekday};

use crate::market_data::{ColumnSet, OhlcvBar, PriceSeries};
use crate::rng::{derive_seed, SeededRng};

pub const FIXTURE_SYMBOLS: [&str; 9] = ["VGT", "VFH", "VCR", "VHT", "VOX", "VIS", "VDE", "VNQ", "VPU"];
pub const FIXTURE_SEED: u64 = 23;

const TRADING_DAYS: f64 = 252.0;

#[derive(Debug, Clone, PartialEq)]
pub struct WalkSpec {
    pub symbol: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub start_price: f64,
    pub annual_drift: f64,
    pub annual_volatility: f64,
    /// Rows whose close cell is left empty, to exercise cleaning.
    pub missing_closes: usize,
    pub seed: u64,
}

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

/// Weekdays in `[start, end]`.
pub fn business_days(start: NaiveDate, end: NaiveDate) -> Vec<NaiveDate> {
    start
        .iter_days()
        .take_while(|d| *d <= end)
        .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
        .collect()
}

/// Daily closes follow `C_t = C_{t-1} exp((mu - sigma^2/2) dt + sigma sqrt(dt) z)`.
/// Open, high, low, adjusted close and volume are derived around the close.
/// All prices are rounded to four decimals.
pub fn geometric_random_walk(spec: &WalkSpec) -> PriceSeries {
    let mut rng = SeededRng::new(spec.seed);
    let dates = business_days(spec.start, spec.end);
    let dt = 1.0 / TRADING_DAYS;
    let drift = (spec.annual_drift - 0.5 * spec.annual_volatility.powi(2)) * dt;
    let vol = spec.annual_volatility * dt.sqrt();
    let total = dates.len();

    let mut close = spec.start_price;
    let mut bars = Vec::with_capacity(total);
    for (t, &date) in dates.iter().enumerate() {
        let prev = close;
        close = prev * (drift + vol * rng.normal()).exp();
        let open = prev * (0.25 * vol * rng.normal()).exp();
        let high = open.max(close) * (1.0 + 0.3 * vol * rng.normal().abs());
        let low = open.min(close) * (1.0 - 0.3 * vol * rng.normal().abs());
        // Dividend-style adjustment that fades toward the last bar.
        let years_left = (total - 1 - t) as f64 / TRADING_DAYS;
        let adj = close * (-0.02 * years_left).exp();
        let volume = (1.0e6 * (0.5 * rng.normal()).exp()).round();
        let mut bar = OhlcvBar::new(date);
        bar.open = Some(round4(open));
        bar.high = Some(round4(high));
        bar.low = Some(round4(low));
        bar.close = Some(round4(close));
        bar.adj_close = Some(round4(adj));
        bar.volume = Some(volume);
        bars.push(bar);
    }
    let mut holes = SeededRng::derived(spec.seed, &[0x484f_4c45]);
    for _ in 0..spec.missing_closes.min(total) {
        let i = holes.below(total as u64) as usize;
        bars[i].close = None;
    }
    PriceSeries::new(spec.symbol.clone(), bars, ColumnSet::ALL).expect("business days are increasing")
}

/// The nine bundled sector fixtures, 2012-01-03 through 2022-12-21.
pub fn fixture_specs() -> Vec<WalkSpec> {
    let start_prices = [65.0, 30.0, 65.0, 60.0, 65.0, 65.0, 100.0, 60.0, 75.0];
    let start = NaiveDate::from_ymd_opt(2012, 1, 3).expect("valid date");
    let end = NaiveDate::from_ymd_opt(2022, 12, 21).expect("valid date");
    FIXTURE_SYMBOLS
        .iter()
        .zip(start_prices)
        .enumerate()
        .map(|(i, (symbol, start_price))| WalkSpec {
            symbol: symbol.to_string(),
            start,
            end,
            start_price,
            annual_drift: 0.06,
            annual_volatility: 0.20,
            missing_closes: 3,
            seed: derive_seed(FIXTURE_SEED, &[i as u64]),
        })
        .collect()
}
