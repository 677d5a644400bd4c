//! Regenerates the bundled fixture csv files.
//!
//! cargo run -p seqcast-core --example make_fixtures -- data/fixtures

use std::path::PathBuf;

use seqcast_core::market_data::{drop_missing, serialize_csv, split_index, PriceField};
use seqcast_core::synthetic::{fixture_specs, geometric_random_walk};

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data/fixtures".into()));
    std::fs::create_dir_all(&dir)?;
    for spec in fixture_specs() {
        let series = geometric_random_walk(&spec);
        let (clean, dropped) = drop_missing(&series);
        let closes = clean.values(PriceField::Close);
        let cut = split_index(closes.len(), 0.8);
        let range = |v: &[f64]| v.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
        let (tr, te) = (range(&closes[..cut]), range(&closes[cut..]));
        println!(
            "{}: {} rows, {dropped} dropped, train [{:.2}, {:.2}], test [{:.2}, {:.2}]",
            spec.symbol,
            series.len(),
            tr.0,
            tr.1,
            te.0,
            te.1
        );
        std::fs::write(dir.join(format!("{}.csv", spec.symbol)), serialize_csv(&series))?;
    }
    Ok(())
}
