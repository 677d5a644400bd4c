use std::path::Path;

use seqcast_core::market_data::serialize_csv;
use seqcast_core::synthetic::{fixture_specs, geometric_random_walk, FIXTURE_SYMBOLS};

#[test]
fn bundled_fixtures_match_the_generator() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/fixtures");
    let specs = fixture_specs();
    assert_eq!(specs.iter().map(|s| s.symbol.as_str()).collect::<Vec<_>>(), FIXTURE_SYMBOLS);
    for spec in specs {
        let on_disk = std::fs::read_to_string(dir.join(format!("{}.csv", spec.symbol))).unwrap();
        assert!(
            on_disk == serialize_csv(&geometric_random_walk(&spec)),
            "{} differs; rerun the make_fixtures example",
            spec.symbol
        );
    }
}
