//! Checks a pool table's affinity regexes against its expected keys.
//!
//!     cargo run --example pool_regex_check [-- path/to/table.csv]

use affinity_sim::harness::validate_regex;

fn main() -> Result<(), affinity_sim::Error> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/pipeline_pools.csv").to_string());
    let report = validate_regex(&path)?;
    println!("{report}");
    if !report.is_clean() {
        std::process::exit(1);
    }
    Ok(())
}
