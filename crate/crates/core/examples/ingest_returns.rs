//! Load the bundled synthetic prices, caps and metadata, compute log-returns,
//! drop illiquid series and build value-weighted subsector indices.
//!
//! ```text
//! cargo run --example ingest_returns -- [data_dir]
//! ```

use std::path::PathBuf;

use spillover::panel::{
    apply_liquidity_filter, build_subsector_index, compute_log_returns, load_cap_csv, load_metadata_csv, load_price_csv,
    ColumnSpec, Subsector,
};
use spillover::stats;

fn main() -> spillover::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/synthetic"));
    let spec = ColumnSpec::default();
    let prices = load_price_csv(dir.join("prices.csv"), &spec)?
        .with_metadata(&load_metadata_csv(dir.join("metadata.csv"))?)
        .with_market_caps(&load_cap_csv(dir.join("caps.csv"), &spec)?);
    let returns = compute_log_returns(&prices)?;
    println!("{} assets, {} return dates", returns.n_assets(), returns.dates.len());

    let liquid = apply_liquidity_filter(&returns, 0.30)?;
    let kept = liquid.tickers();
    for t in returns.tickers().iter().filter(|t| !kept.contains(t)) {
        println!("dropped {t}: fewer than 30% nonzero returns");
    }

    println!("{:10} {:>8} {:>8} {:>8}", "subsector", "mean", "sd", "warnings");
    for s in Subsector::INSURANCE {
        let index = build_subsector_index(&liquid, s)?;
        let v = &index.series.values;
        println!("{:10} {:8.4} {:8.4} {:8}", s.abbreviation(), stats::mean(v), stats::variance(v).sqrt(), index.warnings.len());
    }
    Ok(())
}
