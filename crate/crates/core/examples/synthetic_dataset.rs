//! Write a small synthetic insurance dataset (prices, caps, metadata and a
//! market-index panel) plus ready-to-run configs.
//!
//! ```text
//! cargo run --example synthetic_dataset -- <dir> [days] [seed]
//! ```

use std::fs;
use std::path::PathBuf;

use chrono::NaiveDate;
use nalgebra::DMatrix;
use rand::Rng;
use spillover::panel::Subsector;
use spillover::simulate;

const COUNTRIES: [&str; 6] = ["DE", "FR", "IT", "NL", "GB", "ES"];

fn write_wide(path: &PathBuf, dates: &[NaiveDate], tickers: &[String], m: &DMatrix<f64>, blank: impl Fn(usize, usize) -> bool) {
    let mut s = String::from("date");
    for t in tickers {
        s.push(',');
        s.push_str(t);
    }
    s.push('\n');
    for (r, d) in dates.iter().enumerate() {
        s.push_str(&d.format("%Y-%m-%d").to_string());
        for c in 0..tickers.len() {
            s.push(',');
            if !blank(r, c) {
                s.push_str(&format!("{:.6}", m[(r, c)]));
            }
        }
        s.push('\n');
    }
    fs::write(path, s).expect("write csv");
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let dir = PathBuf::from(args.get(1).map(String::as_str).unwrap_or("synthetic"));
    let days: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(600);
    let seed: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(7);
    fs::create_dir_all(&dir).expect("create output dir");

    let mut tickers = Vec::new();
    let mut groups = Vec::new();
    let mut meta = String::from("ticker,name,country,subsector\n");
    let mut rng = simulate::rng(seed);
    for (g, s) in Subsector::INSURANCE.iter().enumerate() {
        for k in 1..=3 {
            let t = format!("{}{k}", s.abbreviation().replace('.', "").to_uppercase());
            let country = COUNTRIES[rng.gen_range(0..COUNTRIES.len())];
            meta.push_str(&format!("{t},{} {k} Group,{country},{}\n", s.abbreviation(), s.abbreviation()));
            tickers.push(t);
            groups.push(g);
        }
    }
    // an illiquid name the liquidity filter removes
    tickers.push("THIN1".into());
    groups.push(3);
    meta.push_str("THIN1,Thin Holdings,PT,Pro.Cas.\n");

    let returns = simulate::factor_returns(&groups, days - 1, seed);
    let mut prices = simulate::prices_from_returns(&returns);
    let thin = tickers.len() - 1;
    for r in 1..days {
        if r % 5 != 0 {
            prices[(r, thin)] = prices[(r - 1, thin)];
        }
    }
    let dates = simulate::business_days(NaiveDate::from_ymd_opt(2019, 1, 1).unwrap(), days);
    write_wide(&dir.join("prices.csv"), &dates, &tickers, &prices, |r, c| c == 0 && r == 17);

    let base: Vec<f64> = (0..tickers.len()).map(|_| rng.gen_range(500.0..20_000.0)).collect();
    let caps = DMatrix::from_fn(days, tickers.len(), |r, c| base[c] * prices[(r, c)] / 100.0);
    write_wide(&dir.join("caps.csv"), &dates, &tickers, &caps, |_, _| false);
    fs::write(dir.join("metadata.csv"), meta).expect("write metadata");

    let market_names: Vec<String> = ["Insurance", "Banks", "Stocks", "Bonds"].iter().map(|s| s.to_string()).collect();
    // long enough that the weekly sweep still clears the GARCH sample floor
    let m_days = days.max(1500);
    let m_dates = simulate::business_days(NaiveDate::from_ymd_opt(2019, 1, 1).unwrap() - chrono::Days::new((m_days - days) as u64 * 7 / 5), m_days);
    let m_returns = simulate::factor_returns(&[0, 0, 1, 2], m_days - 1, seed + 100);
    write_wide(&dir.join("markets.csv"), &m_dates, &market_names, &simulate::prices_from_returns(&m_returns), |_, _| false);

    let common = "garch_search = compact\ncaviar_starts = 2000\ncaviar_refine = 3\ncares_patience = 40\nstep = 10\n";
    fs::write(dir.join("markets.conf"), format!("prices = markets.csv\ntier = markets\nout = out\n{common}")).unwrap();
    fs::write(
        dir.join("subsectors.conf"),
        format!("prices = prices.csv\ncaps = caps.csv\nmetadata = metadata.csv\ntier = subsectors\nout = out\n{common}"),
    )
    .unwrap();
    fs::write(
        dir.join("companies.conf"),
        format!("prices = prices.csv\ncaps = caps.csv\nmetadata = metadata.csv\ntier = companies\nout = out\n{common}"),
    )
    .unwrap();
    println!("wrote {} assets x {days} days to {}", tickers.len(), dir.display());
}
