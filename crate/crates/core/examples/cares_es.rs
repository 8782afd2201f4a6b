//! Expected shortfall from a CARE expectile whose level is calibrated so the
//! in-sample violation rate matches the VaR level.
//!
//! ```text
//! cargo run --release --example cares_es -- [tau]
//! ```

use spillover::indicators::{calibrate_cares, fit_caviar, CaresOptions, CaviarOptions};
use spillover::{simulate, stats};

fn main() -> spillover::Result<()> {
    let tau: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.05);
    let r = simulate::garch11(0.05, 0.10, 0.85, 2000, 31);

    let es = calibrate_cares(&r, tau, &CaresOptions::default())?;
    println!(
        "psi* = {:.4} after {} grid points, violation rate {:.4} (target {tau}, within tolerance: {})",
        es.psi_star,
        es.scanned.len(),
        es.violation_rate,
        es.within_tolerance
    );
    let [e1, e2, e3] = es.etas;
    println!("delta_t = {e1:.4} + {e2:.4} delta_(t-1) + {e3:.4} |r_(t-1)|");

    let var = fit_caviar(&r, tau, &CaviarOptions::default())?;
    println!("mean VaR {:.4}, mean ES {:.4}", stats::mean(&var.var_series), stats::mean(&es.es_series));
    let below = es.es_series.iter().zip(&var.var_series).filter(|(e, v)| e < v).count();
    println!("ES below VaR on {below} of {} days", r.len());
    Ok(())
}
