//! Asymmetric-slope CAViaR at the 5% level on a simulated GARCH series,
//! compared with the constant empirical quantile.
//!
//! ```text
//! cargo run --release --example caviar_var -- [tau]
//! ```

use spillover::indicators::caviar::violation_rate;
use spillover::indicators::{fit_caviar, CaviarOptions};
use spillover::{simulate, stats};

fn main() -> spillover::Result<()> {
    let tau: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.05);
    let r = simulate::garch11(0.05, 0.10, 0.85, 3000, 21);

    let fit = fit_caviar(&r, tau, &CaviarOptions::default())?;
    let [g1, g2, g3, g4] = fit.gammas;
    println!("f_t = {g1:.4} + {g2:.4} f_(t-1) + {g3:.4} r+ + {g4:.4} r-");
    println!("check loss {:.3}, violation rate {:.4}, explosive {}", fit.objective, fit.violation_rate, fit.explosive);

    let q = stats::quantile_linear(&r, tau);
    let flat = vec![q; r.len()];
    println!("constant quantile {q:.4} violates at {:.4}", violation_rate(&r, &flat));

    // the dynamic quantile should track volatility: deepest in the most turbulent stretch
    let worst = (0..r.len()).min_by(|&a, &b| fit.var_series[a].total_cmp(&fit.var_series[b])).unwrap();
    println!("deepest VaR {:.3} at t = {worst}", fit.var_series[worst]);
    Ok(())
}
