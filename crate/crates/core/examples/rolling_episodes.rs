//! Rolling spillover index on a simulated panel whose cross-dependence jumps
//! during 2020, averaged over the bundled crisis episodes.
//!
//! ```text
//! cargo run --release --example rolling_episodes
//! ```

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use spillover::rolling::{default_episodes, episode_averages, rolling_spillovers, Episode, RollingConfig};
use spillover::simulate;
use spillover::var::IndicatorPanel;

fn main() -> spillover::Result<()> {
    let n = 4;
    let dates = simulate::business_days(NaiveDate::from_ymd_opt(2017, 1, 2).unwrap(), 1500);
    let calm = DMatrix::from_diagonal_element(n, n, 0.3);
    let stressed = DMatrix::from_fn(n, n, |i, j| if i == j { 0.3 } else { 0.2 });
    let crisis = |d: NaiveDate| d >= NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() && d <= NaiveDate::from_ymd_opt(2020, 12, 31).unwrap();

    // one VAR(1) path whose coefficients switch with the calendar
    let shocks = simulate::var_process(&DVector::zeros(n), &[DMatrix::zeros(n, n)], &DMatrix::identity(n, n), dates.len(), 17);
    let mut x = DMatrix::zeros(dates.len(), n);
    for t in 0..dates.len() {
        let b = if crisis(dates[t]) { &stressed } else { &calm };
        let prev = if t > 0 { b * x.row(t - 1).transpose() } else { DVector::zeros(n) };
        x.set_row(t, &(prev + shocks.row(t).transpose()).transpose());
    }
    let panel = IndicatorPanel::new((0..n).map(|i| format!("s{i}")).collect(), x)?.with_dates(dates)?;

    let cfg = RollingConfig { step: 5, ..Default::default() };
    let r = rolling_spillovers(&panel, &cfg)?;
    println!("{} windows of {} days, {} failed", r.len(), cfg.window, r.failures.len());
    for k in (0..r.len()).step_by(20) {
        println!("{} total {:7.2}", r.window_end_dates[k], r.total_series[k].unwrap());
    }

    let first = r.window_end_dates[0];
    let last = r.window_end_dates[r.len() - 1];
    let mut episodes: Vec<Episode> = default_episodes().into_iter().filter(|e| e.start >= first && e.end <= last).collect();
    // windows whose 250 days lie mostly inside the stressed year
    episodes.push(Episode {
        name: "Stress-dominated windows".into(),
        start: NaiveDate::from_ymd_opt(2020, 9, 1).unwrap(),
        end: NaiveDate::from_ymd_opt(2021, 3, 31).unwrap(),
    });
    episode_averages(&r, &episodes)?.write_csv(std::io::stdout().lock())
}
