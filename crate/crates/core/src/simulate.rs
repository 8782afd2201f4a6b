//! Seeded data generators for examples, tests and synthetic pipeline runs.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const BURN_IN: usize = 500;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// i.i.d. standard normal draws.
pub fn gaussian(t: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng(seed);
    (0..t).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Zero-mean Gaussian GARCH(1,1) returns.
pub fn garch11(omega: f64, alpha: f64, beta: f64, t: usize, seed: u64) -> Vec<f64> {
    garch11_with_vol(omega, alpha, beta, t, seed).0
}

/// Returns together with the true conditional standard deviations.
pub fn garch11_with_vol(omega: f64, alpha: f64, beta: f64, t: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = rng(seed);
    let mut s2 = omega / (1.0 - alpha - beta).max(1e-6);
    let mut prev = 0.0f64;
    let mut r = Vec::with_capacity(t);
    let mut vol = Vec::with_capacity(t);
    for i in 0..t + BURN_IN {
        s2 = omega + alpha * prev * prev + beta * s2;
        let z: f64 = StandardNormal.sample(&mut rng);
        prev = s2.sqrt() * z;
        if i >= BURN_IN {
            r.push(prev);
            vol.push(s2.sqrt());
        }
    }
    (r, vol)
}

/// Simulate `x_t = alpha + sum_i betas[i] x_{t-i} + eps_t` with
/// `eps_t ~ N(0, sigma)`. Rows of the result are time.
pub fn var_process(alpha: &DVector<f64>, betas: &[DMatrix<f64>], sigma: &DMatrix<f64>, t: usize, seed: u64) -> DMatrix<f64> {
    let n = alpha.len();
    let chol = sigma
        .clone()
        .cholesky()
        .expect("innovation covariance must be positive definite")
        .l();
    let mut rng = rng(seed);
    let total = t + BURN_IN;
    let mut x = DMatrix::<f64>::zeros(total, n);
    for s in 0..total {
        let z = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let mut v = alpha + &chol * z;
        for (i, b) in betas.iter().enumerate() {
            let lag = i + 1;
            if s >= lag {
                let prev = x.row(s - lag).transpose();
                v += b * prev;
            }
        }
        x.set_row(s, &v.transpose());
    }
    x.rows(BURN_IN, t).into_owned()
}

/// Random coefficient matrices scaled until the companion matrix has
/// spectral radius at most `max_radius`.
pub fn stable_betas(n: usize, p: usize, max_radius: f64, seed: u64) -> Vec<DMatrix<f64>> {
    let mut rng = rng(seed);
    let mut betas: Vec<DMatrix<f64>> = (0..p)
        .map(|_| DMatrix::from_fn(n, n, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            0.4 * z
        }))
        .collect();
    loop {
        let rho = crate::var::spectral_radius(&betas);
        if rho <= max_radius {
            return betas;
        }
        let scale = (max_radius / rho) * 0.99;
        for b in betas.iter_mut() {
            *b *= scale;
        }
    }
}

/// Random symmetric positive-definite covariance with unit-ish diagonal.
pub fn random_covariance(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng(seed);
    let a = DMatrix::from_fn(n, n, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        z
    });
    let s = &a * a.transpose() / n as f64 + DMatrix::identity(n, n) * 0.5;
    (&s + s.transpose()) * 0.5
}

/// Percent log-returns where series 0 is a GARCH(1,1) hub and every other
/// series loads `coef` on the hub's previous return plus its own GARCH(1,1)
/// noise scaled by `noise_sd`. Rows are time.
pub fn planted_hub_returns(n: usize, t: usize, coef: f64, noise_sd: f64, seed: u64) -> DMatrix<f64> {
    let hub = garch11(0.05, 0.15, 0.80, t + 1, seed);
    let mut x = DMatrix::zeros(t, n);
    for i in 1..n {
        let noise = garch11(0.05, 0.10, 0.85, t, seed ^ (0x9e37_79b9_7f4a_7c15_u64.wrapping_mul(i as u64)));
        for s in 0..t {
            x[(s, i)] = coef * hub[s] + noise_sd * noise[s];
        }
    }
    for s in 0..t {
        x[(s, 0)] = hub[s + 1];
    }
    x
}

/// Price paths starting at 100 from percent log-returns (rows are time);
/// the result has one more row than `returns`.
pub fn prices_from_returns(returns: &DMatrix<f64>) -> DMatrix<f64> {
    let (t, n) = returns.shape();
    let mut p = DMatrix::from_element(t + 1, n, 100.0);
    for s in 0..t {
        for j in 0..n {
            p[(s + 1, j)] = p[(s, j)] * (returns[(s, j)] / 100.0).exp();
        }
    }
    p
}

/// Weekdays starting at `start` (weekends skipped).
pub fn business_days(start: chrono::NaiveDate, count: usize) -> Vec<chrono::NaiveDate> {
    use chrono::Datelike;
    let mut out = Vec::with_capacity(count);
    let mut d = start;
    while out.len() < count {
        if d.weekday().number_from_monday() <= 5 {
            out.push(d);
        }
        d = d.succ_opt().expect("date in range");
    }
    out
}

/// Returns driven by a GARCH market factor, a per-group factor and GARCH
/// idiosyncratic noise. `groups[j]` is the group of series `j`.
pub fn factor_returns(groups: &[usize], t: usize, seed: u64) -> DMatrix<f64> {
    let n_groups = groups.iter().max().map_or(0, |g| g + 1);
    let market = garch11(0.05, 0.10, 0.85, t, seed);
    let group_f: Vec<Vec<f64>> = (0..n_groups).map(|g| garch11(0.03, 0.08, 0.88, t, seed + 1 + g as u64)).collect();
    let mut rng = rng(seed ^ 0x5151_5151);
    let loadings: Vec<f64> = groups.iter().map(|_| 0.6 + 0.8 * rand::Rng::gen::<f64>(&mut rng)).collect();
    let mut x = DMatrix::zeros(t, groups.len());
    for (j, &g) in groups.iter().enumerate() {
        let own = garch11(0.05, 0.12, 0.83, t, seed ^ 0x5151_5151 ^ (0x9e37_79b9_7f4a_7c15_u64.wrapping_mul(j as u64 + 1)));
        for s in 0..t {
            let lag = if s > 0 { 0.1 * market[s - 1] } else { 0.0 };
            x[(s, j)] = loadings[j] * market[s] + 0.7 * group_f[g][s] + lag + 0.8 * own[s];
        }
    }
    x
}

/// Writes a wide `date,<tickers>` CSV; rows of `values` are dates.
pub fn write_wide_csv<W: std::io::Write>(w: W, dates: &[chrono::NaiveDate], tickers: &[String], values: &DMatrix<f64>) -> crate::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["date".to_string()];
    header.extend(tickers.iter().cloned());
    out.write_record(&header)?;
    for (r, d) in dates.iter().enumerate() {
        let mut row = vec![d.format("%Y-%m-%d").to_string()];
        row.extend((0..tickers.len()).map(|c| format!("{:.6}", values[(r, c)])));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_under_seed() {
        assert_eq!(garch11(0.05, 0.1, 0.85, 50, 9), garch11(0.05, 0.1, 0.85, 50, 9));
        assert_ne!(gaussian(5, 1), gaussian(5, 2));
    }

    #[test]
    fn hub_series_lead_the_rest() {
        let x = planted_hub_returns(4, 2000, 0.3, 0.3, 1);
        let hub: Vec<f64> = x.column(0).iter().copied().collect();
        let other: Vec<f64> = x.column(2).iter().copied().collect();
        let lead = crate::stats::pearson(&hub[..1999], &other[1..]);
        assert!(lead > 0.5, "{lead}");
    }

    #[test]
    fn prices_and_calendar() {
        let r = DMatrix::from_row_slice(2, 1, &[10.0, -10.0]);
        let p = prices_from_returns(&r);
        assert!((p[(2, 0)] - 100.0).abs() < 1e-12);
        let d = business_days(chrono::NaiveDate::from_ymd_opt(2024, 1, 5).unwrap(), 3);
        assert_eq!(d[1], chrono::NaiveDate::from_ymd_opt(2024, 1, 8).unwrap());
    }

    #[test]
    fn stable_betas_respect_radius() {
        let b = stable_betas(3, 2, 0.8, 4);
        assert!(crate::var::spectral_radius(&b) <= 0.8);
    }
}
