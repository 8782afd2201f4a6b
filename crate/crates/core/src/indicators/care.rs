//! CARE expectiles and CARES expected shortfall.
//!
//! CARE: `d_t = e0 + e1 d_{t-1} + e2 |r_{t-1}|`, fitted by asymmetric least
//! squares at level `psi`. CARES scans an increasing `psi` grid and keeps
//! the level whose in-sample violation rate `#{r_t < d_t} / (T - 1)` is
//! closest to `tau`. The ES series is the calibrated expectile path mapped
//! through `ES = (1 + c) d - c E[r]`, `c = psi / ((1 - 2 psi) tau)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::caviar::Dynamics;
use crate::error::{Error, Result};
use crate::optim::NelderMead;
use crate::simulate;
use crate::stats;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CareOptions {
    pub burn_in: usize,
    pub n_starts: usize,
    pub n_refine: usize,
    pub seed: u64,
    pub dynamics: Dynamics,
    /// Extra start point, typically the optimum at a neighbouring `psi`.
    pub warm_start: Option<[f64; 3]>,
}

impl Default for CareOptions {
    fn default() -> Self {
        CareOptions {
            burn_in: 100,
            n_starts: 10_000,
            n_refine: 10,
            seed: 0,
            dynamics: Dynamics::Autoregressive,
            warm_start: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CareFit {
    pub psi: f64,
    pub etas: [f64; 3],
    pub expectile_series: Vec<f64>,
    pub objective: f64,
    pub explosive: bool,
    pub converged: bool,
}

#[inline]
pub fn asymmetric_square(u: f64, psi: f64) -> f64 {
    let w = if u < 0.0 { 1.0 - psi } else { psi };
    w * u * u
}

pub fn care_path(r: &[f64], etas: &[f64; 3], d0: f64) -> Vec<f64> {
    let mut d = Vec::with_capacity(r.len());
    d.push(d0);
    for t in 1..r.len() {
        d.push(etas[0] + etas[1] * d[t - 1] + etas[2] * r[t - 1].abs());
    }
    d
}

fn objective(r: &[f64], e: &[f64; 3], d0: f64, psi: f64) -> f64 {
    let mut d = d0;
    let mut loss = 0.0;
    for t in 1..r.len() {
        d = e[0] + e[1] * d + e[2] * r[t - 1].abs();
        loss += asymmetric_square(r[t] - d, psi);
    }
    if loss.is_finite() {
        loss
    } else {
        f64::INFINITY
    }
}

fn expand(x: &[f64], dynamics: Dynamics) -> [f64; 3] {
    match dynamics {
        Dynamics::Autoregressive => [x[0], x[1], x[2]],
        Dynamics::Constant => [x[0], 0.0, 0.0],
    }
}

pub fn fit_care(r: &[f64], psi: f64, opts: &CareOptions) -> Result<CareFit> {
    if !(psi > 0.0 && psi < 1.0) {
        return Err(Error::Config(format!("expectile level must lie in (0, 1), got {psi}")));
    }
    if r.len() < 3 {
        return Err(Error::Data("return series too short for CARE".into()));
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite return in CARE input".into()));
    }
    let d0 = stats::expectile(&r[..opts.burn_in.min(r.len())], psi);
    let sd = stats::variance(r).sqrt().max(1e-8);
    let (lo, hi) = r.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let dim = match opts.dynamics {
        Dynamics::Autoregressive => 3,
        Dynamics::Constant => 1,
    };

    let mut rng = simulate::rng(opts.seed);
    let mut scored: Vec<(f64, Vec<f64>)> = Vec::with_capacity(opts.n_starts + 2);
    let mut base = vec![0.0; dim];
    base[0] = d0;
    scored.push((objective(r, &expand(&base, opts.dynamics), d0, psi), base));
    if let Some(w) = opts.warm_start {
        let x = w[..dim].to_vec();
        scored.push((objective(r, &expand(&x, opts.dynamics), d0, psi), x));
    }
    for _ in 0..opts.n_starts {
        let x: Vec<f64> = match opts.dynamics {
            Dynamics::Autoregressive => vec![
                rng.gen_range(-sd..sd),
                rng.gen_range(0.0..1.0),
                rng.gen_range(-1.0..1.0),
            ],
            Dynamics::Constant => vec![rng.gen_range(lo..=hi)],
        };
        let v = objective(r, &expand(&x, opts.dynamics), d0, psi);
        scored.push((v, x));
    }
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));

    let nm = NelderMead {
        max_evals: 3000,
        f_tol: 1e-13,
        x_tol: 1e-10,
        initial_step: 0.1,
    };
    let mut best: Option<(f64, Vec<f64>, bool)> = None;
    for (_, x) in scored.iter().take(opts.n_refine.max(1)) {
        let m = nm.minimize_with_restarts(|y| objective(r, &expand(y, opts.dynamics), d0, psi), x, 3);
        if best.as_ref().is_none_or(|b| m.value < b.0) {
            best = Some((m.value, m.x, m.converged));
        }
    }
    let (value, x, converged) = best.expect("at least one refinement");
    if !value.is_finite() {
        return Err(Error::Estimation("CARE loss is not finite at any start".into()));
    }
    let etas = expand(&x, opts.dynamics);
    Ok(CareFit {
        psi,
        etas,
        expectile_series: care_path(r, &etas, d0),
        objective: value,
        explosive: etas[1].abs() >= 1.0,
        converged,
    })
}

/// Closed-form ES implied by an expectile at level `psi`.
pub fn es_from_expectile(expectile: f64, psi: f64, tau: f64, mean: f64) -> f64 {
    let c = psi / ((1.0 - 2.0 * psi) * tau);
    (1.0 + c) * expectile - c * mean
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaresOptions {
    pub grid_start: f64,
    pub grid_step: f64,
    pub grid_end: f64,
    /// Stop the scan after this many consecutive grid points whose violation
    /// rate exceeds `tau` without improving on the best distance.
    pub patience: usize,
    /// Options for the first grid point.
    pub care: CareOptions,
    /// Random starts at later grid points; the previous optimum is always
    /// added as a warm start.
    pub warm_n_starts: usize,
    pub warm_n_refine: usize,
    /// Violation-rate slack beyond which the fit is flagged.
    pub tolerance: f64,
}

impl Default for CaresOptions {
    fn default() -> Self {
        CaresOptions {
            grid_start: 1e-4,
            grid_step: 1e-4,
            grid_end: 0.5,
            patience: 100,
            care: CareOptions::default(),
            warm_n_starts: 50,
            warm_n_refine: 2,
            tolerance: 0.02,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaresFit {
    pub tau: f64,
    pub psi_star: f64,
    pub etas: [f64; 3],
    pub expectile_series: Vec<f64>,
    pub es_series: Vec<f64>,
    pub violation_rate: f64,
    pub mean_return: f64,
    /// `false` when the best achieved rate misses `tau` by more than the
    /// tolerance.
    pub within_tolerance: bool,
    /// `(psi, violation rate)` for every grid point visited.
    pub scanned: Vec<(f64, f64)>,
}

/// Violation rate over `t = 2..T`.
pub fn violation_rate(r: &[f64], path: &[f64]) -> f64 {
    let hits = (1..r.len()).filter(|&t| r[t] < path[t]).count();
    hits as f64 / (r.len() - 1) as f64
}

/// Among `(psi, rate)` pairs in grid order, the earliest one whose rate is
/// closest to `tau`.
pub fn select_closest(scanned: &[(f64, f64)], tau: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &(_, rate)) in scanned.iter().enumerate() {
        let d = (rate - tau).abs();
        match best {
            Some((_, bd)) if d >= bd - 1e-12 => {}
            _ => best = Some((i, d)),
        }
    }
    best.map(|(i, _)| i)
}

pub fn calibrate_cares(r: &[f64], tau: f64, opts: &CaresOptions) -> Result<CaresFit> {
    if !(tau > 0.0 && tau < 0.5) {
        return Err(Error::Config(format!("CARES tau must lie in (0, 0.5), got {tau}")));
    }
    let n_grid = ((opts.grid_end - opts.grid_start) / opts.grid_step).floor() as usize;
    let mut scanned = Vec::new();
    let mut fits: Vec<CareFit> = Vec::new();
    let mut best_dist = f64::INFINITY;
    let mut stale = 0usize;
    let mut warm: Option<[f64; 3]> = None;
    for g in 0..n_grid {
        let psi = opts.grid_start + g as f64 * opts.grid_step;
        if psi >= opts.grid_end {
            break;
        }
        let care_opts = if g == 0 {
            opts.care.clone()
        } else {
            CareOptions {
                n_starts: opts.warm_n_starts,
                n_refine: opts.warm_n_refine,
                warm_start: warm,
                seed: opts.care.seed.wrapping_add(g as u64),
                ..opts.care.clone()
            }
        };
        let fit = fit_care(r, psi, &care_opts)?;
        let rate = violation_rate(r, &fit.expectile_series);
        warm = Some(fit.etas);
        scanned.push((psi, rate));
        let d = (rate - tau).abs();
        let improved = d < best_dist - 1e-12;
        if improved {
            best_dist = d;
        }
        // keep only the running best to bound memory on long grids
        if improved || fits.is_empty() {
            fits.clear();
            fits.push(fit);
        }
        if rate > tau && !improved {
            stale += 1;
            if stale >= opts.patience {
                break;
            }
        } else {
            stale = 0;
        }
    }
    let idx = select_closest(&scanned, tau).ok_or_else(|| Error::Estimation("empty psi grid".into()))?;
    let best = fits.pop().expect("best fit retained");
    debug_assert!((best.psi - scanned[idx].0).abs() < 1e-15);
    let mean_return = stats::mean(r);
    let es_series = best
        .expectile_series
        .iter()
        .map(|&d| es_from_expectile(d, best.psi, tau, mean_return))
        .collect();
    let violation_rate = scanned[idx].1;
    Ok(CaresFit {
        tau,
        psi_star: best.psi,
        etas: best.etas,
        expectile_series: best.expectile_series,
        es_series,
        violation_rate,
        mean_return,
        within_tolerance: (violation_rate - tau).abs() <= opts.tolerance,
        scanned,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> CareOptions {
        CareOptions {
            n_starts: 300,
            n_refine: 3,
            ..Default::default()
        }
    }

    #[test]
    fn symmetric_constant_model_is_the_mean() {
        let r = simulate::gaussian(500, 4);
        let fit = fit_care(
            &r,
            0.5,
            &CareOptions {
                dynamics: Dynamics::Constant,
                ..quick()
            },
        )
        .unwrap();
        let m = stats::mean(&r[1..]);
        assert!((fit.expectile_series[1] - m).abs() < 1e-6, "{} vs {m}", fit.expectile_series[1]);
    }

    #[test]
    fn beats_constant_expectile() {
        let r = simulate::garch11(0.05, 0.1, 0.85, 800, 6);
        let psi = 0.02;
        let fit = fit_care(&r, psi, &quick()).unwrap();
        let d0 = stats::expectile(&r[..100], psi);
        assert!(fit.objective <= objective(&r, &[d0, 0.0, 0.0], d0, psi));
    }

    #[test]
    fn closest_rate_wins_and_ties_go_early() {
        let scanned = [(0.001, 0.01), (0.002, 0.04), (0.003, 0.06), (0.004, 0.08)];
        assert_eq!(select_closest(&scanned, 0.05), Some(1));
        let scanned = [(0.001, 0.01), (0.002, 0.045), (0.003, 0.049), (0.004, 0.051)];
        assert_eq!(select_closest(&scanned, 0.05), Some(2));
    }

    #[test]
    fn es_mapping_identity_at_zero_psi() {
        assert_eq!(es_from_expectile(-1.5, 0.0, 0.05, 0.3), -1.5);
        // Gaussian: 5% quantile and ES
        let q = -1.6448536269514722;
        let es = -2.0627128075074257;
        let c: f64 = (es - q) / q; // c = psi / ((1 - 2 psi) tau)
        let psi = c * 0.05 / (1.0 + 2.0 * c * 0.05);
        assert!((es_from_expectile(q, psi, 0.05, 0.0) - es).abs() < 1e-12);
    }

    #[test]
    fn calibration_selects_closest_grid_point() {
        let r = simulate::gaussian(1500, 12);
        let opts = CaresOptions {
            care: quick(),
            patience: 20,
            ..Default::default()
        };
        let fit = calibrate_cares(&r, 0.05, &opts).unwrap();
        let best = fit
            .scanned
            .iter()
            .map(|(_, rate)| (rate - 0.05).abs())
            .fold(f64::INFINITY, f64::min);
        assert!(((fit.violation_rate - 0.05).abs() - best).abs() < 1e-12);
        assert!(fit.psi_star > 0.0 && fit.psi_star < 0.5);
        assert!(fit.within_tolerance);
        assert_eq!(fit.es_series.len(), r.len());
    }
}
