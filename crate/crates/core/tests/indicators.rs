//! Simulation and brute-force oracles for the volatility and tail-risk
//! estimators.

use proptest::prelude::*;
use rand_distr::{Distribution, StudentT};
use spillover::indicators::care::violation_rate as expectile_violations;
use spillover::indicators::{
    calibrate_cares, fit_care, fit_caviar, select_garch_in, CareOptions, CaresOptions, CaviarOptions, Dynamics, InnovationDist,
    SearchSpace, VarianceFamily,
};
use spillover::{simulate, stats};

fn lattice(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Check loss written out independently of the library recursion.
fn caviar_loss(r: &[f64], g: [f64; 4], f0: f64, tau: f64) -> f64 {
    let mut f = f0;
    let mut loss = 0.0;
    for t in 1..r.len() {
        let x = r[t - 1];
        f = g[0] + g[1] * f + g[2] * if x > 0.0 { x } else { 0.0 } + g[3] * if x < 0.0 { -x } else { 0.0 };
        let u = r[t] - f;
        loss += u * (tau - if u < 0.0 { 1.0 } else { 0.0 });
    }
    loss
}

fn care_loss(r: &[f64], e: [f64; 3], d0: f64, psi: f64) -> f64 {
    let mut d = d0;
    let mut loss = 0.0;
    for t in 1..r.len() {
        d = e[0] + e[1] * d + e[2] * r[t - 1].abs();
        let u = r[t] - d;
        loss += (psi - if u < 0.0 { 1.0 } else { 0.0 }).abs() * u * u;
    }
    loss
}

#[test]
fn caviar_beats_a_coarse_lattice_on_a_short_series() {
    let r = simulate::garch11(0.05, 0.10, 0.85, 50, 5);
    let tau = 0.05;
    // with fewer than burn_in observations the start is the quantile of all of them
    let f0 = stats::quantile_linear(&r, tau);
    let mut best = f64::INFINITY;
    for &g0 in &lattice(-1.0, 1.0, 9) {
        for &g1 in &lattice(0.0, 0.9, 6) {
            for &g2 in &lattice(-1.0, 1.0, 9) {
                for &g3 in &lattice(-1.0, 1.0, 9) {
                    best = best.min(caviar_loss(&r, [g0, g1, g2, g3], f0, tau));
                }
            }
        }
    }
    let fit = fit_caviar(&r, tau, &CaviarOptions::default()).unwrap();
    let own = caviar_loss(&r, fit.gammas, f0, tau);
    assert!((own - fit.objective).abs() < 1e-9, "{own} vs reported {}", fit.objective);
    assert!(own <= best + 1e-9, "library {own} vs lattice {best}");
}

#[test]
fn care_beats_a_coarse_lattice_on_a_short_series() {
    let r = simulate::garch11(0.05, 0.10, 0.85, 50, 6);
    let psi = 0.02;
    let d0 = stats::expectile(&r, psi);
    let mut best = f64::INFINITY;
    for &e0 in &lattice(-1.5, 1.5, 13) {
        for &e1 in &lattice(0.0, 0.95, 11) {
            for &e2 in &lattice(-1.5, 1.5, 13) {
                best = best.min(care_loss(&r, [e0, e1, e2], d0, psi));
            }
        }
    }
    let fit = fit_care(&r, psi, &CareOptions::default()).unwrap();
    let own = care_loss(&r, fit.etas, d0, psi);
    assert!((own - fit.objective).abs() < 1e-9 * own.max(1.0));
    assert!(own <= best + 1e-9, "library {own} vs lattice {best}");
}

#[test]
fn garch_selection_prefers_the_true_family_and_orders() {
    let family_space = SearchSpace {
        families: VarianceFamily::ALL.to_vec(),
        dists: vec![InnovationDist::Gaussian, InnovationDist::StudentT],
        max_mean_order: 0,
        min_variance_order: 1,
        max_variance_order: 1,
    };
    let order_space = SearchSpace {
        families: vec![VarianceFamily::Standard],
        dists: vec![InnovationDist::Gaussian],
        max_mean_order: 0,
        min_variance_order: 0,
        max_variance_order: 2,
    };
    let (mut family_hits, mut order_hits) = (0, 0);
    for seed in 0..20u64 {
        let r = simulate::garch11(0.05, 0.10, 0.85, 1000, 300 + seed);
        let f = select_garch_in(&r, &family_space).unwrap();
        family_hits += usize::from(f.spec.family == VarianceFamily::Standard);
        let o = select_garch_in(&r, &order_space).unwrap();
        order_hits += usize::from(o.spec.arch_order == 1 && o.spec.garch_order == 1);
    }
    assert!(family_hits >= 18, "Standard family chosen {family_hits}/20");
    assert!(order_hits >= 18, "GARCH(1,1) orders chosen {order_hits}/20");
}

#[test]
fn iid_data_keeps_garch11_within_bic_slack() {
    let r = simulate::gaussian(1000, 8);
    let space = SearchSpace {
        families: vec![VarianceFamily::Standard],
        dists: vec![InnovationDist::Gaussian],
        max_mean_order: 0,
        min_variance_order: 0,
        max_variance_order: 2,
    };
    let best = select_garch_in(&r, &space).unwrap();
    let g11 = spillover::indicators::fit_garch(&r, &spillover::indicators::GarchSpec::garch11(InnovationDist::Gaussian)).unwrap();
    assert!(g11.bic - best.bic <= 2.0 * (best.n_obs as f64).ln(), "{} vs {}", g11.bic, best.bic);
    let persistence: f64 = best.params.arch.iter().chain(&best.params.garch).sum();
    assert!(
        !(best.spec.arch_order >= 1 && best.spec.garch_order >= 1 && persistence > 0.9 && best.params.arch.iter().sum::<f64>() > 0.05),
        "spurious persistent GARCH on white noise: {:?}",
        best.params
    );
}

#[test]
fn cares_sits_below_caviar_on_heavy_tails() {
    let t = StudentT::new(4.0).unwrap();
    let mut rng = simulate::rng(41);
    let r: Vec<f64> = (0..1500).map(|_| t.sample(&mut rng) / 2f64.sqrt()).collect();
    let tau = 0.05;
    let var = fit_caviar(&r, tau, &CaviarOptions::default()).unwrap();
    let es = calibrate_cares(&r, tau, &CaresOptions::default()).unwrap();
    let (mean_var, mean_es) = (stats::mean(&var.var_series), stats::mean(&es.es_series));
    assert!(mean_es < mean_var, "ES {mean_es} vs VaR {mean_var}");
    assert!((expectile_violations(&r, &es.expectile_series) - es.violation_rate).abs() < 1e-15);
}

fn quick_caviar(dynamics: Dynamics, seed: u64) -> CaviarOptions {
    CaviarOptions {
        n_starts: 200,
        n_refine: 2,
        seed,
        dynamics,
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn caviar_dominates_its_constant_model(seed in 0u64..1000, tau in 0.02f64..0.2) {
        let r = simulate::garch11(0.05, 0.10, 0.85, 300, seed);
        let full = fit_caviar(&r, tau, &quick_caviar(Dynamics::Autoregressive, seed)).unwrap();
        let constant = fit_caviar(&r, tau, &quick_caviar(Dynamics::Constant, seed)).unwrap();
        prop_assert!(full.objective <= constant.objective + 1e-9);
    }

    #[test]
    fn care_dominates_its_constant_model(seed in 0u64..1000, psi in 0.01f64..0.5) {
        let r = simulate::garch11(0.05, 0.10, 0.85, 300, seed);
        let opts = |dynamics| CareOptions { n_starts: 200, n_refine: 2, seed, dynamics, ..Default::default() };
        let full = fit_care(&r, psi, &opts(Dynamics::Autoregressive)).unwrap();
        let constant = fit_care(&r, psi, &opts(Dynamics::Constant)).unwrap();
        let d0 = stats::expectile(&r[..100], psi);
        prop_assert!(full.objective <= care_loss(&r, [d0, 0.0, 0.0], d0, psi) + 1e-9);
        prop_assert!(full.objective <= constant.objective + 1e-9);
    }

    #[test]
    fn fits_are_deterministic_under_a_seed(seed in 0u64..1000) {
        let r = simulate::garch11(0.05, 0.10, 0.85, 300, seed);
        let a = fit_caviar(&r, 0.05, &quick_caviar(Dynamics::Autoregressive, seed)).unwrap();
        let b = fit_caviar(&r, 0.05, &quick_caviar(Dynamics::Autoregressive, seed)).unwrap();
        prop_assert_eq!(a.var_series, b.var_series);
    }
}
