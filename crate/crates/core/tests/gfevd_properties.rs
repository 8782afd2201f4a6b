//! Decomposition invariants over random systems, plus the printed-table and
//! direct-evaluation fixtures.

mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use spillover::gfevd::{compute_gfevd, gfevd_terms, summarize, HorizonConvention};
use spillover::simulate;
use spillover::var::{estimate_var_ols, IndicatorPanel, VarModel};

use common::{conservation_error, direct_gfevd, random_system, PRINTED};

#[test]
fn printed_panels_reproduce_headline_aggregates() {
    let a = summarize(&PRINTED[0].spillover_matrix());
    assert!((a.from_others[0] - 20.77).abs() <= 0.01 + 1e-9);
    assert!((a.to_others[2] - 79.24).abs() <= 0.01 + 1e-9);
    assert!((a.net[2] - 11.97).abs() <= 0.01 + 1e-9);
    assert!((a.total - 278.74).abs() <= 0.01 + 1e-9);
    let b = summarize(&PRINTED[1].spillover_matrix());
    assert!((b.total - 233.44).abs() <= 0.01 + 1e-9);
    assert!((b.net[0] + 3.42).abs() <= 0.01 + 1e-9);
}

#[test]
fn upper_triangular_example_matches_direct_evaluation() {
    let beta = DMatrix::from_row_slice(2, 2, &[0.5, 0.2, 0.0, 0.5]);
    let sigma = DMatrix::identity(2, 2);
    let model = VarModel::from_parts(DVector::zeros(2), vec![beta.clone()], sigma.clone()).unwrap();
    let m = compute_gfevd(&model, 10).unwrap();
    let direct = direct_gfevd(&[beta], &sigma, 10);
    for i in 0..2 {
        for j in 0..2 {
            assert!((m.theta_norm[(i, j)] - direct[i][j]).abs() < 1e-10);
        }
    }
    // variable 2 is unaffected by variable 1 and Sigma is diagonal
    assert_eq!(m.theta_norm[(1, 0)], 0.0);
}

fn permute_model(model: &VarModel, perm: &[usize]) -> VarModel {
    let n = model.n;
    let pm = |m: &DMatrix<f64>| DMatrix::from_fn(n, n, |a, b| m[(perm[a], perm[b])]);
    VarModel::from_parts(
        DVector::from_fn(n, |a, _| model.alpha[perm[a]]),
        model.betas.iter().map(pm).collect(),
        pm(&model.sigma),
    )
    .unwrap()
}

fn system() -> impl Strategy<Value = (usize, usize, u64, usize)> {
    (2usize..6, 1usize..3, any::<u64>(), 0usize..25)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matches_direct_evaluation((n, p, seed, h) in system()) {
        let model = random_system(n, p, seed);
        let m = compute_gfevd(&model, h).unwrap();
        let direct = direct_gfevd(&model.betas, &model.sigma, h);
        for i in 0..n {
            for j in 0..n {
                prop_assert!((m.theta_norm[(i, j)] - direct[i][j]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn rows_normalize_and_net_conserves((n, p, seed, h) in system()) {
        let m = compute_gfevd(&random_system(n, p, seed), h).unwrap();
        prop_assert!(conservation_error(&m) < 1e-9);
        prop_assert!(m.theta_norm.iter().all(|&v| v >= 0.0));
        prop_assert!(m.theta_raw.iter().all(|&v| v >= 0.0));
        let s = summarize(&m);
        let from: f64 = s.from_others.iter().sum();
        let to: f64 = s.to_others.iter().sum();
        prop_assert!((from - s.total).abs() < 1e-9 && (to - s.total).abs() < 1e-9);
        for i in 0..n {
            prop_assert!((s.from_others[i] - (100.0 - m.theta_norm[(i, i)])).abs() < 1e-9);
        }
    }

    #[test]
    fn ordering_does_not_matter((n, p, seed, h) in system(), shift in 1usize..5) {
        let model = random_system(n, p, seed);
        let perm: Vec<usize> = (0..n).map(|a| (a + shift) % n).collect();
        let base = compute_gfevd(&model, h).unwrap();
        let permuted = compute_gfevd(&permute_model(&model, &perm), h).unwrap();
        for a in 0..n {
            for b in 0..n {
                prop_assert!((permuted.theta_norm[(a, b)] - base.theta_norm[(perm[a], perm[b])]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn numerator_and_denominator_accumulate((n, p, seed, _h) in system()) {
        let model = random_system(n, p, seed);
        let mut prev = gfevd_terms(&model, 0, HorizonConvention::Inclusive).unwrap();
        for h in 1..15 {
            let next = gfevd_terms(&model, h, HorizonConvention::Inclusive).unwrap();
            prop_assert!(next.0.iter().zip(prev.0.iter()).all(|(a, b)| a >= b));
            prop_assert!(next.1.iter().zip(prev.1.iter()).all(|(a, b)| a >= b));
            prev = next;
        }
    }

    #[test]
    fn rescaling_a_series_changes_nothing(seed in 0u64..10_000, n in 2usize..5, col in 0usize..4, c in 0.01f64..100.0) {
        let col = col % n;
        let betas = simulate::stable_betas(n, 1, 0.8, seed);
        let sigma = simulate::random_covariance(n, seed + 1);
        let data = simulate::var_process(&DVector::zeros(n), &betas, &sigma, 300, seed + 2);
        let labels: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
        let mut scaled = data.clone();
        scaled.column_mut(col).scale_mut(c);
        let a = compute_gfevd(&estimate_var_ols(&IndicatorPanel::new(labels.clone(), data).unwrap(), 1).unwrap(), 10).unwrap();
        let b = compute_gfevd(&estimate_var_ols(&IndicatorPanel::new(labels, scaled).unwrap(), 1).unwrap(), 10).unwrap();
        prop_assert!((a.theta_norm - b.theta_norm).amax() < 1e-9);
    }
}
