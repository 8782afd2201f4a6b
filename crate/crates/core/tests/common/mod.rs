//! Shared fixtures and independent oracles for the integration suites.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use spillover::gfevd::SpilloverMatrix;
use spillover::simulate;
use spillover::var::VarModel;

pub const SUBSECTORS: [&str; 5] = ["Ins.Bro.", "Lif.Hea.", "Mul.Lin.", "Pro.Cas.", "Reins."];

/// A published subsector spillover table: normalized entries plus the
/// printed row and column aggregates.
pub struct PrintedPanel {
    pub indicator: &'static str,
    pub matrix: [[f64; 5]; 5],
    pub from_others: [f64; 5],
    pub to_others: [f64; 5],
    pub net: [f64; 5],
    pub total: f64,
}

pub const PRINTED: [PrintedPanel; 4] = [
    PrintedPanel {
        indicator: "LogReturn",
        matrix: [
            [79.23, 4.39, 7.24, 4.13, 5.01],
            [2.29, 36.06, 23.74, 19.37, 18.54],
            [3.13, 21.32, 32.73, 20.48, 22.34],
            [2.17, 19.78, 23.38, 36.72, 17.95],
            [2.47, 18.60, 24.89, 17.52, 36.52],
        ],
        from_others: [20.77, 63.94, 67.27, 63.28, 63.48],
        to_others: [10.07, 64.09, 79.24, 61.50, 63.84],
        net: [-10.70, 0.15, 11.97, -1.78, 0.36],
        total: 278.74,
    },
    PrintedPanel {
        indicator: "LogVol",
        matrix: [
            [94.51, 1.30, 1.86, 1.50, 0.83],
            [0.59, 42.43, 24.04, 16.81, 16.13],
            [0.59, 20.40, 40.42, 18.37, 20.23],
            [0.53, 16.92, 22.24, 45.27, 15.04],
            [0.36, 16.30, 24.21, 15.20, 43.93],
        ],
        from_others: [5.49, 57.57, 59.58, 54.73, 56.07],
        to_others: [2.07, 54.91, 72.35, 51.88, 52.22],
        net: [-3.42, -2.66, 12.77, -2.85, -3.85],
        total: 233.44,
    },
    PrintedPanel {
        indicator: "CAViaR",
        matrix: [
            [87.44, 2.88, 4.51, 2.61, 2.56],
            [0.69, 35.55, 26.04, 18.71, 19.01],
            [0.76, 20.98, 35.77, 20.26, 22.23],
            [0.65, 17.91, 24.97, 38.76, 17.72],
            [0.37, 17.91, 25.70, 17.45, 38.57],
        ],
        from_others: [12.56, 64.45, 64.23, 61.24, 61.43],
        to_others: [2.47, 59.67, 81.22, 59.02, 61.52],
        net: [-10.09, -4.78, 16.99, -2.22, 0.09],
        total: 263.90,
    },
    PrintedPanel {
        indicator: "CARES",
        matrix: [
            [84.24, 3.16, 4.28, 5.51, 2.81],
            [1.62, 38.19, 24.38, 17.34, 18.47],
            [1.92, 20.24, 36.17, 20.28, 21.39],
            [2.38, 15.51, 23.55, 41.24, 17.32],
            [1.43, 17.16, 24.82, 18.38, 38.21],
        ],
        from_others: [15.76, 61.81, 63.83, 58.76, 61.79],
        to_others: [7.35, 56.07, 77.03, 61.52, 60.00],
        net: [-8.41, -5.74, 13.20, 2.76, -1.79],
        total: 261.95,
    },
];

impl PrintedPanel {
    pub fn spillover_matrix(&self) -> SpilloverMatrix {
        let m = DMatrix::from_fn(5, 5, |i, j| self.matrix[i][j]);
        // printed rows sum to 100 only up to two-decimal rounding
        SpilloverMatrix::from_normalized(SUBSECTORS.iter().map(|s| s.to_string()).collect(), m, 10, 0.05).unwrap()
    }
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (r, k, c) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; c]; r];
    for i in 0..r {
        for j in 0..c {
            for l in 0..k {
                out[i][j] += a[i][l] * b[l][j];
            }
        }
    }
    out
}

/// Normalized decomposition (percent) evaluated straight from its
/// definition. MA matrices come from powers of the companion matrix, not
/// from the recursion the library uses.
pub fn direct_gfevd(betas: &[DMatrix<f64>], sigma: &DMatrix<f64>, h: usize) -> Vec<Vec<f64>> {
    let n = sigma.nrows();
    let np = n * betas.len();
    let mut comp = vec![vec![0.0; np]; np];
    for (l, b) in betas.iter().enumerate() {
        for i in 0..n {
            for k in 0..n {
                comp[i][l * n + k] = b[(i, k)];
            }
        }
    }
    for i in n..np {
        comp[i][i - n] = 1.0;
    }
    let s: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| sigma[(i, j)]).collect()).collect();
    let mut power: Vec<Vec<f64>> = (0..np).map(|i| (0..np).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    let mut num = vec![vec![0.0; n]; n];
    let mut den = vec![0.0; n];
    for _ in 0..=h {
        let phi: Vec<Vec<f64>> = (0..n).map(|i| power[i][..n].to_vec()).collect();
        let phi_s = matmul(&phi, &s);
        for i in 0..n {
            for j in 0..n {
                num[i][j] += phi_s[i][j] * phi_s[i][j] / s[j][j];
            }
            den[i] += (0..n).map(|j| phi_s[i][j] * phi[i][j]).sum::<f64>();
        }
        power = matmul(&comp, &power);
    }
    let mut theta: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| num[i][j] / den[i]).collect()).collect();
    for row in &mut theta {
        let total: f64 = row.iter().sum();
        for v in row.iter_mut() {
            *v *= 100.0 / total;
        }
    }
    theta
}

/// A stable VAR with a random positive definite innovation covariance.
pub fn random_system(n: usize, p: usize, seed: u64) -> VarModel {
    let betas = simulate::stable_betas(n, p, 0.9, seed);
    let sigma = simulate::random_covariance(n, seed + 1000);
    VarModel::from_parts(DVector::zeros(n), betas, sigma).unwrap()
}

/// Rows sum to 100 and net contributions cancel.
pub fn conservation_error(m: &SpilloverMatrix) -> f64 {
    let s = spillover::gfevd::summarize(m);
    let rows = (0..m.n()).map(|i| (m.theta_norm.row(i).sum() - 100.0).abs()).fold(0.0, f64::max);
    rows.max(s.net.iter().sum::<f64>().abs())
}
