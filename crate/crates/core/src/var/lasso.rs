//! Per-equation LASSO by cyclic coordinate descent, tuned by K-fold
//! cross-validation on contiguous chronological blocks, plus the post-LASSO
//! OLS refit on the selected support.
//!
//! Each equation minimizes `sum (y - a - X b)^2 + lambda sum |b_k|`. With
//! `standardize` the penalty applies to coefficients of unit-variance
//! regressors, i.e. `lambda sum s_k |beta_k|` on the original scale.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_dims, covariance, design, fit_masked, IndicatorPanel, VarModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LassoOptions {
    pub folds: usize,
    pub n_lambda: usize,
    pub lambda_min_ratio: f64,
    pub standardize: bool,
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for LassoOptions {
    fn default() -> Self {
        LassoOptions {
            folds: 5,
            n_lambda: 100,
            lambda_min_ratio: 1e-4,
            standardize: true,
            tol: 1e-10,
            max_sweeps: 100_000,
        }
    }
}

/// Per-equation tuning record, serialized with model dumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoDiagnostics {
    /// Chosen penalty per equation (internal scale).
    pub lambdas: Vec<f64>,
    pub lambda_max: Vec<f64>,
    /// Penalty weight of each regressor on the original scale.
    pub penalty_scales: Vec<Vec<f64>>,
    /// Mean held-out squared error along the path, per equation.
    pub cv_error: Vec<Vec<f64>>,
    pub converged: bool,
}

/// One regression problem with centered (and optionally scaled) columns.
struct Problem {
    cols: Vec<Vec<f64>>,
    col_sq: Vec<f64>,
    y: Vec<f64>,
    x_mean: Vec<f64>,
    x_scale: Vec<f64>,
    y_mean: f64,
}

impl Problem {
    fn new(x: &DMatrix<f64>, y: &[f64], rows: &[usize], standardize: bool) -> Problem {
        let m = rows.len() as f64;
        let k = x.ncols();
        let y_mean = rows.iter().map(|&r| y[r]).sum::<f64>() / m;
        let yc: Vec<f64> = rows.iter().map(|&r| y[r] - y_mean).collect();
        let mut cols = Vec::with_capacity(k);
        let mut x_mean = Vec::with_capacity(k);
        let mut x_scale = Vec::with_capacity(k);
        let mut col_sq = Vec::with_capacity(k);
        for j in 0..k {
            let mean = rows.iter().map(|&r| x[(r, j)]).sum::<f64>() / m;
            let mut c: Vec<f64> = rows.iter().map(|&r| x[(r, j)] - mean).collect();
            let ss: f64 = c.iter().map(|v| v * v).sum();
            let sd = (ss / m).sqrt();
            let scale = if standardize && sd > 0.0 { sd } else { 1.0 };
            if scale != 1.0 {
                for v in c.iter_mut() {
                    *v /= scale;
                }
            }
            col_sq.push(c.iter().map(|v| v * v).sum());
            cols.push(c);
            x_mean.push(mean);
            x_scale.push(scale);
        }
        Problem {
            cols,
            col_sq,
            y: yc,
            x_mean,
            x_scale,
            y_mean,
        }
    }

    fn lambda_max(&self) -> f64 {
        self.cols
            .iter()
            .zip(&self.col_sq)
            .filter(|(_, &c)| c > 0.0)
            .map(|(c, _)| 2.0 * dot(c, &self.y).abs())
            .fold(0.0, f64::max)
    }

    /// Coordinate descent from `b` (warm start), updated in place.
    /// Returns whether the sweep tolerance was reached.
    fn solve(&self, lambda: f64, b: &mut [f64], tol: f64, max_sweeps: usize) -> bool {
        let mut resid: Vec<f64> = self.y.clone();
        for (c, &bk) in self.cols.iter().zip(b.iter()) {
            if bk != 0.0 {
                axpy(-bk, c, &mut resid);
            }
        }
        let y_scale = (dot(&self.y, &self.y) / self.y.len() as f64).sqrt().max(1e-300);
        let half = 0.5 * lambda;
        for _ in 0..max_sweeps {
            let mut max_delta = 0.0f64;
            for k in 0..self.cols.len() {
                let ck = self.col_sq[k];
                if ck == 0.0 {
                    b[k] = 0.0;
                    continue;
                }
                let col = &self.cols[k];
                let rho = dot(col, &resid) + ck * b[k];
                let new = soft_threshold(rho, half) / ck;
                let delta = new - b[k];
                if delta != 0.0 {
                    axpy(-delta, col, &mut resid);
                    b[k] = new;
                    let scaled = delta.abs() * (ck / self.y.len() as f64).sqrt();
                    max_delta = max_delta.max(scaled);
                }
            }
            if max_delta <= tol * y_scale {
                return true;
            }
        }
        false
    }

    fn predict(&self, b: &[f64], x: &DMatrix<f64>, row: usize) -> f64 {
        let mut v = self.y_mean;
        for k in 0..b.len() {
            if b[k] != 0.0 {
                v += b[k] * (x[(row, k)] - self.x_mean[k]) / self.x_scale[k];
            }
        }
        v
    }

    /// Map internal coefficients to `(intercept, slopes)` on the original scale.
    fn original_scale(&self, b: &[f64]) -> (f64, Vec<f64>) {
        let slopes: Vec<f64> = b.iter().zip(&self.x_scale).map(|(v, s)| v / s).collect();
        let intercept = self.y_mean - slopes.iter().zip(&self.x_mean).map(|(s, m)| s * m).sum::<f64>();
        (intercept, slopes)
    }
}

#[inline]
fn soft_threshold(z: f64, g: f64) -> f64 {
    if z > g {
        z - g
    } else if z < -g {
        z + g
    } else {
        0.0
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn lambda_path(lmax: f64, opts: &LassoOptions) -> Vec<f64> {
    let n = opts.n_lambda.max(2);
    let ratio = opts.lambda_min_ratio.powf(1.0 / (n - 1) as f64);
    (0..n).map(|i| lmax * ratio.powi(i as i32)).collect()
}

/// Contiguous block `f` of `k` over `0..m`.
fn fold_bounds(m: usize, k: usize, f: usize) -> (usize, usize) {
    (f * m / k, (f + 1) * m / k)
}

struct EquationFit {
    intercept: f64,
    slopes: Vec<f64>,
    lambda: f64,
    lambda_max: f64,
    scales: Vec<f64>,
    cv_error: Vec<f64>,
    converged: bool,
}

fn fit_equation_cv(x: &DMatrix<f64>, y: &[f64], opts: &LassoOptions) -> Result<EquationFit> {
    let m = y.len();
    let all: Vec<usize> = (0..m).collect();
    let full = Problem::new(x, y, &all, opts.standardize);
    let lmax = full.lambda_max();
    if !(lmax > 0.0) || !lmax.is_finite() {
        return Err(Error::Degenerate("LASSO path is degenerate (no regressor correlates with the response)".into()));
    }
    let path = lambda_path(lmax, opts);
    let k = opts.folds;
    let mut cv = vec![0.0; path.len()];
    let mut converged = true;
    for f in 0..k {
        let (lo, hi) = fold_bounds(m, k, f);
        let train: Vec<usize> = (0..lo).chain(hi..m).collect();
        let prob = Problem::new(x, y, &train, opts.standardize);
        let mut b = vec![0.0; x.ncols()];
        for (li, &lambda) in path.iter().enumerate() {
            converged &= prob.solve(lambda, &mut b, opts.tol, opts.max_sweeps);
            let sse: f64 = (lo..hi).map(|r| (y[r] - prob.predict(&b, x, r)).powi(2)).sum();
            cv[li] += sse / (hi - lo) as f64 / k as f64;
        }
    }
    if cv.iter().any(|v| !v.is_finite()) {
        return Err(Error::Estimation("non-finite cross-validation error".into()));
    }
    // ties resolve toward the larger penalty (earlier on the path)
    let best = (0..path.len()).fold(0, |b, i| if cv[i] < cv[b] { i } else { b });
    let mut b = vec![0.0; x.ncols()];
    for &lambda in &path[..=best] {
        converged &= full.solve(lambda, &mut b, opts.tol, opts.max_sweeps);
    }
    let (intercept, slopes) = full.original_scale(&b);
    Ok(EquationFit {
        intercept,
        slopes,
        lambda: path[best],
        lambda_max: lmax,
        scales: full.x_scale.clone(),
        cv_error: cv,
        converged,
    })
}

fn fit_equation_fixed(x: &DMatrix<f64>, y: &[f64], lambda: f64, opts: &LassoOptions) -> EquationFit {
    let all: Vec<usize> = (0..y.len()).collect();
    let prob = Problem::new(x, y, &all, opts.standardize);
    let lmax = prob.lambda_max();
    let mut b = vec![0.0; x.ncols()];
    let mut converged = true;
    // walk down a path to the target for stable warm starts
    if lambda < lmax {
        for &l in lambda_path(lmax, opts).iter().take_while(|&&l| l > lambda) {
            converged &= prob.solve(l, &mut b, opts.tol, opts.max_sweeps);
        }
    }
    converged &= prob.solve(lambda, &mut b, opts.tol, opts.max_sweeps);
    let (intercept, slopes) = prob.original_scale(&b);
    EquationFit {
        intercept,
        slopes,
        lambda,
        lambda_max: lmax,
        scales: prob.x_scale.clone(),
        cv_error: Vec::new(),
        converged,
    }
}

fn assemble(panel: &IndicatorPanel, p: usize, eqs: Vec<EquationFit>) -> VarModel {
    let n = panel.n_vars();
    let d = design(panel, p);
    let x = d.x.columns(1, n * p).into_owned();
    let mut alpha = DVector::zeros(n);
    let mut betas = vec![DMatrix::zeros(n, n); p];
    let mut mask = vec![vec![false; n * p]; n];
    let mut resid = DMatrix::zeros(x.nrows(), n);
    for (i, eq) in eqs.iter().enumerate() {
        alpha[i] = eq.intercept;
        for c in 0..n * p {
            let (l, k) = (c / n, c % n);
            betas[l][(i, k)] = eq.slopes[c];
            mask[i][c] = eq.slopes[c] != 0.0;
        }
        let coef = DVector::from_vec(eq.slopes.clone());
        let fitted = &x * coef;
        for r in 0..x.nrows() {
            resid[(r, i)] = d.y[(r, i)] - eq.intercept - fitted[r];
        }
    }
    let diagnostics = LassoDiagnostics {
        lambdas: eqs.iter().map(|e| e.lambda).collect(),
        lambda_max: eqs.iter().map(|e| e.lambda_max).collect(),
        penalty_scales: eqs.iter().map(|e| e.scales.clone()).collect(),
        cv_error: eqs.iter().map(|e| e.cv_error.clone()).collect(),
        converged: eqs.iter().all(|e| e.converged),
    };
    VarModel {
        labels: panel.labels.clone(),
        n,
        p,
        alpha,
        betas,
        sigma: covariance(&resid),
        residuals: resid,
        support_mask: Some(mask),
        lasso: Some(diagnostics),
    }
}

/// LASSO VAR with per-equation penalties chosen by cross-validation.
/// Coefficients are the shrunken LASSO estimates.
pub fn estimate_var_lasso(panel: &IndicatorPanel, p: usize, opts: &LassoOptions) -> Result<VarModel> {
    if p == 0 {
        return Err(Error::Config("lag order must be at least 1".into()));
    }
    if opts.folds < 2 {
        return Err(Error::Config("cross-validation needs at least 2 folds".into()));
    }
    if panel.n_obs() <= p || panel.n_obs() - p <= opts.folds {
        return Err(Error::Data("not enough observations for cross-validation".into()));
    }
    let n = panel.n_vars();
    let d = design(panel, p);
    let x = d.x.columns(1, n * p).into_owned();
    let mut eqs = Vec::with_capacity(n);
    for i in 0..n {
        let y: Vec<f64> = d.y.column(i).iter().copied().collect();
        eqs.push(fit_equation_cv(&x, &y, opts).map_err(|e| e.context(&format!("equation {}", panel.labels[i])))?);
    }
    Ok(assemble(panel, p, eqs))
}

/// LASSO VAR with one fixed penalty for every equation.
pub fn lasso_fixed_lambda(panel: &IndicatorPanel, p: usize, lambda: f64, opts: &LassoOptions) -> Result<VarModel> {
    if p == 0 || panel.n_obs() <= p + 1 {
        return Err(Error::Data("not enough observations".into()));
    }
    if !(lambda >= 0.0) {
        return Err(Error::Config("penalty must be nonnegative".into()));
    }
    let n = panel.n_vars();
    let d = design(panel, p);
    let x = d.x.columns(1, n * p).into_owned();
    let eqs = (0..n)
        .map(|i| {
            let y: Vec<f64> = d.y.column(i).iter().copied().collect();
            fit_equation_fixed(&x, &y, lambda, opts)
        })
        .collect();
    Ok(assemble(panel, p, eqs))
}

/// OLS refit restricted to `mask` (`n x n p`); masked-out slopes are exactly 0.
pub fn post_lasso(panel: &IndicatorPanel, p: usize, mask: &[Vec<bool>]) -> Result<VarModel> {
    let n = panel.n_vars();
    if mask.len() != n || mask.iter().any(|r| r.len() != n * p) {
        return Err(Error::Data(format!("support mask must be {n} x {}", n * p)));
    }
    check_dims(panel, p)?;
    let mut m = fit_masked(panel, p, mask)?;
    m.support_mask = Some(mask.to_vec());
    Ok(m)
}

/// Two-step estimator: LASSO selection, then OLS on the selected support.
pub fn estimate_var_post_lasso(panel: &IndicatorPanel, p: usize, opts: &LassoOptions) -> Result<VarModel> {
    let sel = estimate_var_lasso(panel, p, opts)?;
    let mask = sel.support_mask.clone().expect("lasso sets a mask");
    let mut m = post_lasso(panel, p, &mask)?;
    m.lasso = sel.lasso;
    Ok(m)
}

/// Penalized loss of one equation on the original scale:
/// `sum_t (y_t - a - x_t' b)^2 + lambda sum_k s_k |b_k|`.
pub fn lasso_objective(panel: &IndicatorPanel, p: usize, equation: usize, intercept: f64, slopes: &[f64], lambda: f64, scales: &[f64]) -> f64 {
    let n = panel.n_vars();
    let d = design(panel, p);
    let mut rss = 0.0;
    for r in 0..d.x.nrows() {
        let mut fit = intercept;
        for c in 0..n * p {
            fit += slopes[c] * d.x[(r, c + 1)];
        }
        rss += (d.y[(r, equation)] - fit).powi(2);
    }
    rss + lambda * slopes.iter().zip(scales).map(|(b, s)| s * b.abs()).sum::<f64>()
}
