//! VAR(p) estimation: equation-by-equation OLS, BIC lag selection,
//! LASSO / post-LASSO for high-dimensional systems, and the moving-average
//! coefficients used by the variance decomposition.

mod lasso;

pub use lasso::{
    estimate_var_lasso, estimate_var_post_lasso, lasso_fixed_lambda, lasso_objective, post_lasso, LassoDiagnostics,
    LassoOptions,
};

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indicators::IndicatorSeries;

/// A balanced `T x n` panel of one indicator, rows are dates.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorPanel {
    pub labels: Vec<String>,
    pub dates: Vec<NaiveDate>,
    pub data: DMatrix<f64>,
}

impl IndicatorPanel {
    pub fn new(labels: Vec<String>, data: DMatrix<f64>) -> Result<Self> {
        if labels.len() != data.ncols() {
            return Err(Error::Data(format!(
                "{} labels for {} columns",
                labels.len(),
                data.ncols()
            )));
        }
        Ok(IndicatorPanel {
            labels,
            dates: Vec::new(),
            data,
        })
    }

    pub fn with_dates(mut self, dates: Vec<NaiveDate>) -> Result<Self> {
        if dates.len() != self.data.nrows() {
            return Err(Error::Data("date count does not match panel rows".into()));
        }
        self.dates = dates;
        Ok(self)
    }

    /// Column-bind series sharing one date index.
    pub fn from_series(series: &[IndicatorSeries]) -> Result<Self> {
        let first = series.first().ok_or_else(|| Error::Data("no series to combine".into()))?;
        let t = first.len();
        for s in series {
            if s.dates != first.dates {
                return Err(Error::Data(format!(
                    "series {} is not aligned with {}",
                    s.source_ticker, first.source_ticker
                )));
            }
        }
        let data = DMatrix::from_fn(t, series.len(), |i, j| series[j].values[i]);
        IndicatorPanel::new(series.iter().map(|s| s.source_ticker.clone()).collect(), data)?
            .with_dates(first.dates.clone())
    }

    pub fn n_obs(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_vars(&self) -> usize {
        self.data.ncols()
    }

    /// Rows `start..start + len`.
    pub fn slice(&self, start: usize, len: usize) -> IndicatorPanel {
        IndicatorPanel {
            labels: self.labels.clone(),
            dates: if self.dates.is_empty() {
                Vec::new()
            } else {
                self.dates[start..start + len].to_vec()
            },
            data: self.data.rows(start, len).into_owned(),
        }
    }

    /// Reorder variables: new column `k` is old column `perm[k]`.
    pub fn permute(&self, perm: &[usize]) -> IndicatorPanel {
        IndicatorPanel {
            labels: perm.iter().map(|&k| self.labels[k].clone()).collect(),
            dates: self.dates.clone(),
            data: DMatrix::from_fn(self.n_obs(), perm.len(), |i, j| self.data[(i, perm[j])]),
        }
    }
}

/// Fitted VAR. `betas[l][(i, k)]` is the effect of `x_{k, t-l-1}` on `x_{i, t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarModel {
    pub labels: Vec<String>,
    pub n: usize,
    pub p: usize,
    pub alpha: DVector<f64>,
    pub betas: Vec<DMatrix<f64>>,
    pub sigma: DMatrix<f64>,
    pub residuals: DMatrix<f64>,
    /// `n x (n p)` selection mask, column `l n + k` for variable `k` at lag `l + 1`.
    pub support_mask: Option<Vec<Vec<bool>>>,
    pub lasso: Option<LassoDiagnostics>,
}

impl VarModel {
    /// Build from known coefficients (no data attached).
    pub fn from_parts(alpha: DVector<f64>, betas: Vec<DMatrix<f64>>, sigma: DMatrix<f64>) -> Result<Self> {
        let n = alpha.len();
        if betas.iter().any(|b| b.nrows() != n || b.ncols() != n) || sigma.nrows() != n || sigma.ncols() != n {
            return Err(Error::Data("coefficient shapes do not match".into()));
        }
        Ok(VarModel {
            labels: (1..=n).map(|i| format!("x{i}")).collect(),
            n,
            p: betas.len(),
            alpha,
            betas,
            sigma,
            residuals: DMatrix::zeros(0, n),
            support_mask: None,
            lasso: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        self.labels = labels;
        self
    }

    /// Largest modulus among companion-matrix eigenvalues.
    pub fn spectral_radius(&self) -> f64 {
        spectral_radius(&self.betas)
    }

    pub fn is_stable(&self) -> bool {
        self.spectral_radius() < 1.0
    }

    pub fn dump(&self) -> ModelDump {
        ModelDump {
            labels: self.labels.clone(),
            n: self.n,
            p: self.p,
            alpha: self.alpha.iter().copied().collect(),
            betas: self
                .betas
                .iter()
                .map(|b| (0..b.nrows()).flat_map(|i| (0..b.ncols()).map(move |j| b[(i, j)])).collect())
                .collect(),
            sigma: (0..self.n).flat_map(|i| (0..self.n).map(move |j| (i, j))).map(|(i, j)| self.sigma[(i, j)]).collect(),
            support_mask: self.support_mask.clone(),
            spectral_radius: self.spectral_radius(),
            lasso: self.lasso.clone(),
        }
    }
}

/// JSON form of a fitted model; matrices are row-major.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModelDump {
    pub labels: Vec<String>,
    pub n: usize,
    pub p: usize,
    pub alpha: Vec<f64>,
    pub betas: Vec<Vec<f64>>,
    pub sigma: Vec<f64>,
    pub support_mask: Option<Vec<Vec<bool>>>,
    pub spectral_radius: f64,
    pub lasso: Option<LassoDiagnostics>,
}

pub fn companion(betas: &[DMatrix<f64>]) -> DMatrix<f64> {
    let p = betas.len();
    let n = betas.first().map_or(0, |b| b.nrows());
    let mut c = DMatrix::zeros(n * p, n * p);
    for (l, b) in betas.iter().enumerate() {
        c.view_mut((0, l * n), (n, n)).copy_from(b);
    }
    for l in 1..p {
        c.view_mut((l * n, (l - 1) * n), (n, n)).fill_with_identity();
    }
    c
}

pub fn spectral_radius(betas: &[DMatrix<f64>]) -> f64 {
    if betas.is_empty() {
        return 0.0;
    }
    companion(betas)
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Regressor layout shared by OLS and LASSO: column 0 is the intercept,
/// column `1 + l n + k` is variable `k` at lag `l + 1`.
pub(crate) struct Design {
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub names: Vec<String>,
}

pub(crate) fn design(panel: &IndicatorPanel, p: usize) -> Design {
    let t = panel.n_obs();
    let n = panel.n_vars();
    let rows = t - p;
    let mut x = DMatrix::zeros(rows, 1 + n * p);
    for r in 0..rows {
        let tt = r + p;
        x[(r, 0)] = 1.0;
        for l in 0..p {
            for k in 0..n {
                x[(r, 1 + l * n + k)] = panel.data[(tt - l - 1, k)];
            }
        }
    }
    let y = panel.data.rows(p, rows).into_owned();
    let mut names = vec!["intercept".to_string()];
    for l in 0..p {
        for k in 0..n {
            names.push(format!("{}_lag{}", panel.labels[k], l + 1));
        }
    }
    Design { x, y, names }
}

/// OLS of `y` on the selected columns of `x`. Returns coefficients aligned
/// with `cols`.
pub(crate) fn restricted_ols(x: &DMatrix<f64>, y: &DVector<f64>, cols: &[usize], names: &[String]) -> Result<DVector<f64>> {
    let xs = x.select_columns(cols);
    if xs.nrows() < cols.len() {
        return Err(Error::Estimation(format!(
            "{} regressors but only {} observations",
            cols.len(),
            xs.nrows()
        )));
    }
    let qr = xs.clone().qr();
    let r = qr.r();
    let mut bad = Vec::new();
    for (k, &c) in cols.iter().enumerate() {
        let col_norm = xs.column(k).norm();
        if r[(k, k)].abs() <= 1e-10 * col_norm.max(1e-300) || col_norm == 0.0 {
            bad.push(names[c].clone());
        }
    }
    if !bad.is_empty() {
        return Err(Error::RankDeficient { columns: bad });
    }
    let qty = qr.q().transpose() * y;
    r.solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Estimation("singular triangular system".into()))
}

/// Fit every equation on the masked regressors (intercept always in).
pub(crate) fn fit_masked(panel: &IndicatorPanel, p: usize, mask: &[Vec<bool>]) -> Result<VarModel> {
    let n = panel.n_vars();
    let d = design(panel, p);
    let rows = d.x.nrows();
    let mut alpha = DVector::zeros(n);
    let mut betas = vec![DMatrix::zeros(n, n); p];
    let mut resid = DMatrix::zeros(rows, n);
    for (i, row_mask) in mask.iter().enumerate() {
        let mut cols = vec![0usize];
        cols.extend(row_mask.iter().enumerate().filter(|(_, &m)| m).map(|(c, _)| c + 1));
        let y = d.y.column(i).into_owned();
        let coef = restricted_ols(&d.x, &y, &cols, &d.names)?;
        let mut full = DVector::zeros(1 + n * p);
        for (c, v) in cols.iter().zip(coef.iter()) {
            full[*c] = *v;
        }
        alpha[i] = full[0];
        for l in 0..p {
            for k in 0..n {
                betas[l][(i, k)] = full[1 + l * n + k];
            }
        }
        let e = &y - &d.x * &full;
        resid.set_column(i, &e);
    }
    let sigma = covariance(&resid);
    Ok(VarModel {
        labels: panel.labels.clone(),
        n,
        p,
        alpha,
        betas,
        sigma,
        residuals: resid,
        support_mask: None,
        lasso: None,
    })
}

/// `E'E / rows`, symmetrized.
pub(crate) fn covariance(resid: &DMatrix<f64>) -> DMatrix<f64> {
    let s = resid.transpose() * resid / resid.nrows() as f64;
    (&s + s.transpose()) * 0.5
}

fn check_dims(panel: &IndicatorPanel, p: usize) -> Result<()> {
    if p == 0 {
        return Err(Error::Config("lag order must be at least 1".into()));
    }
    let n = panel.n_vars();
    let t = panel.n_obs();
    if t <= p || t - p <= n * p + 1 {
        return Err(Error::Data(format!(
            "not enough observations: T={t}, n={n}, p={p} leaves no degrees of freedom"
        )));
    }
    Ok(())
}

/// Equation-by-equation OLS with intercept; `sigma = E'E / (T - p)`.
pub fn estimate_var_ols(panel: &IndicatorPanel, p: usize) -> Result<VarModel> {
    check_dims(panel, p)?;
    let n = panel.n_vars();
    fit_masked(panel, p, &vec![vec![true; n * p]; n])
}

/// `ln det Sigma(p) + p n^2 ln(T*) / T*` on the common sample that drops
/// the first `p_max` observations.
pub fn var_bic(panel: &IndicatorPanel, p: usize, p_max: usize) -> Result<f64> {
    let sub = panel.slice(p_max - p, panel.n_obs() - (p_max - p));
    let model = estimate_var_ols(&sub, p)?;
    let t_star = (panel.n_obs() - p_max) as f64;
    let n = panel.n_vars() as f64;
    let det = model
        .sigma
        .clone()
        .cholesky()
        .map(|c| 2.0 * c.l().diagonal().iter().map(|v| v.ln()).sum::<f64>())
        .ok_or_else(|| Error::Degenerate("residual covariance is not positive definite".into()))?;
    Ok(det + t_star.ln() / t_star * p as f64 * n * n)
}

/// BIC-minimizing lag order in `1..=p_max`; ties go to the smaller order.
pub fn select_lag_bic(panel: &IndicatorPanel, p_max: usize) -> Result<usize> {
    if p_max == 0 {
        return Err(Error::Config("p_max must be at least 1".into()));
    }
    check_dims(panel, p_max)?;
    let mut best = (1usize, f64::INFINITY);
    for p in 1..=p_max {
        let b = var_bic(panel, p, p_max)?;
        if b < best.1 {
            best = (p, b);
        }
    }
    Ok(best.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaCoefficients {
    /// `Phi_0 .. Phi_H`
    pub phis: Vec<DMatrix<f64>>,
}

/// `Phi_0 = I`, `Phi_i = sum_{j=1..p} beta_j Phi_{i-j}` for `i = 1..=h`.
pub fn ma_coefficients(model: &VarModel, h: usize) -> MaCoefficients {
    let n = model.n;
    let mut phis: Vec<DMatrix<f64>> = Vec::with_capacity(h + 1);
    phis.push(DMatrix::identity(n, n));
    for i in 1..=h {
        let mut phi = DMatrix::zeros(n, n);
        for (j, b) in model.betas.iter().enumerate() {
            let lag = j + 1;
            if lag <= i {
                phi += b * &phis[i - lag];
            }
        }
        phis.push(phi);
    }
    MaCoefficients { phis }
}
