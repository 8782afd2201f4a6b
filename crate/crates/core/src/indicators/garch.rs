//! ARMA-GARCH family estimation by maximum likelihood and BIC selection.
//!
//! Mean: `r_t = phi_0 + sum phi_i r_{t-i} + sum xi_i a_{t-i} + a_t`.
//! Variance, one of
//! - standard: `s2_t = w0 + sum w_i a_{t-i}^2 + sum v_i s2_{t-i}`
//! - GJR: adds `g_i 1{a_{t-i} < 0} a_{t-i}^2`
//! - EGARCH: `ln s2_t = w0 + sum [w_i (|z_{t-i}| - E|z|) + g_i z_{t-i}] + sum v_i ln s2_{t-i}`
//!
//! Pre-sample returns are set to the sample mean, pre-sample shocks to zero
//! and pre-sample variances (and squared shocks) to the sample variance.
//! Every spec is scored on the same likelihood sample, observations
//! `MAX_ORDER..T`, so BICs are comparable across orders.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dist::{InnovationDist, LogDensity};
use super::{IndicatorKind, IndicatorSeries};
use crate::error::{Error, Result};
use crate::optim::NelderMead;
use crate::stats;

pub const MAX_ORDER: usize = 2;
const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarianceFamily {
    Standard,
    Egarch,
    Gjr,
}

impl VarianceFamily {
    pub const ALL: [VarianceFamily; 3] = [VarianceFamily::Standard, VarianceFamily::Egarch, VarianceFamily::Gjr];

    fn has_asymmetry(self) -> bool {
        !matches!(self, VarianceFamily::Standard)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GarchSpec {
    pub ar_order: usize,
    pub ma_order: usize,
    pub arch_order: usize,
    pub garch_order: usize,
    pub family: VarianceFamily,
    pub dist: InnovationDist,
}

impl GarchSpec {
    pub fn garch11(dist: InnovationDist) -> Self {
        GarchSpec {
            ar_order: 0,
            ma_order: 0,
            arch_order: 1,
            garch_order: 1,
            family: VarianceFamily::Standard,
            dist,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let orders = [self.ar_order, self.ma_order, self.arch_order, self.garch_order];
        if orders.iter().any(|&o| o > MAX_ORDER) {
            return Err(Error::InvalidSpec(format!("orders must lie in 0..={MAX_ORDER}: {self:?}")));
        }
        if self.arch_order + self.garch_order == 0 {
            return Err(Error::InvalidSpec("ARCH and GARCH orders cannot both be zero".into()));
        }
        Ok(())
    }

    fn n_mean(&self) -> usize {
        1 + self.ar_order + self.ma_order
    }

    fn n_variance(&self) -> usize {
        let asym = if self.family.has_asymmetry() { self.arch_order } else { 0 };
        1 + self.arch_order + asym + self.garch_order
    }

    pub fn n_params(&self) -> usize {
        self.n_mean() + self.n_variance() + self.dist.n_params()
    }
}

/// Parameters on their natural scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchParams {
    /// `phi_0, phi_1..phi_k`
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub omega0: f64,
    pub arch: Vec<f64>,
    /// GJR leverage or EGARCH sign terms; empty for the standard family.
    pub asymmetry: Vec<f64>,
    pub garch: Vec<f64>,
    /// Student-t degrees of freedom or GED tail parameter.
    pub shape: Option<f64>,
    /// Fernández–Steel skew.
    pub skew: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GarchFit {
    pub spec: GarchSpec,
    pub params: GarchParams,
    pub log_likelihood: f64,
    pub bic: f64,
    /// Number of observations entering the likelihood.
    pub n_obs: usize,
    pub converged: bool,
    pub cond_vol: Vec<f64>,
    pub innovations: Vec<f64>,
}

/// Optimizer coordinates. `omega0` is log-transformed for the standard and
/// GJR families; distribution parameters use the transforms in `dist`.
struct Layout {
    spec: GarchSpec,
}

impl Layout {
    fn decode(&self, x: &[f64]) -> GarchParams {
        let s = &self.spec;
        let mut k = 0;
        let mut take = |n: usize| {
            let v = x[k..k + n].to_vec();
            k += n;
            v
        };
        let ar = take(1 + s.ar_order);
        let ma = take(s.ma_order);
        let w0 = take(1)[0];
        let arch = take(s.arch_order);
        let asymmetry = if s.family.has_asymmetry() { take(s.arch_order) } else { vec![] };
        let garch = take(s.garch_order);
        let rest = take(s.dist.n_params());
        let (shape, skew) = s.dist.from_unconstrained(&rest);
        GarchParams {
            ar,
            ma,
            omega0: match s.family {
                VarianceFamily::Egarch => w0,
                _ => w0.exp(),
            },
            arch,
            asymmetry,
            garch,
            shape: s.dist.has_shape().then_some(shape),
            skew: s.dist.has_skew().then_some(skew),
        }
    }

    fn initial(&self, r: &[f64]) -> Vec<f64> {
        let s = &self.spec;
        let var = stats::variance(r);
        let mut x = vec![stats::mean(r)];
        x.extend(std::iter::repeat_n(0.0, s.ar_order + s.ma_order));
        let (m, g) = (s.arch_order, s.garch_order);
        let (a_tot, b_tot) = match (m > 0, g > 0) {
            (true, true) => (0.08, 0.88),
            (true, false) => (0.3, 0.0),
            (false, _) => (0.0, 0.5),
        };
        match s.family {
            VarianceFamily::Standard | VarianceFamily::Gjr => {
                let asym_tot = if s.family == VarianceFamily::Gjr && m > 0 { 0.04 } else { 0.0 };
                let persistence = a_tot + 0.5 * asym_tot + b_tot;
                x.push((var * (1.0 - persistence)).max(1e-8).ln());
                x.extend(std::iter::repeat_n(a_tot / m.max(1) as f64, m));
                if s.family == VarianceFamily::Gjr {
                    x.extend(std::iter::repeat_n(asym_tot / m.max(1) as f64, m));
                }
                x.extend(std::iter::repeat_n(b_tot / g.max(1) as f64, g));
            }
            VarianceFamily::Egarch => {
                let b = if g > 0 { 0.9 } else { 0.0 };
                x.push((1.0 - b) * var.max(1e-12).ln());
                x.extend(std::iter::repeat_n(0.15 / m.max(1) as f64, m));
                x.extend(std::iter::repeat_n(-0.05 / m.max(1) as f64, m));
                x.extend(std::iter::repeat_n(b / g.max(1) as f64, g));
            }
        }
        x.extend(s.dist.initial_unconstrained());
        x
    }

    /// Stationarity / positivity region of the variance recursion.
    fn admissible(&self, p: &GarchParams) -> bool {
        match self.spec.family {
            VarianceFamily::Standard => {
                p.arch.iter().chain(&p.garch).all(|&v| v >= 0.0)
                    && p.arch.iter().chain(&p.garch).sum::<f64>() < 1.0
            }
            VarianceFamily::Gjr => {
                p.arch.iter().all(|&v| v >= 0.0)
                    && p.garch.iter().all(|&v| v >= 0.0)
                    && p.arch.iter().zip(&p.asymmetry).all(|(a, g)| a + g >= 0.0)
                    && p.arch.iter().sum::<f64>() + 0.5 * p.asymmetry.iter().sum::<f64>() + p.garch.iter().sum::<f64>()
                        < 1.0
            }
            VarianceFamily::Egarch => p.garch.iter().map(|v| v.abs()).sum::<f64>() < 1.0,
        }
    }
}

/// Run the mean and variance recursions. Returns `(a_t, s2_t)` or `None`
/// when the variance path leaves the representable range.
fn filter(spec: &GarchSpec, p: &GarchParams, r: &[f64], rbar: f64, var0: f64) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = r.len();
    let mut a = vec![0.0; n];
    let mut s2 = vec![0.0; n];
    let ln_var0 = var0.ln();
    for t in 0..n {
        let mut mu = p.ar[0];
        for (i, phi) in p.ar[1..].iter().enumerate() {
            let lag = i + 1;
            mu += phi * if t >= lag { r[t - lag] } else { rbar };
        }
        for (i, xi) in p.ma.iter().enumerate() {
            let lag = i + 1;
            if t >= lag {
                mu += xi * a[t - lag];
            }
        }
        a[t] = r[t] - mu;

        let v = match spec.family {
            VarianceFamily::Standard | VarianceFamily::Gjr => {
                let mut v = p.omega0;
                for (i, w) in p.arch.iter().enumerate() {
                    let lag = i + 1;
                    let (a2, neg) = if t >= lag {
                        let x = a[t - lag];
                        (x * x, if x < 0.0 { 1.0 } else { 0.0 })
                    } else {
                        (var0, 0.5)
                    };
                    v += w * a2;
                    if let Some(g) = p.asymmetry.get(i) {
                        v += g * neg * a2;
                    }
                }
                for (i, b) in p.garch.iter().enumerate() {
                    let lag = i + 1;
                    v += b * if t >= lag { s2[t - lag] } else { var0 };
                }
                v
            }
            VarianceFamily::Egarch => {
                let mut lv = p.omega0;
                for (i, w) in p.arch.iter().enumerate() {
                    let lag = i + 1;
                    if t >= lag {
                        let z = a[t - lag] / s2[t - lag].sqrt();
                        lv += w * (z.abs() - SQRT_2_OVER_PI) + p.asymmetry[i] * z;
                    }
                }
                for (i, b) in p.garch.iter().enumerate() {
                    let lag = i + 1;
                    lv += b * if t >= lag { s2[t - lag].ln() } else { ln_var0 };
                }
                if !(-60.0..60.0).contains(&lv) {
                    return None;
                }
                lv.exp()
            }
        };
        if !(v > 0.0) || !v.is_finite() {
            return None;
        }
        s2[t] = v;
    }
    Some((a, s2))
}

fn log_likelihood(density: &LogDensity, a: &[f64], s2: &[f64]) -> f64 {
    let mut ll = 0.0;
    for t in MAX_ORDER..a.len() {
        let v = s2[t];
        ll += density.ln_pdf(a[t] / v.sqrt()) - 0.5 * v.ln();
    }
    ll
}

/// Maximum-likelihood fit of one ARMA-GARCH specification.
pub fn fit_garch(r: &[f64], spec: &GarchSpec) -> Result<GarchFit> {
    spec.validate()?;
    if r.len() < 100 {
        return Err(Error::Data(format!("GARCH needs at least 100 observations, got {}", r.len())));
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite return in GARCH input".into()));
    }
    let var0 = stats::variance(r);
    if !(var0 > 1e-14) {
        return Err(Error::Degenerate("return series has zero variance".into()));
    }
    let rbar = stats::mean(r);
    let layout = Layout { spec: *spec };

    let objective = |x: &[f64]| -> f64 {
        let p = layout.decode(x);
        if !layout.admissible(&p) {
            return f64::INFINITY;
        }
        let Some(density) = LogDensity::new(spec.dist, p.shape.unwrap_or(f64::NAN), p.skew.unwrap_or(1.0)) else {
            return f64::INFINITY;
        };
        match filter(spec, &p, r, rbar, var0) {
            Some((a, s2)) => -log_likelihood(&density, &a, &s2),
            None => f64::INFINITY,
        }
    };

    let x0 = layout.initial(r);
    let dim = x0.len();
    let nm = NelderMead {
        max_evals: 600 + 250 * dim,
        f_tol: 1e-9,
        x_tol: 1e-6,
        initial_step: 0.1,
    };
    let m = nm.minimize_with_restarts(objective, &x0, 4);
    if !m.value.is_finite() {
        return Err(Error::NonConvergence {
            message: format!("no admissible point found for {spec:?}"),
            best_point: m.x,
            best_value: m.value,
        });
    }
    let params = layout.decode(&m.x);
    let (a, s2) = filter(spec, &params, r, rbar, var0).expect("optimum is admissible");
    let ll = -m.value;
    let n_obs = r.len() - MAX_ORDER;
    let k = spec.n_params();
    let fit = GarchFit {
        spec: *spec,
        params,
        log_likelihood: ll,
        bic: bic(ll, k, n_obs),
        n_obs,
        converged: m.converged,
        cond_vol: s2.iter().map(|v| v.sqrt()).collect(),
        innovations: a,
    };
    Ok(fit)
}

pub fn bic(log_likelihood: f64, n_params: usize, n_obs: usize) -> f64 {
    -2.0 * log_likelihood + n_params as f64 * (n_obs as f64).ln()
}

/// Candidate grid for BIC selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub families: Vec<VarianceFamily>,
    pub dists: Vec<InnovationDist>,
    pub max_mean_order: usize,
    pub min_variance_order: usize,
    pub max_variance_order: usize,
}

impl SearchSpace {
    /// Orders 0..=2 for all four lags, three families, six distributions.
    pub fn full() -> Self {
        SearchSpace {
            families: VarianceFamily::ALL.to_vec(),
            dists: InnovationDist::ALL.to_vec(),
            max_mean_order: MAX_ORDER,
            min_variance_order: 0,
            max_variance_order: MAX_ORDER,
        }
    }

    /// First-order variance equations with white-noise mean, all families,
    /// Gaussian and Student-t innovations. Six candidates.
    pub fn compact() -> Self {
        SearchSpace {
            families: VarianceFamily::ALL.to_vec(),
            dists: vec![InnovationDist::Gaussian, InnovationDist::StudentT],
            max_mean_order: 0,
            min_variance_order: 1,
            max_variance_order: 1,
        }
    }

    /// Candidates in tie-break order: family, distribution, then k, q, m, s.
    pub fn candidates(&self) -> Vec<GarchSpec> {
        let mut out = Vec::new();
        for &family in &self.families {
            for &dist in &self.dists {
                for k in 0..=self.max_mean_order {
                    for q in 0..=self.max_mean_order {
                        for m in self.min_variance_order..=self.max_variance_order {
                            for s in self.min_variance_order..=self.max_variance_order {
                                if m + s == 0 {
                                    continue;
                                }
                                out.push(GarchSpec {
                                    ar_order: k,
                                    ma_order: q,
                                    arch_order: m,
                                    garch_order: s,
                                    family,
                                    dist,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// Exhaustive BIC selection over the full grid.
pub fn select_garch(r: &[f64]) -> Result<GarchFit> {
    select_garch_in(r, &SearchSpace::full())
}

/// BIC selection over `space`. Only converged fits compete; ties go to the
/// smaller parameter count, then to enumeration order.
pub fn select_garch_in(r: &[f64], space: &SearchSpace) -> Result<GarchFit> {
    if r.len() < 250 {
        return Err(Error::Data(format!("GARCH selection needs at least 250 observations, got {}", r.len())));
    }
    let candidates = space.candidates();
    let fits: Vec<std::result::Result<GarchFit, String>> = candidates
        .par_iter()
        .map(|spec| match fit_garch(r, spec) {
            Ok(f) if f.converged && f.bic.is_finite() => Ok(f),
            Ok(_) => Err(format!("{spec:?}: not converged")),
            Err(e) => Err(format!("{spec:?}: {e}")),
        })
        .collect();
    let mut best: Option<GarchFit> = None;
    let mut failures = Vec::new();
    for f in fits {
        match f {
            Ok(f) => {
                let better = match &best {
                    None => true,
                    Some(b) => {
                        f.bic < b.bic || (f.bic == b.bic && f.spec.n_params() < b.spec.n_params())
                    }
                };
                if better {
                    best = Some(f);
                }
            }
            Err(msg) => failures.push(msg),
        }
    }
    best.ok_or_else(|| Error::Estimation(format!("no GARCH specification converged: {}", failures.join("; "))))
}

/// `ln(sigma_t)` from a fitted model.
pub fn conditional_log_volatility(fit: &GarchFit, dates: &[chrono::NaiveDate], ticker: &str) -> IndicatorSeries {
    IndicatorSeries {
        kind: IndicatorKind::LogVol,
        dates: dates.to_vec(),
        values: fit.cond_vol.iter().map(|s| s.ln()).collect(),
        source_ticker: ticker.to_string(),
    }
}
