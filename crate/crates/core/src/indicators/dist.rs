//! Standardized (zero mean, unit variance) innovation densities.
//!
//! Skewed variants use the Fernández–Steel construction re-centred and
//! re-scaled so the skewed density keeps mean 0 and variance 1.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InnovationDist {
    Gaussian,
    StudentT,
    Ged,
    SkewGaussian,
    SkewStudentT,
    SkewGed,
}

impl InnovationDist {
    pub const ALL: [InnovationDist; 6] = [
        InnovationDist::Gaussian,
        InnovationDist::StudentT,
        InnovationDist::Ged,
        InnovationDist::SkewGaussian,
        InnovationDist::SkewStudentT,
        InnovationDist::SkewGed,
    ];

    pub fn has_shape(self) -> bool {
        !matches!(self, InnovationDist::Gaussian | InnovationDist::SkewGaussian)
    }

    pub fn has_skew(self) -> bool {
        matches!(
            self,
            InnovationDist::SkewGaussian | InnovationDist::SkewStudentT | InnovationDist::SkewGed
        )
    }

    pub fn n_params(self) -> usize {
        self.has_shape() as usize + self.has_skew() as usize
    }

    /// Open interval for the shape parameter. Bounded above because the
    /// Student-t constant loses all precision as `nu` grows without limit.
    pub fn shape_bounds(self) -> (f64, f64) {
        match self {
            InnovationDist::StudentT | InnovationDist::SkewStudentT => (2.05, 200.0),
            _ => (0.2, 20.0),
        }
    }

    /// Map unconstrained optimizer coordinates to (shape, skew).
    pub fn from_unconstrained(self, u: &[f64]) -> (f64, f64) {
        let mut k = 0;
        let shape = if self.has_shape() {
            let (lo, hi) = self.shape_bounds();
            let v = u[k];
            k += 1;
            lo + (hi - lo) / (1.0 + (-v).exp())
        } else {
            f64::NAN
        };
        let skew = if self.has_skew() { u[k].exp() } else { 1.0 };
        (shape, skew)
    }

    pub fn initial_unconstrained(self) -> Vec<f64> {
        let mut u = Vec::new();
        let start = match self {
            InnovationDist::StudentT | InnovationDist::SkewStudentT => Some(8.0),
            InnovationDist::Ged | InnovationDist::SkewGed => Some(1.5),
            _ => None,
        };
        if let Some(x) = start {
            let (lo, hi) = self.shape_bounds();
            let f: f64 = (x - lo) / (hi - lo);
            u.push((f / (1.0 - f)).ln());
        }
        if self.has_skew() {
            u.push(0.0);
        }
        u
    }
}

/// Pre-computed log-density for fixed parameters.
#[derive(Debug, Clone, Copy)]
pub struct LogDensity {
    base: Base,
    skew: Option<SkewConsts>,
}

#[derive(Debug, Clone, Copy)]
enum Base {
    Gaussian,
    StudentT { nu: f64, c: f64 },
    Ged { kappa: f64, lambda: f64, c: f64 },
}

#[derive(Debug, Clone, Copy)]
struct SkewConsts {
    xi: f64,
    mu: f64,
    sigma: f64,
    c: f64,
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

impl Base {
    fn ln_pdf(&self, z: f64) -> f64 {
        match *self {
            Base::Gaussian => -LN_SQRT_2PI - 0.5 * z * z,
            Base::StudentT { nu, c } => c - 0.5 * (nu + 1.0) * (1.0 + z * z / (nu - 2.0)).ln(),
            Base::Ged { kappa, lambda, c } => c - 0.5 * (z / lambda).abs().powf(kappa),
        }
    }

    /// E|z| under the unit-variance base density.
    fn abs_moment(&self) -> f64 {
        match *self {
            Base::Gaussian => (2.0 / PI).sqrt(),
            Base::StudentT { nu, .. } => {
                2.0 * (nu - 2.0).sqrt() * (ln_gamma((nu + 1.0) / 2.0) - ln_gamma(nu / 2.0)).exp()
                    / (PI.sqrt() * (nu - 1.0))
            }
            Base::Ged { kappa, lambda, .. } => {
                lambda * 2f64.powf(1.0 / kappa) * (ln_gamma(2.0 / kappa) - ln_gamma(1.0 / kappa)).exp()
            }
        }
    }
}

impl LogDensity {
    /// `shape` is the Student-t degrees of freedom (> 2) or the GED tail
    /// parameter (> 0); `skew` is the Fernández–Steel ξ (> 0).
    pub fn new(dist: InnovationDist, shape: f64, skew: f64) -> Option<Self> {
        let base = match dist {
            InnovationDist::Gaussian | InnovationDist::SkewGaussian => Base::Gaussian,
            InnovationDist::StudentT | InnovationDist::SkewStudentT => {
                if !(shape > 2.0) || !shape.is_finite() {
                    return None;
                }
                let nu = shape;
                let c = ln_gamma((nu + 1.0) / 2.0) - ln_gamma(nu / 2.0) - 0.5 * (PI * (nu - 2.0)).ln();
                Base::StudentT { nu, c }
            }
            InnovationDist::Ged | InnovationDist::SkewGed => {
                if !(shape > 0.0) || !shape.is_finite() {
                    return None;
                }
                let k = shape;
                let lambda = ((-2.0 / k) * 2f64.ln() + ln_gamma(1.0 / k) - ln_gamma(3.0 / k)).exp().sqrt();
                let c = k.ln() - (1.0 + 1.0 / k) * 2f64.ln() - ln_gamma(1.0 / k) - lambda.ln();
                Base::Ged { kappa: k, lambda, c }
            }
        };
        let skew = if dist.has_skew() {
            if !(skew > 0.0) || !skew.is_finite() {
                return None;
            }
            let m1 = base.abs_moment();
            let xi = skew;
            let mu = m1 * (xi - 1.0 / xi);
            let var = (1.0 - m1 * m1) * (xi * xi + 1.0 / (xi * xi)) + 2.0 * m1 * m1 - 1.0;
            if !(var > 0.0) {
                return None;
            }
            let sigma = var.sqrt();
            Some(SkewConsts {
                xi,
                mu,
                sigma,
                c: (2.0 / (xi + 1.0 / xi)).ln() + sigma.ln(),
            })
        } else {
            None
        };
        Some(LogDensity { base, skew })
    }

    #[inline]
    pub fn ln_pdf(&self, z: f64) -> f64 {
        match self.skew {
            None => self.base.ln_pdf(z),
            Some(s) => {
                let y = z * s.sigma + s.mu;
                let x = if y >= 0.0 { y / s.xi } else { y * s.xi };
                s.c + self.base.ln_pdf(x)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Trapezoid moments over a wide grid; independent of the density code
    /// paths beyond pointwise evaluation.
    fn moments(d: &LogDensity) -> (f64, f64, f64) {
        let (a, b, n) = (-60.0, 60.0, 600_000);
        let h = (b - a) / n as f64;
        let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for i in 0..=n {
            let z = a + i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            let p = d.ln_pdf(z).exp() * w * h;
            m0 += p;
            m1 += p * z;
            m2 += p * z * z;
        }
        (m0, m1, m2)
    }

    #[test]
    fn densities_are_standardized() {
        let cases = [
            (InnovationDist::Gaussian, f64::NAN, 1.0),
            (InnovationDist::StudentT, 7.0, 1.0),
            (InnovationDist::Ged, 1.3, 1.0),
            (InnovationDist::Ged, 2.0, 1.0),
            (InnovationDist::SkewGaussian, f64::NAN, 0.7),
            (InnovationDist::SkewStudentT, 9.0, 1.4),
            (InnovationDist::SkewGed, 1.6, 0.8),
        ];
        for (dist, shape, skew) in cases {
            let d = LogDensity::new(dist, shape, skew).unwrap();
            let (m0, m1, m2) = moments(&d);
            assert!((m0 - 1.0).abs() < 1e-5, "{dist:?} mass {m0}");
            assert!(m1.abs() < 1e-4, "{dist:?} mean {m1}");
            assert!((m2 - 1.0).abs() < 2e-3, "{dist:?} var {m2}");
        }
    }

    #[test]
    fn ged_shape_two_is_gaussian() {
        let g = LogDensity::new(InnovationDist::Ged, 2.0, 1.0).unwrap();
        let n = LogDensity::new(InnovationDist::Gaussian, f64::NAN, 1.0).unwrap();
        for z in [-3.0, -0.5, 0.0, 1.2] {
            assert!((g.ln_pdf(z) - n.ln_pdf(z)).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(LogDensity::new(InnovationDist::StudentT, 1.5, 1.0).is_none());
        assert!(LogDensity::new(InnovationDist::SkewGed, 1.5, -1.0).is_none());
    }

    #[test]
    fn shape_stays_bounded_and_accurate() {
        for dist in [InnovationDist::StudentT, InnovationDist::Ged] {
            let (lo, hi) = dist.shape_bounds();
            for v in [-1e6, -30.0, 0.0, 30.0, 1e6] {
                let (shape, _) = dist.from_unconstrained(&[v]);
                assert!(shape >= lo && shape <= hi, "{dist:?} {v} -> {shape}");
            }
            let start = dist.from_unconstrained(&dist.initial_unconstrained()).0;
            assert!((start - if dist == InnovationDist::StudentT { 8.0 } else { 1.5 }).abs() < 1e-12);
        }
        // at the upper bound the t density is close to, never above, a
        // Gaussian-like likelihood scale
        let (_, hi) = InnovationDist::StudentT.shape_bounds();
        let t = LogDensity::new(InnovationDist::StudentT, hi, 1.0).unwrap();
        let g = LogDensity::new(InnovationDist::Gaussian, f64::NAN, 1.0).unwrap();
        for z in [0.0, 0.5, 1.0, 2.0] {
            assert!((t.ln_pdf(z) - g.ln_pdf(z)).abs() < 0.01, "z = {z}");
        }
    }
}
