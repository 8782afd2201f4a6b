//! Derivative-free minimization used by the GARCH, CAViaR and CARE fits.

/// Nelder–Mead settings.
#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    pub max_evals: usize,
    /// Stop when the spread of simplex values falls below
    /// `f_tol * (1 + |f_best|)` and the simplex diameter below `x_tol`.
    pub f_tol: f64,
    pub x_tol: f64,
    /// Relative size of the initial simplex.
    pub initial_step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        NelderMead {
            max_evals: 4000,
            f_tol: 1e-10,
            x_tol: 1e-8,
            initial_step: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

impl NelderMead {
    /// Minimize `f` from `x0`. Non-finite objective values are treated as +inf.
    pub fn minimize<F: FnMut(&[f64]) -> f64>(&self, mut f: F, x0: &[f64]) -> Minimum {
        let n = x0.len();
        let mut evals = 0usize;
        let mut eval = |x: &[f64], evals: &mut usize| {
            *evals += 1;
            let v = f(x);
            if v.is_finite() {
                v
            } else {
                f64::INFINITY
            }
        };
        if n == 0 {
            let v = eval(x0, &mut evals);
            return Minimum {
                x: vec![],
                value: v,
                evals,
                converged: true,
            };
        }

        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        simplex.push(x0.to_vec());
        for i in 0..n {
            let mut v = x0.to_vec();
            let step = if v[i].abs() > 1e-8 {
                self.initial_step * v[i].abs()
            } else {
                self.initial_step.max(1e-4) * 0.25
            };
            v[i] += step;
            simplex.push(v);
        }
        let mut fv: Vec<f64> = simplex.iter().map(|x| eval(x, &mut evals)).collect();

        let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
        let mut converged = false;
        let mut order: Vec<usize> = (0..=n).collect();
        while evals < self.max_evals {
            order.sort_by(|&a, &b| fv[a].partial_cmp(&fv[b]).unwrap_or(std::cmp::Ordering::Equal));
            let best = order[0];
            let worst = order[n];
            let second = order[n - 1];

            let spread = fv[worst] - fv[best];
            let diam = simplex
                .iter()
                .map(|x| x.iter().zip(&simplex[best]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if fv[best].is_finite() && spread <= self.f_tol * (1.0 + fv[best].abs()) && diam <= self.x_tol * (1.0 + norm_inf(&simplex[best])) {
                converged = true;
                break;
            }
            if fv[best].is_finite() && spread == 0.0 && diam <= 1e-3 * self.x_tol.sqrt() {
                converged = true;
                break;
            }

            let mut centroid = vec![0.0; n];
            for &k in order.iter().take(n) {
                for (c, x) in centroid.iter_mut().zip(&simplex[k]) {
                    *c += x / n as f64;
                }
            }
            let point = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&simplex[worst])
                    .map(|(c, w)| c + t * (w - c))
                    .collect()
            };

            let xr = point(-alpha);
            let fr = eval(&xr, &mut evals);
            if fr < fv[best] {
                let xe = point(-gamma);
                let fe = eval(&xe, &mut evals);
                if fe < fr {
                    simplex[worst] = xe;
                    fv[worst] = fe;
                } else {
                    simplex[worst] = xr;
                    fv[worst] = fr;
                }
                continue;
            }
            if fr < fv[second] {
                simplex[worst] = xr;
                fv[worst] = fr;
                continue;
            }
            let (xc, fc) = if fr < fv[worst] {
                let xc = point(-rho);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            } else {
                let xc = point(rho);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            };
            if fc < fv[worst].min(fr) {
                simplex[worst] = xc;
                fv[worst] = fc;
                continue;
            }
            // shrink toward best
            let xb = simplex[best].clone();
            for &k in order.iter().skip(1) {
                let v: Vec<f64> = xb.iter().zip(&simplex[k]).map(|(b, x)| b + sigma * (x - b)).collect();
                fv[k] = eval(&v, &mut evals);
                simplex[k] = v;
            }
        }
        let best = (0..=n)
            .min_by(|&a, &b| fv[a].partial_cmp(&fv[b]).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap();
        Minimum {
            x: simplex[best].clone(),
            value: fv[best],
            evals,
            converged,
        }
    }

    /// Restart from the previous optimum until the objective stops improving.
    pub fn minimize_with_restarts<F: FnMut(&[f64]) -> f64>(&self, mut f: F, x0: &[f64], max_restarts: usize) -> Minimum {
        let mut best = self.minimize(&mut f, x0);
        let mut total = best.evals;
        for _ in 0..max_restarts {
            let next = self.minimize(&mut f, &best.x);
            total += next.evals;
            let improved = next.value < best.value - self.f_tol * (1.0 + best.value.abs());
            let conv = next.converged;
            if next.value <= best.value {
                best = next;
            }
            if !improved && conv {
                best.converged = true;
                break;
            }
        }
        best.evals = total;
        best
    }
}

fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}
