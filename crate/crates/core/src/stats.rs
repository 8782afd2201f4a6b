//! Small descriptive-statistics helpers shared across modules.

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population variance (divisor `n`).
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
}

/// Inclusive linear-interpolation quantile: position `(n - 1) q` in the
/// sorted sample.
pub fn quantile_linear(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of empty sample");
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("NaN in quantile input"));
    let h = (v.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// Sample expectile at level `psi`: the minimizer of
/// `sum |psi - 1{x < e}| (x - e)^2`, found by the weighted-mean fixed point.
pub fn expectile(x: &[f64], psi: f64) -> f64 {
    let mut e = mean(x);
    for _ in 0..200 {
        let (mut num, mut den) = (0.0, 0.0);
        for &v in x {
            let w = if v < e { 1.0 - psi } else { psi };
            num += w * v;
            den += w;
        }
        let next = num / den;
        if (next - e).abs() <= 1e-14 * (1.0 + e.abs()) {
            return next;
        }
        e = next;
    }
    e
}

/// Average ranks (1-based), ties share the mean rank.
pub fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Spearman rank correlation.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&ranks(x), &ranks(y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inclusive_quantile() {
        assert_eq!(quantile_linear(&[4.0, 1.0, 3.0, 2.0], 0.75), 3.25);
        assert_eq!(quantile_linear(&[5.0, 5.0, 5.0], 0.75), 5.0);
        assert_eq!(quantile_linear(&[1.0, 2.0], 0.0), 1.0);
    }

    #[test]
    fn expectile_limits() {
        assert!(expectile(&[-1.0, 1.0], 0.5).abs() < 1e-15);
        let x = [0.3, -2.0, 1.7, 0.2, 5.0];
        assert!((expectile(&x, 0.5) - mean(&x)).abs() < 1e-12);
        // first-order condition
        let e = expectile(&x, 0.1);
        let g: f64 = x.iter().map(|&v| if v < e { 0.9 } else { 0.1 } * (v - e)).sum();
        assert!(g.abs() < 1e-10);
    }

    #[test]
    fn spearman_of_monotone_map_is_one() {
        let x = [1.0, 5.0, 2.0, 9.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| v.powi(3)).collect();
        assert!((spearman(&x, &y) - 1.0).abs() < 1e-12);
        assert_eq!(ranks(&[2.0, 1.0, 2.0]), vec![2.5, 1.0, 2.5]);
    }
}
