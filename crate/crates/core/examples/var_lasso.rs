//! Post-LASSO VAR on a sparse 8-variable system: cross-validated LASSO picks
//! the support, OLS refits it. Compared with unrestricted OLS.
//!
//! ```text
//! cargo run --release --example var_lasso
//! ```

use nalgebra::{DMatrix, DVector};
use spillover::simulate;
use spillover::var::{estimate_var_ols, estimate_var_post_lasso, select_lag_bic, IndicatorPanel, LassoOptions};

fn main() -> spillover::Result<()> {
    let n = 8;
    // own persistence plus a chain i -> i+1
    let beta = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.4
        } else if j + 1 == i {
            0.3
        } else {
            0.0
        }
    });
    let data = simulate::var_process(&DVector::zeros(n), &[beta.clone()], &DMatrix::identity(n, n), 400, 5);
    let panel = IndicatorPanel::new((0..n).map(|i| format!("x{i}")).collect(), data)?;

    let p = select_lag_bic(&panel, 4)?;
    println!("BIC lag order {p}");
    let ols = estimate_var_ols(&panel, p)?;
    let post = estimate_var_post_lasso(&panel, p, &LassoOptions::default())?;

    let mask = post.support_mask.as_ref().unwrap();
    let truth = |i: usize, k: usize| k < n && beta[(i, k)] != 0.0;
    let kept: usize = mask.iter().flatten().filter(|&&b| b).count();
    let hits: usize = (0..n).map(|i| mask[i].iter().enumerate().filter(|&(k, &b)| b && truth(i, k)).count()).sum();
    println!("support: {kept} of {} slopes kept, {hits} of {} true slopes found", n * n * p, 2 * n - 1);

    let err = |m: &spillover::var::VarModel| (&m.betas[0] - &beta).abs().sum() / (n * n) as f64;
    println!("mean abs error in B1: OLS {:.4}, post-LASSO {:.4}", err(&ols), err(&post));
    for (i, lam) in post.lasso.as_ref().unwrap().lambdas.iter().enumerate() {
        println!("equation {i}: lambda {lam:.4}");
    }
    Ok(())
}
