//! Connectedness table for a three-variable VAR: the normalized generalized
//! variance decomposition with from/to/net margins, printed and as CSV.
//!
//! ```text
//! cargo run --example gfevd_table -- [h]
//! ```

use nalgebra::{DMatrix, DVector};
use spillover::gfevd::{compute_gfevd, summarize, write_spillover_csv};
use spillover::var::VarModel;

fn main() -> spillover::Result<()> {
    let h: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let beta = DMatrix::from_row_slice(3, 3, &[0.5, 0.2, 0.0, 0.0, 0.4, 0.3, 0.1, 0.0, 0.6]);
    let sigma = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, 0.1, 0.3, 1.0, 0.2, 0.1, 0.2, 1.0]);
    let model = VarModel::from_parts(DVector::zeros(3), vec![beta], sigma)?
        .with_labels(vec!["banks".into(), "insurers".into(), "bonds".into()]);
    println!("spectral radius {:.3}", model.spectral_radius());

    let m = compute_gfevd(&model, h)?;
    let s = summarize(&m);
    print!("{:>10}", "");
    for l in &m.labels {
        print!("{l:>10}");
    }
    println!("{:>10}", "from");
    for (i, l) in m.labels.iter().enumerate() {
        print!("{l:>10}");
        for j in 0..m.labels.len() {
            print!("{:10.2}", m.theta_norm[(i, j)]);
        }
        println!("{:10.2}", s.from_others[i]);
    }
    let row = |name: &str, v: &[f64]| println!("{name:>10}{}", v.iter().map(|x| format!("{x:10.2}")).collect::<String>());
    row("to", &s.to_others);
    row("net", &s.net);
    println!("total {:.2} (average {:.2}%)\n", s.total, s.total / m.labels.len() as f64);

    write_spillover_csv(&m, &s, std::io::stdout().lock())
}
