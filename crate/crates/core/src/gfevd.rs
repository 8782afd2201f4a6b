//! Generalized forecast error variance decomposition and the spillover
//! indices derived from it.
//!
//! `theta[i][j]` is the share of variable `i`'s forecast error variance due
//! to shocks in `j`. Rows of the normalized matrix sum to 100.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::var::{ma_coefficients, VarModel};

/// Which MA terms enter the `h`-step decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum HorizonConvention {
    /// `l = 0..=h` (h + 1 terms).
    #[default]
    Inclusive,
    /// `l = 0..h` (h terms); requires `h >= 1`.
    Exclusive,
}

impl HorizonConvention {
    fn last_term(self, h: usize) -> Result<usize> {
        match self {
            HorizonConvention::Inclusive => Ok(h),
            HorizonConvention::Exclusive if h >= 1 => Ok(h - 1),
            HorizonConvention::Exclusive => Err(Error::Config("exclusive horizon convention needs h >= 1".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpilloverMatrix {
    pub h: usize,
    pub theta_raw: DMatrix<f64>,
    /// Percentage points; each row sums to 100.
    pub theta_norm: DMatrix<f64>,
    pub labels: Vec<String>,
}

impl SpilloverMatrix {
    /// Wrap an already normalized matrix, e.g. a published table whose rows
    /// sum to 100 only up to rounding. `theta_raw` is set to `theta_norm / 100`.
    pub fn from_normalized(labels: Vec<String>, theta_norm: DMatrix<f64>, h: usize, row_tol: f64) -> Result<Self> {
        let n = labels.len();
        if theta_norm.nrows() != n || theta_norm.ncols() != n {
            return Err(Error::Data(format!("{n} labels for a {}x{} matrix", theta_norm.nrows(), theta_norm.ncols())));
        }
        if theta_norm.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Data("spillover entries must be finite and nonnegative".into()));
        }
        for (i, label) in labels.iter().enumerate() {
            let s = theta_norm.row(i).sum();
            if (s - 100.0).abs() > row_tol {
                return Err(Error::Data(format!("row {label} sums to {s}, not 100")));
            }
        }
        Ok(SpilloverMatrix {
            h,
            theta_raw: &theta_norm / 100.0,
            theta_norm,
            labels,
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }
}

/// Numerator matrix and denominator vector of the decomposition before the
/// ratio is taken: `num[i][j] = sum_l (e_i' Phi_l S e_j)^2 / s_jj` and
/// `den[i] = sum_l e_i' Phi_l S Phi_l' e_i`.
pub fn gfevd_terms(model: &VarModel, h: usize, convention: HorizonConvention) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let n = model.n;
    let sigma = &model.sigma;
    for j in 0..n {
        if !(sigma[(j, j)] > 0.0) {
            return Err(Error::Domain(format!(
                "innovation variance of {} is {}, must be positive",
                label(model, j),
                sigma[(j, j)]
            )));
        }
    }
    let last = convention.last_term(h)?;
    let ma = ma_coefficients(model, last);
    let mut num = DMatrix::zeros(n, n);
    let mut den = DVector::zeros(n);
    for phi in &ma.phis {
        let a = phi * sigma;
        for i in 0..n {
            for j in 0..n {
                num[(i, j)] += a[(i, j)] * a[(i, j)];
            }
            den[i] += a.row(i).dot(&phi.row(i));
        }
    }
    for j in 0..n {
        let s = sigma[(j, j)];
        num.column_mut(j).scale_mut(1.0 / s);
    }
    Ok((num, den))
}

fn label(model: &VarModel, i: usize) -> String {
    model.labels.get(i).cloned().unwrap_or_else(|| format!("#{i}"))
}

pub fn compute_gfevd(model: &VarModel, h: usize) -> Result<SpilloverMatrix> {
    compute_gfevd_with(model, h, HorizonConvention::Inclusive)
}

pub fn compute_gfevd_with(model: &VarModel, h: usize, convention: HorizonConvention) -> Result<SpilloverMatrix> {
    let n = model.n;
    let (num, den) = gfevd_terms(model, h, convention)?;
    let mut raw = DMatrix::zeros(n, n);
    for i in 0..n {
        if !(den[i] > 0.0) || !den[i].is_finite() {
            return Err(Error::Degenerate(format!("forecast error variance of {} is zero", label(model, i))));
        }
        for j in 0..n {
            raw[(i, j)] = num[(i, j)] / den[i];
        }
    }
    let mut norm = raw.clone();
    for i in 0..n {
        let s = raw.row(i).sum();
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::Degenerate(format!("decomposition row {} has zero mass", label(model, i))));
        }
        norm.row_mut(i).scale_mut(100.0 / s);
    }
    Ok(SpilloverMatrix {
        h,
        theta_raw: raw,
        theta_norm: norm,
        labels: model.labels.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpilloverSummary {
    pub from_others: Vec<f64>,
    pub to_others: Vec<f64>,
    pub net: Vec<f64>,
    pub total: f64,
}

/// `from_i = 100 - theta_ii`, `to_j` = off-diagonal column sum,
/// `net = to - from`, `total = sum from`.
pub fn summarize(m: &SpilloverMatrix) -> SpilloverSummary {
    let n = m.n();
    let t = &m.theta_norm;
    let from_others: Vec<f64> = (0..n).map(|i| 100.0 - t[(i, i)]).collect();
    let to_others: Vec<f64> = (0..n).map(|j| (0..n).filter(|&i| i != j).map(|i| t[(i, j)]).sum()).collect();
    let net = to_others.iter().zip(&from_others).map(|(a, b)| a - b).collect();
    let total = from_others.iter().sum();
    SpilloverSummary {
        from_others,
        to_others,
        net,
        total,
    }
}

/// A spillover table as laid out on disk: matrix block with a trailing
/// `from_others` column, then `to_others`, `net` and `total` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SpilloverTable {
    pub labels: Vec<String>,
    pub theta_norm: DMatrix<f64>,
    pub summary: SpilloverSummary,
}

const CORNER: &str = "to\\from";

pub fn write_spillover_csv<W: Write>(m: &SpilloverMatrix, s: &SpilloverSummary, w: W) -> Result<()> {
    let mut wr = csv::WriterBuilder::new().flexible(true).from_writer(w);
    let n = m.n();
    let mut header = vec![CORNER.to_string()];
    header.extend(m.labels.iter().cloned());
    header.push("from_others".into());
    wr.write_record(&header)?;
    for i in 0..n {
        let mut row = vec![m.labels[i].clone()];
        row.extend((0..n).map(|j| m.theta_norm[(i, j)].to_string()));
        row.push(s.from_others[i].to_string());
        wr.write_record(&row)?;
    }
    for (name, v) in [("to_others", &s.to_others), ("net", &s.net)] {
        let mut row = vec![name.to_string()];
        row.extend(v.iter().map(|x| x.to_string()));
        wr.write_record(&row)?;
    }
    wr.write_record(["total".to_string(), s.total.to_string()])?;
    wr.flush()?;
    Ok(())
}

pub fn read_spillover_csv<R: Read>(r: R) -> Result<SpilloverTable> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(r);
    let rows: Vec<csv::StringRecord> = rd.records().collect::<std::result::Result<_, _>>()?;
    let header = rows.first().ok_or_else(|| Error::Data("empty spillover table".into()))?;
    if header.len() < 3 || header.get(header.len() - 1) != Some("from_others") {
        return Err(Error::Ingest {
            row: 1,
            column: header.get(header.len().saturating_sub(1)).unwrap_or("").to_string(),
            message: "header must end with from_others".into(),
        });
    }
    let labels: Vec<String> = header.iter().skip(1).take(header.len() - 2).map(str::to_string).collect();
    let n = labels.len();
    if rows.len() != n + 4 {
        return Err(Error::Data(format!("expected {} rows for {n} labels, found {}", n + 4, rows.len())));
    }
    let num = |row: usize, col: usize| -> Result<f64> {
        let rec = &rows[row];
        let cell = rec.get(col).unwrap_or("");
        cell.parse::<f64>().map_err(|_| Error::Ingest {
            row: row + 1,
            column: rec.get(0).unwrap_or("").to_string(),
            message: format!("'{cell}' is not a number (field {})", col + 1),
        })
    };
    let mut theta = DMatrix::zeros(n, n);
    let mut from_others = Vec::with_capacity(n);
    for i in 0..n {
        if rows[i + 1].get(0) != Some(labels[i].as_str()) {
            return Err(Error::Ingest {
                row: i + 2,
                column: CORNER.into(),
                message: format!("row label must be {}", labels[i]),
            });
        }
        for j in 0..n {
            theta[(i, j)] = num(i + 1, j + 1)?;
        }
        from_others.push(num(i + 1, n + 1)?);
    }
    let vector = |row: usize, name: &str| -> Result<Vec<f64>> {
        if rows[row].get(0) != Some(name) {
            return Err(Error::Ingest {
                row: row + 1,
                column: CORNER.into(),
                message: format!("expected a {name} row"),
            });
        }
        (0..n).map(|j| num(row, j + 1)).collect()
    };
    let to_others = vector(n + 1, "to_others")?;
    let net = vector(n + 2, "net")?;
    if rows[n + 3].get(0) != Some("total") {
        return Err(Error::Ingest {
            row: n + 4,
            column: CORNER.into(),
            message: "expected a total row".into(),
        });
    }
    let total = num(n + 3, 1)?;
    Ok(SpilloverTable {
        labels,
        theta_norm: theta,
        summary: SpilloverSummary {
            from_others,
            to_others,
            net,
            total,
        },
    })
}
