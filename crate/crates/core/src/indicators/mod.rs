//! Return-based risk indicators: conditional log-volatility from the GARCH
//! family, conditional VaR from asymmetric-slope CAViaR, and conditional ES
//! from calibrated CARE expectiles.

pub mod caviar;
pub mod care;
pub mod dist;
pub mod garch;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use caviar::{fit_caviar, CaviarFit, CaviarOptions, Dynamics};
pub use care::{calibrate_cares, es_from_expectile, fit_care, CareFit, CareOptions, CaresFit, CaresOptions};
pub use garch::{
    conditional_log_volatility, fit_garch, select_garch, select_garch_in, GarchFit, GarchSpec, SearchSpace,
    VarianceFamily,
};
pub use dist::InnovationDist;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IndicatorKind {
    LogReturn,
    LogVol,
    CAViaR,
    CARES,
}

impl IndicatorKind {
    pub const ALL: [IndicatorKind; 4] = [
        IndicatorKind::LogReturn,
        IndicatorKind::LogVol,
        IndicatorKind::CAViaR,
        IndicatorKind::CARES,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            IndicatorKind::LogReturn => "LogReturn",
            IndicatorKind::LogVol => "LogVol",
            IndicatorKind::CAViaR => "CAViaR",
            IndicatorKind::CARES => "CARES",
        }
    }
}

impl fmt::Display for IndicatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IndicatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "logreturn" | "return" | "returns" => Ok(IndicatorKind::LogReturn),
            "logvol" | "volatility" => Ok(IndicatorKind::LogVol),
            "caviar" | "var" => Ok(IndicatorKind::CAViaR),
            "cares" | "es" => Ok(IndicatorKind::CARES),
            other => Err(Error::Usage(format!("unknown indicator '{other}'"))),
        }
    }
}

/// One derived series for one asset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorSeries {
    pub kind: IndicatorKind,
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
    pub source_ticker: String,
}

impl IndicatorSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Long-format CSV: `date,ticker,kind,value`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_indicator_csv(std::slice::from_ref(self), w)
    }
}

pub fn write_indicator_csv<W: Write>(series: &[IndicatorSeries], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["date", "ticker", "kind", "value"])?;
    for s in series {
        for (d, v) in s.dates.iter().zip(&s.values) {
            wtr.write_record([
                d.format("%Y-%m-%d").to_string(),
                s.source_ticker.clone(),
                s.kind.to_string(),
                format!("{v:?}"),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Read long-format indicator rows back, grouped by (ticker, kind) in
/// first-appearance order.
pub fn read_indicator_csv<R: std::io::Read>(r: R) -> Result<Vec<IndicatorSeries>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let mut out: Vec<IndicatorSeries> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let date = crate::panel::parse_date(rec.get(0).unwrap_or("")).ok_or_else(|| Error::Ingest {
            row,
            column: "date".into(),
            message: "unparseable date".into(),
        })?;
        let ticker = rec.get(1).unwrap_or("").to_string();
        let kind: IndicatorKind = rec.get(2).unwrap_or("").parse().map_err(|_| Error::Ingest {
            row,
            column: "kind".into(),
            message: "unknown indicator kind".into(),
        })?;
        let value: f64 = rec.get(3).unwrap_or("").parse().map_err(|_| Error::Ingest {
            row,
            column: "value".into(),
            message: "unparseable value".into(),
        })?;
        match out.iter_mut().find(|s| s.source_ticker == ticker && s.kind == kind) {
            Some(s) => {
                s.dates.push(date);
                s.values.push(value);
            }
            None => out.push(IndicatorSeries {
                kind,
                dates: vec![date],
                values: vec![value],
                source_ticker: ticker,
            }),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let s = IndicatorSeries {
            kind: IndicatorKind::CARES,
            dates: vec![NaiveDate::from_ymd_opt(2020, 1, 2).unwrap(), NaiveDate::from_ymd_opt(2020, 1, 3).unwrap()],
            values: vec![-2.0625, 0.1 + 0.2],
            source_ticker: "AGN".into(),
        };
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("date,ticker,kind,value\n2020-01-02,AGN,CARES,"));
        let back = read_indicator_csv(buf.as_slice()).unwrap();
        assert_eq!(back, vec![s]);
    }
}
