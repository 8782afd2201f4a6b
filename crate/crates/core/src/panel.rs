//! Price ingestion, log-return construction, liquidity filtering and
//! value-weighted subsector indices.
//!
//! Input CSVs are wide: a `date` column of ISO-8601 dates followed by one
//! numeric column per ticker. Blank cells are missing observations.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indicators::{IndicatorKind, IndicatorSeries};

/// Bloomberg-style insurance subsector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Subsector {
    InsuranceBrokers,
    LifeHealth,
    Multiline,
    PropertyCasualty,
    Reinsurance,
    Other,
}

impl Subsector {
    pub const INSURANCE: [Subsector; 5] = [
        Subsector::InsuranceBrokers,
        Subsector::LifeHealth,
        Subsector::Multiline,
        Subsector::PropertyCasualty,
        Subsector::Reinsurance,
    ];

    /// Short table label, e.g. `Mul.Lin.`.
    pub fn abbreviation(self) -> &'static str {
        match self {
            Subsector::InsuranceBrokers => "Ins.Bro.",
            Subsector::LifeHealth => "Lif.Hea.",
            Subsector::Multiline => "Mul.Lin.",
            Subsector::PropertyCasualty => "Pro.Cas.",
            Subsector::Reinsurance => "Reins.",
            Subsector::Other => "Other",
        }
    }
}

impl fmt::Display for Subsector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.abbreviation())
    }
}

impl FromStr for Subsector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "Ins.Bro." => Ok(Subsector::InsuranceBrokers),
            "Lif.Hea." => Ok(Subsector::LifeHealth),
            "Mul.Lin." => Ok(Subsector::Multiline),
            "Pro.Cas." => Ok(Subsector::PropertyCasualty),
            "Reins." => Ok(Subsector::Reinsurance),
            "Other" => Ok(Subsector::Other),
            other => Err(Error::Data(format!("unknown subsector '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetMeta {
    pub ticker: String,
    pub name: String,
    pub country: String,
    pub subsector: Subsector,
    /// Capitalization per panel date; `None` when unavailable.
    pub market_cap: Vec<Option<f64>>,
}

impl AssetMeta {
    pub fn bare(ticker: impl Into<String>, n_dates: usize) -> Self {
        let ticker = ticker.into();
        AssetMeta {
            name: ticker.clone(),
            ticker,
            country: String::new(),
            subsector: Subsector::Other,
            market_cap: vec![None; n_dates],
        }
    }
}

/// How the CSV is laid out.
#[derive(Debug, Clone)]
pub struct ColumnSpec {
    pub date_column: String,
    pub delimiter: u8,
}

impl Default for ColumnSpec {
    fn default() -> Self {
        ColumnSpec {
            date_column: "date".to_string(),
            delimiter: b',',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    pub dates: Vec<NaiveDate>,
    /// One column per asset, aligned with `dates`.
    pub prices: Vec<Vec<Option<f64>>>,
    pub assets: Vec<AssetMeta>,
}

/// Units of the stored returns. Fixed once per panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReturnUnits {
    Percent,
    Fraction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    pub dates: Vec<NaiveDate>,
    pub returns: Vec<Vec<Option<f64>>>,
    pub assets: Vec<AssetMeta>,
    /// Marks entries that were missing and replaced by zero.
    pub zero_filled: Vec<Vec<bool>>,
    pub units: ReturnUnits,
}

/// A date on which a subsector index could not be weighted.
#[derive(Debug, Clone, PartialEq)]
pub struct DegenerateDate {
    pub date: NaiveDate,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsectorIndex {
    pub series: IndicatorSeries,
    pub warnings: Vec<DegenerateDate>,
}

pub fn parse_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").ok()
}

/// Parse a wide date-by-ticker CSV from any reader.
pub fn read_wide_csv<R: Read>(reader: R, spec: &ColumnSpec) -> Result<(Vec<NaiveDate>, Vec<String>, Vec<Vec<Option<f64>>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(spec.delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let date_idx = headers
        .iter()
        .position(|h| h == spec.date_column)
        .ok_or_else(|| Error::Ingest {
            row: 1,
            column: spec.date_column.clone(),
            message: "date column not found in header".into(),
        })?;
    let tickers: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != date_idx)
        .map(|(_, h)| h.to_string())
        .collect();
    let mut seen = HashSet::new();
    for t in &tickers {
        if !seen.insert(t.as_str()) {
            return Err(Error::Ingest {
                row: 1,
                column: t.clone(),
                message: "duplicate ticker in header".into(),
            });
        }
    }

    let mut dates = Vec::new();
    let mut cols: Vec<Vec<Option<f64>>> = vec![Vec::new(); tickers.len()];
    for (i, rec) in rdr.records().enumerate() {
        // header is row 1
        let row = i + 2;
        let rec = rec?;
        let raw_date = rec.get(date_idx).unwrap_or("");
        let date = parse_date(raw_date).ok_or_else(|| Error::Ingest {
            row,
            column: spec.date_column.clone(),
            message: format!("unparseable date '{raw_date}'"),
        })?;
        if let Some(&last) = dates.last() {
            if date == last {
                return Err(Error::Ingest {
                    row,
                    column: spec.date_column.clone(),
                    message: format!("duplicate date {date}"),
                });
            }
            if date < last {
                return Err(Error::Ingest {
                    row,
                    column: spec.date_column.clone(),
                    message: format!("dates not increasing ({date} after {last})"),
                });
            }
        }
        dates.push(date);
        let mut c = 0;
        for (j, field) in rec.iter().enumerate() {
            if j == date_idx {
                continue;
            }
            if c >= tickers.len() {
                break;
            }
            let v = if field.is_empty() {
                None
            } else {
                let x: f64 = field.parse().map_err(|_| Error::Ingest {
                    row,
                    column: tickers[c].clone(),
                    message: format!("unparseable number '{field}'"),
                })?;
                if x.is_finite() {
                    Some(x)
                } else {
                    None
                }
            };
            cols[c].push(v);
            c += 1;
        }
        while c < tickers.len() {
            cols[c].push(None);
            c += 1;
        }
    }
    Ok((dates, tickers, cols))
}

impl PricePanel {
    pub fn from_reader<R: Read>(reader: R, spec: &ColumnSpec) -> Result<Self> {
        let (dates, tickers, prices) = read_wide_csv(reader, spec)?;
        for (col, t) in prices.iter().zip(&tickers) {
            for (row, p) in col.iter().enumerate() {
                if let Some(p) = p {
                    if *p <= 0.0 {
                        return Err(Error::Ingest {
                            row: row + 2,
                            column: t.clone(),
                            message: format!("nonpositive price {p}"),
                        });
                    }
                }
            }
        }
        let n = dates.len();
        let assets = tickers.into_iter().map(|t| AssetMeta::bare(t, n)).collect();
        Ok(PricePanel { dates, prices, assets })
    }

    pub fn tickers(&self) -> Vec<&str> {
        self.assets.iter().map(|a| a.ticker.as_str()).collect()
    }

    /// Attach name/country/subsector from a metadata table.
    /// Tickers absent from the table keep their defaults.
    pub fn with_metadata(mut self, meta: &[MetadataRow]) -> Self {
        let by_ticker: HashMap<&str, &MetadataRow> = meta.iter().map(|m| (m.ticker.as_str(), m)).collect();
        for a in &mut self.assets {
            if let Some(m) = by_ticker.get(a.ticker.as_str()) {
                a.name = m.name.clone();
                a.country = m.country.clone();
                a.subsector = m.subsector;
            }
        }
        self
    }

    /// Attach market caps from a panel with the same layout. Caps are matched
    /// by date key; dates absent from the cap panel leave the cap missing.
    pub fn with_market_caps(mut self, caps: &CapPanel) -> Self {
        let date_pos: HashMap<NaiveDate, usize> = caps.dates.iter().enumerate().map(|(i, d)| (*d, i)).collect();
        let col_pos: HashMap<&str, usize> = caps.tickers.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
        for a in &mut self.assets {
            let Some(&c) = col_pos.get(a.ticker.as_str()) else { continue };
            a.market_cap = self
                .dates
                .iter()
                .map(|d| date_pos.get(d).and_then(|&r| caps.values[c][r]))
                .collect();
        }
        self
    }
}

pub fn load_price_csv(path: impl AsRef<Path>, spec: &ColumnSpec) -> Result<PricePanel> {
    let f = std::fs::File::open(path.as_ref())?;
    PricePanel::from_reader(f, spec)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapPanel {
    pub dates: Vec<NaiveDate>,
    pub tickers: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

pub fn read_cap_csv<R: Read>(reader: R, spec: &ColumnSpec) -> Result<CapPanel> {
    let (dates, tickers, values) = read_wide_csv(reader, spec)?;
    for (col, t) in values.iter().zip(&tickers) {
        for (row, v) in col.iter().enumerate() {
            if matches!(v, Some(x) if *x < 0.0) {
                return Err(Error::Ingest {
                    row: row + 2,
                    column: t.clone(),
                    message: "negative market capitalization".into(),
                });
            }
        }
    }
    Ok(CapPanel { dates, tickers, values })
}

pub fn load_cap_csv(path: impl AsRef<Path>, spec: &ColumnSpec) -> Result<CapPanel> {
    read_cap_csv(std::fs::File::open(path.as_ref())?, spec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetadataRow {
    pub ticker: String,
    pub name: String,
    pub country: String,
    pub subsector: Subsector,
}

pub fn read_metadata_csv<R: Read>(reader: R) -> Result<Vec<MetadataRow>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let get = |k: usize| rec.get(k).unwrap_or("").to_string();
        let ticker = get(0);
        if !seen.insert(ticker.clone()) {
            return Err(Error::Ingest {
                row: i + 2,
                column: "ticker".into(),
                message: format!("duplicate ticker '{ticker}'"),
            });
        }
        let subsector = get(3).parse().map_err(|e: Error| Error::Ingest {
            row: i + 2,
            column: "subsector".into(),
            message: e.to_string(),
        })?;
        out.push(MetadataRow {
            ticker,
            name: get(1),
            country: get(2),
            subsector,
        });
    }
    Ok(out)
}

pub fn load_metadata_csv(path: impl AsRef<Path>) -> Result<Vec<MetadataRow>> {
    read_metadata_csv(std::fs::File::open(path.as_ref())?)
}

/// Percent log-returns `100 * ln(p_t / p_{t-1})`. The first date is dropped
/// and a return is missing whenever either price is missing.
pub fn compute_log_returns(panel: &PricePanel) -> Result<ReturnPanel> {
    if panel.dates.len() < 2 {
        return Err(Error::Data("need at least two dates to form returns".into()));
    }
    let mut returns = Vec::with_capacity(panel.prices.len());
    for (col, a) in panel.prices.iter().zip(&panel.assets) {
        let mut r = Vec::with_capacity(col.len() - 1);
        for w in col.windows(2) {
            match (w[0], w[1]) {
                (Some(p0), Some(p1)) => {
                    if p0 <= 0.0 || p1 <= 0.0 {
                        return Err(Error::Domain(format!("nonpositive price for {}", a.ticker)));
                    }
                    r.push(Some(100.0 * (p1 / p0).ln()));
                }
                _ => r.push(None),
            }
        }
        returns.push(r);
    }
    let assets: Vec<AssetMeta> = panel
        .assets
        .iter()
        .map(|a| AssetMeta {
            market_cap: a.market_cap.iter().skip(1).copied().collect(),
            ..a.clone()
        })
        .collect();
    let t = panel.dates.len() - 1;
    Ok(ReturnPanel {
        dates: panel.dates[1..].to_vec(),
        zero_filled: vec![vec![false; t]; returns.len()],
        returns,
        assets,
        units: ReturnUnits::Percent,
    })
}

impl ReturnPanel {
    pub fn n_assets(&self) -> usize {
        self.assets.len()
    }

    pub fn tickers(&self) -> Vec<String> {
        self.assets.iter().map(|a| a.ticker.clone()).collect()
    }

    pub fn has_missing(&self) -> bool {
        self.returns.iter().flatten().any(Option::is_none)
    }

    /// Column `j` with missing values as zero.
    pub fn filled_column(&self, j: usize) -> Vec<f64> {
        self.returns[j].iter().map(|v| v.unwrap_or(0.0)).collect()
    }

    /// Each asset's returns as a `LogReturn` indicator series.
    pub fn to_indicator_series(&self) -> Vec<IndicatorSeries> {
        (0..self.n_assets())
            .map(|j| IndicatorSeries {
                kind: IndicatorKind::LogReturn,
                dates: self.dates.clone(),
                values: self.filled_column(j),
                source_ticker: self.assets[j].ticker.clone(),
            })
            .collect()
    }

    /// Non-overlapping sums of `block` consecutive returns, dated at the last
    /// day of each block. A trailing partial block is dropped.
    pub fn aggregate(&self, block: usize) -> Result<ReturnPanel> {
        if block == 0 {
            return Err(Error::Config("aggregation block must be positive".into()));
        }
        let nb = self.dates.len() / block;
        if nb == 0 {
            return Err(Error::Data("panel shorter than one aggregation block".into()));
        }
        let dates = (0..nb).map(|b| self.dates[b * block + block - 1]).collect();
        let returns = self
            .returns
            .iter()
            .map(|col| {
                (0..nb)
                    .map(|b| {
                        let chunk = &col[b * block..(b + 1) * block];
                        chunk.iter().copied().sum::<Option<f64>>()
                    })
                    .collect()
            })
            .collect();
        let zero_filled = self
            .zero_filled
            .iter()
            .map(|col| (0..nb).map(|b| col[b * block..(b + 1) * block].iter().any(|&z| z)).collect())
            .collect();
        let assets = self
            .assets
            .iter()
            .map(|a| AssetMeta {
                market_cap: (0..nb).map(|b| a.market_cap.get(b * block + block - 1).copied().flatten()).collect(),
                ..a.clone()
            })
            .collect();
        Ok(ReturnPanel {
            dates,
            returns,
            assets,
            zero_filled,
            units: self.units,
        })
    }
}

/// Zero-fill missing returns and drop assets whose count of nonzero returns
/// does not exceed `min_nonzero_frac * T`.
pub fn apply_liquidity_filter(panel: &ReturnPanel, min_nonzero_frac: f64) -> Result<ReturnPanel> {
    if !(min_nonzero_frac > 0.0 && min_nonzero_frac < 1.0) {
        return Err(Error::Config(format!(
            "liquidity threshold must lie in (0, 1), got {min_nonzero_frac}"
        )));
    }
    let t = panel.dates.len() as f64;
    let mut out = ReturnPanel {
        dates: panel.dates.clone(),
        returns: Vec::new(),
        assets: Vec::new(),
        zero_filled: Vec::new(),
        units: panel.units,
    };
    for j in 0..panel.n_assets() {
        let col = &panel.returns[j];
        let nonzero = col.iter().filter(|v| matches!(v, Some(x) if *x != 0.0)).count();
        if (nonzero as f64) <= min_nonzero_frac * t {
            continue;
        }
        let filled: Vec<Option<f64>> = col.iter().map(|v| Some(v.unwrap_or(0.0))).collect();
        let flags: Vec<bool> = col
            .iter()
            .zip(&panel.zero_filled[j])
            .map(|(v, z)| v.is_none() || *z)
            .collect();
        out.returns.push(filled);
        out.zero_filled.push(flags);
        out.assets.push(panel.assets[j].clone());
    }
    if out.assets.is_empty() {
        return Err(Error::Data("no asset survives the liquidity filter".into()));
    }
    Ok(out)
}

/// Market-cap weighted daily return of one subsector.
///
/// Weights use the contemporaneous cap. An asset with a missing return or
/// cap enters with return 0 and weight 0 and the remaining caps are
/// renormalized. Dates where no weight is available get a zero return and
/// a warning record.
pub fn build_subsector_index(panel: &ReturnPanel, subsector: Subsector) -> Result<SubsectorIndex> {
    let members: Vec<usize> = (0..panel.n_assets())
        .filter(|&j| panel.assets[j].subsector == subsector)
        .collect();
    if members.is_empty() {
        return Err(Error::Data(format!("no assets in subsector {subsector}")));
    }
    let mut values = Vec::with_capacity(panel.dates.len());
    let mut warnings = Vec::new();
    for (t, date) in panel.dates.iter().enumerate() {
        let mut num = 0.0;
        let mut den = 0.0;
        for &j in &members {
            let r = panel.returns[j][t];
            let cap = panel.assets[j].market_cap.get(t).copied().flatten();
            if let (Some(r), Some(cap)) = (r, cap) {
                if panel.zero_filled[j][t] {
                    continue;
                }
                num += cap * r;
                den += cap;
            }
        }
        if den > 0.0 {
            values.push(num / den);
        } else {
            values.push(0.0);
            warnings.push(DegenerateDate {
                date: *date,
                reason: "all member caps zero or missing".into(),
            });
        }
    }
    Ok(SubsectorIndex {
        series: IndicatorSeries {
            kind: IndicatorKind::LogReturn,
            dates: panel.dates.clone(),
            values,
            source_ticker: subsector.abbreviation().to_string(),
        },
        warnings,
    })
}

/// Daily weights of each member; rows are dates, columns follow member order.
pub fn subsector_weights(panel: &ReturnPanel, subsector: Subsector) -> Vec<Vec<f64>> {
    let members: Vec<usize> = (0..panel.n_assets())
        .filter(|&j| panel.assets[j].subsector == subsector)
        .collect();
    (0..panel.dates.len())
        .map(|t| {
            let caps: Vec<f64> = members
                .iter()
                .map(|&j| match (panel.returns[j][t], panel.assets[j].market_cap.get(t).copied().flatten()) {
                    (Some(_), Some(c)) if !panel.zero_filled[j][t] => c,
                    _ => 0.0,
                })
                .collect();
            let s: f64 = caps.iter().sum();
            if s > 0.0 {
                caps.iter().map(|c| c / s).collect()
            } else {
                vec![0.0; caps.len()]
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        parse_date(s).unwrap()
    }

    #[test]
    fn parses_three_row_csv() {
        let csv = "date,AAA\n2020-01-02,100\n2020-01-03,101\n2020-01-06,99\n";
        let p = PricePanel::from_reader(csv.as_bytes(), &ColumnSpec::default()).unwrap();
        assert_eq!(p.dates.len(), 3);
        assert_eq!(p.assets.len(), 1);
        assert_eq!(p.prices[0], vec![Some(100.0), Some(101.0), Some(99.0)]);
    }

    #[test]
    fn blank_cell_is_missing() {
        let csv = "date,A,B\n2020-01-02,100,5\n2020-01-03,,6\n";
        let p = PricePanel::from_reader(csv.as_bytes(), &ColumnSpec::default()).unwrap();
        assert_eq!(p.prices[0][1], None);
        assert_eq!(p.prices[1][1], Some(6.0));
    }

    #[test]
    fn duplicate_date_rejected() {
        let csv = "date,A\n2020-01-02,100\n2020-01-02,101\n";
        let err = PricePanel::from_reader(csv.as_bytes(), &ColumnSpec::default()).unwrap_err();
        assert!(matches!(err, Error::Ingest { row: 3, .. }), "{err}");
    }

    #[test]
    fn bad_number_names_row_and_column() {
        let csv = "date,A,B\n2020-01-02,100,1\n2020-01-03,101,x\n";
        match PricePanel::from_reader(csv.as_bytes(), &ColumnSpec::default()).unwrap_err() {
            Error::Ingest { row, column, .. } => {
                assert_eq!(row, 3);
                assert_eq!(column, "B");
            }
            e => panic!("unexpected {e}"),
        }
        let csv = "date,A\nnot-a-date,100\n";
        assert!(PricePanel::from_reader(csv.as_bytes(), &ColumnSpec::default()).is_err());
    }

    fn single(prices: Vec<Option<f64>>) -> PricePanel {
        let n = prices.len();
        let dates = (0..n).map(|i| d("2020-01-01") + chrono::Days::new(i as u64)).collect();
        PricePanel {
            dates,
            prices: vec![prices],
            assets: vec![AssetMeta::bare("A", n)],
        }
    }

    #[test]
    fn log_return_examples() {
        let r = compute_log_returns(&single(vec![Some(100.0), Some(100.0)])).unwrap();
        assert_eq!(r.returns[0], vec![Some(0.0)]);
        let r = compute_log_returns(&single(vec![Some(100.0), Some(100.0 * 0.01f64.exp())])).unwrap();
        assert!((r.returns[0][0].unwrap() - 1.0).abs() < 1e-12);
        let r = compute_log_returns(&single(vec![Some(100.0), None, Some(99.0)])).unwrap();
        assert_eq!(r.returns[0], vec![None, None]);
        assert_eq!(r.dates.len(), 2);
    }

    #[test]
    fn nonpositive_price_is_domain_error() {
        let err = compute_log_returns(&single(vec![Some(100.0), Some(-1.0)])).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn returns_round_trip_prices() {
        let prices = [12.5, 13.1, 12.9, 14.2, 14.0, 15.5];
        let r = compute_log_returns(&single(prices.iter().map(|&p| Some(p)).collect())).unwrap();
        let mut p = prices[0];
        for (k, v) in r.returns[0].iter().enumerate() {
            p *= (v.unwrap() / 100.0).exp();
            assert!((p / prices[k + 1] - 1.0).abs() < 1e-12);
        }
    }

    fn return_panel(cols: Vec<Vec<Option<f64>>>) -> ReturnPanel {
        let t = cols[0].len();
        let dates = (0..t).map(|i| d("2020-01-01") + chrono::Days::new(i as u64)).collect();
        let assets = (0..cols.len()).map(|j| AssetMeta::bare(format!("A{j}"), t)).collect();
        ReturnPanel {
            dates,
            zero_filled: vec![vec![false; t]; cols.len()],
            returns: cols,
            assets,
            units: ReturnUnits::Percent,
        }
    }

    fn with_nonzero(count: usize, t: usize) -> Vec<Option<f64>> {
        (0..t).map(|i| if i < count { Some(1.0) } else { None }).collect()
    }

    #[test]
    fn liquidity_filter_threshold_is_strict() {
        let p = return_panel(vec![
            with_nonzero(4, 10),
            with_nonzero(2, 10),
            with_nonzero(3, 10),
            vec![Some(0.0); 10],
        ]);
        let f = apply_liquidity_filter(&p, 0.3).unwrap();
        assert_eq!(f.tickers(), vec!["A0"]);
        assert!(!f.has_missing());
        assert!(f.zero_filled[0][9]);
        assert!(!f.zero_filled[0][0]);
    }

    #[test]
    fn liquidity_filter_rejects_empty_result() {
        let p = return_panel(vec![vec![Some(0.0); 10]]);
        assert!(apply_liquidity_filter(&p, 0.3).is_err());
        assert!(apply_liquidity_filter(&p, 1.5).is_err());
    }

    fn with_caps(mut p: ReturnPanel, caps: Vec<Vec<Option<f64>>>, sub: Subsector) -> ReturnPanel {
        for (a, c) in p.assets.iter_mut().zip(caps) {
            a.market_cap = c;
            a.subsector = sub;
        }
        p
    }

    #[test]
    fn subsector_index_examples() {
        let p = with_caps(
            return_panel(vec![vec![Some(1.5), Some(-2.0)]]),
            vec![vec![Some(7.0), Some(9.0)]],
            Subsector::Multiline,
        );
        let idx = build_subsector_index(&p, Subsector::Multiline).unwrap();
        assert_eq!(idx.series.values, vec![1.5, -2.0]);

        let p = with_caps(
            return_panel(vec![vec![Some(2.0)], vec![Some(0.0)]]),
            vec![vec![Some(5.0)], vec![Some(5.0)]],
            Subsector::Reinsurance,
        );
        let idx = build_subsector_index(&p, Subsector::Reinsurance).unwrap();
        assert_eq!(idx.series.values, vec![1.0]);

        let p = with_caps(
            return_panel(vec![vec![Some(4.0)], vec![Some(0.0)]]),
            vec![vec![Some(3.0)], vec![Some(1.0)]],
            Subsector::LifeHealth,
        );
        let idx = build_subsector_index(&p, Subsector::LifeHealth).unwrap();
        // 3/4 * 4 + 1/4 * 0
        assert!((idx.series.values[0] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn subsector_missing_members_renormalize() {
        let p = with_caps(
            return_panel(vec![vec![Some(4.0), None], vec![Some(2.0), Some(2.0)]]),
            vec![vec![Some(1.0), Some(1.0)], vec![Some(1.0), None]],
            Subsector::Multiline,
        );
        let idx = build_subsector_index(&p, Subsector::Multiline).unwrap();
        assert_eq!(idx.series.values[0], 3.0);
        assert_eq!(idx.series.values[1], 0.0);
        assert_eq!(idx.warnings.len(), 1);
        let w = subsector_weights(&p, Subsector::Multiline);
        assert_eq!(w[0], vec![0.5, 0.5]);
        assert_eq!(w[1], vec![0.0, 0.0]);
        assert!(build_subsector_index(&p, Subsector::Reinsurance).is_err());
    }

    #[test]
    fn weekly_aggregation_sums_blocks() {
        let p = return_panel(vec![(1..=10).map(|x| Some(x as f64)).collect()]);
        let w = p.aggregate(5).unwrap();
        assert_eq!(w.returns[0], vec![Some(15.0), Some(40.0)]);
        assert_eq!(w.dates, vec![p.dates[4], p.dates[9]]);
    }

    #[test]
    fn metadata_parses_abbreviations() {
        let csv = "ticker,name,country,subsector\nAGN,Aegon,NL,Mul.Lin.\nHNR,Hannover Re,DE,Reins.\n";
        let m = read_metadata_csv(csv.as_bytes()).unwrap();
        assert_eq!(m[0].subsector, Subsector::Multiline);
        assert_eq!(m[1].subsector, Subsector::Reinsurance);
        let bad = "ticker,name,country,subsector\nX,Y,Z,Banks\n";
        assert!(read_metadata_csv(bad.as_bytes()).is_err());
    }
}
