//! Rolling-window spillover indices and episode averages.
//!
//! Window `w` covers rows `w * step .. w * step + window`. Every window is
//! estimated exactly as a static fit on that slice, so a rolling output can
//! always be reproduced by [`static_spillover`] on the same rows.

use std::io::{Read, Write};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gfevd::{compute_gfevd_with, summarize, HorizonConvention, SpilloverMatrix, SpilloverSummary};
use crate::var::{estimate_var_ols, estimate_var_post_lasso, select_lag_bic, IndicatorPanel, LassoOptions, VarModel};

/// Share of failed windows above which the whole run is an error.
pub const MAX_FAILURE_SHARE: f64 = 0.20;

/// Default crisis episodes; the residual "Normal times" row is computed.
pub const DEFAULT_EPISODES_CSV: &str = include_str!("../data/episodes.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PRule {
    Fixed(usize),
    /// BIC over `1..=p_max`, chosen separately in each window.
    BicPerWindow(usize),
}

impl PRule {
    fn max_order(self) -> usize {
        match self {
            PRule::Fixed(p) | PRule::BicPerWindow(p) => p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Estimator {
    Ols,
    PostLasso,
}

/// How one VAR/decomposition is fitted; shared by static and rolling runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitConfig {
    pub h: usize,
    pub p_rule: PRule,
    pub estimator: Estimator,
    pub lasso: LassoOptions,
    pub convention: HorizonConvention,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            h: 10,
            p_rule: PRule::Fixed(1),
            estimator: Estimator::Ols,
            lasso: LassoOptions::default(),
            convention: HorizonConvention::Inclusive,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RollingConfig {
    pub window: usize,
    pub step: usize,
    pub fit: FitConfig,
}

impl Default for RollingConfig {
    fn default() -> Self {
        RollingConfig {
            window: 250,
            step: 1,
            fit: FitConfig::default(),
        }
    }
}

impl RollingConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.step == 0 {
            return Err(Error::Config("step must be at least 1".into()));
        }
        let p = self.fit.p_rule.max_order();
        if p == 0 {
            return Err(Error::Config("lag order must be at least 1".into()));
        }
        if self.window <= n * p + 10 {
            return Err(Error::Config(format!(
                "window {} too short for {n} variables at lag {p} (needs more than {})",
                self.window,
                n * p + 10
            )));
        }
        Ok(())
    }

    pub fn window_count(&self, t: usize) -> usize {
        if t < self.window || self.step == 0 {
            0
        } else {
            (t - self.window) / self.step + 1
        }
    }
}

#[derive(Debug, Clone)]
pub struct StaticFit {
    pub p: usize,
    pub model: VarModel,
    pub matrix: SpilloverMatrix,
    pub summary: SpilloverSummary,
}

/// One VAR fit and decomposition on the whole panel.
pub fn static_spillover(panel: &IndicatorPanel, cfg: &FitConfig) -> Result<StaticFit> {
    let p = match cfg.p_rule {
        PRule::Fixed(p) => p,
        PRule::BicPerWindow(p_max) => select_lag_bic(panel, p_max)?,
    };
    let model = match cfg.estimator {
        Estimator::Ols => estimate_var_ols(panel, p)?,
        Estimator::PostLasso => estimate_var_post_lasso(panel, p, &cfg.lasso)?,
    };
    let matrix = compute_gfevd_with(&model, cfg.h, cfg.convention)?;
    let summary = summarize(&matrix);
    Ok(StaticFit {
        p,
        model,
        matrix,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowFailure {
    pub window: usize,
    pub end_row: usize,
    pub message: String,
}

/// Per-window outputs; `None` marks a failed window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollingResult {
    pub labels: Vec<String>,
    /// Last row of each window in the input panel.
    pub window_end_rows: Vec<usize>,
    /// Empty when the input panel carries no dates.
    pub window_end_dates: Vec<NaiveDate>,
    pub total_series: Vec<Option<f64>>,
    pub to_others_series: Vec<Option<Vec<f64>>>,
    pub from_others_series: Vec<Option<Vec<f64>>>,
    pub failures: Vec<WindowFailure>,
}

impl RollingResult {
    pub fn len(&self) -> usize {
        self.window_end_rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window_end_rows.is_empty()
    }

    /// Rows `window, total, <label>_to, <label>_from, ...`; failed windows
    /// are written as `NA`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["window_end".to_string(), "total".to_string()];
        for l in &self.labels {
            header.push(format!("{l}_to"));
            header.push(format!("{l}_from"));
        }
        wr.write_record(&header)?;
        for k in 0..self.len() {
            let mut row = vec![self.end_label(k), fmt_opt(self.total_series[k])];
            for i in 0..self.labels.len() {
                row.push(fmt_opt(self.to_others_series[k].as_ref().map(|v| v[i])));
                row.push(fmt_opt(self.from_others_series[k].as_ref().map(|v| v[i])));
            }
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    fn end_label(&self, k: usize) -> String {
        match self.window_end_dates.get(k) {
            Some(d) => d.format("%Y-%m-%d").to_string(),
            None => self.window_end_rows[k].to_string(),
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

pub fn rolling_spillovers(panel: &IndicatorPanel, cfg: &RollingConfig) -> Result<RollingResult> {
    cfg.validate(panel.n_vars())?;
    let t = panel.n_obs();
    if t < cfg.window {
        return Err(Error::Data(format!("window {} exceeds the {t} available observations", cfg.window)));
    }
    let count = cfg.window_count(t);
    let fits: Vec<Result<StaticFit>> = (0..count)
        .into_par_iter()
        .map(|w| static_spillover(&panel.slice(w * cfg.step, cfg.window), &cfg.fit))
        .collect();

    let mut out = RollingResult {
        labels: panel.labels.clone(),
        window_end_rows: Vec::with_capacity(count),
        window_end_dates: Vec::new(),
        total_series: Vec::with_capacity(count),
        to_others_series: Vec::with_capacity(count),
        from_others_series: Vec::with_capacity(count),
        failures: Vec::new(),
    };
    for (w, fit) in fits.into_iter().enumerate() {
        let end = w * cfg.step + cfg.window - 1;
        out.window_end_rows.push(end);
        if !panel.dates.is_empty() {
            out.window_end_dates.push(panel.dates[end]);
        }
        match fit {
            Ok(f) => {
                out.total_series.push(Some(f.summary.total));
                out.to_others_series.push(Some(f.summary.to_others));
                out.from_others_series.push(Some(f.summary.from_others));
            }
            Err(e) => {
                out.total_series.push(None);
                out.to_others_series.push(None);
                out.from_others_series.push(None);
                out.failures.push(WindowFailure {
                    window: w,
                    end_row: end,
                    message: e.to_string(),
                });
            }
        }
    }
    if out.failures.len() as f64 > MAX_FAILURE_SHARE * count as f64 {
        return Err(Error::Estimation(format!(
            "{} of {count} rolling windows failed; first failure: {}",
            out.failures.len(),
            out.failures[0].message
        )));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Episode {
    pub name: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

fn parse_episode_date(s: &str) -> Option<NaiveDate> {
    crate::panel::parse_date(s).or_else(|| NaiveDate::parse_from_str(s.trim(), "%d/%m/%Y").ok())
}

/// `name,start,end` with ISO or `dd/mm/yyyy` dates.
pub fn read_episodes<R: Read>(r: R) -> Result<Vec<Episode>> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let date = |col: usize, name: &str| {
            parse_episode_date(rec.get(col).unwrap_or("")).ok_or_else(|| Error::Ingest {
                row,
                column: name.into(),
                message: "unparseable date".into(),
            })
        };
        let ep = Episode {
            name: rec.get(0).unwrap_or("").to_string(),
            start: date(1, "start")?,
            end: date(2, "end")?,
        };
        if ep.end < ep.start {
            return Err(Error::Ingest {
                row,
                column: "end".into(),
                message: format!("episode {} ends before it starts", ep.name),
            });
        }
        out.push(ep);
    }
    Ok(out)
}

pub fn default_episodes() -> Vec<Episode> {
    read_episodes(DEFAULT_EPISODES_CSV.as_bytes()).expect("bundled episode file parses")
}

pub const NORMAL_TIMES: &str = "Normal times";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub name: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
    /// Windows whose end date falls in the episode.
    pub days: usize,
    /// Means over the non-missing windows; `None` if all are missing.
    pub mean_total: Option<f64>,
    pub mean_to_others: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTable {
    pub labels: Vec<String>,
    /// Listed episodes, then the residual normal-times row.
    pub rows: Vec<EpisodeRow>,
}

impl EpisodeTable {
    /// `period,start,end,days,total,<label>_to...`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header: Vec<String> = ["period", "start", "end", "days", "total"].iter().map(|s| s.to_string()).collect();
        header.extend(self.labels.iter().map(|l| format!("{l}_to")));
        wr.write_record(&header)?;
        for r in &self.rows {
            let mut row = vec![
                r.name.clone(),
                r.start.format("%Y-%m-%d").to_string(),
                r.end.format("%Y-%m-%d").to_string(),
                r.days.to_string(),
                fmt_opt(r.mean_total),
            ];
            for i in 0..self.labels.len() {
                row.push(fmt_opt(r.mean_to_others.as_ref().map(|v| v[i])));
            }
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn episode_row(r: &RollingResult, name: &str, start: NaiveDate, end: NaiveDate, members: &[usize]) -> EpisodeRow {
    let n = r.labels.len();
    let ok: Vec<usize> = members.iter().copied().filter(|&k| r.total_series[k].is_some()).collect();
    let (mean_total, mean_to) = if ok.is_empty() {
        (None, None)
    } else {
        let m = ok.len() as f64;
        let total = ok.iter().map(|&k| r.total_series[k].unwrap()).sum::<f64>() / m;
        let mut to = vec![0.0; n];
        for &k in &ok {
            for (acc, v) in to.iter_mut().zip(r.to_others_series[k].as_ref().unwrap()) {
                *acc += v;
            }
        }
        to.iter_mut().for_each(|v| *v /= m);
        (Some(total), Some(to))
    };
    EpisodeRow {
        name: name.to_string(),
        start,
        end,
        days: members.len(),
        mean_total,
        mean_to_others: mean_to,
    }
}

/// Average rolling outputs over the windows whose end date lies in each
/// episode (both bounds inclusive), plus a residual normal-times row.
pub fn episode_averages(r: &RollingResult, episodes: &[Episode]) -> Result<EpisodeTable> {
    if r.window_end_dates.len() != r.len() || r.is_empty() {
        return Err(Error::Data("episode averages need dated rolling windows".into()));
    }
    let dates = &r.window_end_dates;
    let mut claimed = vec![false; r.len()];
    let mut rows = Vec::with_capacity(episodes.len() + 1);
    for ep in episodes {
        let members: Vec<usize> = (0..r.len()).filter(|&k| dates[k] >= ep.start && dates[k] <= ep.end).collect();
        if members.is_empty() {
            return Err(Error::Data(format!("episode '{}' contains no rolling windows", ep.name)));
        }
        for &k in &members {
            claimed[k] = true;
        }
        rows.push(episode_row(r, &ep.name, ep.start, ep.end, &members));
    }
    let rest: Vec<usize> = (0..r.len()).filter(|&k| !claimed[k]).collect();
    rows.push(episode_row(r, NORMAL_TIMES, dates[0], dates[r.len() - 1], &rest));
    Ok(EpisodeTable {
        labels: r.labels.clone(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate;
    use nalgebra::DVector;

    fn panel(t: usize, seed: u64) -> IndicatorPanel {
        let betas = simulate::stable_betas(3, 1, 0.6, seed);
        let x = simulate::var_process(&DVector::zeros(3), &betas, &simulate::random_covariance(3, seed), t, seed);
        let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let dates = (0..t).map(|i| start + chrono::Days::new(i as u64)).collect();
        IndicatorPanel::new(vec!["a".into(), "b".into(), "c".into()], x).unwrap().with_dates(dates).unwrap()
    }

    fn cfg(window: usize) -> RollingConfig {
        RollingConfig {
            window,
            ..Default::default()
        }
    }

    #[test]
    fn window_counts() {
        let p = panel(80, 1);
        assert_eq!(rolling_spillovers(&p, &cfg(80)).unwrap().len(), 1);
        assert_eq!(rolling_spillovers(&p, &cfg(71)).unwrap().len(), 10);
        let c = RollingConfig { step: 5, ..cfg(50) };
        assert_eq!(rolling_spillovers(&p, &c).unwrap().len(), (80 - 50) / 5 + 1);
        assert!(matches!(rolling_spillovers(&p, &cfg(81)), Err(Error::Data(_))));
    }

    #[test]
    fn window_matches_static_fit() {
        let p = panel(120, 2);
        let c = RollingConfig { step: 7, ..cfg(60) };
        let r = rolling_spillovers(&p, &c).unwrap();
        for k in [0, 3, r.len() - 1] {
            let s = static_spillover(&p.slice(k * 7, 60), &c.fit).unwrap();
            assert_eq!(r.total_series[k], Some(s.summary.total));
            assert_eq!(r.to_others_series[k].as_ref(), Some(&s.summary.to_others));
        }
    }

    #[test]
    fn short_window_rejected() {
        let p = panel(100, 3);
        assert!(matches!(rolling_spillovers(&p, &cfg(13)), Err(Error::Config(_))));
    }

    #[test]
    fn failed_windows_are_missing() {
        let mut p = panel(200, 4);
        for r in 0..100 {
            p.data[(r, 0)] = 0.0;
        }
        assert!(matches!(rolling_spillovers(&p, &cfg(30)), Err(Error::Estimation(_))));
        let mut p = panel(200, 4);
        for r in 0..30 {
            p.data[(r, 0)] = 0.0;
        }
        let c = RollingConfig { step: 1, ..cfg(30) };
        let r = rolling_spillovers(&p, &c).unwrap();
        assert_eq!(r.total_series[0], None);
        assert_eq!(r.failures[0].window, 0);
        assert!(r.total_series[r.len() - 1].is_some());
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().contains("NA"));
        assert!(text.starts_with("window_end,total,a_to,a_from"));
    }

    #[test]
    fn episode_partition() {
        let p = panel(120, 5);
        let r = rolling_spillovers(&p, &cfg(60)).unwrap();
        let d = &r.window_end_dates;
        let eps = vec![
            Episode { name: "one".into(), start: d[0], end: d[0] },
            Episode { name: "two".into(), start: d[10], end: d[20] },
        ];
        let t = episode_averages(&r, &eps).unwrap();
        assert_eq!(t.rows[0].days, 1);
        assert_eq!(t.rows[0].mean_total, r.total_series[0]);
        assert_eq!(t.rows[1].days, 11);
        assert_eq!(t.rows.iter().map(|x| x.days).sum::<usize>(), r.len());
        assert_eq!(t.rows[2].name, NORMAL_TIMES);

        let empty = vec![Episode { name: "gone".into(), start: d[0] - chrono::Days::new(30), end: d[0] - chrono::Days::new(1) }];
        match episode_averages(&r, &empty) {
            Err(Error::Data(m)) => assert!(m.contains("gone")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bundled_episodes() {
        let e = default_episodes();
        assert_eq!(e.len(), 5);
        let covid = e.iter().find(|x| x.name == "COVID-19").unwrap();
        assert_eq!(covid.start, NaiveDate::from_ymd_opt(2020, 2, 3).unwrap());
        assert_eq!(covid.end, NaiveDate::from_ymd_opt(2020, 4, 30).unwrap());
        let alt = read_episodes("name,start,end\nX,03/02/2020,30/04/2020\n".as_bytes()).unwrap();
        assert_eq!(alt[0].start, covid.start);
    }

    #[test]
    fn bic_rule_per_window() {
        let p = panel(150, 6);
        let c = RollingConfig {
            window: 100,
            step: 25,
            fit: FitConfig { p_rule: PRule::BicPerWindow(3), ..Default::default() },
        };
        let r = rolling_spillovers(&p, &c).unwrap();
        assert_eq!(r.len(), 3);
        assert!(r.failures.is_empty());
    }
}
