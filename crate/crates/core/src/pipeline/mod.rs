//! End-to-end orchestration behind the command-line verbs.
//!
//! Every stage reads its inputs from the previous stage's files under
//! `<out>/<tier>/` and writes its own artifacts once:
//!
//! ```text
//! <out>/<tier>/returns.csv, assets.csv, ingest_report.json
//! <out>/<tier>/indicators/<kind>/<ticker>.csv, diagnostics.json
//! <out>/<tier>/static/<kind>.csv, <kind>_model.json
//! <out>/<tier>/rolling/<kind>.csv, <kind>_episodes.csv, <kind>_failures.json
//! <out>/<tier>/robustness/<sweep>_<kind>.csv, <sweep>_stability.csv
//! <out>/companies/network/<kind>.{graphml,dot,json}, communities.json, core.csv
//! ```
//!
//! The in-memory functions (`derive_returns`, `fit_indicators`,
//! `fit_config`, `analyze_networks`, `sweep_summaries`) carry the logic; the
//! `Pipeline` methods add file I/O.

mod config;

pub use config::{
    parse_indicator_list, EstimatorChoice, Frequency, GarchSearch, LagChoice, PipelineConfig, RiskLevels, Tier,
};

use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::gfevd::{read_spillover_csv, write_spillover_csv, SpilloverMatrix, SpilloverSummary};
use crate::indicators::{
    calibrate_cares, conditional_log_volatility, fit_caviar, read_indicator_csv, select_garch_in, CaresOptions,
    CaviarOptions, IndicatorKind, IndicatorSeries, SearchSpace,
};
use crate::network::{
    build_network, central_intersection, community_graph, export_graph, louvain, prune_edges, CommunityPartition,
    GraphFormat, NodeMeta, SpilloverNetwork,
};
use crate::panel::{
    apply_liquidity_filter, build_subsector_index, compute_log_returns, load_cap_csv, load_metadata_csv,
    load_price_csv, read_metadata_csv, read_wide_csv, AssetMeta, CapPanel, ColumnSpec, MetadataRow, PricePanel,
    ReturnPanel, ReturnUnits, Subsector,
};
use crate::rolling::{
    default_episodes, episode_averages, read_episodes, rolling_spillovers, static_spillover, Episode, Estimator,
    FitConfig, PRule, RollingConfig, RollingResult, StaticFit,
};
use crate::stats;
use crate::var::{select_lag_bic, IndicatorPanel, LassoOptions};

/// Block length of the weekly aggregation.
pub const WEEK: usize = 5;

/// Stable 64-bit FNV-1a, used to derive per-series seeds.
fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Seed for one (asset, indicator) fit; independent of processing order.
pub fn series_seed(root: u64, ticker: &str, kind: IndicatorKind) -> u64 {
    root ^ fnv1a(&format!("{ticker}/{kind}"))
}

fn file_stem(ticker: &str) -> String {
    ticker
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') { c } else { '_' })
        .collect()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(fs::File::create(path)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestReport {
    pub tier: String,
    pub n_dates: usize,
    pub kept: Vec<String>,
    pub dropped: Vec<String>,
    /// Assets with zero-filled observations and how many.
    pub zero_filled: BTreeMap<String, usize>,
    pub warnings: Vec<String>,
}

/// Returns for the requested tier: raw columns for markets and companies,
/// cap-weighted subsector indices for subsectors.
pub fn derive_returns(
    cfg: &PipelineConfig,
    prices: &PricePanel,
    caps: Option<&CapPanel>,
    meta: Option<&[MetadataRow]>,
) -> Result<(ReturnPanel, IngestReport)> {
    let mut prices = prices.clone();
    if let Some(m) = meta {
        prices = prices.with_metadata(m);
    }
    if let Some(c) = caps {
        prices = prices.with_market_caps(c);
    }
    let raw = compute_log_returns(&prices)?;
    let filtered = apply_liquidity_filter(&raw, cfg.liquidity)?;
    let kept = filtered.tickers();
    let dropped = raw.tickers().into_iter().filter(|t| !kept.contains(t)).collect();
    let zero_filled = filtered
        .assets
        .iter()
        .zip(&filtered.zero_filled)
        .map(|(a, z)| (a.ticker.clone(), z.iter().filter(|&&f| f).count()))
        .filter(|(_, c)| *c > 0)
        .collect();
    let mut warnings = Vec::new();
    let panel = match cfg.tier {
        Tier::Markets | Tier::Companies => filtered,
        Tier::Subsectors => {
            if caps.is_none() || meta.is_none() {
                return Err(Error::Config("the subsectors tier needs caps and metadata files".into()));
            }
            let mut assets = Vec::new();
            let mut returns = Vec::new();
            for s in Subsector::INSURANCE {
                if !filtered.assets.iter().any(|a| a.subsector == s) {
                    continue;
                }
                let idx = build_subsector_index(&filtered, s)?;
                for w in &idx.warnings {
                    warnings.push(format!("{s} {}: {}", w.date, w.reason));
                }
                returns.push(idx.series.values.iter().map(|v| Some(*v)).collect::<Vec<_>>());
                assets.push(AssetMeta {
                    subsector: s,
                    ..AssetMeta::bare(s.abbreviation(), filtered.dates.len())
                });
            }
            if assets.is_empty() {
                return Err(Error::Data("no insurance subsector has members".into()));
            }
            ReturnPanel {
                dates: filtered.dates.clone(),
                zero_filled: vec![vec![false; filtered.dates.len()]; assets.len()],
                returns,
                assets,
                units: ReturnUnits::Percent,
            }
        }
    };
    let panel = match cfg.frequency {
        Frequency::Daily => panel,
        Frequency::Weekly => panel.aggregate(WEEK)?,
    };
    let report = IngestReport {
        tier: cfg.tier.to_string(),
        n_dates: panel.dates.len(),
        kept,
        dropped,
        zero_filled,
        warnings,
    };
    Ok((panel, report))
}

#[derive(Debug, Clone, Serialize)]
pub struct IndicatorDiagnostic {
    pub ticker: String,
    pub kind: IndicatorKind,
    pub ok: bool,
    pub message: Option<String>,
    pub details: serde_json::Value,
}

fn fit_one(cfg: &PipelineConfig, returns: &ReturnPanel, j: usize, kind: IndicatorKind) -> Result<(IndicatorSeries, serde_json::Value)> {
    let ticker = &returns.assets[j].ticker;
    let r = returns.filled_column(j);
    let dates = &returns.dates;
    let seed = series_seed(cfg.seed, ticker, kind);
    let sign = match cfg.risk_levels {
        RiskLevels::Signed => 1.0,
        RiskLevels::Magnitude => -1.0,
    };
    let series = |values: Vec<f64>| IndicatorSeries {
        kind,
        dates: dates.clone(),
        values,
        source_ticker: ticker.clone(),
    };
    match kind {
        IndicatorKind::LogReturn => Ok((series(r), json!({}))),
        IndicatorKind::LogVol => {
            let space = match cfg.garch_search {
                GarchSearch::Full => SearchSpace::full(),
                GarchSearch::Compact => SearchSpace::compact(),
            };
            let fit = select_garch_in(&r, &space)?;
            let details = json!({
                "spec": fit.spec,
                "params": fit.params,
                "log_likelihood": fit.log_likelihood,
                "bic": fit.bic,
            });
            Ok((conditional_log_volatility(&fit, dates, ticker), details))
        }
        IndicatorKind::CAViaR => {
            let opts = CaviarOptions {
                n_starts: cfg.caviar_starts,
                n_refine: cfg.caviar_refine,
                seed,
                ..Default::default()
            };
            let fit = fit_caviar(&r, cfg.tau, &opts)?;
            let details = json!({
                "gammas": fit.gammas,
                "violation_rate": fit.violation_rate,
                "explosive": fit.explosive,
                "converged": fit.converged,
            });
            Ok((series(fit.var_series.iter().map(|v| sign * v).collect()), details))
        }
        IndicatorKind::CARES => {
            let mut opts = CaresOptions {
                patience: cfg.cares_patience,
                ..Default::default()
            };
            opts.care.n_starts = cfg.caviar_starts;
            opts.care.n_refine = cfg.caviar_refine;
            opts.care.seed = seed;
            let fit = calibrate_cares(&r, cfg.tau, &opts)?;
            let details = json!({
                "psi_star": fit.psi_star,
                "etas": fit.etas,
                "violation_rate": fit.violation_rate,
                "within_tolerance": fit.within_tolerance,
                "grid_points": fit.scanned.len(),
            });
            Ok((series(fit.es_series.iter().map(|v| sign * v).collect()), details))
        }
    }
}

/// Fit every requested indicator for every asset. Individual failures are
/// reported; a kind with no successful fit at all is an error.
pub fn fit_indicators(cfg: &PipelineConfig, returns: &ReturnPanel) -> Result<(Vec<IndicatorSeries>, Vec<IndicatorDiagnostic>)> {
    let jobs: Vec<(usize, IndicatorKind)> = cfg
        .indicators
        .iter()
        .flat_map(|&k| (0..returns.n_assets()).map(move |j| (j, k)))
        .collect();
    let results: Vec<Result<(IndicatorSeries, serde_json::Value)>> =
        jobs.par_iter().map(|&(j, k)| fit_one(cfg, returns, j, k)).collect();
    let mut series = Vec::new();
    let mut diagnostics = Vec::new();
    for (&(j, kind), res) in jobs.iter().zip(results) {
        let ticker = returns.assets[j].ticker.clone();
        match res {
            Ok((s, details)) => {
                series.push(s);
                diagnostics.push(IndicatorDiagnostic {
                    ticker,
                    kind,
                    ok: true,
                    message: None,
                    details,
                });
            }
            Err(e) => diagnostics.push(IndicatorDiagnostic {
                ticker,
                kind,
                ok: false,
                message: Some(e.to_string()),
                details: json!({}),
            }),
        }
    }
    for &kind in &cfg.indicators {
        if !series.iter().any(|s| s.kind == kind) {
            let first = diagnostics
                .iter()
                .find(|d| d.kind == kind && !d.ok)
                .and_then(|d| d.message.clone())
                .unwrap_or_default();
            return Err(Error::Estimation(format!("indicator {kind} failed for every asset: {first}")));
        }
    }
    Ok((series, diagnostics))
}

/// Estimator and lag rule for a panel of `n` variables.
pub fn fit_config(cfg: &PipelineConfig, panel: &IndicatorPanel) -> Result<FitConfig> {
    let n = panel.n_vars();
    let estimator = match cfg.estimator {
        EstimatorChoice::Ols => Estimator::Ols,
        EstimatorChoice::PostLasso => Estimator::PostLasso,
        EstimatorChoice::Auto if n <= cfg.ols_max_n => Estimator::Ols,
        EstimatorChoice::Auto => Estimator::PostLasso,
    };
    let p_rule = match cfg.p {
        LagChoice::Fixed(p) => PRule::Fixed(p),
        LagChoice::PerWindow => PRule::BicPerWindow(cfg.p_max),
        LagChoice::Auto => PRule::Fixed(full_sample_lag(panel, cfg.p_max)?),
    };
    Ok(FitConfig {
        h: cfg.h,
        p_rule,
        estimator,
        lasso: LassoOptions {
            folds: cfg.cv_folds,
            standardize: cfg.lasso_standardize,
            ..Default::default()
        },
        convention: cfg.horizon_convention,
    })
}

/// BIC order over the orders an unrestricted fit can support; 1 when even a
/// first-order OLS fit is infeasible.
fn full_sample_lag(panel: &IndicatorPanel, p_max: usize) -> Result<usize> {
    let (t, n) = (panel.n_obs(), panel.n_vars());
    let feasible = (1..=p_max).rev().find(|&p| t > p && t - p > n * p + 1 + p_max);
    match feasible {
        Some(p) => select_lag_bic(panel, p),
        None => Ok(1),
    }
}

fn panel_for(series: &[IndicatorSeries], kind: IndicatorKind) -> Result<IndicatorPanel> {
    let chosen: Vec<IndicatorSeries> = series.iter().filter(|s| s.kind == kind).cloned().collect();
    if chosen.len() < 2 {
        return Err(Error::Data(format!("indicator {kind} is available for fewer than two series")));
    }
    IndicatorPanel::from_series(&chosen)
}

#[derive(Debug, Clone)]
pub struct NetworkReport {
    pub networks: Vec<(IndicatorKind, SpilloverNetwork)>,
    pub partitions: Vec<(IndicatorKind, CommunityPartition)>,
    /// Unpruned summaries with the matrix labels they align with.
    pub summaries: Vec<(IndicatorKind, Vec<String>, SpilloverSummary)>,
    pub core: Vec<String>,
}

/// Pruned directed networks, Louvain partitions and the central
/// intersection for a set of per-indicator matrices.
pub fn analyze_networks(cfg: &PipelineConfig, matrices: &[(IndicatorKind, SpilloverMatrix)], meta: &[NodeMeta]) -> Result<NetworkReport> {
    let mut report = NetworkReport {
        networks: Vec::new(),
        partitions: Vec::new(),
        summaries: Vec::new(),
        core: Vec::new(),
    };
    for (kind, m) in matrices {
        let directed = build_network(m, meta).map_err(|e| e.context(&format!("{kind} network")))?;
        let pruned = prune_edges(&directed, cfg.prune_quantile);
        let partition = louvain(&community_graph(&directed, cfg.prune_quantile, cfg.prune_order));
        report.summaries.push((*kind, m.labels.clone(), crate::gfevd::summarize(m)));
        report.networks.push((*kind, pruned));
        report.partitions.push((*kind, partition));
    }
    let parts: Vec<CommunityPartition> = report.partitions.iter().map(|(_, p)| p.clone()).collect();
    report.core = central_intersection(&parts);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    H(Vec<usize>),
    P(Vec<usize>),
    Frequency,
}

impl Sweep {
    pub fn name(&self) -> &'static str {
        match self {
            Sweep::H(_) => "h",
            Sweep::P(_) => "p",
            Sweep::Frequency => "frequency",
        }
    }
}

/// One column of a robustness comparison.
#[derive(Debug, Clone)]
pub struct SweepColumn {
    pub label: String,
    pub labels: Vec<String>,
    pub summary: SpilloverSummary,
}

/// Static summaries of one panel across `h` or `p` values.
pub fn sweep_summaries(cfg: &PipelineConfig, panel: &IndicatorPanel, sweep: &Sweep) -> Result<Vec<SweepColumn>> {
    let base = fit_config(cfg, panel)?;
    let configs: Vec<(String, FitConfig)> = match sweep {
        Sweep::H(hs) => hs.iter().map(|&h| (format!("h{h}"), FitConfig { h, ..base.clone() })).collect(),
        Sweep::P(ps) => ps
            .iter()
            .map(|&p| (format!("p{p}"), FitConfig { p_rule: PRule::Fixed(p), ..base.clone() }))
            .collect(),
        Sweep::Frequency => return Err(Error::Config("frequency sweeps need the returns panel".into())),
    };
    configs
        .into_iter()
        .map(|(label, fc)| {
            let fit = static_spillover(panel, &fc).map_err(|e| e.context(&label))?;
            Ok(SweepColumn {
                label,
                labels: panel.labels.clone(),
                summary: fit.summary,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityRow {
    pub indicator: IndicatorKind,
    pub baseline: String,
    pub value: String,
    /// Rank correlation of `to_others` over the common tickers.
    pub spearman_to: f64,
    pub max_abs_diff_to: f64,
}

fn stability(kind: IndicatorKind, cols: &[SweepColumn]) -> Vec<StabilityRow> {
    let Some(base) = cols.first() else { return Vec::new() };
    cols.iter()
        .skip(1)
        .map(|c| {
            let common: Vec<(f64, f64)> = base
                .labels
                .iter()
                .enumerate()
                .filter_map(|(i, l)| c.labels.iter().position(|x| x == l).map(|k| (base.summary.to_others[i], c.summary.to_others[k])))
                .collect();
            let (a, b): (Vec<f64>, Vec<f64>) = common.into_iter().unzip();
            StabilityRow {
                indicator: kind,
                baseline: base.label.clone(),
                value: c.label.clone(),
                spearman_to: stats::spearman(&a, &b),
                max_abs_diff_to: a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max),
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct RobustnessReport {
    pub sweep: &'static str,
    pub columns: Vec<(IndicatorKind, Vec<SweepColumn>)>,
    pub stability: Vec<StabilityRow>,
}

/// Stage runner bound to one configuration.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub cfg: PipelineConfig,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig) -> Self {
        Pipeline { cfg }
    }

    pub fn tier_dir(&self, tier: Tier) -> PathBuf {
        self.cfg.out.join(tier.as_str())
    }

    fn with_tier(&self, tier: Tier) -> PipelineConfig {
        PipelineConfig {
            tier,
            ..self.cfg.clone()
        }
    }

    fn column_spec(&self) -> ColumnSpec {
        ColumnSpec {
            date_column: self.cfg.date_column.clone(),
            delimiter: self.cfg.delimiter,
        }
    }

    fn require<'a>(&self, p: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
        p.as_deref().ok_or_else(|| Error::Config(format!("config key '{key}' is required for this command")))
    }

    fn read_inputs(&self) -> Result<(PricePanel, Option<CapPanel>, Option<Vec<MetadataRow>>)> {
        let spec = self.column_spec();
        let prices = load_price_csv(self.require(&self.cfg.prices, "prices")?, &spec)?;
        let caps = self.cfg.caps.as_ref().map(|p| load_cap_csv(p, &spec)).transpose()?;
        let meta = self.cfg.metadata.as_ref().map(load_metadata_csv).transpose()?;
        Ok((prices, caps, meta))
    }

    /// Daily returns of a tier straight from the raw inputs.
    fn daily_returns(&self, tier: Tier) -> Result<ReturnPanel> {
        let (prices, caps, meta) = self.read_inputs()?;
        let cfg = PipelineConfig {
            frequency: Frequency::Daily,
            ..self.with_tier(tier)
        };
        Ok(derive_returns(&cfg, &prices, caps.as_ref(), meta.as_deref())?.0)
    }

    pub fn ingest(&self, tier: Tier) -> Result<IngestReport> {
        let (prices, caps, meta) = self.read_inputs()?;
        let (panel, report) = derive_returns(&self.with_tier(tier), &prices, caps.as_ref(), meta.as_deref())?;
        let dir = self.tier_dir(tier);
        fs::create_dir_all(&dir)?;
        write_returns_csv(&panel, create(&dir.join("returns.csv"))?)?;
        write_assets_csv(&panel.assets, create(&dir.join("assets.csv"))?)?;
        write_json(&dir.join("ingest_report.json"), &report)?;
        Ok(report)
    }

    pub fn load_returns(&self, tier: Tier) -> Result<ReturnPanel> {
        let dir = self.tier_dir(tier);
        let path = dir.join("returns.csv");
        if !path.exists() {
            return Err(Error::Data(format!("{} not found; run `ingest` first", path.display())));
        }
        let (dates, tickers, values) = read_wide_csv(fs::File::open(&path)?, &ColumnSpec::default())?;
        let meta = read_metadata_csv(fs::File::open(dir.join("assets.csv"))?)?;
        let t = dates.len();
        let assets = tickers
            .iter()
            .map(|tk| {
                let m = meta.iter().find(|m| &m.ticker == tk);
                AssetMeta {
                    name: m.map_or_else(|| tk.clone(), |m| m.name.clone()),
                    country: m.map(|m| m.country.clone()).unwrap_or_default(),
                    subsector: m.map_or(Subsector::Other, |m| m.subsector),
                    ..AssetMeta::bare(tk.clone(), t)
                }
            })
            .collect::<Vec<_>>();
        Ok(ReturnPanel {
            zero_filled: vec![vec![false; t]; assets.len()],
            dates,
            returns: values,
            assets,
            units: ReturnUnits::Percent,
        })
    }

    pub fn indicators(&self, tier: Tier) -> Result<Vec<IndicatorDiagnostic>> {
        let returns = self.load_returns(tier)?;
        let (series, diagnostics) = fit_indicators(&self.with_tier(tier), &returns)?;
        let dir = self.tier_dir(tier).join("indicators");
        for s in &series {
            let path = dir.join(s.kind.as_str()).join(format!("{}.csv", file_stem(&s.source_ticker)));
            s.write_csv(create(&path)?)?;
        }
        write_json(&dir.join("diagnostics.json"), &diagnostics)?;
        Ok(diagnostics)
    }

    /// Indicator series of one kind in asset order; assets whose fit failed
    /// are absent.
    pub fn load_indicators(&self, tier: Tier, kind: IndicatorKind) -> Result<Vec<IndicatorSeries>> {
        let returns = self.load_returns(tier)?;
        let dir = self.tier_dir(tier).join("indicators").join(kind.as_str());
        if !dir.exists() {
            return Err(Error::Data(format!("{} not found; run `indicators` first", dir.display())));
        }
        let mut out = Vec::new();
        for t in returns.tickers() {
            let path = dir.join(format!("{}.csv", file_stem(&t)));
            if path.exists() {
                out.extend(read_indicator_csv(fs::File::open(path)?)?);
            }
        }
        Ok(out)
    }

    fn indicator_panel(&self, tier: Tier, kind: IndicatorKind) -> Result<IndicatorPanel> {
        panel_for(&self.load_indicators(tier, kind)?, kind)
    }

    pub fn static_tables(&self, tier: Tier) -> Result<Vec<(IndicatorKind, StaticFit)>> {
        let dir = self.tier_dir(tier).join("static");
        let mut out = Vec::new();
        for &kind in &self.cfg.indicators {
            let ctx = format!("{tier}/{kind}");
            let panel = self.indicator_panel(tier, kind).map_err(|e| e.context(&ctx))?;
            let fc = fit_config(&self.cfg, &panel).map_err(|e| e.context(&ctx))?;
            let fit = static_spillover(&panel, &fc).map_err(|e| e.context(&ctx))?;
            write_spillover_csv(&fit.matrix, &fit.summary, create(&dir.join(format!("{kind}.csv")))?)?;
            write_json(&dir.join(format!("{kind}_model.json")), &fit.model.dump())?;
            out.push((kind, fit));
        }
        Ok(out)
    }

    fn episodes(&self) -> Result<Vec<Episode>> {
        match &self.cfg.episodes {
            Some(p) => read_episodes(fs::File::open(p)?),
            None => Ok(default_episodes()),
        }
    }

    pub fn rolling(&self, tier: Tier) -> Result<Vec<(IndicatorKind, RollingResult)>> {
        let dir = self.tier_dir(tier).join("rolling");
        let episodes = self.episodes()?;
        let mut out = Vec::new();
        for &kind in &self.cfg.indicators {
            let ctx = format!("{tier}/{kind}");
            let panel = self.indicator_panel(tier, kind).map_err(|e| e.context(&ctx))?;
            if panel.n_obs() < self.cfg.window {
                return Err(Error::Data(format!(
                    "{ctx}: window {} exceeds the {} available observations",
                    self.cfg.window,
                    panel.n_obs()
                )));
            }
            let rc = RollingConfig {
                window: self.cfg.window,
                step: self.cfg.step,
                fit: fit_config(&self.cfg, &panel).map_err(|e| e.context(&ctx))?,
            };
            rc.validate(panel.n_vars())?;
            let r = rolling_spillovers(&panel, &rc).map_err(|e| e.context(&ctx))?;
            r.write_csv(create(&dir.join(format!("{kind}.csv")))?)?;
            if !r.failures.is_empty() {
                write_json(&dir.join(format!("{kind}_failures.json")), &r.failures)?;
            }
            let in_range = episodes_in_range(&episodes, &r);
            if !in_range.is_empty() {
                let table = episode_averages(&r, &in_range).map_err(|e| e.context(&ctx))?;
                table.write_csv(create(&dir.join(format!("{kind}_episodes.csv")))?)?;
            }
            out.push((kind, r));
        }
        Ok(out)
    }

    pub fn network(&self) -> Result<NetworkReport> {
        let tier = Tier::Companies;
        let static_dir = self.tier_dir(tier).join("static");
        let missing: Vec<&str> = IndicatorKind::ALL
            .iter()
            .filter(|k| !static_dir.join(format!("{k}.csv")).exists())
            .map(|k| k.as_str())
            .collect();
        if !missing.is_empty() {
            return Err(Error::Data(format!(
                "network analysis needs company-tier tables for all four indicators; missing: {}",
                missing.join(", ")
            )));
        }
        let mut matrices = Vec::new();
        for kind in IndicatorKind::ALL {
            let t = read_spillover_csv(fs::File::open(static_dir.join(format!("{kind}.csv")))?)?;
            matrices.push((kind, SpilloverMatrix::from_normalized(t.labels, t.theta_norm, self.cfg.h, 1e-6)?));
        }
        let assets = read_metadata_csv(fs::File::open(self.tier_dir(tier).join("assets.csv"))?)?;
        let meta: Vec<NodeMeta> = matrices[0]
            .1
            .labels
            .iter()
            .map(|l| match assets.iter().find(|a| &a.ticker == l) {
                Some(a) => NodeMeta {
                    ticker: l.clone(),
                    subsector: a.subsector.to_string(),
                    country: a.country.clone(),
                },
                None => NodeMeta::bare(l.clone()),
            })
            .collect();
        let report = analyze_networks(&self.cfg, &matrices, &meta)?;
        self.write_network(&report, &meta)?;
        Ok(report)
    }

    fn write_network(&self, report: &NetworkReport, meta: &[NodeMeta]) -> Result<()> {
        let dir = self.tier_dir(Tier::Companies).join("network");
        fs::create_dir_all(&dir)?;
        for (kind, net) in &report.networks {
            for f in [GraphFormat::GraphMl, GraphFormat::Dot, GraphFormat::Json] {
                export_graph(net, f, dir.join(format!("{kind}.{}", f.extension())))?;
            }
        }
        let communities: Vec<serde_json::Value> = report
            .partitions
            .iter()
            .map(|(kind, p)| {
                let groups: Vec<Vec<&str>> = (0..p.sizes.len()).map(|c| p.members(c)).collect();
                json!({
                    "indicator": kind,
                    "modularity": p.modularity,
                    "communities": groups,
                    "largest": p.largest_community().map(|c| p.members(c)),
                })
            })
            .collect();
        write_json(&dir.join("communities.json"), &json!({ "networks": communities, "core": report.core }))?;

        let mut wr = csv::Writer::from_writer(create(&dir.join("core.csv"))?);
        let mut header = vec!["ticker".to_string(), "subsector".into(), "country".into()];
        for (kind, _, _) in &report.summaries {
            header.extend(["to", "from", "net"].iter().map(|s| format!("{kind}_{s}")));
        }
        wr.write_record(&header)?;
        for t in &report.core {
            let m = meta.iter().find(|m| &m.ticker == t);
            let mut row = vec![
                t.clone(),
                m.map(|m| m.subsector.clone()).unwrap_or_default(),
                m.map(|m| m.country.clone()).unwrap_or_default(),
            ];
            for (_, labels, s) in &report.summaries {
                match labels.iter().position(|x| x == t) {
                    Some(i) => row.extend([s.to_others[i], s.from_others[i], s.net[i]].map(|v| v.to_string())),
                    None => row.extend(["NA"; 3].map(String::from)),
                }
            }
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn robustness(&self, tier: Tier, sweep: &Sweep) -> Result<RobustnessReport> {
        let mut columns = Vec::new();
        match sweep {
            Sweep::H(_) | Sweep::P(_) => {
                for &kind in &self.cfg.indicators {
                    let ctx = format!("{tier}/{kind}");
                    let panel = self.indicator_panel(tier, kind).map_err(|e| e.context(&ctx))?;
                    columns.push((kind, sweep_summaries(&self.cfg, &panel, sweep).map_err(|e| e.context(&ctx))?));
                }
            }
            Sweep::Frequency => {
                if self.cfg.frequency == Frequency::Weekly {
                    return Err(Error::Config("frequency sweeps start from daily data; set frequency = daily".into()));
                }
                let daily = self.daily_returns(tier)?;
                let weekly = daily.aggregate(WEEK)?;
                let cfg = self.with_tier(tier);
                let (ds, _) = fit_indicators(&cfg, &daily)?;
                let (ws, _) = fit_indicators(&cfg, &weekly)?;
                for &kind in &self.cfg.indicators {
                    let ctx = format!("{tier}/{kind}");
                    let mut cols = Vec::new();
                    for (label, series) in [("daily", &ds), ("weekly", &ws)] {
                        let panel = panel_for(series, kind).map_err(|e| e.context(&ctx))?;
                        let fc = fit_config(&cfg, &panel).map_err(|e| e.context(&ctx))?;
                        let fit = static_spillover(&panel, &fc).map_err(|e| e.context(&format!("{ctx} {label}")))?;
                        cols.push(SweepColumn {
                            label: label.into(),
                            labels: panel.labels.clone(),
                            summary: fit.summary,
                        });
                    }
                    columns.push((kind, cols));
                }
            }
        }
        let stability_rows: Vec<StabilityRow> = columns.iter().flat_map(|(k, c)| stability(*k, c)).collect();
        let report = RobustnessReport {
            sweep: sweep.name(),
            columns,
            stability: stability_rows,
        };
        self.write_robustness(tier, &report)?;
        Ok(report)
    }

    fn write_robustness(&self, tier: Tier, report: &RobustnessReport) -> Result<()> {
        let dir = self.tier_dir(tier).join("robustness");
        for (kind, cols) in &report.columns {
            let mut wr = csv::Writer::from_writer(create(&dir.join(format!("{}_{kind}.csv", report.sweep)))?);
            let mut header = vec!["ticker".to_string()];
            for c in cols {
                header.push(format!("to_{}", c.label));
                header.push(format!("net_{}", c.label));
            }
            wr.write_record(&header)?;
            for t in &cols[0].labels {
                let mut row = vec![t.clone()];
                for c in cols {
                    match c.labels.iter().position(|x| x == t) {
                        Some(k) => {
                            row.push(c.summary.to_others[k].to_string());
                            row.push(c.summary.net[k].to_string());
                        }
                        None => row.extend(["NA".to_string(), "NA".to_string()]),
                    }
                }
                wr.write_record(&row)?;
            }
            wr.flush()?;
        }
        let mut wr = csv::Writer::from_writer(create(&dir.join(format!("{}_stability.csv", report.sweep)))?);
        for row in &report.stability {
            wr.serialize(row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Episodes overlapping the span of window end dates.
fn episodes_in_range(episodes: &[Episode], r: &RollingResult) -> Vec<Episode> {
    let (Some(first), Some(last)) = (r.window_end_dates.first(), r.window_end_dates.last()) else {
        return Vec::new();
    };
    episodes.iter().filter(|e| e.end >= *first && e.start <= *last).cloned().collect()
}

pub fn write_returns_csv<W: std::io::Write>(panel: &ReturnPanel, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["date".to_string()];
    header.extend(panel.tickers());
    wr.write_record(&header)?;
    for (t, d) in panel.dates.iter().enumerate() {
        let mut row = vec![d.format("%Y-%m-%d").to_string()];
        row.extend(panel.returns.iter().map(|c| c[t].map_or_else(String::new, |v| format!("{v:?}"))));
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_assets_csv<W: std::io::Write>(assets: &[AssetMeta], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["ticker", "name", "country", "subsector"])?;
    for a in assets {
        wr.write_record([a.ticker.as_str(), a.name.as_str(), a.country.as_str(), a.subsector.abbreviation()])?;
    }
    wr.flush()?;
    Ok(())
}
