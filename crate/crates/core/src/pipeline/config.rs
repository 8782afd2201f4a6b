//! Flat `key = value` pipeline configuration.
//!
//! Blank lines and `#` comments are ignored; unknown keys are errors.
//! Relative paths resolve against the directory of the config file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gfevd::HorizonConvention;
use crate::indicators::IndicatorKind;
use crate::network::PruneOrder;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tier {
    Markets,
    Subsectors,
    Companies,
}

impl Tier {
    pub const ALL: [Tier; 3] = [Tier::Markets, Tier::Subsectors, Tier::Companies];

    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Markets => "markets",
            Tier::Subsectors => "subsectors",
            Tier::Companies => "companies",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "markets" => Ok(Tier::Markets),
            "subsectors" => Ok(Tier::Subsectors),
            "companies" => Ok(Tier::Companies),
            other => Err(Error::Usage(format!("unknown tier '{other}' (markets, subsectors, companies)"))),
        }
    }
}

/// How the VAR lag order is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LagChoice {
    /// Full-sample BIC over `1..=p_max`, then held fixed across windows.
    Auto,
    Fixed(usize),
    /// BIC re-run inside every rolling window.
    PerWindow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorChoice {
    /// OLS up to `ols_max_n` variables, post-LASSO above.
    Auto,
    Ols,
    PostLasso,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GarchSearch {
    Full,
    Compact,
}

/// Sign convention of VaR and ES outputs. The decomposition is unaffected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiskLevels {
    /// Return quantiles as estimated (losses are negative).
    Signed,
    /// Loss magnitudes (negated).
    Magnitude,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frequency {
    Daily,
    /// Non-overlapping 5-day sums of daily log-returns.
    Weekly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub prices: Option<PathBuf>,
    pub caps: Option<PathBuf>,
    pub metadata: Option<PathBuf>,
    pub episodes: Option<PathBuf>,
    pub out: PathBuf,
    pub tier: Tier,
    pub date_column: String,
    pub delimiter: u8,
    pub frequency: Frequency,
    pub liquidity: f64,
    pub indicators: Vec<IndicatorKind>,
    pub tau: f64,
    pub garch_search: GarchSearch,
    pub caviar_starts: usize,
    pub caviar_refine: usize,
    pub cares_patience: usize,
    pub risk_levels: RiskLevels,
    pub h: usize,
    pub horizon_convention: HorizonConvention,
    pub p: LagChoice,
    pub p_max: usize,
    pub estimator: EstimatorChoice,
    pub ols_max_n: usize,
    pub lasso_standardize: bool,
    pub cv_folds: usize,
    pub window: usize,
    pub step: usize,
    pub prune_quantile: f64,
    pub prune_order: PruneOrder,
    pub robustness_h: Vec<usize>,
    pub robustness_p: Vec<usize>,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            prices: None,
            caps: None,
            metadata: None,
            episodes: None,
            out: PathBuf::from("out"),
            tier: Tier::Subsectors,
            date_column: "date".into(),
            delimiter: b',',
            frequency: Frequency::Daily,
            liquidity: 0.30,
            indicators: IndicatorKind::ALL.to_vec(),
            tau: 0.05,
            garch_search: GarchSearch::Full,
            caviar_starts: 10_000,
            caviar_refine: 10,
            cares_patience: 100,
            risk_levels: RiskLevels::Signed,
            h: 10,
            horizon_convention: HorizonConvention::Inclusive,
            p: LagChoice::Auto,
            p_max: 5,
            estimator: EstimatorChoice::Auto,
            ols_max_n: 10,
            lasso_standardize: true,
            cv_folds: 5,
            window: 250,
            step: 1,
            prune_quantile: 0.75,
            prune_order: PruneOrder::PruneThenConvert,
            robustness_h: vec![10, 15, 20],
            robustness_p: vec![1, 2, 3],
            seed: 0,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse_num(key, s.trim())).collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got '{v}'"))),
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

pub fn parse_indicator_list(v: &str) -> Result<Vec<IndicatorKind>> {
    let mut out: Vec<IndicatorKind> = Vec::new();
    for part in v.split(',').filter(|s| !s.trim().is_empty()) {
        let k: IndicatorKind = part.parse().map_err(|_| Error::Config(format!("unknown indicator '{}'", part.trim())))?;
        if !out.contains(&k) {
            out.push(k);
        }
    }
    if out.is_empty() {
        return Err(Error::Config("indicator set is empty".into()));
    }
    out.sort();
    Ok(out)
}

impl PipelineConfig {
    /// Apply one `key = value` assignment. `base` resolves relative paths.
    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<()> {
        let v = value.trim();
        let path = |v: &str| -> Option<PathBuf> {
            if v.is_empty() {
                None
            } else {
                Some(base.join(v))
            }
        };
        match key.trim() {
            "prices" => self.prices = path(v),
            "caps" => self.caps = path(v),
            "metadata" => self.metadata = path(v),
            "episodes" => self.episodes = path(v),
            "out" => self.out = base.join(v),
            "tier" => self.tier = v.parse().map_err(|e: Error| Error::Config(e.to_string()))?,
            "date_column" => self.date_column = v.to_string(),
            "delimiter" => {
                let b = v.as_bytes();
                self.delimiter = match v {
                    "tab" | "\\t" => b'\t',
                    _ if b.len() == 1 => b[0],
                    _ => return Err(Error::Config(format!("delimiter must be one byte, got '{v}'"))),
                }
            }
            "frequency" => {
                self.frequency = match v {
                    "daily" => Frequency::Daily,
                    "weekly" => Frequency::Weekly,
                    _ => return Err(Error::Config(format!("frequency must be daily or weekly, got '{v}'"))),
                }
            }
            "liquidity" => self.liquidity = parse_num(key, v)?,
            "indicators" => self.indicators = parse_indicator_list(v)?,
            "tau" => self.tau = parse_num(key, v)?,
            "garch_search" => {
                self.garch_search = match v {
                    "full" => GarchSearch::Full,
                    "compact" => GarchSearch::Compact,
                    _ => return Err(Error::Config(format!("garch_search must be full or compact, got '{v}'"))),
                }
            }
            "caviar_starts" => self.caviar_starts = parse_num(key, v)?,
            "caviar_refine" => self.caviar_refine = parse_num(key, v)?,
            "cares_patience" => self.cares_patience = parse_num(key, v)?,
            "risk_levels" => {
                self.risk_levels = match v {
                    "signed" => RiskLevels::Signed,
                    "magnitude" => RiskLevels::Magnitude,
                    _ => return Err(Error::Config(format!("risk_levels must be signed or magnitude, got '{v}'"))),
                }
            }
            "h" => self.h = parse_num(key, v)?,
            "horizon_convention" => {
                self.horizon_convention = match v {
                    "inclusive" => HorizonConvention::Inclusive,
                    "exclusive" => HorizonConvention::Exclusive,
                    _ => return Err(Error::Config(format!("horizon_convention must be inclusive or exclusive, got '{v}'"))),
                }
            }
            "p" => {
                self.p = match v {
                    "auto" => LagChoice::Auto,
                    "per_window" => LagChoice::PerWindow,
                    _ => LagChoice::Fixed(parse_num(key, v)?),
                }
            }
            "p_max" => self.p_max = parse_num(key, v)?,
            "estimator" => {
                self.estimator = match v {
                    "auto" => EstimatorChoice::Auto,
                    "ols" => EstimatorChoice::Ols,
                    "post_lasso" => EstimatorChoice::PostLasso,
                    _ => return Err(Error::Config(format!("estimator must be auto, ols or post_lasso, got '{v}'"))),
                }
            }
            "ols_max_n" => self.ols_max_n = parse_num(key, v)?,
            "lasso_standardize" => self.lasso_standardize = parse_bool(key, v)?,
            "cv_folds" => self.cv_folds = parse_num(key, v)?,
            "window" => self.window = parse_num(key, v)?,
            "step" => self.step = parse_num(key, v)?,
            "prune_quantile" => self.prune_quantile = parse_num(key, v)?,
            "prune_order" => self.prune_order = v.parse()?,
            "robustness_h" => self.robustness_h = parse_list(key, v)?,
            "robustness_p" => self.robustness_p = parse_list(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            other => return Err(Error::Config(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            cfg.set(k, v, base).map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.tau > 0.0 && self.tau < 0.5) {
            return bad(format!("tau must lie in (0, 0.5), got {}", self.tau));
        }
        if !(self.liquidity > 0.0 && self.liquidity < 1.0) {
            return bad(format!("liquidity must lie in (0, 1), got {}", self.liquidity));
        }
        if !(0.0..=1.0).contains(&self.prune_quantile) {
            return bad(format!("prune_quantile must lie in [0, 1], got {}", self.prune_quantile));
        }
        if self.step == 0 || self.window == 0 {
            return bad("window and step must be positive".into());
        }
        if self.p_max == 0 || self.p == LagChoice::Fixed(0) {
            return bad("lag orders must be at least 1".into());
        }
        if self.cv_folds < 2 {
            return bad("cv_folds must be at least 2".into());
        }
        if self.caviar_refine == 0 {
            return bad("caviar_refine must be at least 1".into());
        }
        if self.robustness_h.is_empty() || self.robustness_p.contains(&0) || self.robustness_p.is_empty() {
            return bad("robustness sweeps need nonempty values and p >= 1".into());
        }
        Ok(())
    }

    /// Every key with its current value, in a form `parse` accepts.
    pub fn to_text(&self) -> String {
        let p = |o: &Option<PathBuf>| o.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let lines = [
            ("prices", p(&self.prices)),
            ("caps", p(&self.caps)),
            ("metadata", p(&self.metadata)),
            ("episodes", p(&self.episodes)),
            ("out", self.out.display().to_string()),
            ("tier", self.tier.to_string()),
            ("date_column", self.date_column.clone()),
            (
                "delimiter",
                if self.delimiter == b'\t' { "tab".into() } else { (self.delimiter as char).to_string() },
            ),
            (
                "frequency",
                match self.frequency {
                    Frequency::Daily => "daily",
                    Frequency::Weekly => "weekly",
                }
                .into(),
            ),
            ("liquidity", self.liquidity.to_string()),
            ("indicators", join(&self.indicators)),
            ("tau", self.tau.to_string()),
            (
                "garch_search",
                match self.garch_search {
                    GarchSearch::Full => "full",
                    GarchSearch::Compact => "compact",
                }
                .into(),
            ),
            ("caviar_starts", self.caviar_starts.to_string()),
            ("caviar_refine", self.caviar_refine.to_string()),
            ("cares_patience", self.cares_patience.to_string()),
            (
                "risk_levels",
                match self.risk_levels {
                    RiskLevels::Signed => "signed",
                    RiskLevels::Magnitude => "magnitude",
                }
                .into(),
            ),
            ("h", self.h.to_string()),
            (
                "horizon_convention",
                match self.horizon_convention {
                    HorizonConvention::Inclusive => "inclusive",
                    HorizonConvention::Exclusive => "exclusive",
                }
                .into(),
            ),
            (
                "p",
                match self.p {
                    LagChoice::Auto => "auto".into(),
                    LagChoice::PerWindow => "per_window".into(),
                    LagChoice::Fixed(p) => p.to_string(),
                },
            ),
            ("p_max", self.p_max.to_string()),
            (
                "estimator",
                match self.estimator {
                    EstimatorChoice::Auto => "auto",
                    EstimatorChoice::Ols => "ols",
                    EstimatorChoice::PostLasso => "post_lasso",
                }
                .into(),
            ),
            ("ols_max_n", self.ols_max_n.to_string()),
            ("lasso_standardize", self.lasso_standardize.to_string()),
            ("cv_folds", self.cv_folds.to_string()),
            ("window", self.window.to_string()),
            ("step", self.step.to_string()),
            ("prune_quantile", self.prune_quantile.to_string()),
            (
                "prune_order",
                match self.prune_order {
                    PruneOrder::PruneThenConvert => "prune_then_convert",
                    PruneOrder::ConvertThenPrune => "convert_then_prune",
                }
                .into(),
            ),
            ("robustness_h", join(&self.robustness_h)),
            ("robustness_p", join(&self.robustness_p)),
            ("seed", self.seed.to_string()),
        ];
        lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn headline_defaults() {
        let c = PipelineConfig::default();
        assert_eq!((c.tau, c.h, c.window, c.step), (0.05, 10, 250, 1));
        assert_eq!(c.liquidity, 0.30);
        assert_eq!(c.prune_quantile, 0.75);
        assert_eq!(c.ols_max_n, 10);
        assert_eq!(c.indicators.len(), 4);
    }

    #[test]
    fn printed_config_parses_back() {
        let mut c = PipelineConfig::default();
        c.p = LagChoice::Fixed(2);
        c.indicators = vec![IndicatorKind::CAViaR, IndicatorKind::LogReturn];
        c.delimiter = b'\t';
        let back = PipelineConfig::parse(&c.to_text(), Path::new("")).unwrap();
        let mut want = c.clone();
        want.indicators.sort();
        assert_eq!(back, want);
    }

    #[test]
    fn comments_paths_and_errors() {
        let c = PipelineConfig::parse("# x\nprices = data/p.csv # trailing\n\nh=15\n", Path::new("/cfg")).unwrap();
        assert_eq!(c.prices, Some(PathBuf::from("/cfg/data/p.csv")));
        assert_eq!(c.h, 15);
        assert!(matches!(PipelineConfig::parse("bogus = 1", Path::new("")), Err(Error::Config(_))));
        assert!(PipelineConfig::parse("tau = 0.7", Path::new("")).is_err());
        assert!(PipelineConfig::parse("h 10", Path::new("")).is_err());
    }
}
