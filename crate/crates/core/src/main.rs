use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use spillover::pipeline::{parse_indicator_list, Pipeline, PipelineConfig, Sweep};
use spillover::{Error, Result};

#[derive(Parser)]
#[command(name = "spillover", version, about = "Spillover networks for returns, volatility, VaR and ES")]
struct Cli {
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// markets, subsectors or companies.
    #[arg(long, global = true)]
    tier: Option<String>,
    /// Comma-separated subset of LogReturn,LogVol,CAViaR,CARES.
    #[arg(long, global = true)]
    indicators: Option<String>,
    /// Print the effective configuration and exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKind {
    H,
    P,
    Frequency,
}

#[derive(Subcommand)]
enum Command {
    /// Read prices, compute returns and write the tier's return panel.
    Ingest,
    /// Fit the requested indicators for every asset.
    Indicators,
    /// Full-sample spillover tables.
    Static,
    /// Rolling-window spillover series and episode averages.
    Rolling,
    /// Company networks, communities and their central intersection.
    Network,
    /// Re-run the static analysis across horizons, lag orders or frequencies.
    Robustness {
        #[arg(long, value_enum)]
        sweep: SweepKind,
        /// Override the configured sweep values (h or p only).
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<usize>>,
    },
}

fn config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if let Some(t) = &cli.tier {
        cfg.tier = t.parse()?;
    }
    if let Some(i) = &cli.indicators {
        cfg.indicators = parse_indicator_list(i).map_err(|e| Error::Usage(e.to_string()))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = config(&cli)?;
    if cli.print_config {
        print!("{}", cfg.to_text());
        return Ok(());
    }
    let Some(command) = cli.command else {
        return Err(Error::Usage("no command given (ingest, indicators, static, rolling, network, robustness)".into()));
    };
    let tier = cfg.tier;
    let p = Pipeline::new(cfg);
    match command {
        Command::Ingest => {
            let r = p.ingest(tier)?;
            println!("{tier}: {} series over {} dates ({} dropped)", r.kept.len(), r.n_dates, r.dropped.len());
        }
        Command::Indicators => {
            let d = p.indicators(tier)?;
            let failed: Vec<_> = d.iter().filter(|x| !x.ok).collect();
            for f in &failed {
                eprintln!("warning: {} {}: {}", f.ticker, f.kind, f.message.as_deref().unwrap_or(""));
            }
            println!("{tier}: {} fits, {} failed", d.len(), failed.len());
        }
        Command::Static => {
            for (kind, fit) in p.static_tables(tier)? {
                println!("{tier} {kind}: p={} total={:.2}", fit.p, fit.summary.total);
            }
        }
        Command::Rolling => {
            for (kind, r) in p.rolling(tier)? {
                println!("{tier} {kind}: {} windows, {} failed", r.len(), r.failures.len());
            }
        }
        Command::Network => {
            let r = p.network()?;
            println!("core ({}): {}", r.core.len(), r.core.join(", "));
        }
        Command::Robustness { sweep, values } => {
            let sweep = match (sweep, values) {
                (SweepKind::H, v) => Sweep::H(v.unwrap_or_else(|| p.cfg.robustness_h.clone())),
                (SweepKind::P, v) => Sweep::P(v.unwrap_or_else(|| p.cfg.robustness_p.clone())),
                (SweepKind::Frequency, None) => Sweep::Frequency,
                (SweepKind::Frequency, Some(_)) => return Err(Error::Usage("--values applies to h and p sweeps".into())),
            };
            let r = p.robustness(tier, &sweep)?;
            for s in &r.stability {
                println!("{} {} vs {}: spearman={:.3}", s.indicator, s.baseline, s.value, s.spearman_to);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
