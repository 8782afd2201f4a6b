//! End-to-end runs of the `spillover` binary on the bundled synthetic data.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_spillover");

fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic");
    for entry in fs::read_dir(src).unwrap() {
        let entry = entry.unwrap();
        fs::copy(entry.path(), dir.path().join(entry.file_name())).unwrap();
    }
    dir
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} exited {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))).unwrap()
}

#[test]
fn usage_and_data_errors_map_to_exit_codes() {
    let dir = workspace();
    let d = dir.path();
    assert_eq!(run(d, &[]).status.code(), Some(1));
    assert_eq!(run(d, &["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(d, &["--config", "markets.conf", "--tier", "galaxies", "ingest"]).status.code(), Some(1));
    assert_eq!(run(d, &["--config", "markets.conf", "--indicators", "Beta", "ingest"]).status.code(), Some(1));
    assert_eq!(run(d, &["--config", "markets.conf", "robustness", "--sweep", "frequency", "--values", "2"]).status.code(), Some(1));

    fs::remove_file(d.join("markets.csv")).unwrap();
    let out = run(d, &["--config", "markets.conf", "ingest"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    // later stages need earlier outputs
    assert_eq!(run(d, &["--config", "companies.conf", "static"]).status.code(), Some(2));
}

#[test]
fn print_config_reflects_flags() {
    let dir = workspace();
    let text = ok(dir.path(), &["--config", "markets.conf", "--seed", "99", "--indicators", "LogVol,CARES", "--print-config"]);
    assert!(text.lines().any(|l| l.trim() == "seed = 99"), "{text}");
    assert!(text.lines().any(|l| l.trim() == "tier = markets"), "{text}");
    assert!(text.lines().any(|l| l.trim() == "garch_search = compact"), "{text}");
    let indicators = text.lines().find(|l| l.starts_with("indicators")).unwrap();
    assert!(indicators.contains("LogVol") && indicators.contains("CARES") && !indicators.contains("CAViaR"));
}

#[test]
fn markets_tier_runs_ols_and_reruns_identically() {
    let dir = workspace();
    let d = dir.path();
    let args = ["--config", "markets.conf", "--indicators", "LogReturn,LogVol"];
    ok(d, &[&args[..], &["ingest"]].concat());
    ok(d, &[&args[..], &["indicators"]].concat());
    let vol = d.join("out/markets/indicators/LogVol/Insurance.csv");
    let first = fs::read(&vol).unwrap();
    ok(d, &[&args[..], &["indicators"]].concat());
    assert_eq!(fs::read(&vol).unwrap(), first, "indicator output changed between identical runs");

    let stdout = ok(d, &[&args[..], &["static"]].concat());
    assert_eq!(stdout.lines().count(), 2, "{stdout}");
    let model = json(d.join("out/markets/static/LogVol_model.json"));
    assert!(model["support_mask"].is_null(), "four series route to OLS");
    let table = fs::read_to_string(d.join("out/markets/static/LogReturn.csv")).unwrap();
    assert!(table.contains("Insurance") && table.contains("Bonds"));

    ok(d, &[&args[..], &["robustness", "--sweep", "h"]].concat());
    let stability = fs::read_to_string(d.join("out/markets/robustness/h_stability.csv")).unwrap();
    assert!(stability.lines().count() >= 3, "{stability}");
}

#[test]
fn rolling_rejects_oversized_windows_before_estimating() {
    let dir = workspace();
    let d = dir.path();
    let args = ["--config", "subsectors.conf", "--indicators", "LogReturn"];
    ok(d, &[&args[..], &["ingest"]].concat());
    ok(d, &[&args[..], &["indicators"]].concat());
    let stdout = ok(d, &[&args[..], &["rolling"]].concat());
    assert!(stdout.contains("windows, 0 failed"), "{stdout}");
    let series = fs::read_to_string(d.join("out/subsectors/rolling/LogReturn.csv")).unwrap();
    assert!(series.starts_with("window_end,total,"));
    let t = fs::read_to_string(d.join("out/subsectors/returns.csv")).unwrap().lines().count() - 1;
    assert_eq!(series.lines().count() - 1, (t - 250) / 10 + 1);

    let conf = fs::read_to_string(d.join("subsectors.conf")).unwrap() + "window = 100000\n";
    fs::write(d.join("huge.conf"), conf).unwrap();
    let out = run(d, &["--config", "huge.conf", "--indicators", "LogReturn", "rolling"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("window"));
}

#[test]
fn company_tier_builds_networks_with_post_lasso() {
    let dir = workspace();
    let d = dir.path();
    let args = ["--config", "companies.conf"];
    ok(d, &[&args[..], &["ingest"]].concat());
    let report = json(d.join("out/companies/ingest_report.json"));
    assert!(report.to_string().contains("THIN1"), "illiquid series is reported as dropped");
    ok(d, &[&args[..], &["indicators"]].concat());
    ok(d, &[&args[..], &["static"]].concat());
    let model = json(d.join("out/companies/static/CAViaR_model.json"));
    assert!(model["support_mask"].is_array(), "fifteen series route to post-LASSO");

    let stdout = ok(d, &[&args[..], &["network"]].concat());
    assert!(stdout.starts_with("core ("), "{stdout}");
    let net = d.join("out/companies/network");
    let communities = json(net.join("communities.json"));
    assert!(communities["core"].is_array());
    assert!(net.join("core.csv").exists());
    let files: Vec<String> = fs::read_dir(&net).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    for ext in ["graphml", "dot", "json"] {
        assert!(files.iter().filter(|f| f.ends_with(&format!(".{ext}"))).count() >= 4, "{files:?}");
    }
}
