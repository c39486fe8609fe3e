use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gpreg_experiments::{RateConfig, StudyConfig};
use serde_json::Value;
use tempfile::TempDir;

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn gpreg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gpreg")).args(args).output().unwrap()
}

fn run_ok(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = gpreg(&args);
    assert!(o.status.success(), "{cmd} failed: {}", String::from_utf8_lossy(&o.stderr));
    o
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn error_record(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    serde_json::from_str(text.lines().last().unwrap()).unwrap()
}

/// The shipped table config cut down to n = 100 and 10 replications.
fn small_table(dir: &Path) -> PathBuf {
    let mut cfg: StudyConfig = toml::from_str(&std::fs::read_to_string(shipped("table.toml")).unwrap()).unwrap();
    cfg.n_values = vec![100];
    cfg.replications = 10;
    let path = dir.join("table.toml");
    std::fs::write(&path, toml::to_string(&cfg).unwrap()).unwrap();
    path
}

fn small_rates(dir: &Path) -> PathBuf {
    let mut cfg: RateConfig = toml::from_str(&std::fs::read_to_string(shipped("rates_alpha2.toml")).unwrap()).unwrap();
    cfg.n_values = vec![50, 100, 200];
    cfg.replications = 4;
    cfg.truncation = 100;
    let path = dir.join("rates.toml");
    std::fs::write(&path, toml::to_string(&cfg).unwrap()).unwrap();
    path
}

#[test]
fn table_has_one_row_per_method_and_order() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_table(tmp.path());
    let out = tmp.path().join("out");
    run_ok("table", &cfg, &out, &[]);
    let csv = read(&out, "table.csv");
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "method,n,order,mean,median,se,reps,failures");
    let mut keys: Vec<String> = lines[1..]
        .iter()
        .map(|l| l.split(',').take(3).collect::<Vec<_>>().join(","))
        .collect();
    keys.sort();
    let mut want = Vec::new();
    for m in ["matern_loocv", "matern_nu2.5", "sobolev2", "squared_exponential"] {
        for k in [0, 1] {
            want.push(format!("{m},100,{k}"));
        }
    }
    want.sort();
    assert_eq!(keys, want);
    for line in &lines[1..] {
        let mean = line.split(',').nth(3).unwrap();
        // 17 significant digits
        assert_eq!(mean.split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
    }
}

#[test]
fn metadata_echo_reparses_to_the_same_config() {
    let tmp = TempDir::new().unwrap();
    let cfg_path = small_table(tmp.path());
    let out = tmp.path().join("out");
    run_ok("table", &cfg_path, &out, &["--seed", "99"]);
    let meta: Value = serde_json::from_str(&read(&out, "metadata.json")).unwrap();
    let echoed: StudyConfig = toml::from_str(meta["config_toml"].as_str().unwrap()).unwrap();
    let mut original: StudyConfig = toml::from_str(&std::fs::read_to_string(&cfg_path).unwrap()).unwrap();
    original.seed = 99;
    assert_eq!(echoed, original);
    let from_json: StudyConfig = serde_json::from_value(meta["config"].clone()).unwrap();
    assert_eq!(from_json, original);
    assert_eq!(meta["seed"], 99);
    assert_eq!(meta["outputs"][0], "table.csv");
    assert_eq!(meta["details"]["replicates"].as_array().unwrap().len(), 10);
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_table(tmp.path());
    let rates = small_rates(tmp.path());
    let mut tables = Vec::new();
    let mut slopes = Vec::new();
    for (i, threads) in ["1", "1", "4"].iter().enumerate() {
        let out = tmp.path().join(format!("run{i}"));
        run_ok("table", &cfg, &out, &["--threads", threads]);
        run_ok("rates", &rates, &out, &["--threads", threads]);
        tables.push(read(&out, "table.csv"));
        slopes.push(read(&out, "rates.csv") + &read(&out, "rate_points.csv"));
    }
    assert!(tables.windows(2).all(|w| w[0] == w[1]));
    assert!(slopes.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn rates_report_contains_slope() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    run_ok("rates", &small_rates(tmp.path()), &out, &[]);
    let report = read(&out, "rates.csv");
    let header: Vec<&str> = report.lines().next().unwrap().split(',').collect();
    assert!(header.contains(&"slope"));
    assert_eq!(report.lines().count(), 3);
    let points = read(&out, "rate_points.csv");
    assert!(points.starts_with("order,n,lambda,median"));
    assert_eq!(points.lines().count(), 1 + 2 * 3);
}

#[test]
fn fit_writes_posterior_summary() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    run_ok("fit", &shipped("fit.toml"), &out, &[]);
    let csv = read(&out, "posterior.csv");
    let header = csv.lines().next().unwrap();
    assert_eq!(header, "x,mean_0,var_0,band_lo_0,band_hi_0,mean_1,var_1,band_lo_1,band_hi_1");
    assert_eq!(csv.lines().count(), 102);
    assert!(read(&out, "selection_trace.csv").starts_with("nu,lambda,score"));
    let meta: Value = serde_json::from_str(&read(&out, "metadata.json")).unwrap();
    assert!(meta["details"]["empirical_bayes"]["lambda"].as_f64().unwrap() > 0.0);
}

#[test]
fn fit_reads_csv_data() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data.csv");
    let mut body = String::from("x,y\n");
    for i in 0..40 {
        let x = (i as f64 + 0.5) / 40.0;
        body.push_str(&format!("{x},{}\n", (5.0 * x).sin()));
    }
    std::fs::write(&data, body).unwrap();
    let cfg = tmp.path().join("fit.toml");
    std::fs::write(
        &cfg,
        format!(
            "seed = 1\norders = [0]\n[data]\nsource = \"csv\"\npath = \"{}\"\n[method]\nkind = \"squared_exponential\"\n",
            data.display()
        ),
    )
    .unwrap();
    let out = tmp.path().join("out");
    run_ok("fit", &cfg, &out, &[]);
    assert!(read(&out, "posterior.csv").starts_with("x,mean_0,var_0,band_lo_0,band_hi_0\n"));
}

#[test]
fn bands_and_spectra_outputs() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("bands.toml");
    let shipped_text = std::fs::read_to_string(shipped("bands.toml")).unwrap();
    std::fs::write(&cfg, shipped_text.replace("replications = 200", "replications = 4").replace("n = 500", "n = 80")).unwrap();
    let out = tmp.path().join("out");
    run_ok("bands", &cfg, &out, &[]);
    assert!(read(&out, "bands.csv").starts_with("x,truth_0,center_0,lo_0,hi_0,truth_1"));
    assert_eq!(read(&out, "coverage.csv").lines().count(), 3);

    run_ok("spectra", &shipped("spectra.toml"), &out, &[]);
    let sp = read(&out, "spectra.csv");
    assert!(sp.starts_with("lambda,kappa_tilde_sq,kappa_hat_01_sq,kappa_tilde_kk_sq_0"));
    assert_eq!(sp.lines().count(), 16);
}

#[test]
fn unknown_key_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("bad.toml");
    let text = std::fs::read_to_string(shipped("rates_alpha2.toml")).unwrap();
    std::fs::write(&cfg, format!("{text}\nmystery = 1\n")).unwrap();
    let o = gpreg(&["rates", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let rec = error_record(&o);
    assert_eq!(rec["error"]["kind"], "config");
    assert_eq!(rec["error"]["exit_code"], 2);

    let o = gpreg(&["table", "--config"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_record(&o)["error"]["kind"], "config");
}

#[test]
fn invalid_values_are_config_errors() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("bad.toml");
    let text = std::fs::read_to_string(shipped("rates_alpha2.toml")).unwrap();
    std::fs::write(&cfg, text.replace("orders = [0, 1]", "orders = [0, 2]")).unwrap();
    let o = gpreg(&["rates", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn io_failures_exit_with_four() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("nope.toml");
    let o = gpreg(&["spectra", "--config", missing.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(error_record(&o)["error"]["kind"], "io");

    let blocker = tmp.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let out = blocker.join("sub");
    let o = gpreg(&["spectra", "--config", shipped("spectra.toml").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn numerical_failures_exit_with_three() {
    // every design point coincides and the ridge is negligible, so no
    // candidate lambda yields a usable likelihood
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data.csv");
    let mut body = String::from("x,y\n");
    for i in 0..30 {
        body.push_str(&format!("0.5,{}\n", i as f64));
    }
    std::fs::write(&data, body).unwrap();
    let cfg = tmp.path().join("fit.toml");
    std::fs::write(
        &cfg,
        format!(
            "seed = 1\norders = [0]\n[data]\nsource = \"csv\"\npath = \"{}\"\n[method]\nkind = \"squared_exponential\"\n[lambda_grid]\nmin = 1e-300\nmax = 1e-300\ncount = 1\n",
            data.display()
        ),
    )
    .unwrap();
    let o = gpreg(&["fit", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(error_record(&o)["error"]["kind"], "numerical");
}
