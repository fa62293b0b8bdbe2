//! End-to-end tests of the command-line interface on a scaled-down study.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn deltabench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deltabench"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, extra: &str) -> std::path::PathBuf {
    let out = dir.join("run");
    let config = format!(
        r#"
model = "bs"
output_dir = "{}"
seed = 3
horizons = ["1d"]
insample_days = 50
train_days = 40
test_sets = 2
test_days = 10
roster = ["zero", "bs_delta", "delta", "delta_vega_vanna"]
{extra}
"#,
        out.display()
    );
    let path = dir.join("config.toml");
    fs::write(&path, config).unwrap();
    path
}

#[test]
fn simulate_run_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let run_dir = dir.path().join("run");

    let out = deltabench(&["simulate", "--config", config.to_str().unwrap()]);
    assert!(out.status.success(), "simulate failed: {}", String::from_utf8_lossy(&out.stderr));
    assert!(run_dir.join("manifest.json").exists());
    assert!(run_dir.join("paths/insample.csv").exists());
    assert!(run_dir.join("paths/test_01.csv").exists());
    assert!(run_dir.join("paths/contracts.csv").exists());
    assert!(run_dir.join("samples/insample_1d.csv").exists());
    assert!(run_dir.join("samples/test_01_1d.csv").exists());
    assert!(run_dir.join("samples/cleaning_report_1d.csv").exists());

    let out = deltabench(&["run", "--config", config.to_str().unwrap()]);
    assert!(out.status.success(), "run failed: {}", String::from_utf8_lossy(&out.stderr));
    assert!(run_dir.join("models/delta_1d.json").exists());
    let mshe = fs::read_to_string(run_dir.join("reports/mshe_1d.csv")).unwrap();
    assert!(mshe.starts_with("horizon,model,class,mshe"));
    // 4 models x 3 classes + header.
    assert_eq!(mshe.lines().count(), 13);

    let out = deltabench(&["report", "--run-dir", run_dir.to_str().unwrap()]);
    assert!(out.status.success(), "report failed: {}", String::from_utf8_lossy(&out.stderr));
    for file in [
        "reports/mshe_by_window_1d.csv",
        "reports/ratio_to_no_hedge_1d.csv",
        "reports/coefficients_1d.csv",
        "reports/pairwise_ci_1d.csv",
        "reports/leverage_1d.csv",
        "reports/diagnostics_tau_1d.csv",
        "reports/diagnostics_vega_1d.csv",
        "reports/summary.txt",
    ] {
        assert!(run_dir.join(file).exists(), "missing {file}");
    }
    // The zero hedge is in the roster, so the no-hedge ratio table has one
    // row per (window, model).
    let ratios = fs::read_to_string(run_dir.join("reports/ratio_to_no_hedge_1d.csv")).unwrap();
    assert_eq!(ratios.lines().count(), 1 + 2 * 4);
}

#[test]
fn identical_config_and_seed_reproduce_identical_bytes() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    for dir in [&dir_a, &dir_b] {
        let config = write_config(dir.path(), "");
        let out = deltabench(&["simulate", "--config", config.to_str().unwrap()]);
        assert!(out.status.success());
        let out = deltabench(&["run", "--config", config.to_str().unwrap()]);
        assert!(out.status.success());
    }
    for file in
        ["samples/insample_1d.csv", "samples/test_00_1d.csv", "reports/mshe_1d.csv", "models/delta_1d.json"]
    {
        let a = fs::read(dir_a.path().join("run").join(file)).unwrap();
        let b = fs::read(dir_b.path().join("run").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
}

#[test]
fn seed_override_changes_the_data() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let out = deltabench(&["simulate", "--config", config.to_str().unwrap()]);
    assert!(out.status.success());
    let base = fs::read(dir.path().join("run/samples/insample_1d.csv")).unwrap();

    let out = deltabench(&["simulate", "--config", config.to_str().unwrap(), "--seed", "4"]);
    assert!(out.status.success());
    let other = fs::read(dir.path().join("run/samples/insample_1d.csv")).unwrap();
    assert_ne!(base, other);
}

#[test]
fn missing_config_exits_2() {
    let out = deltabench(&["simulate", "--config", "/nonexistent/config.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "model = \"bs\"\noutput_dir = \"x\"\ntypo_key = 1\n").unwrap();
    let out = deltabench(&["simulate", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("typo_key"));
}

#[test]
fn run_without_samples_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let out = deltabench(&["run", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_samples_csv_is_a_graceful_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let out = deltabench(&["simulate", "--config", config.to_str().unwrap()]);
    assert!(out.status.success());
    // Corrupt the in-sample table.
    let victim = dir.path().join("run/samples/insample_1d.csv");
    fs::write(&victim, "not,a,sample\n1,2,3\n").unwrap();
    let out = deltabench(&["run", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).contains("panicked"));
}

#[test]
fn model_errors_exit_with_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let out = deltabench(&["simulate", "--config", config.to_str().unwrap()]);
    assert!(out.status.success());

    // A model that needs a different dataset kind is a configuration
    // problem (exit 2)...
    let out = deltabench(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--roster-model",
        "heston_adjusted",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));

    // ...while a fit on an emptied table is a model error (exit 3). The
    // stderr names the failing model.
    let out = deltabench(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--filter-tau-min",
        "100000",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("delta"));
}

#[test]
fn maturity_filter_shrinks_the_tables() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let out = deltabench(&["simulate", "--config", config.to_str().unwrap()]);
    assert!(out.status.success());
    let out = deltabench(&["run", "--config", config.to_str().unwrap()]);
    assert!(out.status.success());
    let base = fs::read_to_string(dir.path().join("run/reports/mshe_1d.csv")).unwrap();
    let base_n: usize = base.lines().nth(2).unwrap().split(',').last().unwrap().parse().unwrap();

    let out = deltabench(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--filter-tau-min",
        "14",
    ]);
    assert!(out.status.success());
    let filtered = fs::read_to_string(dir.path().join("run/reports/mshe_1d.csv")).unwrap();
    let filt_n: usize =
        filtered.lines().nth(2).unwrap().split(',').last().unwrap().parse().unwrap();
    assert!(filt_n < base_n, "filter did not drop rows ({base_n} -> {filt_n})");
}

#[test]
fn bucket_moneyness_writes_sub_reports() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let out = deltabench(&["simulate", "--config", config.to_str().unwrap()]);
    assert!(out.status.success());
    let out = deltabench(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--bucket-moneyness",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("run/reports/mshe_1d_atm.csv").exists());
    assert!(dir.path().join("run/reports/mshe_1d_otm.csv").exists());
}

#[test]
fn ingest_produces_normalized_samples() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("ingested");
    let config_path = dir.path().join("ingest.toml");
    fs::write(
        &config_path,
        format!(
            "model = \"bs\"\noutput_dir = \"{}\"\nhorizons = [\"1d\"]\n",
            out_dir.display()
        ),
    )
    .unwrap();

    // Monday 2018-07-02 14:12 trade, matched Tuesday 14:15.
    let us = |d: u32, h: u32, m: u32| -> i64 {
        chrono::NaiveDate::from_ymd_opt(2018, 7, d)
            .unwrap()
            .and_hms_opt(h, m, 0)
            .unwrap()
            .and_utc()
            .timestamp_micros()
    };
    let trades = dir.path().join("trades.csv");
    fs::write(
        &trades,
        format!(
            "timestamp_us,contract_id,price,volume\n{},c1,18.5,5\n{},c1,17.9,2\n",
            us(2, 14, 12),
            us(3, 14, 15)
        ),
    )
    .unwrap();
    let underlying = dir.path().join("underlying.csv");
    fs::write(
        &underlying,
        format!(
            "timestamp_us,price,volume\n{},2000,1\n{},1995,1\n",
            us(2, 14, 0),
            us(3, 14, 0)
        ),
    )
    .unwrap();
    let contracts = dir.path().join("contracts.csv");
    fs::write(&contracts, "id,kind,strike,expiry\nc1,call,2100,2018-07-27\n").unwrap();

    let out = deltabench(&[
        "ingest",
        "--config",
        config_path.to_str().unwrap(),
        "--trades",
        trades.to_str().unwrap(),
        "--underlying",
        underlying.to_str().unwrap(),
        "--contracts",
        contracts.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let samples = fs::read_to_string(out_dir.join("samples/ingested_1d.csv")).unwrap();
    assert_eq!(samples.lines().count(), 2);
    let row = samples.lines().nth(1).unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    // S0 normalized to 100.
    assert_eq!(fields[8], "100");
    assert!(out_dir.join("samples/match_report_1d.json").exists());

    // A tighter tolerance drops the match.
    let out = deltabench(&[
        "ingest",
        "--config",
        config_path.to_str().unwrap(),
        "--trades",
        trades.to_str().unwrap(),
        "--underlying",
        underlying.to_str().unwrap(),
        "--contracts",
        contracts.to_str().unwrap(),
        "--tolerance-min",
        "1",
    ]);
    assert!(out.status.success());
    let samples = fs::read_to_string(out_dir.join("samples/ingested_1d.csv")).unwrap();
    assert_eq!(samples.lines().count(), 1, "only the header should remain");
}
