//! Subcommand implementations: simulate, ingest, run, report.

use crate::config::ExperimentConfig;
use crate::CliError;
use anyhow::{bail, Context};
use deltabench_core::datapipe::{
    self, clean, read_samples_csv, write_cleaning_report_csv, write_samples_csv, Horizon,
    SampleTable,
};
use deltabench_core::evaluator::{
    self, bucket_diagnostics, leverage_coefficient, pairwise_ci, DiagnosticAxis, HedgeStrategy,
    MaturityBucket,
};
use deltabench_core::hedgenet::{train, NetConfig, TrainConfig, TrainedNet};
use deltabench_core::hedgers::{HedgeModel, ModelDocument};
use deltabench_core::listings::{write_contracts_csv, OptionKind};
use deltabench_core::study::{
    default_l2_alpha, evaluate_strategies, simulate_dataset_with, split_train_val, EvalReport,
    GbmStudyParams,
};
use serde::{Deserialize, Serialize};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

/// Run-directory manifest: the effective configuration and its hash. All
/// outputs are reproducible from this plus the master seed.
#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub config_sha256: String,
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("cannot open {}", path.display()))?,
    ))
}

pub fn write_manifest(cfg: &ExperimentConfig, run_dir: &Path) -> anyhow::Result<()> {
    let manifest = Manifest { config: cfg.clone(), config_sha256: cfg.sha256()? };
    write_text(&run_dir.join("manifest.json"), &serde_json::to_string_pretty(&manifest)?)
}

pub fn read_manifest(run_dir: &Path) -> anyhow::Result<Manifest> {
    let path = run_dir.join("manifest.json");
    let text = fs::read_to_string(&path)
        .with_context(|| format!("no manifest at {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

fn samples_path(run_dir: &Path, label: &str, horizon: Horizon) -> PathBuf {
    run_dir.join("samples").join(format!("{label}_{}.csv", horizon.label()))
}

/// Simulate paths, list contracts, and write per-horizon sample tables.
pub fn cmd_simulate(cfg: &ExperimentConfig) -> anyhow::Result<()> {
    let run_dir = PathBuf::from(&cfg.output_dir);
    let study = cfg.study_config()?;
    let ds = simulate_dataset_with(&study, GbmStudyParams { s0: cfg.s0, mu: cfg.mu })
        .map_err(CliError::from_core)?;

    write_manifest(cfg, &run_dir)?;
    ds.insample_path
        .write_csv(create(&run_dir.join("paths/insample.csv"))?)
        .map_err(CliError::from_core)?;
    for (i, path) in ds.test_paths.iter().enumerate() {
        path.write_csv(create(&run_dir.join(format!("paths/test_{i:02}.csv")))?)
            .map_err(CliError::from_core)?;
    }
    write_contracts_csv(&ds.insample_contracts, create(&run_dir.join("paths/contracts.csv"))?)
        .map_err(CliError::from_core)?;

    for hd in &ds.per_horizon {
        write_samples_csv(&hd.insample, create(&samples_path(&run_dir, "insample", hd.horizon))?)
            .map_err(CliError::from_core)?;
        write_cleaning_report_csv(
            &hd.insample_report,
            create(&run_dir.join("samples").join(format!(
                "cleaning_report_{}.csv",
                hd.horizon.label()
            )))?,
        )
        .map_err(CliError::from_core)?;
        for (i, t) in hd.tests.iter().enumerate() {
            write_samples_csv(
                t,
                create(&samples_path(&run_dir, &format!("test_{i:02}"), hd.horizon))?,
            )
            .map_err(CliError::from_core)?;
        }
        println!(
            "horizon {}: {} in-sample rows, {} test sets",
            hd.horizon.label(),
            hd.insample.len(),
            hd.tests.len()
        );
    }
    println!("simulate: wrote {}", run_dir.display());
    Ok(())
}

/// Match tick data against the underlying and write normalized samples.
pub fn cmd_ingest(
    cfg: &ExperimentConfig,
    trades: &Path,
    underlying: &Path,
    contracts: &Path,
) -> anyhow::Result<()> {
    let run_dir = PathBuf::from(&cfg.output_dir);
    let trades = datapipe::read_ticks_csv(open(trades)?).map_err(CliError::from_core)?;
    let under = datapipe::read_underlying_csv(open(underlying)?).map_err(CliError::from_core)?;
    let meta = datapipe::read_contract_meta_csv(open(contracts)?).map_err(CliError::from_core)?;

    write_manifest(cfg, &run_dir)?;
    let mut rules = deltabench_core::datapipe::CleanRules::tick_data();
    rules.max_tau_calendar_days_removed = cfg.filter_tau_min_days;

    for horizon in cfg.parsed_horizons()? {
        let (table, report) = datapipe::match_ticks(
            &trades,
            &under,
            &meta,
            horizon,
            cfg.tolerance_min,
            cfg.r,
            cfg.r_onr,
        )
        .map_err(CliError::from_core)?;
        let (cleaned, clean_report) = clean(&table, &rules);
        write_samples_csv(&cleaned, create(&samples_path(&run_dir, "ingested", horizon))?)
            .map_err(CliError::from_core)?;
        write_cleaning_report_csv(
            &clean_report,
            create(&run_dir.join("samples").join(format!(
                "cleaning_report_ingested_{}.csv",
                horizon.label()
            )))?,
        )
        .map_err(CliError::from_core)?;
        let match_json = serde_json::json!({
            "horizon": horizon.label(),
            "input_trades": report.input_trades,
            "aggregated_trades": report.aggregated_trades,
            "matched": report.matched,
            "dropped": report.dropped,
        });
        write_text(
            &run_dir.join("samples").join(format!("match_report_{}.json", horizon.label())),
            &serde_json::to_string_pretty(&match_json)?,
        )?;
        println!(
            "horizon {}: matched {} of {} trades, retained {} rows",
            horizon.label(),
            report.matched,
            report.aggregated_trades,
            cleaned.len()
        );
    }
    println!("ingest: wrote {}", run_dir.display());
    Ok(())
}

fn load_tables(
    run_dir: &Path,
    cfg: &ExperimentConfig,
    horizon: Horizon,
) -> anyhow::Result<(SampleTable, Vec<SampleTable>)> {
    let insample_path = samples_path(run_dir, "insample", horizon);
    if !insample_path.exists() {
        bail!(
            "missing samples at {}; run `deltabench simulate` first",
            insample_path.display()
        );
    }
    let insample = read_samples_csv(open(&insample_path)?, horizon).map_err(CliError::from_core)?;
    let mut tests = Vec::new();
    for i in 0..cfg.test_sets {
        let p = samples_path(run_dir, &format!("test_{i:02}"), horizon);
        if !p.exists() {
            bail!("missing test set {}", p.display());
        }
        tests.push(read_samples_csv(open(&p)?, horizon).map_err(CliError::from_core)?);
    }
    Ok((insample, tests))
}

/// Apply the configured maturity filter to a set of tables.
fn filter_tables(
    cfg: &ExperimentConfig,
    insample: SampleTable,
    tests: Vec<SampleTable>,
) -> (SampleTable, Vec<SampleTable>) {
    let Some(days) = cfg.filter_tau_min_days else {
        return (insample, tests);
    };
    let mut rules = deltabench_core::datapipe::CleanRules {
        moneyness_window: false,
        otm_only: false,
        min_tau_one_day: false,
        implied_vol_window: false,
        negative_time_value: false,
        min_price: None,
        max_tau_calendar_days_removed: Some(days),
        quote_rules: None,
    };
    rules.max_tau_calendar_days_removed = Some(days);
    let (ins, _) = clean(&insample, &rules);
    let tests = tests.iter().map(|t| clean(t, &rules).0).collect();
    (ins, tests)
}

/// Moneyness halves: near-the-money versus out-of-the-money. The split
/// threshold is the in-sample median distance from the money, taken per
/// option class so both halves keep calls and puts.
fn moneyness_halves(
    insample: &SampleTable,
    tests: &[SampleTable],
) -> Vec<(String, SampleTable, Vec<SampleTable>)> {
    let median_for = |cp: u8| -> f64 {
        let mut d: Vec<f64> = insample
            .rows
            .iter()
            .filter(|r| r.cp_flag == cp)
            .map(|r| (r.moneyness - 1.0).abs())
            .collect();
        d.sort_by(f64::total_cmp);
        if d.is_empty() {
            0.0
        } else {
            d[d.len() / 2]
        }
    };
    let medians = [median_for(0), median_for(1)];
    let split = |t: &SampleTable, near: bool| SampleTable {
        horizon: t.horizon,
        rows: t
            .rows
            .iter()
            .filter(|r| {
                ((r.moneyness - 1.0).abs() <= medians[r.cp_flag as usize]) == near
            })
            .cloned()
            .collect(),
    };
    [("atm", true), ("otm", false)]
        .into_iter()
        .map(|(label, near)| {
            (
                label.to_string(),
                split(insample, near),
                tests.iter().map(|t| split(t, near)).collect(),
            )
        })
        .collect()
}

struct FittedRoster {
    names: Vec<String>,
    models: Vec<HedgeModel>,
    nets: Vec<TrainedNet>,
}

fn fit_roster(
    cfg: &ExperimentConfig,
    run_dir: &Path,
    horizon: Horizon,
    insample: &SampleTable,
    suffix: &str,
    persist: bool,
) -> anyhow::Result<FittedRoster> {
    let price_model = cfg.price_model()?;
    let mut names = Vec::new();
    let mut models = Vec::new();
    for spec in cfg.roster_specs()? {
        let model = spec
            .fit(insample, &price_model)
            .map_err(CliError::from_core)
            .with_context(|| format!("fit of {} failed", spec.name()))?;
        if persist {
            let doc = ModelDocument::new(model.clone(), Some(0));
            write_text(
                &run_dir.join("models").join(format!(
                    "{}_{}{suffix}.json",
                    spec.name(),
                    horizon.label()
                )),
                &doc.to_json().map_err(CliError::from_core)?,
            )?;
        }
        names.push(spec.name());
        models.push(model);
    }

    let mut nets = Vec::new();
    for fs in cfg.feature_sets()? {
        let (train_t, val_t) =
            split_train_val(insample, cfg.train_days).map_err(CliError::from_core)?;
        let alpha = cfg
            .l2_alpha
            .unwrap_or_else(|| default_l2_alpha(&price_model, horizon, fs));
        let net_cfg = NetConfig::new(fs);
        let mut best: Option<TrainedNet> = None;
        for &seed in &cfg.ann_seeds {
            let tc = TrainConfig {
                learning_rate: cfg.ann_learning_rate,
                batch_size: cfg.ann_batch_size,
                epochs: cfg.ann_epochs,
                l2_alpha: alpha,
                seed,
            };
            let net = train(&train_t, &val_t, &net_cfg, &tc)
                .map_err(CliError::from_core)
                .with_context(|| format!("training {} failed", fs.label()))?;
            if persist {
                write_text(
                    &run_dir.join("models").join(format!(
                        "ann_{}_{}{suffix}_seed{seed}.json",
                        fs.label(),
                        horizon.label()
                    )),
                    &net.to_json().map_err(CliError::from_core)?,
                )?;
            }
            let val = net.history[net.best_epoch as usize].val_loss;
            let better = best
                .as_ref()
                .map_or(true, |b| val < b.history[b.best_epoch as usize].val_loss);
            if better {
                best = Some(net);
            }
        }
        let best = best.expect("ann_seeds is non-empty");
        if persist {
            write_text(
                &run_dir.join("models").join(format!(
                    "ann_{}_{}{suffix}.json",
                    fs.label(),
                    horizon.label()
                )),
                &best.to_json().map_err(CliError::from_core)?,
            )?;
        }
        nets.push(best);
    }
    Ok(FittedRoster { names, models, nets })
}

fn evaluate_roster(
    horizon: Horizon,
    roster: &FittedRoster,
    tests: &[SampleTable],
) -> anyhow::Result<EvalReport> {
    let mut strategies: Vec<(String, &dyn HedgeStrategy)> = Vec::new();
    for (name, model) in roster.names.iter().zip(&roster.models) {
        strategies.push((name.clone(), model));
    }
    for net in &roster.nets {
        strategies.push((net.strategy_name(), net));
    }
    evaluate_strategies(horizon, tests, &strategies)
        .map_err(CliError::from_core)
        .context("evaluation failed")
}

/// Fit the roster on in-sample data, train any requested networks, evaluate
/// on the test sets, and write the comparison table.
pub fn cmd_run(cfg: &ExperimentConfig) -> anyhow::Result<()> {
    let run_dir = PathBuf::from(&cfg.output_dir);
    read_manifest(&run_dir)?;
    for horizon in cfg.parsed_horizons()? {
        let (insample, tests) = load_tables(&run_dir, cfg, horizon)?;
        let (insample, tests) = filter_tables(cfg, insample, tests);

        let roster = fit_roster(cfg, &run_dir, horizon, &insample, "", true)?;
        let report = evaluate_roster(horizon, &roster, &tests)?;
        report
            .write_csv(create(&run_dir.join("reports").join(format!(
                "mshe_{}.csv",
                horizon.label()
            )))?)
            .map_err(CliError::from_core)?;
        println!("horizon {}: wrote mshe table ({} cells)", horizon.label(), report.cells.len());

        if cfg.bucket_moneyness {
            for (label, bucket_in, bucket_tests) in moneyness_halves(&insample, &tests) {
                let roster =
                    fit_roster(cfg, &run_dir, horizon, &bucket_in, &format!("_{label}"), true)?;
                let report = evaluate_roster(horizon, &roster, &bucket_tests)?;
                report
                    .write_csv(create(&run_dir.join("reports").join(format!(
                        "mshe_{}_{label}.csv",
                        horizon.label()
                    )))?)
                    .map_err(CliError::from_core)?;
                println!("horizon {} bucket {label}: wrote mshe table", horizon.label());
            }
        }
    }
    println!("run: wrote {}", run_dir.join("reports").display());
    Ok(())
}

/// Emit plot-ready diagnostics from a finished run.
pub fn cmd_report(run_dir: &Path) -> anyhow::Result<()> {
    let manifest = read_manifest(run_dir)?;
    let cfg = &manifest.config;
    let mut summary = String::new();
    summary.push_str(&format!(
        "run {}\nmodel {}, seed {}, config sha256 {}\n\n",
        run_dir.display(),
        cfg.model,
        cfg.seed,
        manifest.config_sha256
    ));

    for horizon in cfg.parsed_horizons()? {
        let (insample, tests) = load_tables(run_dir, cfg, horizon)?;
        let (insample, tests) = filter_tables(cfg, insample.clone(), tests);
        let h = horizon.label();

        // Reload the fitted models persisted by the run step.
        let mut models: Vec<(String, HedgeModel)> = Vec::new();
        for spec in cfg.roster_specs()? {
            let path = run_dir.join("models").join(format!("{}_{h}.json", spec.name()));
            if !path.exists() {
                bail!("missing fitted model {}; run `deltabench run` first", path.display());
            }
            let doc = ModelDocument::from_json(&fs::read_to_string(&path)?)
                .map_err(CliError::from_core)?;
            models.push((spec.name(), doc.model));
        }

        // Per-window MSHE series: one row per model and test set.
        {
            let mut w =
                csv::Writer::from_writer(create(&run_dir.join("reports").join(format!(
                    "mshe_by_window_{h}.csv"
                )))?);
            w.write_record(["window", "model", "class", "mshe"])?;
            for (i, t) in tests.iter().enumerate() {
                for (name, model) in &models {
                    let m = evaluator::mshe(t, model).map_err(CliError::from_core)?;
                    for (class, v) in
                        [("calls", m.calls), ("puts", m.puts), ("both", Some(m.both))]
                    {
                        if let Some(v) = v {
                            w.write_record([
                                i.to_string(),
                                name.clone(),
                                class.into(),
                                format!("{v}"),
                            ])?;
                        }
                    }
                }
            }
            w.flush()?;
        }

        // Ratio of each model's per-window MSHE to the zero hedge.
        if models.iter().any(|(n, _)| n == "zero") {
            let mut w =
                csv::Writer::from_writer(create(&run_dir.join("reports").join(format!(
                    "ratio_to_no_hedge_{h}.csv"
                )))?);
            w.write_record(["window", "model", "ratio"])?;
            for (i, t) in tests.iter().enumerate() {
                let zero = evaluator::mshe(t, &HedgeModel::Zero)
                    .map_err(CliError::from_core)?
                    .both;
                for (name, model) in &models {
                    let m = evaluator::mshe(t, model).map_err(CliError::from_core)?.both;
                    w.write_record([i.to_string(), name.clone(), format!("{}", m / zero)])?;
                }
            }
            w.flush()?;
        }

        // Fitted coefficients with +/- 2 standard errors.
        {
            let mut w =
                csv::Writer::from_writer(create(&run_dir.join("reports").join(format!(
                    "coefficients_{h}.csv"
                )))?);
            w.write_record(["model", "class", "coefficient", "estimate", "low2se", "high2se"])?;
            for (name, model) in &models {
                let Some(fits) = model.fits() else { continue };
                for kind in [OptionKind::Call, OptionKind::Put] {
                    let fit = fits.class(kind);
                    for (j, (c, se)) in
                        fit.coefficients.iter().zip(&fit.standard_errors).enumerate()
                    {
                        w.write_record([
                            name.clone(),
                            kind.label().into(),
                            j.to_string(),
                            format!("{c}"),
                            format!("{}", c - 2.0 * se),
                            format!("{}", c + 2.0 * se),
                        ])?;
                    }
                }
            }
            w.flush()?;
        }

        // Pairwise confidence intervals against the plain delta.
        if models.iter().any(|(n, _)| n == "bs_delta") {
            let baseline = &models.iter().find(|(n, _)| n == "bs_delta").unwrap().1;
            let mut w = csv::Writer::from_writer(create(&run_dir.join("reports").join(
                format!("pairwise_ci_{h}.csv"),
            ))?);
            w.write_record(["model_a", "model_b", "mean_diff", "std_error", "lower", "upper", "days"])?;
            for (name, model) in &models {
                if name == "bs_delta" {
                    continue;
                }
                let ci = pairwise_ci(&tests, model, baseline).map_err(CliError::from_core)?;
                w.write_record([
                    name.clone(),
                    "bs_delta".into(),
                    format!("{}", ci.mean_diff),
                    format!("{}", ci.std_error),
                    format!("{}", ci.lower),
                    format!("{}", ci.upper),
                    ci.days.to_string(),
                ])?;
            }
            w.flush()?;
        }

        // Leverage coefficients on the in-sample (training) table.
        {
            let mut w =
                csv::Writer::from_writer(create(&run_dir.join("reports").join(format!(
                    "leverage_{h}.csv"
                )))?);
            w.write_record(["class", "bucket", "slope", "leverage_coefficient", "n"])?;
            for kind in [OptionKind::Call, OptionKind::Put] {
                for bucket in MaturityBucket::ALL {
                    match leverage_coefficient(&insample, kind, bucket) {
                        Ok(row) => w.write_record([
                            kind.label().into(),
                            bucket.label().into(),
                            format!("{}", row.slope),
                            format!("{}", row.leverage_coefficient),
                            row.n_samples.to_string(),
                        ])?,
                        Err(_) => w.write_record([
                            kind.label(),
                            bucket.label(),
                            "",
                            "",
                            "0",
                        ])?,
                    }
                }
            }
            w.flush()?;
        }

        // Error deciles by maturity and vega for the reference models.
        {
            let mut pooled = SampleTable::new(horizon);
            for t in &tests {
                pooled.rows.extend(t.rows.iter().cloned());
            }
            for axis in [DiagnosticAxis::Tau, DiagnosticAxis::Vega] {
                let mut w = csv::Writer::from_writer(create(&run_dir.join("reports").join(
                    format!("diagnostics_{}_{h}.csv", axis.label()),
                ))?);
                w.write_record(["model", "decile", "axis_mean", "mean_sq_rel_error", "std_error", "n"])?;
                for reference in ["bs_delta", "delta_vega_vanna"] {
                    let Some((name, model)) = models.iter().find(|(n, _)| n == reference) else {
                        continue;
                    };
                    for row in
                        bucket_diagnostics(&pooled, model, axis).map_err(CliError::from_core)?
                    {
                        w.write_record([
                            name.clone(),
                            row.decile.to_string(),
                            format!("{}", row.axis_mean),
                            format!("{}", row.mean_sq_rel_error),
                            format!("{}", row.std_error),
                            row.n_samples.to_string(),
                        ])?;
                    }
                }
                w.flush()?;
            }
        }

        summary.push_str(&format!(
            "horizon {h}: {} test sets, {} in-sample rows, {} models reported\n",
            tests.len(),
            insample.len(),
            models.len()
        ));
    }

    write_text(&run_dir.join("reports/summary.txt"), &summary)?;
    println!("report: wrote {}", run_dir.join("reports").display());
    Ok(())
}
