//! End-to-end simulation study: simulate an in-sample path with branched
//! out-of-sample paths, list options, build per-horizon sample tables, fit a
//! roster of hedging models, and evaluate everything on the test sets.

use crate::datapipe::{
    build_samples, BuildConfig, CleanRules, CleaningReport, Horizon, PriceModel, SampleTable,
};
use crate::error::{Error, Result};
use crate::evaluator::{self, HedgeStrategy};
use crate::hedgenet::FeatureSet;
use crate::hedgers::{
    fit_hull_white, fit_linear, fit_semilinear, HedgeModel, SemilinearKind, Sensitivity,
};
use crate::listings::{generate_option_universe, ListedContract};
use crate::simkit::{simulate_gbm_stream, simulate_heston_stream, Scheme};
use crate::{PricePath, Scalar};
use chrono::NaiveDate;
use std::io::Write;

/// Configuration of one simulated dataset.
#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub model: PriceModel,
    pub start_date: NaiveDate,
    /// Trading days in the in-sample set (training + validation).
    pub insample_days: u32,
    /// Leading part of the in-sample set used for network training; the
    /// rest is validation.
    pub train_days: u32,
    /// Number of independent out-of-sample paths branching from the
    /// in-sample terminal state.
    pub test_sets: u32,
    /// Trading days per out-of-sample path.
    pub test_days: u32,
    pub horizons: Vec<Horizon>,
    pub r_onr: Scalar,
    pub r: Scalar,
    pub master_seed: u64,
    pub steps_per_day: u32,
    pub scheme: Scheme,
    pub rules: CleanRules,
}

impl StudyConfig {
    /// The desk-scale layout: 450 in-sample days (360 + 90) and twenty
    /// 90-day out-of-sample paths.
    pub fn desk_scale(model: PriceModel, master_seed: u64) -> Self {
        StudyConfig {
            model,
            start_date: NaiveDate::from_ymd_opt(2016, 1, 4).unwrap(),
            insample_days: 450,
            train_days: 360,
            test_sets: 20,
            test_days: 90,
            horizons: vec![Horizon::Days(1), Horizon::Days(2)],
            r_onr: 0.0,
            r: 0.0,
            master_seed,
            steps_per_day: 10,
            scheme: Scheme::Milstein,
            rules: CleanRules::simulation(),
        }
    }

    fn max_horizon_days(&self) -> Result<u32> {
        self.horizons
            .iter()
            .map(|h| match h {
                Horizon::Days(d) => Ok(*d),
                Horizon::Hours(_) => Err(Error::Config(
                    "intraday horizons only apply to tick-ingested data".into(),
                )),
            })
            .try_fold(0u32, |m, d| d.map(|d| m.max(d)))
    }
}

/// Per-horizon sample tables of one simulated dataset.
#[derive(Debug, Clone)]
pub struct HorizonData {
    pub horizon: Horizon,
    pub insample: SampleTable,
    pub insample_report: CleaningReport,
    pub tests: Vec<SampleTable>,
}

/// A fully assembled simulated dataset.
#[derive(Debug, Clone)]
pub struct SimulatedDataset {
    pub insample_path: PricePath,
    /// Branch segments, starting at the in-sample terminal day.
    pub test_paths: Vec<PricePath>,
    pub insample_contracts: Vec<ListedContract>,
    pub per_horizon: Vec<HorizonData>,
}

fn simulate_heston_segment(
    cfg: &StudyConfig,
    first_day: u32,
    n_days: u32,
    stream: u64,
    state: Option<(Scalar, Scalar)>,
) -> Result<PricePath> {
    let PriceModel::Heston { mut params } = cfg.model else {
        return Err(Error::Config("not a Heston study".into()));
    };
    if let Some((s, y)) = state {
        params.s0 = s;
        params.y0 = y.max(1e-12);
    }
    simulate_heston_stream(
        params,
        first_day,
        n_days,
        cfg.steps_per_day,
        cfg.scheme,
        cfg.master_seed,
        stream,
    )
}

/// The GBM parameters of the study (drift 0.1 from a spot of 2000), carried
/// here so branch segments restart from the right state.
#[derive(Debug, Clone, Copy)]
pub struct GbmStudyParams {
    pub s0: Scalar,
    pub mu: Scalar,
}

/// Build the whole dataset: in-sample path, branched test paths, listed
/// contracts, and per-horizon cleaned sample tables.
pub fn simulate_dataset(cfg: &StudyConfig) -> Result<SimulatedDataset> {
    simulate_dataset_with(cfg, GbmStudyParams { s0: 2000.0, mu: 0.1 })
}

/// Same as [`simulate_dataset`] with explicit GBM spot and drift.
pub fn simulate_dataset_with(cfg: &StudyConfig, gbm: GbmStudyParams) -> Result<SimulatedDataset> {
    if cfg.insample_days < 2 || cfg.test_days < 1 || cfg.test_sets < 1 {
        return Err(Error::Config("study needs in-sample and test days".into()));
    }
    if cfg.train_days == 0 || cfg.train_days >= cfg.insample_days {
        return Err(Error::Config(
            "train_days must split the in-sample span into two non-empty parts".into(),
        ));
    }
    let h = cfg.max_horizon_days()?;
    if h == 0 {
        return Err(Error::Config("at least one horizon is required".into()));
    }
    let branch_day = cfg.insample_days - 1;

    // In-sample path continues h extra days so the last observation day has
    // an end-of-period price.
    let insample_path = match cfg.model {
        PriceModel::BlackScholes { sigma } => simulate_gbm_stream(
            crate::GbmParams { s0: gbm.s0, mu: gbm.mu, sigma },
            0,
            branch_day + h,
            cfg.master_seed,
            0,
        )?,
        PriceModel::Heston { .. } => simulate_heston_segment(cfg, 0, branch_day + h, 0, None)?,
    };

    let s_branch = insample_path.spot_at(branch_day).expect("branch day on path");
    let y_branch = insample_path.variance_at(branch_day);

    let mut test_paths = Vec::with_capacity(cfg.test_sets as usize);
    for b in 0..cfg.test_sets {
        let stream = b as u64 + 1;
        let n = cfg.test_days + h;
        let path = match cfg.model {
            PriceModel::BlackScholes { sigma } => simulate_gbm_stream(
                crate::GbmParams { s0: s_branch, mu: gbm.mu, sigma },
                branch_day,
                n,
                cfg.master_seed,
                stream,
            )?,
            PriceModel::Heston { .. } => simulate_heston_segment(
                cfg,
                branch_day,
                n,
                stream,
                Some((s_branch, y_branch.expect("Heston path has variance"))),
            )?,
        };
        test_paths.push(path);
    }

    let insample_contracts = generate_option_universe(&insample_path, cfg.start_date)?;

    // Concatenated path per branch: shared history plus the branch segment.
    let concat = |branch: &PricePath| -> PricePath {
        let cut = branch_day as usize;
        let mut dates = insample_path.dates[..=cut].to_vec();
        let mut spot = insample_path.spot[..=cut].to_vec();
        dates.extend_from_slice(&branch.dates[1..]);
        spot.extend_from_slice(&branch.spot[1..]);
        let variance = insample_path.variance.as_ref().map(|v| {
            let mut out = v[..=cut].to_vec();
            out.extend_from_slice(&branch.variance.as_ref().expect("branch variance")[1..]);
            out
        });
        PricePath {
            dates,
            spot,
            variance,
            seed: cfg.master_seed,
            steps_per_day: insample_path.steps_per_day,
        }
    };

    let mut per_horizon = Vec::with_capacity(cfg.horizons.len());
    for &horizon in &cfg.horizons {
        let build_cfg = BuildConfig {
            model: cfg.model,
            horizon,
            r_onr: cfg.r_onr,
            r: cfg.r,
            start_date: cfg.start_date,
            day_range: (0, cfg.insample_days - 1),
        };
        let (insample, insample_report) =
            build_samples(&insample_path, &insample_contracts, &build_cfg, &cfg.rules)?;

        let mut tests = Vec::with_capacity(test_paths.len());
        for branch in &test_paths {
            let full = concat(branch);
            let contracts = generate_option_universe(&full, cfg.start_date)?;
            let test_cfg = BuildConfig {
                day_range: (cfg.insample_days, cfg.insample_days + cfg.test_days - 1),
                ..build_cfg
            };
            let (table, _) = build_samples(&full, &contracts, &test_cfg, &cfg.rules)?;
            tests.push(table);
        }
        per_horizon.push(HorizonData { horizon, insample, insample_report, tests });
    }

    Ok(SimulatedDataset { insample_path, test_paths, insample_contracts, per_horizon })
}

/// Split an in-sample table chronologically into training and validation
/// parts by distinct trading dates.
pub fn split_train_val(insample: &SampleTable, train_days: u32) -> Result<(SampleTable, SampleTable)> {
    let dates = insample.dates();
    if (dates.len() as u32) <= train_days {
        return Err(Error::Config(format!(
            "in-sample table spans {} days, cannot reserve {train_days} for training",
            dates.len()
        )));
    }
    let cut = dates[train_days as usize];
    let train = SampleTable {
        horizon: insample.horizon,
        rows: insample.rows.iter().filter(|r| r.date < cut).cloned().collect(),
    };
    let val = SampleTable {
        horizon: insample.horizon,
        rows: insample.rows.iter().filter(|r| r.date >= cut).cloned().collect(),
    };
    Ok((train, val))
}

/// Untrained description of a roster model.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Zero,
    BsDelta,
    Fixed { f_call: Scalar, f_put: Scalar },
    Linear { sensitivities: Vec<Sensitivity>, intercept: bool },
    HullWhite { relaxed: bool },
    Semilinear(SemilinearKind),
    HestonAdjusted,
    DeltaVegaNeutral,
}

impl ModelSpec {
    pub fn name(&self) -> String {
        match self {
            ModelSpec::Zero => "zero".into(),
            ModelSpec::BsDelta => "bs_delta".into(),
            ModelSpec::Fixed { .. } => "fixed".into(),
            ModelSpec::Linear { sensitivities, intercept } => {
                let mut n =
                    sensitivities.iter().map(|s| s.label()).collect::<Vec<_>>().join("_");
                if *intercept {
                    n.push_str("_intercept");
                }
                n
            }
            ModelSpec::HullWhite { relaxed: false } => "hull_white".into(),
            ModelSpec::HullWhite { relaxed: true } => "hull_white_relaxed".into(),
            ModelSpec::Semilinear(SemilinearKind::Affine) => "semilinear_1".into(),
            ModelSpec::Semilinear(SemilinearKind::NormalCdf) => "semilinear_2".into(),
            ModelSpec::HestonAdjusted => "heston_adjusted".into(),
            ModelSpec::DeltaVegaNeutral => "delta_vega_neutral".into(),
        }
    }

    /// Parse a roster entry such as "zero", "delta_vega_vanna",
    /// "hull_white_relaxed" or "semilinear_2".
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "zero" => return Ok(ModelSpec::Zero),
            "bs_delta" => return Ok(ModelSpec::BsDelta),
            "fixed" => return Ok(ModelSpec::Fixed { f_call: 0.9, f_put: 1.1 }),
            "hull_white" => return Ok(ModelSpec::HullWhite { relaxed: false }),
            "hull_white_relaxed" => return Ok(ModelSpec::HullWhite { relaxed: true }),
            "semilinear_1" => return Ok(ModelSpec::Semilinear(SemilinearKind::Affine)),
            "semilinear_2" => return Ok(ModelSpec::Semilinear(SemilinearKind::NormalCdf)),
            "heston_adjusted" => return Ok(ModelSpec::HestonAdjusted),
            "delta_vega_neutral" => return Ok(ModelSpec::DeltaVegaNeutral),
            _ => {}
        }
        let mut sensitivities = Vec::new();
        for part in s.split('_') {
            sensitivities.push(match part {
                "delta" => Sensitivity::Delta,
                "vega" => Sensitivity::Vega,
                "gamma" => Sensitivity::Gamma,
                "vanna" => Sensitivity::Vanna,
                other => {
                    return Err(Error::Config(format!(
                        "unknown roster model {s:?} (unrecognized part {other:?})"
                    )))
                }
            });
        }
        Ok(ModelSpec::Linear { sensitivities, intercept: false })
    }

    /// Fit (or instantiate) the model on the in-sample table.
    pub fn fit(&self, insample: &SampleTable, price_model: &PriceModel) -> Result<HedgeModel> {
        match self {
            ModelSpec::Zero => Ok(HedgeModel::Zero),
            ModelSpec::BsDelta => Ok(HedgeModel::BsDelta),
            ModelSpec::Fixed { f_call, f_put } => {
                Ok(HedgeModel::Fixed { f_call: *f_call, f_put: *f_put })
            }
            ModelSpec::Linear { sensitivities, intercept } => {
                fit_linear(insample, sensitivities, *intercept)
            }
            ModelSpec::HullWhite { relaxed } => fit_hull_white(insample, *relaxed),
            ModelSpec::Semilinear(kind) => fit_semilinear(insample, *kind),
            ModelSpec::HestonAdjusted | ModelSpec::DeltaVegaNeutral => {
                let PriceModel::Heston { params } = price_model else {
                    return Err(Error::Config(format!(
                        "{} requires a Heston dataset",
                        self.name()
                    )));
                };
                Ok(match self {
                    ModelSpec::HestonAdjusted => HedgeModel::HestonAdjusted { params: *params },
                    _ => HedgeModel::DeltaVegaNeutral { params: *params },
                })
            }
        }
    }
}

/// The sixteen non-network models of the standard comparison: the zero
/// hedge, the plain delta, the fixed 0.9/1.1 multiples, all eleven
/// sensitivity-subset regressions, and both correction-model variants.
pub fn full_roster() -> Vec<ModelSpec> {
    use Sensitivity::*;
    let mut roster = vec![
        ModelSpec::Zero,
        ModelSpec::BsDelta,
        ModelSpec::Fixed { f_call: 0.9, f_put: 1.1 },
    ];
    let subsets: [&[Sensitivity]; 11] = [
        &[Delta],
        &[Vega],
        &[Gamma],
        &[Vanna],
        &[Delta, Gamma],
        &[Delta, Vega],
        &[Delta, Vanna],
        &[Delta, Vega, Gamma],
        &[Delta, Vega, Vanna],
        &[Delta, Gamma, Vanna],
        &[Delta, Vega, Gamma, Vanna],
    ];
    for s in subsets {
        roster.push(ModelSpec::Linear { sensitivities: s.to_vec(), intercept: false });
    }
    roster.push(ModelSpec::HullWhite { relaxed: false });
    roster.push(ModelSpec::HullWhite { relaxed: true });
    roster
}

/// L2 regularization defaults per dataset kind, horizon and feature set.
pub fn default_l2_alpha(model: &PriceModel, horizon: Horizon, fs: FeatureSet) -> Scalar {
    let two_day = matches!(horizon, Horizon::Days(d) if d >= 2);
    match (model, fs) {
        (PriceModel::BlackScholes { .. }, FeatureSet::MoneynessSigTau) => 1e-4,
        (PriceModel::BlackScholes { .. }, _) => {
            if two_day {
                1e-3
            } else {
                1e-4
            }
        }
        (PriceModel::Heston { .. }, FeatureSet::MoneynessSigTau) => 1e-4,
        (PriceModel::Heston { .. }, _) => 1e-3,
    }
}

/// One row of the evaluation report.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalCell {
    pub model: String,
    pub class: String,
    pub mshe: Scalar,
    /// Percentage improvement against the plain-delta row; negative is
    /// better. Absent for the baseline rows themselves when no baseline is
    /// in the roster.
    pub relative_improvement_pct: Option<Scalar>,
    pub n_samples: usize,
}

/// MSHE table over a set of strategies, averaged across test sets.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub horizon: Horizon,
    pub cells: Vec<EvalCell>,
}

/// Evaluate strategies on the test tables; relative improvements are
/// against the strategy named "bs_delta" when present.
pub fn evaluate_strategies(
    horizon: Horizon,
    tests: &[SampleTable],
    strategies: &[(String, &dyn HedgeStrategy)],
) -> Result<EvalReport> {
    let mut per_model = Vec::with_capacity(strategies.len());
    for (name, strat) in strategies {
        let m = evaluator::mshe_multi(tests, *strat)?;
        per_model.push((name.clone(), m));
    }
    let baseline = per_model.iter().find(|(n, _)| n == "bs_delta").map(|(_, m)| *m);

    let mut cells = Vec::new();
    for (name, m) in &per_model {
        let classes: [(&str, Option<Scalar>, usize); 3] = [
            ("calls", m.calls, m.n_calls),
            ("puts", m.puts, m.n_puts),
            ("both", Some(m.both), m.n_calls + m.n_puts),
        ];
        for (class, value, n) in classes {
            let Some(value) = value else { continue };
            let rel = baseline.and_then(|b| {
                let base = match class {
                    "calls" => b.calls,
                    "puts" => b.puts,
                    _ => Some(b.both),
                }?;
                evaluator::relative_improvement(value, base).ok()
            });
            cells.push(EvalCell {
                model: name.clone(),
                class: class.into(),
                mshe: value,
                relative_improvement_pct: rel,
                n_samples: n,
            });
        }
    }
    Ok(EvalReport { horizon, cells })
}

impl EvalReport {
    pub fn cell(&self, model: &str, class: &str) -> Option<&EvalCell> {
        self.cells.iter().find(|c| c.model == model && c.class == class)
    }

    /// Tidy CSV: horizon,model,class,mshe,rel_improvement_pct,n_samples.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["horizon", "model", "class", "mshe", "rel_improvement_pct", "n_samples"])?;
        for c in &self.cells {
            w.write_record([
                self.horizon.label(),
                c.model.clone(),
                c.class.clone(),
                format!("{}", c.mshe),
                c.relative_improvement_pct.map(|v| format!("{v}")).unwrap_or_default(),
                c.n_samples.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::listings::OptionKind;

    fn tiny_bs_config(seed: u64) -> StudyConfig {
        let mut cfg = StudyConfig::desk_scale(PriceModel::BlackScholes { sigma: 0.2 }, seed);
        cfg.insample_days = 60;
        cfg.train_days = 48;
        cfg.test_sets = 2;
        cfg.test_days = 15;
        cfg.horizons = vec![Horizon::Days(1)];
        cfg
    }

    #[test]
    fn dataset_shapes_and_determinism() {
        let cfg = tiny_bs_config(5);
        let a = simulate_dataset(&cfg).unwrap();
        assert_eq!(a.test_paths.len(), 2);
        assert_eq!(a.per_horizon.len(), 1);
        let hd = &a.per_horizon[0];
        assert_eq!(hd.tests.len(), 2);
        assert!(hd.insample.len() > 1000);
        assert!(hd.insample_report.is_conserved());

        // Branches share the in-sample terminal state.
        for p in &a.test_paths {
            assert_eq!(p.dates[0], 59);
            assert_eq!(p.spot[0], a.insample_path.spot_at(59).unwrap());
        }
        // Branches are mutually distinct.
        assert_ne!(a.test_paths[0].spot, a.test_paths[1].spot);

        let b = simulate_dataset(&cfg).unwrap();
        assert_eq!(a.per_horizon[0].insample, b.per_horizon[0].insample);
        assert_eq!(a.per_horizon[0].tests, b.per_horizon[0].tests);

        let mut other = cfg.clone();
        other.master_seed = 6;
        let c = simulate_dataset(&other).unwrap();
        assert_ne!(a.insample_path.spot, c.insample_path.spot);
    }

    #[test]
    fn chronological_split_has_no_overlap() {
        let cfg = tiny_bs_config(7);
        let ds = simulate_dataset(&cfg).unwrap();
        let hd = &ds.per_horizon[0];
        let (train, val) = split_train_val(&hd.insample, cfg.train_days).unwrap();
        assert!(!train.is_empty() && !val.is_empty());
        let max_train = train.rows.iter().map(|r| r.date).max().unwrap();
        let min_val = val.rows.iter().map(|r| r.date).min().unwrap();
        assert!(max_train < min_val);
        assert_eq!(train.dates().len(), cfg.train_days as usize);

        // Test samples start strictly after the in-sample span.
        let max_insample = hd.insample.rows.iter().map(|r| r.date).max().unwrap();
        for t in &hd.tests {
            let min_test = t.rows.iter().map(|r| r.date).min().unwrap();
            assert!(max_insample < min_test);
        }
    }

    #[test]
    fn roster_names_parse_round_trip() {
        for spec in full_roster() {
            let name = spec.name();
            let parsed = ModelSpec::parse(&name).unwrap();
            assert_eq!(parsed, spec, "{name}");
        }
        assert_eq!(full_roster().len(), 16);
        assert!(ModelSpec::parse("delta_sigma").is_err());
    }

    #[test]
    fn evaluation_report_shape_and_baseline() {
        let cfg = tiny_bs_config(9);
        let ds = simulate_dataset(&cfg).unwrap();
        let hd = &ds.per_horizon[0];
        let zero = ModelSpec::Zero.fit(&hd.insample, &cfg.model).unwrap();
        let bs = ModelSpec::BsDelta.fit(&hd.insample, &cfg.model).unwrap();
        let strategies: Vec<(String, &dyn HedgeStrategy)> = vec![
            ("zero".into(), &zero),
            ("bs_delta".into(), &bs),
        ];
        let report = evaluate_strategies(hd.horizon, &hd.tests, &strategies).unwrap();
        // 2 models x 3 classes.
        assert_eq!(report.cells.len(), 6);
        let zero_both = report.cell("zero", "both").unwrap();
        let bs_both = report.cell("bs_delta", "both").unwrap();
        assert!(zero_both.mshe > bs_both.mshe);
        assert_eq!(bs_both.relative_improvement_pct, Some(0.0));
        assert!(zero_both.relative_improvement_pct.unwrap() > 0.0);

        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("horizon,model,class,mshe"));
        assert_eq!(text.lines().count(), 7);
    }

    #[test]
    fn fitted_roster_models_evaluate_on_bs_data() {
        let cfg = tiny_bs_config(11);
        let ds = simulate_dataset(&cfg).unwrap();
        let hd = &ds.per_horizon[0];
        let spec = ModelSpec::Linear {
            sensitivities: vec![Sensitivity::Delta],
            intercept: false,
        };
        let model = spec.fit(&hd.insample, &cfg.model).unwrap();
        let fits = model.fits().unwrap();
        // On drifting lognormal data the fitted delta coefficient sits near
        // one for both classes.
        assert!((fits.class(OptionKind::Call).coefficients[0] - 1.0).abs() < 0.2);
        assert!((fits.class(OptionKind::Put).coefficients[0] - 1.0).abs() < 0.2);
        let m = evaluator::mshe_multi(&hd.tests, &model).unwrap();
        assert!(m.both > 0.0);

        // Model-implied specs refuse a non-Heston dataset.
        assert!(ModelSpec::HestonAdjusted.fit(&hd.insample, &cfg.model).is_err());
    }
}
