//! Experiment configuration: a flat TOML document in which every key can
//! also be set from the command line. Unknown keys are hard errors.

use anyhow::{bail, Context};
use chrono::NaiveDate;
use deltabench_core::datapipe::{CleanRules, Horizon, PriceModel};
use deltabench_core::hedgenet::FeatureSet;
use deltabench_core::simkit::Scheme;
use deltabench_core::study::{full_roster, ModelSpec, StudyConfig};
use deltabench_core::HestonParams;
use serde::{Deserialize, Serialize};
use std::path::Path;

fn default_horizons() -> Vec<String> {
    vec!["1d".into(), "2d".into()]
}

fn default_start_date() -> String {
    "2016-01-04".into()
}

fn default_s0() -> f64 {
    2000.0
}

fn default_mu() -> f64 {
    0.1
}

fn default_sigma() -> f64 {
    0.2
}

fn default_y0() -> f64 {
    0.04
}

fn default_theta() -> f64 {
    0.04
}

fn default_kappa() -> f64 {
    5.0
}

fn default_sigma_y() -> f64 {
    0.3
}

fn default_rho() -> f64 {
    -0.6
}

fn default_insample_days() -> u32 {
    450
}

fn default_train_days() -> u32 {
    360
}

fn default_test_sets() -> u32 {
    20
}

fn default_test_days() -> u32 {
    90
}

fn default_steps_per_day() -> u32 {
    10
}

fn default_scheme() -> String {
    "milstein".into()
}

fn default_tolerance_min() -> u32 {
    6
}

fn default_ann_epochs() -> u32 {
    300
}

fn default_ann_batch_size() -> usize {
    64
}

fn default_ann_learning_rate() -> f64 {
    1e-4
}

fn default_ann_seeds() -> Vec<u64> {
    vec![0]
}

/// Flat experiment configuration. Every key has a CLI override; unknown
/// keys in the file are rejected.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Price process: "bs" or "heston".
    pub model: String,
    pub output_dir: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_horizons")]
    pub horizons: Vec<String>,
    #[serde(default = "default_start_date")]
    pub start_date: String,

    #[serde(default = "default_s0")]
    pub s0: f64,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_y0")]
    pub y0: f64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_sigma_y")]
    pub sigma_y: f64,
    #[serde(default = "default_rho")]
    pub rho: f64,

    #[serde(default)]
    pub r_onr: f64,
    #[serde(default)]
    pub r: f64,

    #[serde(default = "default_insample_days")]
    pub insample_days: u32,
    #[serde(default = "default_train_days")]
    pub train_days: u32,
    #[serde(default = "default_test_sets")]
    pub test_sets: u32,
    #[serde(default = "default_test_days")]
    pub test_days: u32,
    #[serde(default = "default_steps_per_day")]
    pub steps_per_day: u32,
    #[serde(default = "default_scheme")]
    pub scheme: String,

    /// Models to fit and evaluate; empty means the full standard roster
    /// (plus the model-implied strategies on Heston data).
    #[serde(default)]
    pub roster: Vec<String>,
    /// Network feature sets to train ("m_sigtau", "delta_vega_tau",
    /// "delta_vega_vanna_tau"); empty trains none.
    #[serde(default)]
    pub ann_features: Vec<String>,
    #[serde(default = "default_ann_seeds")]
    pub ann_seeds: Vec<u64>,
    #[serde(default = "default_ann_epochs")]
    pub ann_epochs: u32,
    #[serde(default = "default_ann_batch_size")]
    pub ann_batch_size: usize,
    #[serde(default = "default_ann_learning_rate")]
    pub ann_learning_rate: f64,
    /// L2 penalty override; per-dataset defaults apply when absent.
    pub l2_alpha: Option<f64>,

    /// Remove samples with at most this many calendar days to expiry.
    pub filter_tau_min_days: Option<u32>,
    /// Split evaluation into near-the-money and out-of-the-money halves.
    #[serde(default)]
    pub bucket_moneyness: bool,

    /// Tick-data matching tolerance, in minutes.
    #[serde(default = "default_tolerance_min")]
    pub tolerance_min: u32,
}

/// Command-line overrides; every field mirrors a config key.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct ConfigOverrides {
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub output_dir: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Hedging horizon; repeat for several (e.g. --horizon 1d --horizon 2d).
    #[arg(long = "horizon")]
    pub horizons: Vec<String>,
    #[arg(long)]
    pub start_date: Option<String>,
    #[arg(long)]
    pub s0: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub y0: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub sigma_y: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub r_onr: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub insample_days: Option<u32>,
    #[arg(long)]
    pub train_days: Option<u32>,
    #[arg(long)]
    pub test_sets: Option<u32>,
    #[arg(long)]
    pub test_days: Option<u32>,
    #[arg(long)]
    pub steps_per_day: Option<u32>,
    #[arg(long)]
    pub scheme: Option<String>,
    /// Roster model; repeat for several.
    #[arg(long = "roster-model")]
    pub roster: Vec<String>,
    /// Network feature set; repeat for several.
    #[arg(long = "ann-feature")]
    pub ann_features: Vec<String>,
    /// Network training seed; repeat for several.
    #[arg(long = "ann-seed")]
    pub ann_seeds: Vec<u64>,
    #[arg(long)]
    pub ann_epochs: Option<u32>,
    #[arg(long)]
    pub ann_batch_size: Option<usize>,
    #[arg(long)]
    pub ann_learning_rate: Option<f64>,
    #[arg(long)]
    pub l2_alpha: Option<f64>,
    /// Remove samples with at most this many calendar days to expiry.
    #[arg(long = "filter-tau-min")]
    pub filter_tau_min_days: Option<u32>,
    /// Split evaluation into near-the-money and out-of-the-money halves.
    #[arg(long)]
    pub bucket_moneyness: bool,
    /// Tick matching tolerance in minutes.
    #[arg(long = "tolerance-min")]
    pub tolerance_min: Option<u32>,
}

impl ExperimentConfig {
    pub fn load(path: &Path, overrides: &ConfigOverrides) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg: ExperimentConfig =
            toml::from_str(&text).with_context(|| format!("bad config {}", path.display()))?;
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, o: &ConfigOverrides) {
        macro_rules! set {
            ($field:ident) => {
                if let Some(v) = &o.$field {
                    self.$field = v.clone();
                }
            };
        }
        set!(model);
        set!(output_dir);
        set!(start_date);
        set!(scheme);
        macro_rules! set_copy {
            ($($field:ident),*) => {
                $(if let Some(v) = o.$field {
                    self.$field = v;
                })*
            };
        }
        set_copy!(
            seed,
            s0,
            mu,
            sigma,
            y0,
            theta,
            kappa,
            sigma_y,
            rho,
            r_onr,
            r,
            insample_days,
            train_days,
            test_sets,
            test_days,
            steps_per_day,
            ann_epochs,
            ann_batch_size,
            ann_learning_rate,
            tolerance_min
        );
        if !o.horizons.is_empty() {
            self.horizons = o.horizons.clone();
        }
        if !o.roster.is_empty() {
            self.roster = o.roster.clone();
        }
        if !o.ann_features.is_empty() {
            self.ann_features = o.ann_features.clone();
        }
        if !o.ann_seeds.is_empty() {
            self.ann_seeds = o.ann_seeds.clone();
        }
        if o.l2_alpha.is_some() {
            self.l2_alpha = o.l2_alpha;
        }
        if o.filter_tau_min_days.is_some() {
            self.filter_tau_min_days = o.filter_tau_min_days;
        }
        if o.bucket_moneyness {
            self.bucket_moneyness = true;
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.price_model()?;
        self.parsed_horizons()?;
        self.parsed_scheme()?;
        self.parsed_start_date()?;
        self.roster_specs()?;
        self.feature_sets()?;
        if self.horizons.is_empty() {
            bail!("at least one horizon is required");
        }
        if self.ann_seeds.is_empty() {
            bail!("ann_seeds must not be empty");
        }
        Ok(())
    }

    pub fn price_model(&self) -> anyhow::Result<PriceModel> {
        match self.model.as_str() {
            "bs" => Ok(PriceModel::BlackScholes { sigma: self.sigma }),
            "heston" => Ok(PriceModel::Heston {
                params: HestonParams {
                    s0: self.s0,
                    y0: self.y0,
                    theta: self.theta,
                    kappa: self.kappa,
                    sigma_y: self.sigma_y,
                    rho: self.rho,
                },
            }),
            other => bail!("unknown model {other:?}; expected \"bs\" or \"heston\""),
        }
    }

    pub fn parsed_horizons(&self) -> anyhow::Result<Vec<Horizon>> {
        self.horizons
            .iter()
            .map(|h| Horizon::parse(h).map_err(Into::into))
            .collect()
    }

    pub fn parsed_scheme(&self) -> anyhow::Result<Scheme> {
        match self.scheme.as_str() {
            "euler" => Ok(Scheme::Euler),
            "milstein" => Ok(Scheme::Milstein),
            other => bail!("unknown scheme {other:?}; expected \"euler\" or \"milstein\""),
        }
    }

    pub fn parsed_start_date(&self) -> anyhow::Result<NaiveDate> {
        NaiveDate::parse_from_str(&self.start_date, "%Y-%m-%d")
            .with_context(|| format!("bad start_date {:?}", self.start_date))
    }

    /// The roster to fit: explicit entries, or the standard sixteen plus the
    /// model-implied strategies on Heston data.
    pub fn roster_specs(&self) -> anyhow::Result<Vec<ModelSpec>> {
        if self.roster.is_empty() {
            let mut roster = full_roster();
            if self.model == "heston" {
                roster.push(ModelSpec::HestonAdjusted);
                roster.push(ModelSpec::DeltaVegaNeutral);
            }
            return Ok(roster);
        }
        self.roster
            .iter()
            .map(|name| ModelSpec::parse(name).map_err(Into::into))
            .collect()
    }

    pub fn feature_sets(&self) -> anyhow::Result<Vec<FeatureSet>> {
        self.ann_features
            .iter()
            .map(|f| FeatureSet::parse(f).map_err(Into::into))
            .collect()
    }

    pub fn clean_rules(&self) -> CleanRules {
        let mut rules = CleanRules::simulation();
        rules.max_tau_calendar_days_removed = self.filter_tau_min_days;
        rules
    }

    pub fn study_config(&self) -> anyhow::Result<StudyConfig> {
        Ok(StudyConfig {
            model: self.price_model()?,
            start_date: self.parsed_start_date()?,
            insample_days: self.insample_days,
            train_days: self.train_days,
            test_sets: self.test_sets,
            test_days: self.test_days,
            horizons: self.parsed_horizons()?,
            r_onr: self.r_onr,
            r: self.r,
            master_seed: self.seed,
            steps_per_day: self.steps_per_day,
            scheme: self.parsed_scheme()?,
            rules: self.clean_rules(),
        })
    }

    pub fn canonical_json(&self) -> anyhow::Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn sha256(&self) -> anyhow::Result<String> {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        hasher.update(self.canonical_json()?.as_bytes());
        Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
    }
}
