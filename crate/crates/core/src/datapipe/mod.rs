//! Sample-table assembly and preparation.
//!
//! Each row pairs one option with one trading day: the features used by the
//! statistical models, the bookkeeping needed to value a one-period hedge,
//! and the end-of-period option price as the target. Rows are normalized so
//! the underlying starts every period at 100.

mod clean;
mod io;
mod ticks;
mod windows;

pub use clean::{clean, CleanRules, CleaningReport};
pub use io::{read_samples_csv, write_cleaning_report_csv, write_samples_csv, write_windows_csv};
pub use ticks::{
    match_ticks, read_contract_meta_csv, read_ticks_csv, read_underlying_csv, ContractMeta,
    MatchReport, Tick, UnderlyingTick,
};
pub use windows::{split_windows, SplitMode, WindowSplit};

use crate::error::{Error, Result};
use crate::listings::{ListedContract, OptionKind, TradingCalendar};
use crate::pricer;

use crate::{HestonParams, PricePath, Scalar, TRADING_DAYS_PER_YEAR};
use chrono::NaiveDate;

/// Hedging-period length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Horizon {
    /// Whole trading days (the simulation study uses 1 and 2).
    Days(u32),
    /// Intraday horizon in hours, for tick-ingested data.
    Hours(u32),
}

/// Trading hours per day used to convert intraday horizons to year
/// fractions.
pub const TRADING_HOURS_PER_DAY: f64 = 8.0;

impl Horizon {
    pub fn years(self) -> f64 {
        match self {
            Horizon::Days(d) => d as f64 / TRADING_DAYS_PER_YEAR,
            Horizon::Hours(h) => h as f64 / (TRADING_HOURS_PER_DAY * TRADING_DAYS_PER_YEAR),
        }
    }

    pub fn label(self) -> String {
        match self {
            Horizon::Days(d) => format!("{d}d"),
            Horizon::Hours(h) => format!("{h}h"),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let (num, unit) = s.split_at(s.len().saturating_sub(1));
        let n: u32 = num
            .parse()
            .map_err(|_| Error::Config(format!("bad horizon {s:?}; expected forms like 1d or 1h")))?;
        match unit {
            "d" => Ok(Horizon::Days(n)),
            "h" => Ok(Horizon::Hours(n)),
            _ => Err(Error::Config(format!("bad horizon {s:?}; expected forms like 1d or 1h"))),
        }
    }
}

/// One (option, day) observation row.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub index: u64,
    pub date: NaiveDate,
    // Features.
    pub sqrt_total_implied_variance: Scalar,
    pub moneyness: Scalar,
    pub delta_bs: Scalar,
    pub vega_bs: Scalar,
    pub gamma_bs: Scalar,
    pub vanna_bs: Scalar,
    // Additional information.
    pub s0: Scalar,
    pub s1: Scalar,
    pub c0: Scalar,
    pub r_onr: Scalar,
    pub cp_flag: u8,
    pub tau: Scalar,
    pub r: Scalar,
    pub strike: Scalar,
    /// Instantaneous variance at the start of the period (simulated Heston
    /// data only).
    pub y0: Option<Scalar>,
    /// Instantaneous variance at the end of the period (simulated Heston
    /// data only).
    pub y1: Option<Scalar>,
    // Target.
    pub c1: Scalar,
}

impl Sample {
    pub fn kind(&self) -> OptionKind {
        if self.cp_flag == 1 {
            OptionKind::Put
        } else {
            OptionKind::Call
        }
    }

    pub fn sigma_impl(&self) -> Scalar {
        self.sqrt_total_implied_variance / self.tau.sqrt()
    }

    /// Gross risk-free return over the hedging period.
    pub fn gross_return(&self, horizon: Horizon) -> Scalar {
        1.0 + self.r_onr * horizon.years()
    }

    /// Intrinsic value at the start of the period.
    pub fn intrinsic0(&self) -> Scalar {
        match self.kind() {
            OptionKind::Call => (self.s0 - self.strike).max(0.0),
            OptionKind::Put => (self.strike - self.s0).max(0.0),
        }
    }

    pub fn is_normalized(&self) -> bool {
        (self.s0 - 100.0).abs() < 1e-9
    }
}

/// Rescale a row so the underlying starts the period at exactly 100.
///
/// Prices and the strike scale linearly; delta, vanna and the feature
/// columns are scale-free; vega scales like a price and gamma like an
/// inverse price. Idempotent.
pub fn normalize(sample: &Sample) -> Sample {
    let scale = 100.0 / sample.s0;
    let mut out = sample.clone();
    out.s0 = 100.0;
    out.s1 = sample.s1 * scale;
    out.c0 = sample.c0 * scale;
    out.c1 = sample.c1 * scale;
    out.strike = sample.strike * scale;
    out.vega_bs = sample.vega_bs * scale;
    out.gamma_bs = sample.gamma_bs / scale;
    out
}

/// A set of rows sharing one hedging horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTable {
    pub horizon: Horizon,
    pub rows: Vec<Sample>,
}

impl SampleTable {
    pub fn new(horizon: Horizon) -> Self {
        SampleTable { horizon, rows: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Distinct dates present, ascending.
    pub fn dates(&self) -> Vec<NaiveDate> {
        let mut d: Vec<NaiveDate> = self.rows.iter().map(|r| r.date).collect();
        d.sort();
        d.dedup();
        d
    }

    /// Rows whose date lies in the inclusive range, preserving order.
    pub fn slice_by_date(&self, start: NaiveDate, end: NaiveDate) -> SampleTable {
        SampleTable {
            horizon: self.horizon,
            rows: self.rows.iter().filter(|r| r.date >= start && r.date <= end).cloned().collect(),
        }
    }

    pub fn normalize_all(&mut self) {
        for row in &mut self.rows {
            *row = normalize(row);
        }
    }
}

/// Pricing model used to mark simulated options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriceModel {
    BlackScholes { sigma: Scalar },
    /// Pricing measure with the same parameters as the simulation measure.
    Heston { params: HestonParams },
}

/// Inputs for assembling a sample table from a simulated path.
#[derive(Debug, Clone, Copy)]
pub struct BuildConfig {
    pub model: PriceModel,
    pub horizon: Horizon,
    /// Overnight rate entering the hedge financing.
    pub r_onr: Scalar,
    /// Flat pricing rate.
    pub r: Scalar,
    pub start_date: NaiveDate,
    /// Inclusive day-index range for which rows are emitted.
    pub day_range: (u32, u32),
}

fn intrinsic(kind: OptionKind, s: Scalar, k: Scalar) -> Scalar {
    match kind {
        OptionKind::Call => (s - k).max(0.0),
        OptionKind::Put => (k - s).max(0.0),
    }
}

/// Assemble one row per (contract, live day) over the configured day range,
/// applying the cleaning rules as rows are built. Rows whose end-of-period
/// price does not exist (the contract expires inside the horizon or the path
/// ends) are dropped and counted, as are rows whose implied volatility
/// cannot be inverted.
pub fn build_samples(
    path: &PricePath,
    contracts: &[ListedContract],
    cfg: &BuildConfig,
    rules: &CleanRules,
) -> Result<(SampleTable, CleaningReport)> {
    let dt_days = match cfg.horizon {
        Horizon::Days(d) if d >= 1 => d,
        Horizon::Days(_) => return Err(Error::Config("horizon must be at least one day".into())),
        Horizon::Hours(_) => {
            return Err(Error::Config(
                "intraday horizons only apply to tick-ingested data".into(),
            ))
        }
    };
    let calendar = TradingCalendar::new(cfg.start_date)?;
    let path_end = *path
        .dates
        .last()
        .ok_or_else(|| Error::Input("empty path".into()))?;

    let mut table = SampleTable::new(cfg.horizon);
    let mut report = CleaningReport::new();
    let mut index = 0u64;

    for contract in contracts {
        let Some(expiry_day) = contract.expiry_day else {
            continue; // expires beyond the calendar horizon of interest
        };
        // Observation days: live, inside the requested range, with at least
        // one trading day to expiry.
        let d_lo = contract.first_day.max(cfg.day_range.0);
        let d_hi = contract.last_day.min(cfg.day_range.1).min(expiry_day.saturating_sub(1));
        if d_lo > d_hi {
            continue;
        }

        // Model prices of this contract by day, computed at most once each.
        let mut price_by_day: Vec<Option<Scalar>> = vec![None; (d_hi - d_lo + dt_days + 1) as usize];
        let mut price_at = |day: u32, path: &PricePath| -> Result<Scalar> {
            let slot = (day - d_lo) as usize;
            if let Some(p) = price_by_day[slot] {
                return Ok(p);
            }
            let s = path.spot_at(day).expect("day inside path");
            let tau = (expiry_day - day) as Scalar / TRADING_DAYS_PER_YEAR;
            let p = match cfg.model {
                PriceModel::BlackScholes { sigma } => {
                    pricer::bs_price(s, contract.strike, tau, sigma, cfg.r, contract.kind)?
                }
                PriceModel::Heston { params } => {
                    let y = path.variance_at(day).ok_or_else(|| {
                        Error::Input("Heston model requires a variance path".into())
                    })?;
                    pricer::heston_price(
                        &params,
                        s,
                        y.max(1e-12),
                        contract.strike,
                        tau,
                        cfg.r,
                        contract.kind,
                    )?
                }
            };
            price_by_day[slot] = Some(p);
            Ok(p)
        };

        for day in d_lo..=d_hi {
            report.input_rows += 1;
            let end_day = day + dt_days;
            if end_day > expiry_day || end_day > path_end {
                report.remove("end_of_period_missing");
                continue;
            }
            let s0 = path.spot_at(day).expect("day inside path");
            let moneyness = s0 / contract.strike;
            // Rules that need no pricing run first, in the canonical order.
            if let Some(rule) = rules.check_pre_pricing(moneyness, contract.kind) {
                report.remove(rule);
                continue;
            }
            let tau = (expiry_day - day) as Scalar / TRADING_DAYS_PER_YEAR;
            let s1 = path.spot_at(end_day).expect("end day inside path");
            let c0 = price_at(day, path)?;
            let c1 = if end_day == expiry_day {
                intrinsic(contract.kind, s1, contract.strike)
            } else {
                price_at(end_day, path)?
            };

            let sigma_impl = match cfg.model {
                PriceModel::BlackScholes { sigma } => sigma,
                PriceModel::Heston { .. } => {
                    match pricer::implied_vol(c0, s0, contract.strike, tau, cfg.r, contract.kind) {
                        Ok(iv) => iv.sigma_impl,
                        Err(_) => {
                            report.remove("iv_inversion_failed");
                            continue;
                        }
                    }
                }
            };
            let quote =
                pricer::bs_greeks(s0, contract.strike, tau, sigma_impl, cfg.r, contract.kind)?;

            let (y0, y1) = match cfg.model {
                PriceModel::BlackScholes { .. } => (None, None),
                PriceModel::Heston { .. } => (
                    path.variance_at(day).map(|y| y.max(1e-12)),
                    path.variance_at(end_day).map(|y| y.max(1e-12)),
                ),
            };

            let row = normalize(&Sample {
                index,
                date: calendar.date(day),
                sqrt_total_implied_variance: sigma_impl * tau.sqrt(),
                moneyness,
                delta_bs: quote.delta,
                vega_bs: quote.vega,
                gamma_bs: quote.gamma,
                vanna_bs: quote.vanna,
                s0,
                s1,
                c0,
                r_onr: cfg.r_onr,
                cp_flag: contract.kind.cp_flag(),
                tau,
                r: cfg.r,
                strike: contract.strike,
                y0,
                y1,
                c1,
            });

            if let Some(rule) = rules.check_post_pricing(&row, cfg.horizon) {
                report.remove(rule);
                continue;
            }
            report.retained += 1;
            table.rows.push(Sample { index, ..row });
            index += 1;
        }
    }
    Ok((table, report))
}
