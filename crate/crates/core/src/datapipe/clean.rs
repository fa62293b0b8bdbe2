//! Row-level cleaning rules.
//!
//! Every rule is a per-row predicate, so the retained set does not depend on
//! the order in which rules are applied. Reported per-rule counts use a
//! fixed canonical order with first-failure attribution.

use super::{Horizon, Sample, SampleTable};
use crate::listings::OptionKind;
use crate::Scalar;
use std::collections::BTreeMap;

/// Which rules are active, plus quote-style fields for real data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CleanRules {
    /// Keep moneyness inside [0.8, 1.5].
    pub moneyness_window: bool,
    /// Remove in-the-money rows (calls with M > 1, puts with M < 1).
    pub otm_only: bool,
    /// Remove rows with less than one trading day to expiry.
    pub min_tau_one_day: bool,
    /// Keep implied volatility inside [1%, 100%].
    pub implied_vol_window: bool,
    /// Remove rows whose model/mid price is below intrinsic value.
    pub negative_time_value: bool,
    /// Remove rows priced below this tick size (0.01 for simulated data).
    pub min_price: Option<Scalar>,
    /// Remove rows with at most this many calendar days to expiry.
    pub max_tau_calendar_days_removed: Option<u32>,
    /// Quote-style rules (end-of-day bid/ask data); unused for simulation.
    pub quote_rules: Option<QuoteRules>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuoteRules {
    pub drop_zero_volume: bool,
    /// Remove rows where the ask is at least twice the bid.
    pub drop_wide_spread: bool,
    /// Remove rows with bid below 0.05.
    pub min_bid: Scalar,
}

/// Quote fields carried separately from the sample row for quote data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuoteFields {
    pub bid: Scalar,
    pub ask: Scalar,
    pub volume: Scalar,
}

impl CleanRules {
    /// Rule set for simulated datasets: moneyness window, out-of-the-money
    /// filter, sub-tick price removal, implied-vol window and the one-day
    /// maturity floor.
    pub fn simulation() -> Self {
        CleanRules {
            moneyness_window: true,
            otm_only: true,
            min_tau_one_day: true,
            implied_vol_window: true,
            negative_time_value: true,
            min_price: Some(0.01),
            max_tau_calendar_days_removed: None,
            quote_rules: None,
        }
    }

    /// Rule set for ingested tick data (matching failures are handled by the
    /// matcher itself).
    pub fn tick_data() -> Self {
        CleanRules {
            moneyness_window: true,
            otm_only: true,
            min_tau_one_day: true,
            implied_vol_window: true,
            negative_time_value: true,
            min_price: None,
            max_tau_calendar_days_removed: None,
            quote_rules: None,
        }
    }

    /// Rules decidable from moneyness and kind alone, checked before any
    /// pricing work. First failure wins, in canonical order.
    pub(crate) fn check_pre_pricing(&self, moneyness: Scalar, kind: OptionKind) -> Option<&'static str> {
        if self.moneyness_window && !(0.8..=1.5).contains(&moneyness) {
            return Some("moneyness_window");
        }
        if self.otm_only {
            let itm = match kind {
                OptionKind::Call => moneyness > 1.0,
                OptionKind::Put => moneyness < 1.0,
            };
            if itm {
                return Some("in_the_money");
            }
        }
        None
    }

    /// Rules needing the fully built row.
    pub(crate) fn check_post_pricing(&self, row: &Sample, _horizon: Horizon) -> Option<&'static str> {
        if self.min_tau_one_day && row.tau < 1.0 / crate::TRADING_DAYS_PER_YEAR - 1e-12 {
            return Some("tau_below_one_day");
        }
        if self.implied_vol_window {
            let iv = row.sigma_impl();
            if !(0.01..=1.0).contains(&iv) {
                return Some("implied_vol_window");
            }
        }
        if self.negative_time_value && row.c0 < row.intrinsic0() {
            return Some("negative_time_value");
        }
        if let Some(tick) = self.min_price {
            if row.c0 < tick {
                return Some("price_below_tick");
            }
        }
        if let Some(days) = self.max_tau_calendar_days_removed {
            if row.tau * 365.0 <= days as Scalar {
                return Some("tau_at_most_calendar_days");
            }
        }
        None
    }

    /// Full per-row check in canonical order.
    pub fn check(&self, row: &Sample, horizon: Horizon) -> Option<&'static str> {
        self.check_pre_pricing(row.moneyness, row.kind())
            .or_else(|| self.check_post_pricing(row, horizon))
    }

    /// Quote-style checks for rows carrying bid/ask/volume information.
    pub fn check_quote(&self, q: &QuoteFields) -> Option<&'static str> {
        let Some(rules) = &self.quote_rules else { return None };
        if rules.drop_zero_volume && q.volume <= 0.0 {
            return Some("zero_volume");
        }
        if rules.drop_wide_spread && q.ask >= 2.0 * q.bid {
            return Some("wide_spread");
        }
        if q.bid < rules.min_bid {
            return Some("low_bid");
        }
        None
    }
}

/// Counts of removed and retained rows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CleaningReport {
    pub input_rows: u64,
    pub retained: u64,
    pub removed_total: u64,
    pub removed_by_rule: BTreeMap<String, u64>,
}

impl CleaningReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub(crate) fn remove(&mut self, rule: &str) {
        self.removed_total += 1;
        *self.removed_by_rule.entry(rule.to_string()).or_insert(0) += 1;
    }

    /// Bookkeeping identity: every input row is either retained or removed.
    pub fn is_conserved(&self) -> bool {
        self.retained + self.removed_total == self.input_rows
            && self.removed_by_rule.values().sum::<u64>() == self.removed_total
    }
}

/// Apply the rules to a table, returning the retained rows and the removal
/// counts.
pub fn clean(table: &SampleTable, rules: &CleanRules) -> (SampleTable, CleaningReport) {
    let mut out = SampleTable::new(table.horizon);
    let mut report = CleaningReport::new();
    report.input_rows = table.rows.len() as u64;
    for row in &table.rows {
        match rules.check(row, table.horizon) {
            Some(rule) => report.remove(rule),
            None => {
                report.retained += 1;
                out.rows.push(row.clone());
            }
        }
    }
    (out, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn row(moneyness: Scalar, cp_flag: u8, sigma_impl: Scalar, tau: Scalar, c0: Scalar) -> Sample {
        Sample {
            index: 0,
            date: NaiveDate::from_ymd_opt(2018, 7, 2).unwrap(),
            sqrt_total_implied_variance: sigma_impl * tau.sqrt(),
            moneyness,
            delta_bs: 0.5,
            vega_bs: 9.0,
            gamma_bs: 0.02,
            vanna_bs: 0.1,
            s0: 100.0,
            s1: 99.0,
            c0,
            r_onr: 0.0,
            cp_flag,
            tau,
            r: 0.0,
            strike: 100.0 / moneyness,
            y0: None,
            y1: None,
            c1: c0 * 0.9,
        }
    }

    fn table(rows: Vec<Sample>) -> SampleTable {
        SampleTable { horizon: Horizon::Days(1), rows }
    }

    #[test]
    fn named_rule_examples() {
        let rules = CleanRules::simulation();
        // Moneyness outside [0.8, 1.5].
        let bad_m = row(1.6, 1, 0.2, 0.1, 2.0);
        assert_eq!(rules.check(&bad_m, Horizon::Days(1)), Some("moneyness_window"));
        // An out-of-the-money call with sane vol and positive time value stays.
        let good = row(0.95, 0, 0.2, 0.1, 2.0);
        assert_eq!(rules.check(&good, Horizon::Days(1)), None);
        // In-the-money call.
        let itm = row(1.05, 0, 0.2, 0.1, 6.0);
        assert_eq!(rules.check(&itm, Horizon::Days(1)), Some("in_the_money"));
        // Implied vol outside [1%, 100%].
        let wild = row(0.95, 0, 1.2, 0.1, 9.0);
        assert_eq!(rules.check(&wild, Horizon::Days(1)), Some("implied_vol_window"));
        // Sub-tick price.
        let dust = row(0.95, 0, 0.2, 0.1, 0.005);
        assert_eq!(rules.check(&dust, Horizon::Days(1)), Some("price_below_tick"));
        // Short maturity.
        let stub = row(0.95, 0, 0.2, 0.5 / 253.0, 2.0);
        assert_eq!(rules.check(&stub, Horizon::Days(1)), Some("tau_below_one_day"));
    }

    #[test]
    fn quote_rule_examples() {
        let mut rules = CleanRules::tick_data();
        rules.quote_rules = Some(QuoteRules {
            drop_zero_volume: true,
            drop_wide_spread: true,
            min_bid: 0.05,
        });
        let q = QuoteFields { bid: 0.04, ask: 0.06, volume: 10.0 };
        assert_eq!(rules.check_quote(&q), Some("low_bid"));
        let q = QuoteFields { bid: 1.0, ask: 2.0, volume: 10.0 };
        assert_eq!(rules.check_quote(&q), Some("wide_spread"));
        let q = QuoteFields { bid: 1.0, ask: 1.1, volume: 0.0 };
        assert_eq!(rules.check_quote(&q), Some("zero_volume"));
        let q = QuoteFields { bid: 1.0, ask: 1.1, volume: 5.0 };
        assert_eq!(rules.check_quote(&q), None);
    }

    #[test]
    fn maturity_filter_uses_calendar_days() {
        let mut rules = CleanRules::simulation();
        rules.max_tau_calendar_days_removed = Some(14);
        // 14/365 years or less is removed.
        let short = row(0.95, 0, 0.2, 13.0 / 365.0, 2.0);
        assert_eq!(rules.check(&short, Horizon::Days(1)), Some("tau_at_most_calendar_days"));
        let long = row(0.95, 0, 0.2, 20.0 / 365.0, 2.0);
        assert_eq!(rules.check(&long, Horizon::Days(1)), None);
    }

    #[test]
    fn report_conservation_and_idempotence() {
        let rows = vec![
            row(0.95, 0, 0.2, 0.1, 2.0),
            row(1.6, 1, 0.2, 0.1, 2.0),
            row(1.05, 1, 0.2, 0.1, 2.0),
            row(0.9, 0, 0.005, 0.1, 2.0),
            row(1.2, 1, 0.3, 0.1, 0.001),
        ];
        let t = table(rows);
        let rules = CleanRules::simulation();
        let (cleaned, report) = clean(&t, &rules);
        assert!(report.is_conserved());
        assert_eq!(report.input_rows, 5);
        assert_eq!(report.retained as usize, cleaned.len());
        // Cleaning an already-clean table removes nothing.
        let (again, report2) = clean(&cleaned, &rules);
        assert_eq!(again, cleaned);
        assert_eq!(report2.removed_total, 0);
    }

    #[test]
    fn retained_set_is_order_independent() {
        // Applying single-rule passes in two different orders retains the
        // same set as one combined pass.
        let rows = vec![
            row(0.95, 0, 0.2, 0.1, 2.0),
            row(1.6, 0, 0.2, 0.1, 2.0),
            row(1.05, 0, 0.2, 0.1, 6.0),
            row(0.9, 0, 1.5, 0.1, 2.0),
            row(0.85, 0, 0.2, 0.0005, 2.0),
            row(1.3, 1, 0.2, 0.2, 0.004),
        ];
        let t = table(rows);
        let full = CleanRules::simulation();

        let single = |f: fn(&mut CleanRules)| {
            let mut r = CleanRules {
                moneyness_window: false,
                otm_only: false,
                min_tau_one_day: false,
                implied_vol_window: false,
                negative_time_value: false,
                min_price: None,
                max_tau_calendar_days_removed: None,
                quote_rules: None,
            };
            f(&mut r);
            r
        };
        let passes: Vec<CleanRules> = vec![
            single(|r| r.moneyness_window = true),
            single(|r| r.otm_only = true),
            single(|r| r.min_tau_one_day = true),
            single(|r| r.implied_vol_window = true),
            single(|r| r.min_price = Some(0.01)),
        ];

        let apply_in_order = |order: &[usize]| {
            let mut cur = t.clone();
            for &i in order {
                cur = clean(&cur, &passes[i]).0;
            }
            cur
        };
        let forward = apply_in_order(&[0, 1, 2, 3, 4]);
        let backward = apply_in_order(&[4, 3, 2, 1, 0]);
        let combined = clean(&t, &full).0;
        assert_eq!(forward, backward);
        assert_eq!(forward, combined);
    }
}
