//! Tick-data ingestion: volume-weighted aggregation of simultaneous trades
//! and end-of-period matching with a tolerance window.

use super::{normalize, Horizon, Sample, SampleTable};
use crate::error::{Error, Result};
use crate::listings::{OptionKind, TradingCalendar};
use crate::pricer;
use crate::{Scalar, TRADING_DAYS_PER_YEAR};
use chrono::{DateTime, Datelike, Duration, NaiveDate, NaiveDateTime};
use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;

/// One option trade. Timestamps are microseconds since the Unix epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct Tick {
    pub timestamp_us: i64,
    pub contract: String,
    pub price: Scalar,
    pub volume: Scalar,
}

/// One trade in the hedging instrument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnderlyingTick {
    pub timestamp_us: i64,
    pub price: Scalar,
    pub volume: Scalar,
}

/// Static description of a tradable contract referenced by tick data.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractMeta {
    pub id: String,
    pub kind: OptionKind,
    pub strike: Scalar,
    pub expiry: NaiveDate,
}

/// Outcome counts of a matching pass.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatchReport {
    pub input_trades: u64,
    /// Trades after volume-weighted aggregation of identical timestamps.
    pub aggregated_trades: u64,
    pub matched: u64,
    pub dropped: BTreeMap<String, u64>,
}

impl MatchReport {
    fn drop_one(&mut self, reason: &str) {
        *self.dropped.entry(reason.to_string()).or_insert(0) += 1;
    }

    pub fn is_conserved(&self) -> bool {
        self.matched + self.dropped.values().sum::<u64>() == self.aggregated_trades
    }
}

fn datetime(us: i64) -> Result<NaiveDateTime> {
    DateTime::from_timestamp_micros(us)
        .map(|d| d.naive_utc())
        .ok_or_else(|| Error::Input(format!("timestamp {us} out of range")))
}

fn is_weekday(d: NaiveDate) -> bool {
    d.weekday().num_days_from_monday() < 5
}

/// End-of-period target timestamp: same time of day `n` weekdays later, or a
/// fixed number of hours for intraday horizons.
fn horizon_target(us: i64, horizon: Horizon) -> Result<i64> {
    match horizon {
        Horizon::Hours(h) => Ok(us + h as i64 * 3_600_000_000),
        Horizon::Days(n) => {
            let dt = datetime(us)?;
            let mut date = dt.date();
            let mut left = n;
            while left > 0 {
                date += Duration::days(1);
                if is_weekday(date) {
                    left -= 1;
                }
            }
            Ok(us + (date - dt.date()).num_days() * 86_400_000_000)
        }
    }
}

fn check_sorted<T, F: Fn(&T) -> i64>(items: &[T], ts: F, what: &str) -> Result<()> {
    for w in items.windows(2) {
        if ts(&w[1]) < ts(&w[0]) {
            return Err(Error::Input(format!("{what} not sorted by timestamp")));
        }
    }
    Ok(())
}

/// Volume-weighted aggregation of entries sharing one key.
fn vw_aggregate(entries: &[(i64, Scalar, Scalar)]) -> Vec<(i64, Scalar)> {
    let mut out: Vec<(i64, Scalar)> = Vec::with_capacity(entries.len());
    let mut i = 0;
    while i < entries.len() {
        let ts = entries[i].0;
        let mut pv = 0.0;
        let mut v = 0.0;
        let mut n: Scalar = 0.0;
        while i < entries.len() && entries[i].0 == ts {
            pv += entries[i].1 * entries[i].2;
            v += entries[i].2;
            n += 1.0;
            i += 1;
        }
        // Zero total volume falls back to the plain average.
        let price = if v > 0.0 { pv / v } else { pv / n.max(1.0) };
        out.push((ts, price));
    }
    out
}

/// Match option trades with the underlying and their own end-of-period
/// prices, producing normalized sample rows.
///
/// Each trade takes the most recent (volume-weighted) underlying price at or
/// before its timestamp, and its end-of-period price from the first trade of
/// the same contract inside `[target, target + tolerance]`. Trades without a
/// match are dropped and counted.
pub fn match_ticks(
    trades: &[Tick],
    underlying: &[UnderlyingTick],
    contracts: &[ContractMeta],
    horizon: Horizon,
    tolerance_minutes: u32,
    r: Scalar,
    r_onr: Scalar,
) -> Result<(SampleTable, MatchReport)> {
    check_sorted(trades, |t| t.timestamp_us, "option trades")?;
    check_sorted(underlying, |t| t.timestamp_us, "underlying ticks")?;
    let meta: HashMap<&str, &ContractMeta> =
        contracts.iter().map(|c| (c.id.as_str(), c)).collect();

    let mut report = MatchReport { input_trades: trades.len() as u64, ..Default::default() };

    // Aggregate simultaneous trades per contract, preserving global order.
    let mut per_contract: HashMap<&str, Vec<(i64, Scalar, Scalar)>> = HashMap::new();
    for t in trades {
        per_contract
            .entry(t.contract.as_str())
            .or_default()
            .push((t.timestamp_us, t.price, t.volume));
    }
    let aggregated: HashMap<&str, Vec<(i64, Scalar)>> = per_contract
        .iter()
        .map(|(k, v)| (*k, vw_aggregate(v)))
        .collect();

    let under: Vec<(i64, Scalar)> = vw_aggregate(
        &underlying
            .iter()
            .map(|u| (u.timestamp_us, u.price, u.volume))
            .collect::<Vec<_>>(),
    );
    let under_at_or_before = |ts: i64| -> Option<Scalar> {
        let idx = under.partition_point(|(t, _)| *t <= ts);
        (idx > 0).then(|| under[idx - 1].1)
    };

    // Trading-day calendar anchored at the first weekday seen, for maturity
    // day counts.
    let mut anchor: Option<TradingCalendar> = None;
    let tol_us = tolerance_minutes as i64 * 60_000_000;
    let mut table = SampleTable::new(horizon);
    let mut index = 0u64;

    // Deterministic iteration: contracts in id order.
    let mut ids: Vec<&str> = aggregated.keys().copied().collect();
    ids.sort_unstable();
    report.aggregated_trades = aggregated.values().map(|v| v.len() as u64).sum();

    for id in ids {
        let series = &aggregated[id];
        let Some(cmeta) = meta.get(id) else {
            for _ in series {
                report.drop_one("unknown_contract");
            }
            continue;
        };
        for (i, &(ts, c0)) in series.iter().enumerate() {
            let trade_date = datetime(ts)?.date();
            if !is_weekday(trade_date) {
                report.drop_one("weekend_trade");
                continue;
            }
            let cal = match &anchor {
                Some(c) => *c,
                None => {
                    let c = TradingCalendar::new(trade_date)?;
                    anchor = Some(c);
                    c
                }
            };
            let Some(day_idx) = cal.day_index(trade_date) else {
                report.drop_one("before_calendar_anchor");
                continue;
            };
            let Some(expiry_idx) = cal.day_index(cmeta.expiry) else {
                report.drop_one("expired_contract");
                continue;
            };
            if expiry_idx <= day_idx {
                report.drop_one("expired_contract");
                continue;
            }
            let tau = (expiry_idx - day_idx) as Scalar / TRADING_DAYS_PER_YEAR;

            let Some(s0) = under_at_or_before(ts) else {
                report.drop_one("no_underlying");
                continue;
            };
            let target = horizon_target(ts, horizon)?;
            // First same-contract trade at or after the target.
            let next = series[i..].partition_point(|(t, _)| *t < target) + i;
            let Some(&(end_ts, c1)) = series.get(next).filter(|(t, _)| *t <= target + tol_us)
            else {
                report.drop_one("no_end_price");
                continue;
            };
            let Some(s1) = under_at_or_before(end_ts) else {
                report.drop_one("no_underlying");
                continue;
            };

            let sigma_impl = match pricer::implied_vol(c0, s0, cmeta.strike, tau, r, cmeta.kind) {
                Ok(iv) => iv.sigma_impl,
                Err(_) => {
                    report.drop_one("iv_inversion_failed");
                    continue;
                }
            };
            let quote = pricer::bs_greeks(s0, cmeta.strike, tau, sigma_impl, r, cmeta.kind)?;
            table.rows.push(normalize(&Sample {
                index,
                date: trade_date,
                sqrt_total_implied_variance: sigma_impl * tau.sqrt(),
                moneyness: s0 / cmeta.strike,
                delta_bs: quote.delta,
                vega_bs: quote.vega,
                gamma_bs: quote.gamma,
                vanna_bs: quote.vanna,
                s0,
                s1,
                c0,
                r_onr,
                cp_flag: cmeta.kind.cp_flag(),
                tau,
                r,
                strike: cmeta.strike,
                y0: None,
                y1: None,
                c1,
            }));
            index += 1;
            report.matched += 1;
        }
    }
    // Rows were produced per contract; restore global chronology.
    table.rows.sort_by_key(|r| (r.date, r.index));
    for (i, row) in table.rows.iter_mut().enumerate() {
        row.index = i as u64;
    }
    Ok((table, report))
}

/// Read `timestamp_us,contract_id,price,volume` rows.
pub fn read_ticks_csv<R: BufRead>(input: R) -> Result<Vec<Tick>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() < 4 {
            return Err(Error::Input(format!("short tick row: {rec:?}")));
        }
        out.push(Tick {
            timestamp_us: rec[0]
                .parse()
                .map_err(|e| Error::Input(format!("bad timestamp: {e}")))?,
            contract: rec[1].to_string(),
            price: rec[2].parse().map_err(|e| Error::Input(format!("bad price: {e}")))?,
            volume: rec[3].parse().map_err(|e| Error::Input(format!("bad volume: {e}")))?,
        });
    }
    Ok(out)
}

/// Read `timestamp_us,price,volume` rows.
pub fn read_underlying_csv<R: BufRead>(input: R) -> Result<Vec<UnderlyingTick>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() < 3 {
            return Err(Error::Input(format!("short underlying row: {rec:?}")));
        }
        out.push(UnderlyingTick {
            timestamp_us: rec[0]
                .parse()
                .map_err(|e| Error::Input(format!("bad timestamp: {e}")))?,
            price: rec[1].parse().map_err(|e| Error::Input(format!("bad price: {e}")))?,
            volume: rec[2].parse().map_err(|e| Error::Input(format!("bad volume: {e}")))?,
        });
    }
    Ok(out)
}

/// Read contract metadata: `id,kind,strike,expiry[,...]`; extra columns from
/// the listings export are ignored.
pub fn read_contract_meta_csv<R: BufRead>(input: R) -> Result<Vec<ContractMeta>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() < 4 {
            return Err(Error::Input(format!("short contract row: {rec:?}")));
        }
        out.push(ContractMeta {
            id: rec[0].to_string(),
            kind: OptionKind::parse(&rec[1])?,
            strike: rec[2].parse().map_err(|e| Error::Input(format!("bad strike: {e}")))?,
            expiry: NaiveDate::parse_from_str(&rec[3], "%Y-%m-%d")
                .map_err(|e| Error::Input(format!("bad expiry: {e}")))?,
        });
    }
    Ok(out)
}
