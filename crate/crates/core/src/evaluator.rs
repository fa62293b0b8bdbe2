//! Evaluation of hedging strategies under the normalized mean squared
//! hedging error, plus the diagnostic statistics derived from it.

use crate::datapipe::{Horizon, Sample, SampleTable};
use crate::error::{Error, Result};
use crate::hedgenet::TrainedNet;
use crate::hedgers::{HedgeModel, HedgeRatio};
use crate::listings::OptionKind;
use crate::pricer;
use crate::Scalar;
use chrono::NaiveDate;
use std::collections::BTreeMap;

/// Anything that produces a hedging position for a sample.
pub trait HedgeStrategy {
    fn strategy_name(&self) -> String;
    fn position(&self, sample: &Sample, horizon: Horizon) -> Result<HedgeRatio>;
}

impl HedgeStrategy for HedgeModel {
    fn strategy_name(&self) -> String {
        self.name()
    }

    fn position(&self, sample: &Sample, horizon: Horizon) -> Result<HedgeRatio> {
        self.hedge_ratio(sample, horizon)
    }
}

impl HedgeStrategy for TrainedNet {
    fn strategy_name(&self) -> String {
        format!("ann_{}", self.config.feature_set.label())
    }

    fn position(&self, sample: &Sample, _horizon: Horizon) -> Result<HedgeRatio> {
        Ok(HedgeRatio { delta: self.delta(sample)?, atm: None })
    }
}

/// End-of-period value of the hedged short-option portfolio.
pub fn hedged_value(sample: &Sample, ratio: &HedgeRatio, horizon: Horizon) -> Scalar {
    let gross = sample.gross_return(horizon);
    let mut value =
        ratio.delta * sample.s1 + gross * (sample.c0 - ratio.delta * sample.s0) - sample.c1;
    if let Some(leg) = &ratio.atm {
        value += leg.eta * (leg.c1 - gross * leg.c0);
    }
    value
}

/// Mean squared hedging error per option class. The `both` figure is the
/// pooled mean, identically the sample-count-weighted average of the call
/// and put figures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMshe {
    pub calls: Option<Scalar>,
    pub puts: Option<Scalar>,
    pub both: Scalar,
    pub n_calls: usize,
    pub n_puts: usize,
}

impl ClassMshe {
    pub fn by_kind(&self, kind: OptionKind) -> Option<Scalar> {
        match kind {
            OptionKind::Call => self.calls,
            OptionKind::Put => self.puts,
        }
    }
}

/// Normalized squared hedging error of one sample.
fn squared_error(sample: &Sample, ratio: &HedgeRatio, horizon: Horizon) -> Scalar {
    let v = hedged_value(sample, ratio, horizon);
    let scaled = 100.0 * v / sample.s0;
    scaled * scaled
}

/// MSHE of a strategy over a table, per class.
pub fn mshe<H: HedgeStrategy + ?Sized>(table: &SampleTable, strategy: &H) -> Result<ClassMshe> {
    if table.is_empty() {
        return Err(Error::Evaluation("cannot evaluate an empty table".into()));
    }
    let mut sum = [0.0; 2];
    let mut n = [0usize; 2];
    for row in &table.rows {
        let ratio = strategy.position(row, table.horizon)?;
        let k = row.cp_flag as usize;
        sum[k] += squared_error(row, &ratio, table.horizon);
        n[k] += 1;
    }
    Ok(ClassMshe {
        calls: (n[0] > 0).then(|| sum[0] / n[0] as Scalar),
        puts: (n[1] > 0).then(|| sum[1] / n[1] as Scalar),
        both: (sum[0] + sum[1]) / (n[0] + n[1]) as Scalar,
        n_calls: n[0],
        n_puts: n[1],
    })
}

/// MSHE averaged over several test tables: the per-class figures are
/// unweighted means of the per-table figures, so every test set counts
/// equally.
pub fn mshe_multi<H: HedgeStrategy + ?Sized>(
    tables: &[SampleTable],
    strategy: &H,
) -> Result<ClassMshe> {
    if tables.is_empty() {
        return Err(Error::Evaluation("no test tables".into()));
    }
    let mut acc = [0.0; 3];
    let mut cnt = [0usize; 3];
    let mut n_calls = 0;
    let mut n_puts = 0;
    for t in tables {
        let m = mshe(t, strategy)?;
        if let Some(c) = m.calls {
            acc[0] += c;
            cnt[0] += 1;
        }
        if let Some(p) = m.puts {
            acc[1] += p;
            cnt[1] += 1;
        }
        acc[2] += m.both;
        cnt[2] += 1;
        n_calls += m.n_calls;
        n_puts += m.n_puts;
    }
    Ok(ClassMshe {
        calls: (cnt[0] > 0).then(|| acc[0] / cnt[0] as Scalar),
        puts: (cnt[1] > 0).then(|| acc[1] / cnt[1] as Scalar),
        both: acc[2] / cnt[2] as Scalar,
        n_calls,
        n_puts,
    })
}

/// Signed relative improvement against a baseline MSHE, in percent;
/// negative values mean the model beats the baseline.
pub fn relative_improvement(model_mshe: Scalar, baseline_mshe: Scalar) -> Result<Scalar> {
    if baseline_mshe <= 0.0 {
        return Err(Error::Evaluation("baseline MSHE must be positive".into()));
    }
    Ok(100.0 * (model_mshe - baseline_mshe) / baseline_mshe)
}

/// Cross-sectional MSHE of each trading day in the table.
pub fn mshe_by_day<H: HedgeStrategy + ?Sized>(
    table: &SampleTable,
    strategy: &H,
) -> Result<Vec<(NaiveDate, Scalar, usize)>> {
    let mut per_day: BTreeMap<NaiveDate, (Scalar, usize)> = BTreeMap::new();
    for row in &table.rows {
        let ratio = strategy.position(row, table.horizon)?;
        let e = per_day.entry(row.date).or_insert((0.0, 0));
        e.0 += squared_error(row, &ratio, table.horizon);
        e.1 += 1;
    }
    Ok(per_day.into_iter().map(|(d, (s, n))| (d, s / n as Scalar, n)).collect())
}

/// Approximate confidence interval for the difference of two strategies'
/// daily MSHE series: mean difference plus/minus twice its standard error
/// (population standard deviation of the series over the square root of the
/// number of days).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairwiseCi {
    pub mean_diff: Scalar,
    pub std_error: Scalar,
    pub lower: Scalar,
    pub upper: Scalar,
    pub days: usize,
}

impl PairwiseCi {
    pub fn excludes_zero(&self) -> bool {
        self.lower > 0.0 || self.upper < 0.0
    }
}

/// Pairwise interval across one or more test tables; each (table, day) pair
/// contributes one element of the difference series.
pub fn pairwise_ci<A: HedgeStrategy + ?Sized, B: HedgeStrategy + ?Sized>(
    tables: &[SampleTable],
    a: &A,
    b: &B,
) -> Result<PairwiseCi> {
    let mut diffs = Vec::new();
    for t in tables {
        let da = mshe_by_day(t, a)?;
        let db = mshe_by_day(t, b)?;
        debug_assert_eq!(da.len(), db.len());
        for ((_, ma, _), (_, mb, _)) in da.iter().zip(&db) {
            diffs.push(ma - mb);
        }
    }
    let t = diffs.len();
    if t < 2 {
        return Err(Error::Evaluation(format!(
            "pairwise interval needs at least 2 test days, got {t}"
        )));
    }
    let tf = t as Scalar;
    let mean = diffs.iter().sum::<Scalar>() / tf;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<Scalar>() / tf;
    let std_error = var.sqrt() / tf.sqrt();
    Ok(PairwiseCi {
        mean_diff: mean,
        std_error,
        lower: mean - 2.0 * std_error,
        upper: mean + 2.0 * std_error,
        days: t,
    })
}

/// Maturity buckets used by the leverage diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaturityBucket {
    /// Less than one month.
    Short,
    /// One to six months.
    Middle,
    /// More than six months.
    Long,
}

impl MaturityBucket {
    pub const ALL: [MaturityBucket; 3] =
        [MaturityBucket::Short, MaturityBucket::Middle, MaturityBucket::Long];

    pub fn label(self) -> &'static str {
        match self {
            MaturityBucket::Short => "short",
            MaturityBucket::Middle => "middle",
            MaturityBucket::Long => "long",
        }
    }

    pub fn contains(self, tau: Scalar) -> bool {
        match self {
            MaturityBucket::Short => tau < 1.0 / 12.0,
            MaturityBucket::Middle => (1.0 / 12.0..=0.5).contains(&tau),
            MaturityBucket::Long => tau > 0.5,
        }
    }
}

/// Slope of implied-volatility changes on underlying changes (no
/// intercept), scaled by the average vega-to-delta ratio of the bucket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeverageRow {
    pub kind: OptionKind,
    pub bucket: MaturityBucket,
    pub slope: Scalar,
    pub leverage_coefficient: Scalar,
    pub n_samples: usize,
}

/// Leverage coefficient of one class and maturity bucket. End-of-period
/// implied volatilities are re-inverted from the end-of-period option and
/// underlying prices; rows whose end price cannot be inverted (at or past
/// expiry, or outside arbitrage bounds) are skipped.
pub fn leverage_coefficient(
    table: &SampleTable,
    kind: OptionKind,
    bucket: MaturityBucket,
) -> Result<LeverageRow> {
    let dt_years = table.horizon.years();
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut ratio_sum = 0.0;
    let mut n = 0usize;
    for row in &table.rows {
        if row.kind() != kind || !bucket.contains(row.tau) {
            continue;
        }
        let tau1 = row.tau - dt_years;
        if tau1 < 0.5 / crate::TRADING_DAYS_PER_YEAR {
            continue;
        }
        let Ok(iv1) = pricer::implied_vol(row.c1, row.s1, row.strike, tau1, row.r, kind) else {
            continue;
        };
        let d_sigma = iv1.sigma_impl - row.sigma_impl();
        let d_s = row.s1 - row.s0;
        sxy += d_sigma * d_s;
        sxx += d_s * d_s;
        ratio_sum += row.vega_bs / row.delta_bs;
        n += 1;
    }
    if n == 0 || sxx == 0.0 {
        return Err(Error::Evaluation(format!(
            "no usable {} samples in the {} maturity bucket",
            kind.label(),
            bucket.label()
        )));
    }
    let slope = sxy / sxx;
    Ok(LeverageRow {
        kind,
        bucket,
        slope,
        leverage_coefficient: slope * ratio_sum / n as Scalar,
        n_samples: n,
    })
}

/// Sharpe-ratio multiplier implied by a fractional MSHE reduction.
pub fn sharpe_factor(relative_reduction: Scalar) -> Result<Scalar> {
    if !(0.0..1.0).contains(&relative_reduction) {
        return Err(Error::Evaluation(format!(
            "reduction {relative_reduction} outside [0, 1)"
        )));
    }
    Ok(1.0 / (1.0 - relative_reduction).sqrt())
}

/// Axis along which squared relative hedging errors are bucketed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticAxis {
    Tau,
    Vega,
}

impl DiagnosticAxis {
    pub fn label(self) -> &'static str {
        match self {
            DiagnosticAxis::Tau => "tau",
            DiagnosticAxis::Vega => "vega",
        }
    }

    fn value(self, s: &Sample) -> Scalar {
        match self {
            DiagnosticAxis::Tau => s.tau,
            DiagnosticAxis::Vega => s.vega_bs,
        }
    }
}

/// One decile of the diagnostic bucketing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecileRow {
    pub decile: usize,
    /// Average axis value of the decile's samples.
    pub axis_mean: Scalar,
    /// Mean of (hedging error / option price)^2.
    pub mean_sq_rel_error: Scalar,
    pub std_error: Scalar,
    pub n_samples: usize,
}

/// Split the table into ten equally filled buckets along the axis and
/// report the mean squared relative hedging error of each.
pub fn bucket_diagnostics<H: HedgeStrategy + ?Sized>(
    table: &SampleTable,
    strategy: &H,
    axis: DiagnosticAxis,
) -> Result<Vec<DecileRow>> {
    if table.is_empty() {
        return Err(Error::Evaluation("cannot bucket an empty table".into()));
    }
    let mut values: Vec<(Scalar, Scalar)> = Vec::with_capacity(table.len());
    for row in &table.rows {
        let ratio = strategy.position(row, table.horizon)?;
        let rel = hedged_value(row, &ratio, table.horizon) / row.c0;
        values.push((axis.value(row), rel * rel));
    }
    values.sort_by(|a, b| a.0.total_cmp(&b.0));

    let n = values.len();
    let base = n / 10;
    let extra = n % 10;
    let mut out = Vec::with_capacity(10);
    let mut start = 0usize;
    for decile in 0..10 {
        let size = base + usize::from(decile < extra);
        if size == 0 {
            continue;
        }
        let chunk = &values[start..start + size];
        let mean_axis = chunk.iter().map(|v| v.0).sum::<Scalar>() / size as Scalar;
        let mean = chunk.iter().map(|v| v.1).sum::<Scalar>() / size as Scalar;
        let var = chunk.iter().map(|v| (v.1 - mean) * (v.1 - mean)).sum::<Scalar>()
            / (size.max(2) - 1) as Scalar;
        out.push(DecileRow {
            decile,
            axis_mean: mean_axis,
            mean_sq_rel_error: mean,
            std_error: (var / size as Scalar).sqrt(),
            n_samples: size,
        });
        start += size;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hedgers::{ClassFits, FitResult, Sensitivity};
    use chrono::{Duration, NaiveDate};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn base_row(date: NaiveDate, cp_flag: u8, c0: Scalar, c1: Scalar) -> Sample {
        Sample {
            index: 0,
            date,
            sqrt_total_implied_variance: 0.06,
            moneyness: if cp_flag == 0 { 0.95 } else { 1.1 },
            delta_bs: if cp_flag == 0 { 0.4 } else { -0.35 },
            vega_bs: 11.0,
            gamma_bs: 0.03,
            vanna_bs: 0.4,
            s0: 100.0,
            s1: 100.0,
            c0,
            r_onr: 0.0,
            cp_flag,
            tau: 0.09,
            r: 0.0,
            strike: if cp_flag == 0 { 100.0 / 0.95 } else { 100.0 / 1.1 },
            y0: None,
            y1: None,
            c1,
        }
    }

    #[test]
    fn single_sample_arithmetic() {
        // Zero hedge, r = 0: V = C0 - C1 = 0.87, squared 0.7569.
        let mut t = SampleTable::new(Horizon::Days(1));
        t.rows.push(base_row(NaiveDate::from_ymd_opt(2018, 7, 2).unwrap(), 0, 2.0, 1.13));
        let m = mshe(&t, &HedgeModel::Zero).unwrap();
        assert!((m.both - 0.7569).abs() < 1e-12);
        assert_eq!(m.n_calls, 1);
        assert!(m.puts.is_none());
    }

    #[test]
    fn perfect_replication_gives_zero() {
        let date = NaiveDate::from_ymd_opt(2018, 7, 2).unwrap();
        let mut t = SampleTable::new(Horizon::Days(1));
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for i in 0..50 {
            let cp = (i % 2) as u8;
            let mut row = base_row(date, cp, 2.0, 0.0);
            row.s1 = 100.0 + rng.gen_range(-2.0..2.0);
            // Set the target to the exact replication value of the hedge.
            let delta = row.delta_bs;
            row.c1 = delta * row.s1 + (row.c0 - delta * 100.0);
            t.rows.push(row);
        }
        let m = mshe(&t, &HedgeModel::BsDelta).unwrap();
        assert!(m.both < 1e-25);
    }

    #[test]
    fn empty_table_is_an_evaluation_error() {
        let t = SampleTable::new(Horizon::Days(1));
        assert!(matches!(mshe(&t, &HedgeModel::Zero), Err(Error::Evaluation(_))));
    }

    #[test]
    fn zero_hedge_depends_only_on_prices() {
        // A linear model with all-zero coefficients hedges nothing, so its
        // MSHE must equal the zero strategy's exactly.
        let date = NaiveDate::from_ymd_opt(2018, 7, 2).unwrap();
        let mut t = SampleTable::new(Horizon::Days(1));
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for i in 0..40 {
            let mut row = base_row(date + Duration::days(i / 4), (i % 2) as u8, 2.0, 0.0);
            row.s1 = 100.0 + rng.gen_range(-2.0..2.0);
            row.c1 = 2.0 + rng.gen_range(-0.5..0.5);
            t.rows.push(row);
        }
        let zeroed = FitResult {
            coefficients: vec![0.0],
            standard_errors: vec![0.0],
            residual_sse: 0.0,
            n_samples: 1,
        };
        let disguised = HedgeModel::Linear {
            sensitivities: vec![Sensitivity::Delta],
            intercept: false,
            fits: ClassFits { call: zeroed.clone(), put: zeroed },
        };
        let a = mshe(&t, &HedgeModel::Zero).unwrap();
        let b = mshe(&t, &disguised).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn weighted_average_identity() {
        let date = NaiveDate::from_ymd_opt(2018, 7, 2).unwrap();
        let mut t = SampleTable::new(Horizon::Days(1));
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for i in 0..123 {
            let cp = u8::from(i % 3 == 0);
            let mut row = base_row(date, cp, 2.0, 0.0);
            row.s1 = 100.0 + rng.gen_range(-2.0..2.0);
            row.c1 = 2.0 + rng.gen_range(-0.5..0.5);
            t.rows.push(row);
        }
        let m = mshe(&t, &HedgeModel::BsDelta).unwrap();
        let n = (m.n_calls + m.n_puts) as Scalar;
        let weighted =
            (m.calls.unwrap() * m.n_calls as Scalar + m.puts.unwrap() * m.n_puts as Scalar) / n;
        assert!((weighted - m.both).abs() < 1e-12 * m.both.max(1.0));
    }

    #[test]
    fn day_weighted_mean_matches_pooled() {
        let start = NaiveDate::from_ymd_opt(2018, 7, 2).unwrap();
        let mut t = SampleTable::new(Horizon::Days(1));
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        for day in 0..7 {
            for _ in 0..(3 + day % 4) {
                let mut row = base_row(start + Duration::days(day), 0, 2.0, 0.0);
                row.s1 = 100.0 + rng.gen_range(-2.0..2.0);
                row.c1 = 2.0 + rng.gen_range(-0.5..0.5);
                t.rows.push(row);
            }
        }
        let daily = mshe_by_day(&t, &HedgeModel::BsDelta).unwrap();
        let total_n: usize = daily.iter().map(|d| d.2).sum();
        let pooled_from_days: Scalar =
            daily.iter().map(|d| d.1 * d.2 as Scalar).sum::<Scalar>() / total_n as Scalar;
        let pooled = mshe(&t, &HedgeModel::BsDelta).unwrap().both;
        assert!((pooled_from_days - pooled).abs() < 1e-12 * pooled.max(1.0));
    }

    #[test]
    fn relative_improvement_arithmetic() {
        assert_eq!(relative_improvement(1.0, 1.0).unwrap(), 0.0);
        assert!((relative_improvement(0.85, 1.0).unwrap() + 15.0).abs() < 1e-12);
        assert!(relative_improvement(1.0, 0.0).is_err());
    }

    #[test]
    fn pairwise_interval_degenerate_and_antisymmetric() {
        let start = NaiveDate::from_ymd_opt(2018, 7, 2).unwrap();
        let mut t = SampleTable::new(Horizon::Days(1));
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for day in 0..10 {
            for _ in 0..5 {
                let mut row = base_row(start + Duration::days(day), 0, 2.0, 0.0);
                row.s1 = 100.0 + rng.gen_range(-2.0..2.0);
                row.c1 = 2.0 + rng.gen_range(-0.5..0.5);
                t.rows.push(row);
            }
        }
        let tables = vec![t];
        let same = pairwise_ci(&tables, &HedgeModel::Zero, &HedgeModel::Zero).unwrap();
        assert_eq!(same.mean_diff, 0.0);
        assert_eq!(same.std_error, 0.0);
        assert_eq!((same.lower, same.upper), (0.0, 0.0));

        let ab = pairwise_ci(&tables, &HedgeModel::Zero, &HedgeModel::BsDelta).unwrap();
        let ba = pairwise_ci(&tables, &HedgeModel::BsDelta, &HedgeModel::Zero).unwrap();
        assert!((ab.mean_diff + ba.mean_diff).abs() < 1e-14);
        assert!((ab.lower + ba.upper).abs() < 1e-14);
        assert!((ab.upper + ba.lower).abs() < 1e-14);
        assert_eq!(ab.days, 10);
    }

    #[test]
    fn sharpe_factor_examples_and_monotonicity() {
        assert_eq!(sharpe_factor(0.0).unwrap(), 1.0);
        assert!((sharpe_factor(0.15).unwrap() - 1.085).abs() < 1e-3);
        assert!((sharpe_factor(0.187).unwrap() - 1.11).abs() < 2e-3);
        assert!(sharpe_factor(1.0).is_err());
        assert!(sharpe_factor(-0.1).is_err());
        let mut last = 0.0;
        for k in 0..99 {
            let f = sharpe_factor(k as Scalar / 100.0).unwrap();
            assert!(f > last);
            last = f;
        }
    }

    #[test]
    fn constant_implied_vol_has_zero_leverage() {
        // Rows marked by a constant-vol model: end-of-period implied vol
        // re-inverts to the same value, so the slope vanishes.
        let date = NaiveDate::from_ymd_opt(2018, 7, 2).unwrap();
        let mut t = SampleTable::new(Horizon::Days(1));
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        for _ in 0..60 {
            let tau: Scalar = rng.gen_range(0.12..0.4);
            let m: Scalar = rng.gen_range(0.85..1.0);
            let strike = 100.0 / m;
            let s1: Scalar = 100.0 + rng.gen_range(-1.5..1.5);
            let q0 = pricer::bs_greeks(100.0, strike, tau, 0.2, 0.0, OptionKind::Call).unwrap();
            let c1 = pricer::bs_price(s1, strike, tau - 1.0 / 253.0, 0.2, 0.0, OptionKind::Call)
                .unwrap();
            t.rows.push(Sample {
                index: 0,
                date,
                sqrt_total_implied_variance: 0.2 * tau.sqrt(),
                moneyness: m,
                delta_bs: q0.delta,
                vega_bs: q0.vega,
                gamma_bs: q0.gamma,
                vanna_bs: q0.vanna,
                s0: 100.0,
                s1,
                c0: q0.price,
                r_onr: 0.0,
                cp_flag: 0,
                tau,
                r: 0.0,
                strike,
                y0: None,
                y1: None,
                c1,
            });
        }
        let row = leverage_coefficient(&t, OptionKind::Call, MaturityBucket::Middle).unwrap();
        assert!(row.slope.abs() < 1e-6, "slope {}", row.slope);
        assert!(row.leverage_coefficient.abs() < 1e-4, "LC {}", row.leverage_coefficient);
        assert!(row.n_samples > 0);

        // Empty bucket errors.
        assert!(leverage_coefficient(&t, OptionKind::Put, MaturityBucket::Middle).is_err());
        assert!(leverage_coefficient(&t, OptionKind::Call, MaturityBucket::Long).is_err());
    }

    #[test]
    fn deciles_partition_and_flat_errors_are_flat() {
        let date = NaiveDate::from_ymd_opt(2018, 7, 2).unwrap();
        let mut t = SampleTable::new(Horizon::Days(1));
        for i in 0..97 {
            let mut row = base_row(date, 0, 2.0, 0.0);
            row.tau = 0.01 + i as Scalar * 0.01;
            row.vega_bs = 1.0 + i as Scalar;
            // Constant error and price: V = C0 - C1 = 0.5 with delta 0.
            row.c1 = 1.5;
            t.rows.push(row);
        }
        let rows = bucket_diagnostics(&t, &HedgeModel::Zero, DiagnosticAxis::Tau).unwrap();
        let total: usize = rows.iter().map(|r| r.n_samples).sum();
        assert_eq!(total, 97);
        let first = rows[0].mean_sq_rel_error;
        for r in &rows {
            assert!((r.mean_sq_rel_error - first).abs() < 1e-12);
            assert!(r.std_error < 1e-12);
        }
        // Axis means are increasing across deciles.
        for w in rows.windows(2) {
            assert!(w[0].axis_mean < w[1].axis_mean);
        }
        let by_vega = bucket_diagnostics(&t, &HedgeModel::Zero, DiagnosticAxis::Vega).unwrap();
        assert_eq!(by_vega.iter().map(|r| r.n_samples).sum::<usize>(), 97);
    }
}
