//! Underlying price-path simulation on a trading-day grid.
//!
//! Two generating models are supported: geometric Brownian motion with the
//! exact lognormal daily transition, and the Heston square-root stochastic
//! variance model discretized per substep with either a full-truncation
//! Euler scheme or a Milstein scheme with absorption at zero.
//!
//! Randomness comes from a counter-based ChaCha generator; a (seed, stream)
//! pair fully determines a path, so families of paths drawn from one master
//! seed are independent and reproducible.

use crate::error::{Error, Result};
use crate::num::Real;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use std::io::{BufRead, Write};

/// Trading-day year fraction of a single day.
pub fn day_fraction<T: Real>() -> T {
    T::one() / T::c(crate::TRADING_DAYS_PER_YEAR)
}

/// Geometric Brownian motion parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GbmParams<T> {
    /// Initial spot.
    pub s0: T,
    /// Annualized drift.
    pub mu: T,
    /// Annualized volatility.
    pub sigma: T,
}

impl<T: Real> GbmParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !self.s0.is_finite() || !self.mu.is_finite() || !self.sigma.is_finite() {
            return Err(Error::Parameter("GBM parameters must be finite".into()));
        }
        if self.s0 <= T::zero() {
            return Err(Error::Parameter("GBM initial spot must be positive".into()));
        }
        if self.sigma < T::zero() {
            return Err(Error::Parameter("GBM volatility must be non-negative".into()));
        }
        Ok(())
    }
}

/// Heston stochastic-variance model parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HestonParams<T> {
    /// Initial spot.
    pub s0: T,
    /// Initial instantaneous variance.
    pub y0: T,
    /// Long-term variance.
    pub theta: T,
    /// Mean-reversion rate.
    pub kappa: T,
    /// Volatility of variance.
    pub sigma_y: T,
    /// Correlation between the spot and variance drivers.
    pub rho: T,
}

impl<T: Real> HestonParams<T> {
    pub fn validate(&self) -> Result<()> {
        let fields = [self.s0, self.y0, self.theta, self.kappa, self.sigma_y, self.rho];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("Heston parameters must be finite".into()));
        }
        if self.s0 <= T::zero() {
            return Err(Error::Parameter("Heston initial spot must be positive".into()));
        }
        if self.y0 <= T::zero() || self.theta <= T::zero() || self.kappa <= T::zero() {
            return Err(Error::Parameter(
                "Heston y0, theta and kappa must be positive".into(),
            ));
        }
        if self.sigma_y < T::zero() {
            return Err(Error::Parameter(
                "Heston vol-of-variance must be non-negative".into(),
            ));
        }
        if self.rho.abs() > T::one() {
            return Err(Error::Parameter("Heston correlation must lie in [-1, 1]".into()));
        }
        Ok(())
    }
}

/// Discretization of the variance process.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Full truncation: the raw variance state may dip below zero, but only
    /// its positive part enters drift and diffusion.
    Euler,
    /// Milstein correction term with absorption of the state at zero.
    Milstein,
}

/// Simulated path of the underlying on a trading-day grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePath<T> {
    /// Trading-day indices, strictly increasing, one per recorded point.
    pub dates: Vec<u32>,
    /// Spot per day; same length as `dates`.
    pub spot: Vec<T>,
    /// Instantaneous variance per day (Heston only).
    pub variance: Option<Vec<T>>,
    /// Master seed the path was drawn from.
    pub seed: u64,
    /// Substeps per trading day used by the scheme (1 for GBM).
    pub steps_per_day: u32,
}

impl<T: Real> PricePath<T> {
    /// Number of recorded points (days simulated + 1 for the initial state).
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Position of a trading-day index within the path, if recorded.
    pub fn position(&self, day: u32) -> Option<usize> {
        let first = *self.dates.first()?;
        if day < first {
            return None;
        }
        let idx = (day - first) as usize;
        (idx < self.dates.len()).then_some(idx)
    }

    pub fn spot_at(&self, day: u32) -> Option<T> {
        self.position(day).map(|i| self.spot[i])
    }

    pub fn variance_at(&self, day: u32) -> Option<T> {
        let var = self.variance.as_ref()?;
        self.position(day).map(|i| var[i])
    }

    /// Serialize as `day_index,spot,variance` rows. The variance column is
    /// left empty when the path has none.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["day_index", "spot", "variance"])?;
        for i in 0..self.len() {
            let var = match &self.variance {
                Some(v) => format!("{}", v[i].as_f64()),
                None => String::new(),
            };
            w.write_record([
                self.dates[i].to_string(),
                format!("{}", self.spot[i].as_f64()),
                var,
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let mut dates = Vec::new();
        let mut spot = Vec::new();
        let mut variance: Vec<T> = Vec::new();
        let mut has_var = false;
        for rec in rdr.records() {
            let rec = rec?;
            let day: u32 = rec
                .get(0)
                .ok_or_else(|| Error::Input("missing day_index".into()))?
                .parse()
                .map_err(|e| Error::Input(format!("bad day_index: {e}")))?;
            let s: f64 = rec
                .get(1)
                .ok_or_else(|| Error::Input("missing spot".into()))?
                .parse()
                .map_err(|e| Error::Input(format!("bad spot: {e}")))?;
            dates.push(day);
            spot.push(T::c(s));
            match rec.get(2) {
                Some("") | None => {}
                Some(v) => {
                    has_var = true;
                    let y: f64 = v.parse().map_err(|e| Error::Input(format!("bad variance: {e}")))?;
                    variance.push(T::c(y));
                }
            }
        }
        if has_var && variance.len() != dates.len() {
            return Err(Error::Input("variance column present for only some rows".into()));
        }
        Ok(PricePath {
            dates,
            spot,
            variance: has_var.then_some(variance),
            seed: 0,
            steps_per_day: 1,
        })
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Exact lognormal GBM simulation over `n_days` trading days starting at
/// day index 0. The returned path has `n_days + 1` points.
pub fn simulate_gbm<T: Real>(params: GbmParams<T>, n_days: u32, seed: u64) -> Result<PricePath<T>> {
    simulate_gbm_stream(params, 0, n_days, seed, 0)
}

/// GBM simulation starting at `first_day` with an explicit RNG stream, for
/// drawing independent branch paths under one master seed.
pub fn simulate_gbm_stream<T: Real>(
    params: GbmParams<T>,
    first_day: u32,
    n_days: u32,
    seed: u64,
    stream: u64,
) -> Result<PricePath<T>> {
    params.validate()?;
    if n_days < 1 {
        return Err(Error::Parameter("n_days must be at least 1".into()));
    }
    let dt = day_fraction::<T>();
    let drift = (params.mu - params.sigma * params.sigma / T::c(2.0)) * dt;
    let vol = params.sigma * dt.sqrt();
    let mut rng = stream_rng(seed, stream);
    let n = n_days as usize;
    let mut dates = Vec::with_capacity(n + 1);
    let mut spot = Vec::with_capacity(n + 1);
    let mut s = params.s0;
    dates.push(first_day);
    spot.push(s);
    for i in 0..n {
        let z = T::sample_standard_normal(&mut rng);
        s = s * (drift + vol * z).exp();
        dates.push(first_day + i as u32 + 1);
        spot.push(s);
    }
    Ok(PricePath {
        dates,
        spot,
        variance: None,
        seed,
        steps_per_day: 1,
    })
}

/// Heston simulation over `n_days` trading days starting at day index 0.
pub fn simulate_heston<T: Real>(
    params: HestonParams<T>,
    n_days: u32,
    steps_per_day: u32,
    scheme: Scheme,
    seed: u64,
) -> Result<PricePath<T>> {
    simulate_heston_stream(params, 0, n_days, steps_per_day, scheme, seed, 0)
}

/// Heston simulation starting at `first_day` with an explicit RNG stream.
///
/// Log-spot is advanced per substep with the truncated variance; the
/// recorded day-boundary variance is the truncated value that feeds the next
/// step, so it is non-negative everywhere.
pub fn simulate_heston_stream<T: Real>(
    params: HestonParams<T>,
    first_day: u32,
    n_days: u32,
    steps_per_day: u32,
    scheme: Scheme,
    seed: u64,
    stream: u64,
) -> Result<PricePath<T>> {
    params.validate()?;
    if n_days < 1 {
        return Err(Error::Parameter("n_days must be at least 1".into()));
    }
    if steps_per_day < 1 {
        return Err(Error::Parameter("steps_per_day must be at least 1".into()));
    }
    let dt = day_fraction::<T>() / T::from_u32(steps_per_day).unwrap();
    let sqrt_dt = dt.sqrt();
    let rho = params.rho;
    let rho_perp = (T::one() - rho * rho).sqrt();
    let half = T::c(0.5);
    let quarter_sig2 = T::c(0.25) * params.sigma_y * params.sigma_y;

    let mut rng = stream_rng(seed, stream);
    let n = n_days as usize;
    let mut dates = Vec::with_capacity(n + 1);
    let mut spot = Vec::with_capacity(n + 1);
    let mut variance = Vec::with_capacity(n + 1);

    let mut log_s = params.s0.ln();
    let mut y = params.y0;
    dates.push(first_day);
    spot.push(params.s0);
    variance.push(params.y0);

    for day in 0..n {
        for _ in 0..steps_per_day {
            let z_s = T::sample_standard_normal(&mut rng);
            let z_p = T::sample_standard_normal(&mut rng);
            let dw = sqrt_dt * z_s;
            let dw_tilde = sqrt_dt * (rho * z_s + rho_perp * z_p);
            let y_plus = y.max(T::zero());
            let vol = y_plus.sqrt();

            log_s = log_s - half * y_plus * dt + vol * dw;
            match scheme {
                Scheme::Euler => {
                    y = y + params.kappa * (params.theta - y_plus) * dt
                        + params.sigma_y * vol * dw_tilde;
                }
                Scheme::Milstein => {
                    let next = y
                        + params.kappa * (params.theta - y) * dt
                        + params.sigma_y * vol * dw_tilde
                        + quarter_sig2 * (dw_tilde * dw_tilde - dt);
                    y = next.max(T::zero());
                }
            }
        }
        dates.push(first_day + day as u32 + 1);
        spot.push(log_s.exp());
        variance.push(y.max(T::zero()));
    }

    Ok(PricePath {
        dates,
        spot,
        variance: Some(variance),
        seed,
        steps_per_day,
    })
}
