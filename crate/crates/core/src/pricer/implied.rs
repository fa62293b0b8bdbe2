//! Black-Scholes implied-volatility inversion.

use crate::error::{Error, Result};
use crate::listings::OptionKind;
use crate::num::Real;
use crate::pricer::black_scholes::{bs_price, d1_d2};

/// Result of an implied-volatility inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpliedVol<T> {
    pub sigma_impl: T,
    pub iterations: u32,
    /// Remaining price error at the returned volatility.
    pub residual: T,
}

const PRICE_TOL: f64 = 1e-8;
const BISECT_WIDTH: f64 = 1e-3;
const MAX_ITER: u32 = 200;

/// Invert the Black-Scholes price for the annualized volatility.
///
/// The quote must lie strictly inside its no-arbitrage bounds. Bisection
/// narrows an expanding bracket to 1e-3, then Newton steps (falling back to
/// bisection when they leave the bracket) polish to 1e-8 in price.
pub fn implied_vol<T: Real>(
    price: T,
    s: T,
    k: T,
    tau: T,
    r: T,
    kind: OptionKind,
) -> Result<ImpliedVol<T>> {
    if !price.is_finite() || s <= T::zero() || k <= T::zero() || tau <= T::zero() {
        return Err(Error::Parameter("bad implied-vol inputs".into()));
    }
    let disc_k = k * (-r * tau).exp();
    let (lower, upper) = match kind {
        OptionKind::Call => ((s - disc_k).max(T::zero()), s),
        OptionKind::Put => ((disc_k - s).max(T::zero()), disc_k),
    };
    if price <= lower {
        return Err(Error::Inversion(format!(
            "price {} at or below intrinsic bound {}",
            price.as_f64(),
            lower.as_f64()
        )));
    }
    if price >= upper {
        return Err(Error::Inversion(format!(
            "price {} at or above upper bound {}",
            price.as_f64(),
            upper.as_f64()
        )));
    }

    let value = |sig: T| bs_price(s, k, tau, sig, r, kind).expect("validated inputs");
    let mut iterations = 0u32;

    // Expanding bracket; the price is strictly increasing in volatility.
    let mut lo = T::c(1e-9);
    let mut hi = T::c(1.0);
    while value(hi) < price {
        hi = hi * T::c(2.0);
        iterations += 1;
        if hi > T::c(1e4) || iterations >= MAX_ITER {
            return Err(Error::Numerical("implied vol bracket expansion failed".into()));
        }
    }

    while (hi - lo) > T::c(BISECT_WIDTH) {
        let mid = (hi + lo) / T::c(2.0);
        if value(mid) < price {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
        if iterations >= MAX_ITER {
            return Err(Error::Numerical("implied vol bisection failed to converge".into()));
        }
    }

    let mut sigma = (hi + lo) / T::c(2.0);
    loop {
        let f = value(sigma) - price;
        if f.abs() <= T::c(PRICE_TOL) {
            return Ok(ImpliedVol { sigma_impl: sigma, iterations, residual: f });
        }
        iterations += 1;
        if iterations >= MAX_ITER {
            return Err(Error::Numerical(format!(
                "implied vol did not converge in {MAX_ITER} iterations (residual {})",
                f.as_f64()
            )));
        }
        // Maintain the bracket for the bisection fallback.
        if f < T::zero() {
            lo = sigma;
        } else {
            hi = sigma;
        }
        let (d1, _) = d1_d2(s, k, tau, sigma, r);
        let vega = s * d1.norm_pdf() * tau.sqrt();
        let newton = sigma - f / vega;
        sigma = if vega > T::zero() && newton > lo && newton < hi {
            newton
        } else {
            (hi + lo) / T::c(2.0)
        };
    }
}
