//! Black-Scholes closed forms.

use crate::error::{Error, Result};
use crate::listings::OptionKind;
use crate::num::Real;

/// Price and sensitivities of one option under Black-Scholes.
///
/// Vega is per unit of volatility, gamma per unit of underlying, vanna per
/// unit of volatility (it is the mixed spot/vol derivative and is shared by
/// calls and puts).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsQuote<T> {
    pub price: T,
    pub delta: T,
    pub vega: T,
    pub gamma: T,
    pub vanna: T,
    pub d1: T,
    pub d2: T,
}

fn validate<T: Real>(s: T, k: T, tau: T, sigma: T, r: T) -> Result<()> {
    for v in [s, k, tau, sigma, r] {
        if !v.is_finite() {
            return Err(Error::Parameter("non-finite pricing input".into()));
        }
    }
    if s <= T::zero() || k <= T::zero() {
        return Err(Error::Parameter("spot and strike must be positive".into()));
    }
    if tau <= T::zero() {
        return Err(Error::Parameter("time to maturity must be positive".into()));
    }
    if sigma <= T::zero() {
        return Err(Error::Parameter("volatility must be positive".into()));
    }
    Ok(())
}

pub(crate) fn d1_d2<T: Real>(s: T, k: T, tau: T, sigma: T, r: T) -> (T, T) {
    let sig_sqrt = sigma * tau.sqrt();
    let d1 = ((s / k).ln() + (r + sigma * sigma / T::c(2.0)) * tau) / sig_sqrt;
    (d1, d1 - sig_sqrt)
}

/// Black-Scholes price; the put comes from put-call parity with the same
/// d1/d2.
pub fn bs_price<T: Real>(s: T, k: T, tau: T, sigma: T, r: T, kind: OptionKind) -> Result<T> {
    validate(s, k, tau, sigma, r)?;
    let (d1, d2) = d1_d2(s, k, tau, sigma, r);
    let disc_k = k * (-r * tau).exp();
    let call = s * d1.norm_cdf() - disc_k * d2.norm_cdf();
    Ok(match kind {
        OptionKind::Call => call,
        OptionKind::Put => call - s + disc_k,
    })
}

/// Price and Greeks in one evaluation.
pub fn bs_greeks<T: Real>(s: T, k: T, tau: T, sigma: T, r: T, kind: OptionKind) -> Result<BsQuote<T>> {
    validate(s, k, tau, sigma, r)?;
    let (d1, d2) = d1_d2(s, k, tau, sigma, r);
    let sqrt_tau = tau.sqrt();
    let pdf_d1 = d1.norm_pdf();
    let disc_k = k * (-r * tau).exp();
    let call = s * d1.norm_cdf() - disc_k * d2.norm_cdf();
    let (price, delta) = match kind {
        OptionKind::Call => (call, d1.norm_cdf()),
        OptionKind::Put => (call - s + disc_k, d1.norm_cdf() - T::one()),
    };
    Ok(BsQuote {
        price,
        delta,
        vega: s * pdf_d1 * sqrt_tau,
        gamma: pdf_d1 / (s * sigma * sqrt_tau),
        vanna: -pdf_d1 * d2 / sigma,
        d1,
        d2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn atm_call_matches_cdf_oracle() {
        // S = K = 100, r = 0, sigma*sqrt(tau) = 0.2: the price reduces to
        // 100 (N(0.1) - N(-0.1)).
        let price = bs_price::<f64>(100.0, 100.0, 1.0, 0.2, 0.0, OptionKind::Call).unwrap();
        let n = crate::num::norm_cdf_f64(0.1);
        let oracle = 100.0 * (n - (1.0 - n));
        assert!((price - oracle).abs() < 1e-12);
        assert!((price - 7.9656).abs() < 1e-4);
    }

    #[test]
    fn vanishing_vol_gives_intrinsic() {
        let price = bs_price::<f64>(110.0, 100.0, 1.0, 1e-12, 0.0, OptionKind::Call).unwrap();
        assert!((price - 10.0).abs() < 1e-12);
        let put = bs_price::<f64>(110.0, 100.0, 1.0, 1e-12, 0.0, OptionKind::Put).unwrap();
        assert!(put.abs() < 1e-12);
    }

    #[test]
    fn put_call_parity() {
        for &(s, k, tau, sigma, r) in
            &[(100.0, 95.0, 0.5, 0.25, 0.01), (2000.0, 2100.0, 1.0, 0.2, 0.0)]
        {
            let c = bs_price(s, k, tau, sigma, r, OptionKind::Call).unwrap();
            let p = bs_price(s, k, tau, sigma, r, OptionKind::Put).unwrap();
            let forward = s - k * (-r * tau as f64).exp();
            assert!((c - p - forward).abs() < 1e-10);
        }
    }

    #[test]
    fn delta_example_and_ranges() {
        // M = 1, r = 0, sigma*sqrt(tau) = 0.2 gives d1 = 0.1.
        let q = bs_greeks::<f64>(100.0, 100.0, 1.0, 0.2, 0.0, OptionKind::Call).unwrap();
        assert!((q.d1 - 0.1).abs() < 1e-14);
        assert!((q.delta - 0.539828).abs() < 1e-6);
        let p = bs_greeks(100.0, 100.0, 1.0, 0.2, 0.0, OptionKind::Put).unwrap();
        assert!((p.delta - (q.delta - 1.0)).abs() < 1e-15);
        assert_eq!(p.vanna, q.vanna);
    }

    #[test]
    fn vanna_sign_and_zero() {
        // d2 = 0 makes vanna vanish.
        let sigma = 0.2;
        let tau = 1.0;
        let k = 100.0;
        let s = k * (sigma * sigma * tau / 2.0 - 0.0f64).exp(); // d2 = 0 at r = 0
        let q = bs_greeks(s, k, tau, sigma, 0.0, OptionKind::Call).unwrap();
        assert!(q.d2.abs() < 1e-12);
        assert!(q.vanna.abs() < 1e-12);

        // OTM call (M < 1) has positive vanna, OTM put (M > 1) negative.
        let otm_call = bs_greeks(90.0, 100.0, 0.5, 0.2, 0.0, OptionKind::Call).unwrap();
        assert!(otm_call.vanna > 0.0);
        let otm_put = bs_greeks(110.0, 100.0, 0.5, 0.2, 0.0, OptionKind::Put).unwrap();
        assert!(otm_put.vanna < 0.0);
    }

    #[test]
    fn price_is_monotone_in_vol_and_above_intrinsic() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..200 {
            let s = 100.0;
            let m: f64 = rng.gen_range(0.8..1.5);
            let k = s / m;
            let tau: f64 = rng.gen_range(1.0 / 253.0..1.5);
            let sigma: f64 = rng.gen_range(0.05..0.8);
            for kind in [OptionKind::Call, OptionKind::Put] {
                let p = bs_price(s, k, tau, sigma, 0.0, kind).unwrap();
                let p_up = bs_price(s, k, tau, sigma + 0.01, 0.0, kind).unwrap();
                let intrinsic = match kind {
                    OptionKind::Call => (s - k).max(0.0),
                    OptionKind::Put => (k - s).max(0.0),
                };
                assert!(p >= intrinsic - 1e-12);
                // Strict monotonicity, except where the time value is below
                // floating-point resolution and the price pins to intrinsic.
                assert!(p_up >= p, "s={s} k={k} tau={tau} sigma={sigma} {kind:?}: {p_up} < {p}");
                if p - intrinsic > 1e-10 {
                    assert!(
                        p_up > p,
                        "s={s} k={k} tau={tau} sigma={sigma} {kind:?}: {p_up} !> {p}"
                    );
                }
            }
        }
    }

    /// Central finite differences of `bs_price` as the independent oracle
    /// for each closed-form Greek.
    #[test]
    fn greeks_match_finite_differences() {
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        let mut checked = 0;
        while checked < 1000 {
            let s = 100.0;
            let m: f64 = rng.gen_range(0.8..1.5);
            let k = s / m;
            let tau: f64 = rng.gen_range(1.0 / 253.0..1.5);
            let sigma: f64 = rng.gen_range(0.05..0.8);
            let kind = if rng.gen_bool(0.5) { OptionKind::Call } else { OptionKind::Put };
            let q = bs_greeks(s, k, tau, sigma, 0.0, kind).unwrap();
            if q.price < 0.01 {
                continue; // below tick size, outside the working domain
            }
            checked += 1;
            let hs = 1e-5 * s;
            let hv = 1e-5 * sigma;
            let price = |s: f64, sigma: f64| bs_price(s, k, tau, sigma, 0.0, kind).unwrap();
            let fd_delta = (price(s + hs, sigma) - price(s - hs, sigma)) / (2.0 * hs);
            let fd_vega = (price(s, sigma + hv) - price(s, sigma - hv)) / (2.0 * hv);
            let fd_gamma =
                (price(s + hs, sigma) - 2.0 * price(s, sigma) + price(s - hs, sigma)) / (hs * hs);
            let fd_vanna = (price(s + hs, sigma + hv) - price(s + hs, sigma - hv)
                - price(s - hs, sigma + hv)
                + price(s - hs, sigma - hv))
                / (4.0 * hs * hv);
            let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1.0);
            assert!(rel(q.delta, fd_delta) < 1e-5, "delta {} vs {}", q.delta, fd_delta);
            assert!(rel(q.vega, fd_vega) < 1e-5, "vega {} vs {}", q.vega, fd_vega);
            assert!(rel(q.gamma, fd_gamma) < 1e-5, "gamma {} vs {}", q.gamma, fd_gamma);
            assert!(rel(q.vanna, fd_vanna) < 1e-5, "vanna {} vs {}", q.vanna, fd_vanna);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(bs_price(100.0, 100.0, 0.0, 0.2, 0.0, OptionKind::Call).is_err());
        assert!(bs_price(f64::NAN, 100.0, 1.0, 0.2, 0.0, OptionKind::Call).is_err());
        assert!(bs_greeks(-1.0, 100.0, 1.0, 0.2, 0.0, OptionKind::Call).is_err());
    }

    #[test]
    fn works_at_f32() {
        let p = bs_price(100.0f32, 100.0, 1.0, 0.2, 0.0, OptionKind::Call).unwrap();
        assert!((p - 7.9656).abs() < 1e-3);
    }
}
