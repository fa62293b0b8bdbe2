//! Semi-closed-form Heston pricing via characteristic-function quadrature.
//!
//! The two in-the-money probabilities P1/P2 are integrals of the
//! characteristic function; the branch of the complex logarithm follows the
//! trap-free formulation, which keeps the integrand continuous in the
//! integration variable for long maturities.
//!
//! Integration is composite Gauss-Legendre: 128-node panels of width 200 in
//! the transform variable, extended until a panel's contribution falls below
//! 1e-12 (short-dated options need several panels because their transform
//! decays slowly).
//!
//! The exponents C(u) and D(u) of the characteristic function depend only on
//! the model constants, the maturity and the rate - not on spot, strike or
//! the current variance. A run prices the same few hundred maturities many
//! thousands of times, so prepared (C, D) tables are memoized per thread;
//! evaluation then costs one complex exponential per node. The transform
//! integration always runs in double precision.

use crate::error::{Error, Result};
use crate::listings::OptionKind;
use crate::num::{gauss_legendre, Real};
use crate::simkit::HestonParams;
use num_complex::Complex64;
use std::cell::RefCell;
use std::collections::HashMap;

/// Gauss-Legendre nodes per integration panel.
pub const QUAD_NODES: usize = 128;
const PANEL_WIDTH: f64 = 200.0;
const MAX_PANELS: usize = 20;
const PANEL_TOL: f64 = 1e-12;
/// Below this vol-of-variance the model is treated as deterministic
/// variance, where the characteristic function degenerates.
const DEGENERATE_SIGMA_Y: f64 = 1e-8;

/// One quadrature node of one prepared panel.
#[derive(Debug, Clone, Copy)]
struct CfNode {
    u: f64,
    weight: f64,
    c1: Complex64,
    d1: Complex64,
    c2: Complex64,
    d2: Complex64,
}

/// Characteristic-function exponents at one node: the trap-free branch.
fn cf_exponents(params: &HestonParams<f64>, tau: f64, r: f64, u: f64) -> [Complex64; 4] {
    let sigma = params.sigma_y;
    let sigma2 = sigma * sigma;
    let a = params.kappa * params.theta;
    let one = Complex64::new(1.0, 0.0);
    let iu = Complex64::new(0.0, u);

    let mut out = [Complex64::new(0.0, 0.0); 4];
    for (j, (u_j, b_j)) in
        [(0.5, params.kappa - params.rho * sigma), (-0.5, params.kappa)].into_iter().enumerate()
    {
        // A = b - i rho sigma u; d = sqrt(A^2 - sigma^2 (2 u_j iu - u^2)).
        let big_a = Complex64::new(b_j, -params.rho * sigma * u);
        let inner = big_a * big_a + Complex64::new(sigma2 * u * u, -sigma2 * 2.0 * u_j * u);
        let d = inner.sqrt();
        let g = (big_a - d) / (big_a + d);
        let edt = (-d * tau).exp();
        let log_term = ((one - g * edt) / (one - g)).ln();
        let c_fn = iu * (r * tau) + ((big_a - d) * tau - log_term * 2.0) * (a / sigma2);
        let d_fn = (big_a - d) / sigma2 * (one - edt) / (one - g * edt);
        out[2 * j] = c_fn;
        out[2 * j + 1] = d_fn;
    }
    out
}

/// Prepared quadrature panels for one (parameters, maturity, rate, node
/// count) combination; panels are built lazily as integrations reach them.
struct CfTable {
    params: HestonParams<f64>,
    tau: f64,
    r: f64,
    nodes: usize,
    panels: Vec<Vec<CfNode>>,
}

impl CfTable {
    fn new(params: HestonParams<f64>, tau: f64, r: f64, nodes: usize) -> Self {
        CfTable { params, tau, r, nodes, panels: Vec::new() }
    }

    fn ensure_panel(&mut self, k: usize) {
        while self.panels.len() <= k {
            let idx = self.panels.len();
            let (gl_nodes, gl_weights) = gauss_legendre(self.nodes);
            let half = PANEL_WIDTH / 2.0;
            let mid = idx as f64 * PANEL_WIDTH + half;
            let mut panel = Vec::with_capacity(self.nodes);
            for (t, w) in gl_nodes.iter().zip(&gl_weights) {
                let u = mid + half * t;
                let [c1, d1, c2, d2] = cf_exponents(&self.params, self.tau, self.r, u);
                panel.push(CfNode { u, weight: w * half, c1, d1, c2, d2 });
            }
            self.panels.push(panel);
        }
    }

    /// P1 and P2 for the current variance `y` and log-moneyness ln(S/K).
    fn probabilities(&mut self, y: f64, log_moneyness: f64) -> Result<(f64, f64)> {
        let mut i1 = 0.0;
        let mut i2 = 0.0;
        for k in 0..MAX_PANELS {
            self.ensure_panel(k);
            let mut p1 = 0.0;
            let mut p2 = 0.0;
            for node in &self.panels[k] {
                let phase = Complex64::new(0.0, node.u * log_moneyness);
                let f1 = (node.c1 + node.d1 * y + phase).exp();
                let f2 = (node.c2 + node.d2 * y + phase).exp();
                // Re(f / iu) = Im(f) / u.
                p1 += node.weight * f1.im / node.u;
                p2 += node.weight * f2.im / node.u;
            }
            i1 += p1;
            i2 += p2;
            if !(i1.is_finite() && i2.is_finite()) {
                return Err(Error::Numerical(format!(
                    "Heston quadrature produced non-finite values (panel {k}, tau {}, log-moneyness {log_moneyness})",
                    self.tau
                )));
            }
            if k > 0 && p1.abs() < PANEL_TOL && p2.abs() < PANEL_TOL {
                break;
            }
        }
        let pi_inv = std::f64::consts::FRAC_1_PI;
        Ok((0.5 + pi_inv * i1, 0.5 + pi_inv * i2))
    }
}

thread_local! {
    static CF_CACHE: RefCell<HashMap<(u64, u64, u64, u64, u64, u64, u64, usize), CfTable>> =
        RefCell::new(HashMap::new());
}

/// Largest number of cached maturity tables per thread; a run prices a few
/// hundred distinct maturities, far below this.
const CF_CACHE_CAP: usize = 4096;

fn with_cf_table<F, R>(params: &HestonParams<f64>, tau: f64, r: f64, nodes: usize, f: F) -> R
where
    F: FnOnce(&mut CfTable) -> R,
{
    let key = (
        params.kappa.to_bits(),
        params.theta.to_bits(),
        params.sigma_y.to_bits(),
        params.rho.to_bits(),
        tau.to_bits(),
        r.to_bits(),
        0u64,
        nodes,
    );
    CF_CACHE.with(|cache| {
        let mut cache = cache.borrow_mut();
        if cache.len() >= CF_CACHE_CAP {
            cache.clear();
        }
        let table =
            cache.entry(key).or_insert_with(|| CfTable::new(*params, tau, r, nodes));
        f(table)
    })
}

fn validate<T: Real>(params: &HestonParams<T>, s: T, y: T, k: T, tau: T) -> Result<()> {
    params.validate()?;
    if s <= T::zero() || k <= T::zero() {
        return Err(Error::Parameter("spot and strike must be positive".into()));
    }
    if y <= T::zero() {
        return Err(Error::Parameter("current variance must be positive".into()));
    }
    if tau <= T::zero() {
        return Err(Error::Parameter("time to maturity must be positive".into()));
    }
    Ok(())
}

/// Average deterministic variance over `[0, tau]` when vol-of-variance is
/// zero: the variance path is theta + (y - theta) e^{-kappa t}.
fn deterministic_avg_variance(params: &HestonParams<f64>, y: f64, tau: f64) -> f64 {
    let kt = params.kappa * tau;
    params.theta + (y - params.theta) * (1.0 - (-kt).exp()) / kt
}

fn probabilities_f64(
    params: &HestonParams<f64>,
    s: f64,
    y: f64,
    k: f64,
    tau: f64,
    r: f64,
    nodes: usize,
) -> Result<(f64, f64)> {
    if params.sigma_y <= DEGENERATE_SIGMA_Y {
        let sigma_eff = deterministic_avg_variance(params, y, tau).sqrt();
        let (d1, d2) = super::black_scholes::d1_d2(s, k, tau, sigma_eff, r);
        return Ok((d1.norm_cdf(), d2.norm_cdf()));
    }
    let log_moneyness = (s / k).ln();
    with_cf_table(params, tau, r, nodes, |table| table.probabilities(y, log_moneyness))
}

fn to_f64_params<T: Real>(p: &HestonParams<T>) -> HestonParams<f64> {
    HestonParams {
        s0: p.s0.as_f64(),
        y0: p.y0.as_f64(),
        theta: p.theta.as_f64(),
        kappa: p.kappa.as_f64(),
        sigma_y: p.sigma_y.as_f64(),
        rho: p.rho.as_f64(),
    }
}

/// Heston price under the pricing measure with the given short rate.
///
/// The state comes from `s` and `y`; the `s0`/`y0` fields of `params` are
/// not consulted. The put is priced by parity.
pub fn heston_price<T: Real>(
    params: &HestonParams<T>,
    s: T,
    y: T,
    k: T,
    tau: T,
    r: T,
    kind: OptionKind,
) -> Result<T> {
    heston_price_nodes(params, s, y, k, tau, r, kind, QUAD_NODES)
}

/// Same as [`heston_price`] with an explicit panel node count; used to
/// verify quadrature stability under node doubling.
#[allow(clippy::too_many_arguments)]
pub fn heston_price_nodes<T: Real>(
    params: &HestonParams<T>,
    s: T,
    y: T,
    k: T,
    tau: T,
    r: T,
    kind: OptionKind,
    nodes: usize,
) -> Result<T> {
    validate(params, s, y, k, tau)?;
    let (pf, sf, yf, kf, tauf, rf) =
        (to_f64_params(params), s.as_f64(), y.as_f64(), k.as_f64(), tau.as_f64(), r.as_f64());
    let (p1, p2) = probabilities_f64(&pf, sf, yf, kf, tauf, rf, nodes)?;
    let disc_k = kf * (-rf * tauf).exp();
    let call = sf * p1 - disc_k * p2;
    Ok(T::c(match kind {
        OptionKind::Call => call,
        OptionKind::Put => call - sf + disc_k,
    }))
}

/// Spot sensitivity (P1, shifted by one for puts) and variance sensitivity
/// of the Heston price. The variance sensitivity is a central finite
/// difference with relative step 1e-4; it reuses the prepared transform
/// table, so the extra evaluations are cheap.
#[allow(clippy::too_many_arguments)]
pub fn heston_delta_vega<T: Real>(
    params: &HestonParams<T>,
    s: T,
    y: T,
    k: T,
    tau: T,
    r: T,
    kind: OptionKind,
) -> Result<(T, T)> {
    validate(params, s, y, k, tau)?;
    let (pf, sf, yf, kf, tauf, rf) =
        (to_f64_params(params), s.as_f64(), y.as_f64(), k.as_f64(), tau.as_f64(), r.as_f64());
    let (p1, _) = probabilities_f64(&pf, sf, yf, kf, tauf, rf, QUAD_NODES)?;
    let delta = match kind {
        OptionKind::Call => p1,
        OptionKind::Put => p1 - 1.0,
    };
    let h = yf * 1e-4;
    let disc_k = kf * (-rf * tauf).exp();
    let price_at_y = |yv: f64| -> Result<f64> {
        let (q1, q2) = probabilities_f64(&pf, sf, yv, kf, tauf, rf, QUAD_NODES)?;
        let call = sf * q1 - disc_k * q2;
        Ok(match kind {
            OptionKind::Call => call,
            OptionKind::Put => call - sf + disc_k,
        })
    };
    let nu = (price_at_y(yf + h)? - price_at_y(yf - h)?) / (2.0 * h);
    Ok((T::c(delta), T::c(nu)))
}
