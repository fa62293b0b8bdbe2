//! Hedging-ratio models: the zero hedge, the Black-Scholes delta, fixed
//! multiples of it, sensitivity regressions, the delta-cubic correction
//! model and its relaxed variant, two semi-linear benchmarks, and the two
//! model-implied strategies that use the true Heston dynamics.
//!
//! All fitted models minimize the normalized one-period hedging error: with
//! x = 100 (S1/S0 - R) and y = 100/S0 (C1 - R C0), the hedged value is
//! delta * x - y, so fitting is least squares of y on transformed
//! regressors. Calls and puts are always fitted separately.

mod ols;

pub use ols::{ols, FitResult};

use crate::datapipe::{Horizon, Sample, SampleTable};
use crate::error::{Error, Result};
use crate::listings::{OptionKind, STRIKE_STEP};
use crate::pricer;
use crate::{HestonParams, Scalar};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// Maturity of the synthetic at-the-money call used by the two-instrument
/// strategy, in years.
pub const ATM_HEDGE_TAU: Scalar = 1.0 / 12.0;

/// Option sensitivities usable as regression features, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sensitivity {
    Delta,
    Vega,
    Gamma,
    Vanna,
}

pub const ALL_SENSITIVITIES: [Sensitivity; 4] =
    [Sensitivity::Delta, Sensitivity::Vega, Sensitivity::Gamma, Sensitivity::Vanna];

impl Sensitivity {
    pub fn label(self) -> &'static str {
        match self {
            Sensitivity::Delta => "delta",
            Sensitivity::Vega => "vega",
            Sensitivity::Gamma => "gamma",
            Sensitivity::Vanna => "vanna",
        }
    }

    fn value(self, s: &Sample) -> Scalar {
        match self {
            Sensitivity::Delta => s.delta_bs,
            Sensitivity::Vega => s.vega_bs,
            Sensitivity::Gamma => s.gamma_bs,
            Sensitivity::Vanna => s.vanna_bs,
        }
    }

    fn canonical_index(self) -> usize {
        match self {
            Sensitivity::Delta => 0,
            Sensitivity::Vega => 1,
            Sensitivity::Gamma => 2,
            Sensitivity::Vanna => 3,
        }
    }
}

/// Per-option-class fit results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassFits {
    pub call: FitResult,
    pub put: FitResult,
}

impl ClassFits {
    pub fn class(&self, kind: OptionKind) -> &FitResult {
        match kind {
            OptionKind::Call => &self.call,
            OptionKind::Put => &self.put,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SemilinearKind {
    /// Affine in moneyness and root total implied variance.
    Affine,
    /// The affine index mapped through the normal CDF.
    NormalCdf,
}

/// A hedging-ratio model, fitted where applicable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum HedgeModel {
    Zero,
    BsDelta,
    Fixed { f_call: Scalar, f_put: Scalar },
    Linear { sensitivities: Vec<Sensitivity>, intercept: bool, fits: ClassFits },
    HullWhite { relaxed: bool, fits: ClassFits },
    Semilinear { kind: SemilinearKind, fits: ClassFits },
    HestonAdjusted { params: HestonParams },
    DeltaVegaNeutral { params: HestonParams },
}

/// Second hedging instrument of the two-instrument strategy: eta synthetic
/// at-the-money calls, with their model prices at both period ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtmLeg {
    pub eta: Scalar,
    pub c0: Scalar,
    pub c1: Scalar,
}

/// Units of underlying held (plus the optional second instrument).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HedgeRatio {
    pub delta: Scalar,
    pub atm: Option<AtmLeg>,
}

/// Transformed regression pair (x, y) of one sample.
pub fn regression_target(s: &Sample, horizon: Horizon) -> Result<(Scalar, Scalar)> {
    if !s.is_normalized() {
        return Err(Error::Input("samples must be normalized before fitting".into()));
    }
    let gross = s.gross_return(horizon);
    Ok((s.s1 - gross * 100.0, s.c1 - gross * s.c0))
}

fn split_classes(table: &SampleTable) -> (Vec<&Sample>, Vec<&Sample>) {
    let mut calls = Vec::new();
    let mut puts = Vec::new();
    for r in &table.rows {
        match r.kind() {
            OptionKind::Call => calls.push(r),
            OptionKind::Put => puts.push(r),
        }
    }
    (calls, puts)
}

fn require_samples(rows: &[&Sample], p: usize, kind: OptionKind) -> Result<()> {
    if rows.len() < 2 * p {
        return Err(Error::Fit(format!(
            "{} {}s cannot identify {p} coefficients (need at least {})",
            rows.len(),
            kind.label(),
            2 * p
        )));
    }
    Ok(())
}

fn canonical_sensitivities(sensitivities: &[Sensitivity]) -> Result<Vec<Sensitivity>> {
    if sensitivities.is_empty() {
        return Err(Error::Fit("at least one sensitivity is required".into()));
    }
    let mut out = sensitivities.to_vec();
    out.sort_by_key(|s| s.canonical_index());
    out.dedup();
    Ok(out)
}

/// Fit the sensitivity regression (no intercept by default) separately per
/// class. Regressors are sensitivity * x against y.
///
/// Subsets that include the delta estimate its coefficient freely; subsets
/// without it are nested models where the plain delta keeps a unit
/// coefficient and only the named sensitivities are fitted as corrections
/// (the delta term moves to the response side).
pub fn fit_linear(
    train: &SampleTable,
    sensitivities: &[Sensitivity],
    intercept: bool,
) -> Result<HedgeModel> {
    let sensitivities = canonical_sensitivities(sensitivities)?;
    let delta_anchored = !sensitivities.contains(&Sensitivity::Delta);
    let p = sensitivities.len() + usize::from(intercept);
    let mut names: Vec<&str> = sensitivities.iter().map(|s| s.label()).collect();
    if intercept {
        names.push("intercept");
    }
    let (calls, puts) = split_classes(train);
    let fit_class = |rows: &[&Sample], kind| -> Result<FitResult> {
        require_samples(rows, p, kind)?;
        let mut x = Array2::<Scalar>::zeros((rows.len(), p));
        let mut y = vec![0.0; rows.len()];
        for (i, s) in rows.iter().enumerate() {
            let (xt, yt) = regression_target(s, train.horizon)?;
            for (j, sens) in sensitivities.iter().enumerate() {
                x[[i, j]] = sens.value(s) * xt;
            }
            if intercept {
                x[[i, p - 1]] = xt;
            }
            y[i] = if delta_anchored { yt - s.delta_bs * xt } else { yt };
        }
        ols(&x, &y, &names)
    };
    let fits = ClassFits {
        call: fit_class(&calls, OptionKind::Call)?,
        put: fit_class(&puts, OptionKind::Put)?,
    };
    Ok(HedgeModel::Linear { sensitivities, intercept, fits })
}

/// Hull-White-style delta-cubic correction: the hedge is
/// delta + vega/(sqrt(tau) S) (a + b delta + c delta^2). Unless `relaxed`,
/// the plain delta keeps a unit coefficient and only the correction is
/// fitted; relaxed frees the delta coefficient too (stored first).
pub fn fit_hull_white(train: &SampleTable, relaxed: bool) -> Result<HedgeModel> {
    let p = if relaxed { 4 } else { 3 };
    let names: Vec<&str> = if relaxed {
        vec!["delta", "hw_1", "hw_delta", "hw_delta2"]
    } else {
        vec!["hw_1", "hw_delta", "hw_delta2"]
    };
    let (calls, puts) = split_classes(train);
    let fit_class = |rows: &[&Sample], kind| -> Result<FitResult> {
        require_samples(rows, p, kind)?;
        let mut x = Array2::<Scalar>::zeros((rows.len(), p));
        let mut y = vec![0.0; rows.len()];
        for (i, s) in rows.iter().enumerate() {
            let (xt, yt) = regression_target(s, train.horizon)?;
            let base = s.vega_bs / (s.tau.sqrt() * s.s0) * xt;
            let d = s.delta_bs;
            let off = if relaxed { 1 } else { 0 };
            if relaxed {
                x[[i, 0]] = d * xt;
            }
            x[[i, off]] = base;
            x[[i, off + 1]] = base * d;
            x[[i, off + 2]] = base * d * d;
            // With the unit delta coefficient the delta term moves to the
            // response side.
            y[i] = if relaxed { yt } else { yt - d * xt };
        }
        ols(&x, &y, &names)
    };
    let fits = ClassFits {
        call: fit_class(&calls, OptionKind::Call)?,
        put: fit_class(&puts, OptionKind::Put)?,
    };
    Ok(HedgeModel::HullWhite { relaxed, fits })
}

/// Fit one of the two semi-linear benchmarks on (moneyness, root total
/// implied variance). The affine kind is plain least squares; the CDF kind
/// is Gauss-Newton on the hedging objective, started from the affine
/// solution mapped through the inverse normal CDF.
pub fn fit_semilinear(train: &SampleTable, kind: SemilinearKind) -> Result<HedgeModel> {
    let names = ["moneyness", "sqrt_total_implied_variance", "intercept"];
    let (calls, puts) = split_classes(train);
    let fit_class = |rows: &[&Sample], class: OptionKind| -> Result<FitResult> {
        require_samples(rows, 3, class)?;
        let n = rows.len();
        let mut feats = Vec::with_capacity(n);
        let mut xy = Vec::with_capacity(n);
        for s in rows.iter() {
            feats.push([s.moneyness, s.sqrt_total_implied_variance, 1.0]);
            xy.push(regression_target(s, train.horizon)?);
        }

        // Affine fit: regressors feature * x against y.
        let mut x = Array2::<Scalar>::zeros((n, 3));
        let mut y = vec![0.0; n];
        for i in 0..n {
            for j in 0..3 {
                x[[i, j]] = feats[i][j] * xy[i].0;
            }
            y[i] = xy[i].1;
        }
        let affine = ols(&x, &y, &names)?;
        if kind == SemilinearKind::Affine {
            return Ok(affine);
        }

        // Map the affine hedge through the inverse CDF for a starting point.
        let cp = Scalar::from(class.cp_flag());
        let mut z = vec![0.0; n];
        for i in 0..n {
            let delta_hat: Scalar =
                (0..3).map(|j| affine.coefficients[j] * feats[i][j]).sum();
            let inside = (delta_hat + cp).clamp(1e-3, 1.0 - 1e-3);
            z[i] = crate::num::Real::inv_norm_cdf(inside);
        }
        let mut f = Array2::<Scalar>::zeros((n, 3));
        for i in 0..n {
            for j in 0..3 {
                f[[i, j]] = feats[i][j];
            }
        }
        let init = ols(&f, &z, &names)?;
        let mut beta = [init.coefficients[0], init.coefficients[1], init.coefficients[2]];

        // Gauss-Newton on r_i = (N(l_i) - cp) x_i - y_i.
        let mut last = None;
        for _ in 0..200 {
            let mut jac = Array2::<Scalar>::zeros((n, 3));
            let mut neg_r = vec![0.0; n];
            for i in 0..n {
                let l: Scalar = (0..3).map(|j| beta[j] * feats[i][j]).sum();
                let nl = crate::num::Real::norm_cdf(l);
                let pdf = crate::num::Real::norm_pdf(l);
                for j in 0..3 {
                    jac[[i, j]] = pdf * xy[i].0 * feats[i][j];
                }
                neg_r[i] = -((nl - cp) * xy[i].0 - xy[i].1);
            }
            let step = ols(&jac, &neg_r, &names)?;
            let norm: Scalar =
                step.coefficients.iter().map(|c| c * c).sum::<Scalar>().sqrt();
            for j in 0..3 {
                beta[j] += step.coefficients[j];
            }
            if norm < 1e-8 {
                let mut sse = 0.0;
                for i in 0..n {
                    let l: Scalar = (0..3).map(|j| beta[j] * feats[i][j]).sum();
                    let r = (crate::num::Real::norm_cdf(l) - cp) * xy[i].0 - xy[i].1;
                    sse += r * r;
                }
                return Ok(FitResult {
                    coefficients: beta.to_vec(),
                    standard_errors: step.standard_errors,
                    residual_sse: sse,
                    n_samples: n,
                });
            }
            last = Some(beta);
        }
        Err(Error::Fit(format!(
            "semi-linear CDF fit did not converge in 200 iterations (last iterate {:?})",
            last.unwrap_or(beta)
        )))
    };
    let fits = ClassFits {
        call: fit_class(&calls, OptionKind::Call)?,
        put: fit_class(&puts, OptionKind::Put)?,
    };
    Ok(HedgeModel::Semilinear { kind, fits })
}

/// Model-implied hedge under the true Heston dynamics: the spot sensitivity
/// plus a variance-sensitivity correction from the spot/variance
/// correlation.
pub fn heston_adjusted_delta(sample: &Sample, params: &HestonParams) -> Result<Scalar> {
    let y0 = sample
        .y0
        .ok_or_else(|| Error::Input("sample carries no instantaneous variance".into()))?;
    let (delta_hs, nu_hs) = pricer::heston_delta_vega(
        params,
        sample.s0,
        y0,
        sample.strike,
        sample.tau,
        sample.r,
        sample.kind(),
    )?;
    Ok(delta_hs + nu_hs * params.rho * params.sigma_y / sample.s0)
}

impl HedgeModel {
    /// Report name of the model.
    pub fn name(&self) -> String {
        match self {
            HedgeModel::Zero => "zero".into(),
            HedgeModel::BsDelta => "bs_delta".into(),
            HedgeModel::Fixed { .. } => "fixed".into(),
            HedgeModel::Linear { sensitivities, intercept, .. } => {
                let mut n = sensitivities.iter().map(|s| s.label()).collect::<Vec<_>>().join("_");
                if *intercept {
                    n.push_str("_intercept");
                }
                n
            }
            HedgeModel::HullWhite { relaxed: false, .. } => "hull_white".into(),
            HedgeModel::HullWhite { relaxed: true, .. } => "hull_white_relaxed".into(),
            HedgeModel::Semilinear { kind: SemilinearKind::Affine, .. } => "semilinear_1".into(),
            HedgeModel::Semilinear { kind: SemilinearKind::NormalCdf, .. } => "semilinear_2".into(),
            HedgeModel::HestonAdjusted { .. } => "heston_adjusted".into(),
            HedgeModel::DeltaVegaNeutral { .. } => "delta_vega_neutral".into(),
        }
    }

    /// Fitted per-class results, for models that are fitted.
    pub fn fits(&self) -> Option<&ClassFits> {
        match self {
            HedgeModel::Linear { fits, .. }
            | HedgeModel::HullWhite { fits, .. }
            | HedgeModel::Semilinear { fits, .. } => Some(fits),
            _ => None,
        }
    }

    /// Hedging ratio for one sample. Models with a second instrument also
    /// return the at-the-money leg.
    pub fn hedge_ratio(&self, s: &Sample, horizon: Horizon) -> Result<HedgeRatio> {
        let delta_only = |delta: Scalar| HedgeRatio { delta, atm: None };
        match self {
            HedgeModel::Zero => Ok(delta_only(0.0)),
            HedgeModel::BsDelta => Ok(delta_only(s.delta_bs)),
            HedgeModel::Fixed { f_call, f_put } => {
                let f = match s.kind() {
                    OptionKind::Call => *f_call,
                    OptionKind::Put => *f_put,
                };
                Ok(delta_only(f * s.delta_bs))
            }
            HedgeModel::Linear { sensitivities, intercept, fits } => {
                let fit = fits.class(s.kind());
                let p = sensitivities.len() + usize::from(*intercept);
                if fit.coefficients.len() != p {
                    return Err(Error::State(format!(
                        "linear model expects {p} coefficients, found {}",
                        fit.coefficients.len()
                    )));
                }
                // Nested subsets without the delta anchor it at one.
                let mut delta = if sensitivities.contains(&Sensitivity::Delta) {
                    0.0
                } else {
                    s.delta_bs
                };
                for (j, sens) in sensitivities.iter().enumerate() {
                    delta += fit.coefficients[j] * sens.value(s);
                }
                if *intercept {
                    delta += fit.coefficients[p - 1];
                }
                Ok(delta_only(delta))
            }
            HedgeModel::HullWhite { relaxed, fits } => {
                let fit = fits.class(s.kind());
                let p = if *relaxed { 4 } else { 3 };
                if fit.coefficients.len() != p {
                    return Err(Error::State(format!(
                        "correction model expects {p} coefficients, found {}",
                        fit.coefficients.len()
                    )));
                }
                let d = s.delta_bs;
                let base = s.vega_bs / (s.tau.sqrt() * s.s0);
                let (lead, c) = if *relaxed {
                    (fit.coefficients[0] * d, &fit.coefficients[1..])
                } else {
                    (d, &fit.coefficients[..])
                };
                Ok(delta_only(lead + base * (c[0] + c[1] * d + c[2] * d * d)))
            }
            HedgeModel::Semilinear { kind, fits } => {
                let fit = fits.class(s.kind());
                if fit.coefficients.len() != 3 {
                    return Err(Error::State(format!(
                        "semi-linear model expects 3 coefficients, found {}",
                        fit.coefficients.len()
                    )));
                }
                let l = fit.coefficients[0] * s.moneyness
                    + fit.coefficients[1] * s.sqrt_total_implied_variance
                    + fit.coefficients[2];
                let delta = match kind {
                    SemilinearKind::Affine => l,
                    SemilinearKind::NormalCdf => {
                        crate::num::Real::norm_cdf(l) - Scalar::from(s.cp_flag)
                    }
                };
                Ok(delta_only(delta))
            }
            HedgeModel::HestonAdjusted { params } => {
                Ok(delta_only(heston_adjusted_delta(s, params)?))
            }
            HedgeModel::DeltaVegaNeutral { params } => {
                let y0 = s
                    .y0
                    .ok_or_else(|| Error::Input("sample carries no instantaneous variance".into()))?;
                let y1 = s
                    .y1
                    .ok_or_else(|| Error::Input("sample carries no end-of-period variance".into()))?;
                let (delta_hs, nu_hs) = pricer::heston_delta_vega(
                    params, s.s0, y0, s.strike, s.tau, s.r, s.kind(),
                )?;
                // Synthetic one-month call struck at the spot rounded to the
                // ladder step (s0 is 100 after normalization).
                let k_atm = (s.s0 / STRIKE_STEP).round() * STRIKE_STEP;
                let (delta_atm, nu_atm) = pricer::heston_delta_vega(
                    params,
                    s.s0,
                    y0,
                    k_atm,
                    ATM_HEDGE_TAU,
                    s.r,
                    OptionKind::Call,
                )?;
                let eta = nu_hs / nu_atm;
                let c0 = pricer::heston_price(
                    params,
                    s.s0,
                    y0,
                    k_atm,
                    ATM_HEDGE_TAU,
                    s.r,
                    OptionKind::Call,
                )?;
                let c1 = pricer::heston_price(
                    params,
                    s.s1,
                    y1,
                    k_atm,
                    ATM_HEDGE_TAU - horizon.years(),
                    s.r,
                    OptionKind::Call,
                )?;
                Ok(HedgeRatio {
                    delta: delta_hs - eta * delta_atm,
                    atm: Some(AtmLeg { eta, c0, c1 }),
                })
            }
        }
    }
}

/// Serialized form of a fitted model, tagged with its training window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub name: String,
    pub window_id: Option<u32>,
    pub model: HedgeModel,
}

impl ModelDocument {
    pub fn new(model: HedgeModel, window_id: Option<u32>) -> Self {
        ModelDocument { name: model.name(), window_id, model }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::Input(format!("model serialization failed: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::Input(format!("model deserialization failed: {e}")))
    }
}
