//! Scalar abstraction for the numerical core.
//!
//! All pricing, simulation and fitting code is generic over [`Real`], which is
//! implemented for `f32` and `f64`. The special functions (normal CDF and its
//! inverse) are trait methods so each scalar type can route to a suitable
//! double-precision kernel.

use ndarray::LinalgScalar;
use num_traits::{Float, FromPrimitive, NumAssign};
use rand::Rng;
use rand_distr::StandardNormal;
use std::fmt::{Debug, Display};

/// Floating-point scalar used throughout the numerical core.
pub trait Real:
    Float + FromPrimitive + NumAssign + LinalgScalar + Debug + Display + Send + Sync + 'static
{
    /// Shorthand conversion from an `f64` literal.
    fn c(v: f64) -> Self;

    /// Lossy widening to `f64` for reporting and serialization.
    fn as_f64(self) -> f64;

    /// Standard normal cumulative distribution function.
    fn norm_cdf(self) -> Self;

    /// Standard normal density.
    fn norm_pdf(self) -> Self;

    /// Inverse of [`Real::norm_cdf`] on (0, 1).
    fn inv_norm_cdf(self) -> Self;

    /// Draw from N(0, 1).
    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Draw uniformly from `[lo, hi)`.
    fn sample_uniform<R: Rng + ?Sized>(rng: &mut R, lo: Self, hi: Self) -> Self;
}

impl Real for f64 {
    #[inline]
    fn c(v: f64) -> Self {
        v
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }

    #[inline]
    fn norm_cdf(self) -> Self {
        norm_cdf_f64(self)
    }

    #[inline]
    fn norm_pdf(self) -> Self {
        norm_pdf_f64(self)
    }

    #[inline]
    fn inv_norm_cdf(self) -> Self {
        inv_norm_cdf_f64(self)
    }

    #[inline]
    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }

    #[inline]
    fn sample_uniform<R: Rng + ?Sized>(rng: &mut R, lo: Self, hi: Self) -> Self {
        rng.gen_range(lo..hi)
    }
}

impl Real for f32 {
    #[inline]
    fn c(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }

    #[inline]
    fn norm_cdf(self) -> Self {
        norm_cdf_f64(self as f64) as f32
    }

    #[inline]
    fn norm_pdf(self) -> Self {
        norm_pdf_f64(self as f64) as f32
    }

    #[inline]
    fn inv_norm_cdf(self) -> Self {
        inv_norm_cdf_f64(self as f64) as f32
    }

    #[inline]
    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }

    #[inline]
    fn sample_uniform<R: Rng + ?Sized>(rng: &mut R, lo: Self, hi: Self) -> Self {
        rng.gen_range(lo..hi)
    }
}

const SQRT_2PI: f64 = 2.506628274631000502;

#[inline]
pub(crate) fn norm_pdf_f64(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// Hart double-precision rational approximation of the standard normal CDF
/// (absolute error below 1e-15 over the whole real line).
pub(crate) fn norm_cdf_f64(x: f64) -> f64 {
    let z = x.abs();
    let tail = if z > 37.0 {
        0.0
    } else {
        let e = (-0.5 * z * z).exp();
        if z < 7.071067811865475 {
            let n = ((((((3.52624965998911e-2 * z + 0.700383064443688) * z
                + 6.37396220353165)
                * z
                + 33.912866078383)
                * z
                + 112.079291497871)
                * z
                + 221.213596169931)
                * z
                + 220.206867912376)
                * e;
            let d = ((((((8.83883476483184e-2 * z + 1.75566716318264) * z
                + 16.064177579207)
                * z
                + 86.7807322029461)
                * z
                + 296.564248779674)
                * z
                + 637.333633378831)
                * z
                + 793.826512519948)
                * z
                + 440.413735824752;
            n / d
        } else {
            let f = z + 1.0 / (z + 2.0 / (z + 3.0 / (z + 4.0 / (z + 0.65))));
            e / (SQRT_2PI * f)
        }
    };
    if x > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Acklam's rational approximation of the inverse normal CDF, polished with
/// one Halley step against [`norm_cdf_f64`].
pub(crate) fn inv_norm_cdf_f64(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "inverse normal CDF requires p in (0,1)");

    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    // Halley refinement.
    let e = norm_cdf_f64(x) - p;
    let u = e * SQRT_2PI * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// Nodes and weights for `n`-point Gauss-Legendre quadrature on `[-1, 1]`,
/// computed by Newton iteration on the Legendre recurrence.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Chebyshev-style initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}
