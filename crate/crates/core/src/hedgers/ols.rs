//! Ordinary least squares by Householder QR, with classical standard
//! errors from the triangular factor.

use crate::error::{Error, Result};
use crate::num::Real;
use ndarray::Array2;

/// Least-squares fit of one coefficient vector.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FitResult {
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub residual_sse: f64,
    pub n_samples: usize,
}

/// Solve min ||X b - y||^2 for a tall design matrix.
///
/// The matrix is reduced in place by Householder reflections; the residual
/// sum of squares is the squared norm of the bottom of the transformed
/// response. Standard errors come from sse/(n-p) * diag((X'X)^-1) with
/// (X'X)^-1 = R^-1 R^-T. Rank deficiency is reported with the offending
/// column's name.
pub fn ols<T: Real>(x: &Array2<T>, y: &[T], column_names: &[&str]) -> Result<FitResult> {
    let n = x.nrows();
    let p = x.ncols();
    if p == 0 {
        return Err(Error::Fit("design matrix has no columns".into()));
    }
    if y.len() != n {
        return Err(Error::Fit(format!("{n} rows but {} responses", y.len())));
    }
    if n < p {
        return Err(Error::Fit(format!("{n} samples cannot identify {p} coefficients")));
    }
    debug_assert_eq!(column_names.len(), p);

    let mut a = x.clone();
    let mut b: Vec<T> = y.to_vec();
    let scale: T = a.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if scale == T::zero() {
        return Err(Error::Fit(format!(
            "design column {:?} is identically zero",
            column_names[0]
        )));
    }

    for j in 0..p {
        // Householder vector for column j below the diagonal.
        let mut norm2 = T::zero();
        for i in j..n {
            let v = a[[i, j]];
            norm2 += v * v;
        }
        let norm = norm2.sqrt();
        if norm <= scale * T::c(1e-13) * T::from_usize(n).unwrap().sqrt() {
            return Err(Error::Fit(format!(
                "design is rank deficient at column {:?} (collinear regressors)",
                column_names[j]
            )));
        }
        let alpha = if a[[j, j]] >= T::zero() { -norm } else { norm };
        let mut v0 = a[[j, j]] - alpha;
        // Guard against an exactly-zero pivot adjustment.
        if v0 == T::zero() {
            v0 = T::c(1e-300);
        }
        a[[j, j]] = v0;
        let mut vtv = T::zero();
        for i in j..n {
            let v = a[[i, j]];
            vtv += v * v;
        }
        let beta = T::c(2.0) / vtv;

        for col in (j + 1)..p {
            let mut dot = T::zero();
            for i in j..n {
                dot += a[[i, j]] * a[[i, col]];
            }
            let f = beta * dot;
            for i in j..n {
                let adj = f * a[[i, j]];
                a[[i, col]] -= adj;
            }
        }
        let mut dot = T::zero();
        for i in j..n {
            dot += a[[i, j]] * b[i];
        }
        let f = beta * dot;
        for i in j..n {
            let adj = f * a[[i, j]];
            b[i] -= adj;
        }
        a[[j, j]] = alpha;
    }

    // Back-substitute R beta = (Q'y)[..p].
    let mut coeff = vec![T::zero(); p];
    for j in (0..p).rev() {
        let mut acc = b[j];
        for k in (j + 1)..p {
            acc -= a[[j, k]] * coeff[k];
        }
        let r_jj = a[[j, j]];
        if r_jj.abs() <= scale * T::c(1e-13) {
            return Err(Error::Fit(format!(
                "design is rank deficient at column {:?} (collinear regressors)",
                column_names[j]
            )));
        }
        coeff[j] = acc / r_jj;
    }

    let mut sse = T::zero();
    for item in b.iter().take(n).skip(p) {
        sse += *item * *item;
    }

    // (X'X)^-1 = R^-1 R^-T: solve R M = I column by column.
    let mut rinv = vec![vec![T::zero(); p]; p];
    for col in 0..p {
        for j in (0..=col).rev() {
            let mut acc = if j == col { T::one() } else { T::zero() };
            for k in (j + 1)..=col {
                acc -= a[[j, k]] * rinv[k][col];
            }
            rinv[j][col] = acc / a[[j, j]];
        }
    }
    let dof = n.saturating_sub(p);
    let sigma2 = if dof > 0 { sse / T::from_usize(dof).unwrap() } else { T::zero() };
    let mut se = vec![0.0f64; p];
    for j in 0..p {
        let mut diag = T::zero();
        for k in j..p {
            diag += rinv[j][k] * rinv[j][k];
        }
        se[j] = (sigma2 * diag).sqrt().as_f64();
    }

    Ok(FitResult {
        coefficients: coeff.iter().map(|c| c.as_f64()).collect(),
        standard_errors: se,
        residual_sse: sse.as_f64(),
        n_samples: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn exact_system_recovers_coefficients() {
        let x = arr2(&[[1.0, 0.0], [1.0, 1.0], [1.0, 2.0], [1.0, 3.0]]);
        let y = [2.0, 5.0, 8.0, 11.0];
        let fit = ols(&x, &y, &["intercept", "slope"]).unwrap();
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-12);
        assert!((fit.coefficients[1] - 3.0).abs() < 1e-12);
        assert!(fit.residual_sse < 1e-20);
        assert!(fit.standard_errors.iter().all(|s| *s < 1e-10));
    }

    #[test]
    fn standard_errors_match_normal_equations_oracle() {
        // Small noisy fit checked against the closed-form 2x2 inverse.
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let n = 50;
        let mut x = Array2::<f64>::zeros((n, 2));
        let mut y = vec![0.0; n];
        for i in 0..n {
            x[[i, 0]] = rng.gen_range(-1.0..1.0);
            x[[i, 1]] = rng.gen_range(-1.0..1.0);
            let noise: f64 = rng.gen_range(-0.1..0.1);
            y[i] = 1.5 * x[[i, 0]] - 0.5 * x[[i, 1]] + noise;
        }
        let fit = ols(&x, &y, &["a", "b"]).unwrap();

        // Oracle via explicit normal equations.
        let (mut sxx, mut sxz, mut szz) = (0.0, 0.0, 0.0);
        let (mut sxy, mut szy) = (0.0, 0.0);
        for i in 0..n {
            let (u, v) = (x[[i, 0]], x[[i, 1]]);
            sxx += u * u;
            sxz += u * v;
            szz += v * v;
            sxy += u * y[i];
            szy += v * y[i];
        }
        let det = sxx * szz - sxz * sxz;
        let b0 = (szz * sxy - sxz * szy) / det;
        let b1 = (sxx * szy - sxz * sxy) / det;
        assert!((fit.coefficients[0] - b0).abs() < 1e-10);
        assert!((fit.coefficients[1] - b1).abs() < 1e-10);
        let sse: f64 = (0..n)
            .map(|i| {
                let e = y[i] - b0 * x[[i, 0]] - b1 * x[[i, 1]];
                e * e
            })
            .sum();
        assert!((fit.residual_sse - sse).abs() < 1e-10);
        let sigma2 = sse / (n as f64 - 2.0);
        let se0 = (sigma2 * szz / det).sqrt();
        let se1 = (sigma2 * sxx / det).sqrt();
        assert!((fit.standard_errors[0] - se0).abs() < 1e-10);
        assert!((fit.standard_errors[1] - se1).abs() < 1e-10);
    }

    #[test]
    fn residuals_are_orthogonal_to_regressors() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let n = 200;
        let mut x = Array2::<f64>::zeros((n, 3));
        let mut y = vec![0.0; n];
        for i in 0..n {
            for j in 0..3 {
                x[[i, j]] = rng.gen_range(-2.0..2.0);
            }
            y[i] = 0.3 * x[[i, 0]] - 1.1 * x[[i, 2]] + rng.gen_range(-0.5..0.5);
        }
        let fit = ols(&x, &y, &["a", "b", "c"]).unwrap();
        for j in 0..3 {
            let mut dot = 0.0;
            let mut col_norm2 = 0.0;
            let mut res_norm2 = 0.0;
            for i in 0..n {
                let resid = y[i]
                    - (0..3).map(|k| fit.coefficients[k] * x[[i, k]]).sum::<f64>();
                dot += resid * x[[i, j]];
                col_norm2 += x[[i, j]] * x[[i, j]];
                res_norm2 += resid * resid;
            }
            assert!(
                dot.abs() < 1e-8 * (col_norm2.sqrt() * res_norm2.sqrt()).max(1.0),
                "column {j} dot {dot}"
            );
        }
    }

    #[test]
    fn collinear_columns_error_names_the_column() {
        let x = arr2(&[[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]]);
        let y = [1.0, 2.0, 3.0];
        let err = ols(&x, &y, &["delta", "vega"]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("vega"), "{msg}");
    }

    #[test]
    fn underdetermined_is_rejected() {
        let x = arr2(&[[1.0, 2.0]]);
        assert!(ols(&x, &[1.0], &["a", "b"]).is_err());
    }
}
