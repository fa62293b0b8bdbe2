//! Scratch driver: per-contract achievable improvement over the plain delta
//! hedge at the two-day horizon, by maturity and moneyness.

use deltabench_core::listings::OptionKind;
use deltabench_core::pricer::{bs_greeks, bs_price};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::Distribution;

fn run(mu: f64, tau_days: f64, m: f64, kind: OptionKind, n: usize) -> (f64, f64) {
    let s0: f64 = 2000.0;
    let k = s0 / m;
    let sigma = 0.2;
    let tau = tau_days / 253.0;
    let dt = 2.0 / 253.0;
    let q0 = bs_greeks(s0, k, tau, sigma, 0.0, kind).unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(7);
    // Regressors: delta x, vega x, gamma x, vanna x; target y.
    let mut xtx = [[0.0f64; 4]; 4];
    let mut xty = [0.0f64; 4];
    let mut zz = 0.0;
    let mut zy = 0.0;
    let mut yy = 0.0;
    let mut draws = Vec::with_capacity(n);
    for _ in 0..n {
        let z: f64 = rand_distr::StandardNormal.sample(&mut rng);
        let s1 = s0 * ((mu - 0.5 * sigma * sigma) * dt + sigma * dt.sqrt() * z).exp();
        let c1 = bs_price(s1, k, tau - dt, sigma, 0.0, kind).unwrap();
        let x = 100.0 * (s1 / s0 - 1.0);
        let y = 100.0 / s0 * (c1 - q0.price);
        let f = [q0.delta * x, q0.vega * x, q0.gamma * x, q0.vanna * x];
        for i in 0..4 {
            for j in 0..4 {
                xtx[i][j] += f[i] * f[j];
            }
            xty[i] += f[i] * y;
        }
        zz += f[0] * f[0];
        zy += f[0] * y;
        yy += y * y;
        draws.push((x, y));
    }
    // Delta-only optimal.
    let a = zy / zz;
    let mshe_bs: f64 =
        draws.iter().map(|(x, y)| (q0.delta * x - y).powi(2)).sum::<f64>() / n as f64;
    let mshe_a: f64 =
        draws.iter().map(|(x, y)| (a * q0.delta * x - y).powi(2)).sum::<f64>() / n as f64;
    // Full 4-regressor solve (tiny Gaussian elimination).
    let mut m4 = xtx;
    let mut b4 = xty;
    for col in 0..4 {
        let piv = m4[col][col];
        for j in 0..4 {
            m4[col][j] /= piv;
        }
        b4[col] /= piv;
        for row in 0..4 {
            if row != col {
                let f = m4[row][col];
                for j in 0..4 {
                    m4[row][j] -= f * m4[col][j];
                }
                b4[row] -= f * b4[col];
            }
        }
    }
    let coef = b4;
    let sens = [q0.delta, q0.vega, q0.gamma, q0.vanna];
    let mshe_4: f64 = draws
        .iter()
        .map(|(x, y)| {
            let d: f64 = (0..4).map(|i| coef[i] * sens[i]).sum::<f64>() * x;
            (d - y).powi(2)
        })
        .sum::<f64>()
        / n as f64;
    (100.0 * (mshe_a - mshe_bs) / mshe_bs, 100.0 * (mshe_4 - mshe_bs) / mshe_bs)
}

fn main() {
    let n = 300_000;
    for mu in [0.1, 0.0] {
        println!("-- mu = {mu} --");
        for (tau_days, m, kind) in [
            (5.0, 0.97, OptionKind::Call),
            (5.0, 1.0, OptionKind::Call),
            (21.0, 0.95, OptionKind::Call),
            (21.0, 1.05, OptionKind::Put),
            (63.0, 0.9, OptionKind::Call),
            (126.0, 0.85, OptionKind::Call),
            (252.0, 1.2, OptionKind::Put),
        ] {
            let (one, four) = run(mu, tau_days, m, kind, n);
            println!(
                "tau {tau_days:5.0}d M {m:4.2} {:4}: delta-only {one:+.2}%  full {four:+.2}%",
                format!("{kind:?}")
            );
        }
    }
}
