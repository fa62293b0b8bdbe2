//! Scratch driver: single-contract delta-coefficient regression under a
//! drifting lognormal underlying, against the small-drift expansion.

use deltabench_core::listings::OptionKind;
use deltabench_core::pricer::{bs_greeks, bs_price};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn run(mu: f64, tau_days: f64, m: f64, dt_days: f64, n: usize, seed: u64) -> (f64, f64) {
    let s0: f64 = 2000.0;
    let k = s0 / m;
    let sigma = 0.2;
    let tau = tau_days / 253.0;
    let dt = dt_days / 253.0;
    let q0 = bs_greeks(s0, k, tau, sigma, 0.0, OptionKind::Call).unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut szy = 0.0;
    let mut szz = 0.0;
    for _ in 0..n {
        let z: f64 = rng.gen_range(-1.0..1.0f64).atanh() * 0.0 + {
            let u: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng);
            u
        };
        let s1 = s0 * ((mu - 0.5 * sigma * sigma) * dt + sigma * dt.sqrt() * z).exp();
        let c1 = bs_price(s1, k, tau - dt, sigma, 0.0, OptionKind::Call).unwrap();
        let x = 100.0 * (s1 / s0 - 1.0);
        let y = 100.0 / s0 * (c1 - q0.price);
        let zreg = q0.delta * x;
        szy += zreg * y;
        szz += zreg * zreg;
    }
    (szy / szz, q0.delta)
}

fn main() {
    for (mu, label) in [(0.1, "drift 10%"), (0.0, "no drift")] {
        for m in [0.9, 1.0] {
            let (a, delta) = run(mu, 30.0, m, 2.0, 400_000, 42);
            println!("{label}: M={m} delta={delta:.3} fitted a = {a:.5}");
        }
    }
}
