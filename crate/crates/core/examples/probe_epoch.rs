//! Scratch driver: time a few training epochs on synthetic data.
use chrono::NaiveDate;
use deltabench_core::datapipe::{Horizon, SampleTable};
use deltabench_core::hedgenet::{train, FeatureSet, NetConfig, TrainConfig};
use deltabench_core::Scalar;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn main() {
    if std::env::args().nth(1).as_deref() == Some("real") {
        use deltabench_core::datapipe::PriceModel;
        use deltabench_core::study::{simulate_dataset, split_train_val, StudyConfig};
        let mut cfg = StudyConfig::desk_scale(PriceModel::BlackScholes { sigma: 0.2 }, 1);
        cfg.horizons = vec![Horizon::Days(1)];
        cfg.test_sets = 1;
        cfg.test_days = 1;
        let ds = simulate_dataset(&cfg).unwrap();
        let hd = &ds.per_horizon[0];
        let (train_t, val_t) = split_train_val(&hd.insample, cfg.train_days).unwrap();
        println!("real rows: {} / {}", train_t.len(), val_t.len());
        let net_cfg = NetConfig::new(FeatureSet::DeltaVegaTau);
        let tc = TrainConfig { learning_rate: 1e-4, batch_size: 64, epochs: 3, l2_alpha: 1e-4, seed: 7 };
        let t0 = std::time::Instant::now();
        let net = train(&train_t, &val_t, &net_cfg, &tc).unwrap();
        println!("3 real epochs in {:?} ({:?}/epoch), dead {}", t0.elapsed(), t0.elapsed() / 3, net.dead_clamp_updates);
        return;
    }
    let mut rng = ChaCha12Rng::seed_from_u64(1);
    let mut make = |n: usize| {
        let mut t = SampleTable::new(Horizon::Days(1));
        for _ in 0..n {
            let x: Scalar = rng.gen_range(-2.0..2.0);
            let m: Scalar = rng.gen_range(0.8..1.0);
            let tau: Scalar = rng.gen_range(0.02..0.8);
            t.rows.push(deltabench_core::datapipe::Sample {
                index: 0,
                date: NaiveDate::from_ymd_opt(2018, 7, 2).unwrap(),
                sqrt_total_implied_variance: 0.2 * tau.sqrt(),
                moneyness: m,
                delta_bs: rng.gen_range(0.1..0.9),
                vega_bs: rng.gen_range(1.0..30.0),
                gamma_bs: rng.gen_range(0.001..0.2),
                vanna_bs: rng.gen_range(-2.0..2.0),
                s0: 100.0,
                s1: 100.0 + x,
                c0: 2.0,
                r_onr: 0.0,
                cp_flag: 0,
                tau,
                r: 0.0,
                strike: 100.0 / m,
                y0: None,
                y1: None,
                c1: 2.0 + 0.5 * x,
            });
        }
        t
    };
    let train_t = make(263_000);
    let val_t = make(66_000);
    let cfg = NetConfig::new(FeatureSet::DeltaVegaTau);
    let tc =
        TrainConfig { learning_rate: 1e-4, batch_size: 64, epochs: 3, l2_alpha: 1e-4, seed: 1 };
    let t0 = std::time::Instant::now();
    let net = train(&train_t, &val_t, &cfg, &tc).unwrap();
    println!(
        "3 epochs in {:?} ({:?}/epoch), best {}",
        t0.elapsed(),
        t0.elapsed() / 3,
        net.best_epoch
    );
}
