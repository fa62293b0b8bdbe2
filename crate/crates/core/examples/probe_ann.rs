//! Scratch driver: network training on the one-day lognormal dataset, with
//! the out-of-sample comparison against the regression roster.

use deltabench_core::datapipe::{Horizon, PriceModel};
use deltabench_core::evaluator::{mshe_multi, HedgeStrategy};
use deltabench_core::hedgenet::{train, FeatureSet, NetConfig, TrainConfig};
use deltabench_core::study::{
    default_l2_alpha, full_roster, simulate_dataset, split_train_val, StudyConfig,
};

fn main() {
    let seed = 1u64;
    let mut cfg = StudyConfig::desk_scale(PriceModel::BlackScholes { sigma: 0.2 }, seed);
    cfg.horizons = vec![Horizon::Days(1)];
    let t0 = std::time::Instant::now();
    let ds = simulate_dataset(&cfg).unwrap();
    let hd = &ds.per_horizon[0];
    let (train_t, val_t) = split_train_val(&hd.insample, cfg.train_days).unwrap();
    eprintln!(
        "dataset ready in {:?}: train {} rows, val {} rows",
        t0.elapsed(),
        train_t.len(),
        val_t.len()
    );

    let fs = FeatureSet::DeltaVegaTau;
    let net_cfg = NetConfig::new(fs);
    let alpha = default_l2_alpha(&cfg.model, hd.horizon, fs);
    let tc = TrainConfig::new(alpha, 7);
    let t1 = std::time::Instant::now();
    let net = train(&train_t, &val_t, &net_cfg, &tc).unwrap();
    eprintln!(
        "trained 300 epochs in {:?}; best epoch {}, val loss {:.6e}, dead clamp updates {}",
        t1.elapsed(),
        net.best_epoch,
        net.history[net.best_epoch as usize].val_loss,
        net.dead_clamp_updates
    );

    let ann = mshe_multi(&hd.tests, &net).unwrap();
    println!("ann mshe both {:.6}", ann.both);
    let mut best = f64::INFINITY;
    let mut best_name = String::new();
    for spec in full_roster() {
        if matches!(spec.name().as_str(), "zero" | "fixed") {
            continue;
        }
        let model = spec.fit(&hd.insample, &cfg.model).unwrap();
        let m = mshe_multi(&hd.tests, &model).unwrap();
        if m.both < best {
            best = m.both;
            best_name = spec.name();
        }
    }
    println!("best regression {best_name} mshe {best:.6}");
    println!("ratio ann/best = {:.4}", ann.both / best);
    eprintln!("total {:?}", t0.elapsed());
}
