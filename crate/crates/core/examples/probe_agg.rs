//! Scratch driver: compare aggregation conventions for the two-day study
//! (ratio of averaged MSHEs versus averaged per-set improvements).

use deltabench_core::datapipe::{Horizon, PriceModel};
use deltabench_core::evaluator::{mshe, HedgeStrategy};
use deltabench_core::study::{simulate_dataset, ModelSpec, StudyConfig};

fn main() {
    for seed in 1..=6u64 {
        let mut cfg = StudyConfig::desk_scale(PriceModel::BlackScholes { sigma: 0.2 }, seed);
        cfg.horizons = vec![Horizon::Days(2)];
        let ds = simulate_dataset(&cfg).unwrap();
        let hd = &ds.per_horizon[0];

        let specs = [
            ModelSpec::parse("bs_delta").unwrap(),
            ModelSpec::parse("delta_gamma").unwrap(),
            ModelSpec::parse("delta_vega_gamma_vanna").unwrap(),
        ];
        let fitted: Vec<_> = specs
            .iter()
            .map(|s| (s.name(), s.fit(&hd.insample, &cfg.model).unwrap()))
            .collect();

        // Per-set MSHEs.
        let mut per_set: Vec<Vec<f64>> = vec![Vec::new(); specs.len()];
        for t in &hd.tests {
            for (k, (_, m)) in fitted.iter().enumerate() {
                per_set[k].push(mshe(t, m).unwrap().both);
            }
        }
        let n = hd.tests.len() as f64;
        let avg: Vec<f64> = per_set.iter().map(|v| v.iter().sum::<f64>() / n).collect();
        for k in 1..specs.len() {
            let ratio_of_avg = 100.0 * (avg[k] - avg[0]) / avg[0];
            let avg_of_ratio: f64 = per_set[k]
                .iter()
                .zip(&per_set[0])
                .map(|(m, b)| 100.0 * (m - b) / b)
                .sum::<f64>()
                / n;
            let spread: Vec<f64> = per_set[k]
                .iter()
                .zip(&per_set[0])
                .map(|(m, b)| 100.0 * (m - b) / b)
                .collect();
            let min = spread.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = spread.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            println!(
                "seed {seed} {:24} ratio_of_avg {ratio_of_avg:+.2}% avg_of_ratio {avg_of_ratio:+.2}% per-set range [{min:+.1}, {max:+.1}]",
                fitted[k].0
            );
        }
    }
}
