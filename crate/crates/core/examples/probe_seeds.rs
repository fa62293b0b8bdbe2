//! Scratch driver: per-seed terminal spots and two-day regression
//! improvements for the lognormal study.

use deltabench_core::datapipe::{Horizon, PriceModel};
use deltabench_core::evaluator::HedgeStrategy;
use deltabench_core::study::{evaluate_strategies, simulate_dataset, ModelSpec, StudyConfig};

fn main() {
    for seed in 1..=5u64 {
        let mut cfg = StudyConfig::desk_scale(PriceModel::BlackScholes { sigma: 0.2 }, seed);
        cfg.horizons = vec![Horizon::Days(2)];
        let ds = simulate_dataset(&cfg).unwrap();
        let s449 = ds.insample_path.spot_at(449).unwrap();
        let hd = &ds.per_horizon[0];
        let n_calls = hd.insample.rows.iter().filter(|r| r.cp_flag == 0).count();
        let n_puts = hd.insample.len() - n_calls;

        let specs = [
            ModelSpec::parse("bs_delta").unwrap(),
            ModelSpec::parse("delta_gamma").unwrap(),
            ModelSpec::parse("delta_vega_gamma_vanna").unwrap(),
            ModelSpec::parse("delta").unwrap(),
        ];
        let fitted: Vec<_> = specs
            .iter()
            .map(|s| (s.name(), s.fit(&hd.insample, &cfg.model).unwrap()))
            .collect();
        let strategies: Vec<(String, &dyn HedgeStrategy)> =
            fitted.iter().map(|(n, m)| (n.clone(), m as &dyn HedgeStrategy)).collect();
        let report = evaluate_strategies(hd.horizon, &hd.tests, &strategies).unwrap();
        let rel =
            |m: &str| report.cell(m, "both").unwrap().relative_improvement_pct.unwrap();
        let coeff = fitted
            .iter()
            .find(|(n, _)| n == "delta")
            .and_then(|(_, m)| m.fits().map(|f| (f.call.coefficients[0], f.put.coefficients[0])))
            .unwrap();
        println!(
            "seed {seed}: S449 {:7.1} calls {:6} puts {:6} | dG {:+.2}% dVGVa {:+.2}% | a_call {:.4} a_put {:.4}",
            s449, n_calls, n_puts, rel("delta_gamma"), rel("delta_vega_gamma_vanna"),
            coeff.0, coeff.1
        );
    }
}
