//! Scratch driver: achievable improvement ceiling when regression
//! coefficients are estimated on the pooled test population itself.

use deltabench_core::datapipe::{Horizon, PriceModel, SampleTable};
use deltabench_core::evaluator::HedgeStrategy;
use deltabench_core::study::{evaluate_strategies, simulate_dataset, ModelSpec, StudyConfig};

fn main() {
    let seed = 3u64;
    let mut cfg = StudyConfig::desk_scale(PriceModel::BlackScholes { sigma: 0.2 }, seed);
    cfg.horizons = vec![Horizon::Days(2)];
    let ds = simulate_dataset(&cfg).unwrap();
    let hd = &ds.per_horizon[0];

    // Pool all test rows into one giant fitting table.
    let mut pooled = SampleTable::new(hd.horizon);
    for t in &hd.tests {
        pooled.rows.extend(t.rows.iter().cloned());
    }
    println!("pooled fitting rows: {}", pooled.len());

    let specs = [
        ModelSpec::parse("bs_delta").unwrap(),
        ModelSpec::parse("delta").unwrap(),
        ModelSpec::parse("gamma").unwrap(),
        ModelSpec::parse("delta_gamma").unwrap(),
        ModelSpec::parse("delta_vega_gamma_vanna").unwrap(),
    ];
    let fitted: Vec<_> = specs
        .iter()
        .map(|s| (s.name(), s.fit(&pooled, &cfg.model).unwrap()))
        .collect();
    for (n, m) in &fitted {
        if let Some(f) = m.fits() {
            println!("{n}: call {:?}", f.call.coefficients);
        }
    }
    let strategies: Vec<(String, &dyn HedgeStrategy)> =
        fitted.iter().map(|(n, m)| (n.clone(), m as &dyn HedgeStrategy)).collect();
    let report = evaluate_strategies(hd.horizon, &hd.tests, &strategies).unwrap();
    for cell in &report.cells {
        println!(
            "{:28} {:6} mshe {:12.6} rel {:?}",
            cell.model, cell.class, cell.mshe, cell.relative_improvement_pct
        );
    }
}
