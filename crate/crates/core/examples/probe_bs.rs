//! Scratch driver: run the desk-scale lognormal study for one seed and
//! print the comparison table.

use deltabench_core::datapipe::PriceModel;
use deltabench_core::evaluator::HedgeStrategy;
use deltabench_core::study::{evaluate_strategies, full_roster, simulate_dataset, StudyConfig};

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let cfg = StudyConfig::desk_scale(PriceModel::BlackScholes { sigma: 0.2 }, seed);
    let t0 = std::time::Instant::now();
    let ds = simulate_dataset(&cfg).unwrap();
    eprintln!("simulated in {:?}", t0.elapsed());
    for hd in &ds.per_horizon {
        eprintln!(
            "horizon {}: insample {} rows ({} calls / {} puts), tests {} x ~{} rows",
            hd.horizon.label(),
            hd.insample.len(),
            hd.insample.rows.iter().filter(|r| r.cp_flag == 0).count(),
            hd.insample.rows.iter().filter(|r| r.cp_flag == 1).count(),
            hd.tests.len(),
            hd.tests.iter().map(|t| t.len()).sum::<usize>() / hd.tests.len(),
        );
        let t1 = std::time::Instant::now();
        let fitted: Vec<_> = full_roster()
            .iter()
            .map(|spec| (spec.name(), spec.fit(&hd.insample, &cfg.model).unwrap()))
            .collect();
        eprintln!("fitted {} models in {:?}", fitted.len(), t1.elapsed());
        let strategies: Vec<(String, &dyn HedgeStrategy)> =
            fitted.iter().map(|(n, m)| (n.clone(), m as &dyn HedgeStrategy)).collect();
        let report = evaluate_strategies(hd.horizon, &hd.tests, &strategies).unwrap();
        println!("== horizon {} ==", hd.horizon.label());
        for cell in &report.cells {
            if cell.class == "both" || cell.model == "bs_delta" || cell.model == "zero" {
                println!(
                    "{:28} {:6} mshe {:12.6} rel {:?}",
                    cell.model, cell.class, cell.mshe, cell.relative_improvement_pct
                );
            }
        }
        // Delta-only coefficients.
        if let Some((_, m)) = fitted.iter().find(|(n, _)| n == "delta") {
            if let Some(fits) = m.fits() {
                println!(
                    "delta-only coeff: call {:.4} put {:.4}",
                    fits.call.coefficients[0], fits.put.coefficients[0]
                );
            }
        }
    }
    eprintln!("total {:?}", t0.elapsed());
}
