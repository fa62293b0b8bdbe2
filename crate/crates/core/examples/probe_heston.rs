//! Scratch driver: desk-scale Heston study for one seed.

use deltabench_core::datapipe::{Horizon, PriceModel};
use deltabench_core::evaluator::HedgeStrategy;
use deltabench_core::study::{evaluate_strategies, simulate_dataset, ModelSpec, StudyConfig};
use deltabench_core::HestonParams;

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let params = HestonParams {
        s0: 2000.0,
        y0: 0.04,
        theta: 0.04,
        kappa: 5.0,
        sigma_y: 0.3,
        rho: -0.6,
    };
    let cfg = StudyConfig::desk_scale(PriceModel::Heston { params }, seed);
    let t0 = std::time::Instant::now();
    let ds = simulate_dataset(&cfg).unwrap();
    eprintln!("simulated + built in {:?}", t0.elapsed());
    eprintln!(
        "terminal spot {:.1}, terminal variance {:.4}",
        ds.insample_path.spot_at(449).unwrap(),
        ds.insample_path.variance_at(449).unwrap()
    );
    for hd in &ds.per_horizon {
        let n_calls = hd.insample.rows.iter().filter(|r| r.cp_flag == 0).count();
        eprintln!(
            "horizon {}: insample {} ({} calls / {} puts), tests {} x ~{}",
            hd.horizon.label(),
            hd.insample.len(),
            n_calls,
            hd.insample.len() - n_calls,
            hd.tests.len(),
            hd.tests.iter().map(|t| t.len()).sum::<usize>() / hd.tests.len()
        );
        let one_day = hd.horizon == Horizon::Days(1);
        let mut names = vec![
            "zero", "bs_delta", "fixed", "delta", "delta_vanna", "delta_vega_vanna",
            "hull_white",
        ];
        if one_day {
            names.push("heston_adjusted");
            names.push("delta_vega_neutral");
        }
        let t1 = std::time::Instant::now();
        let fitted: Vec<_> = names
            .iter()
            .map(|n| {
                let spec = ModelSpec::parse(n).unwrap();
                (spec.name(), spec.fit(&hd.insample, &cfg.model).unwrap())
            })
            .collect();
        eprintln!("fitted in {:?}", t1.elapsed());
        let strategies: Vec<(String, &dyn HedgeStrategy)> =
            fitted.iter().map(|(n, m)| (n.clone(), m as &dyn HedgeStrategy)).collect();
        let t2 = std::time::Instant::now();
        let report = evaluate_strategies(hd.horizon, &hd.tests, &strategies).unwrap();
        eprintln!("evaluated in {:?}", t2.elapsed());
        println!("== horizon {} ==", hd.horizon.label());
        for cell in &report.cells {
            if cell.class == "both" || cell.model == "bs_delta" || cell.model == "zero" {
                println!(
                    "{:24} {:6} mshe {:12.6} rel {:?}",
                    cell.model, cell.class, cell.mshe, cell.relative_improvement_pct
                );
            }
        }
        if let Some((_, m)) = fitted.iter().find(|(n, _)| n == "delta") {
            let f = m.fits().unwrap();
            println!(
                "delta-only coeff: call {:.4} put {:.4}",
                f.call.coefficients[0], f.put.coefficients[0]
            );
        }
    }
    eprintln!("total {:?}", t0.elapsed());
}
