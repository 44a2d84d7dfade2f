use wbary::benchmark::{
    cells_to_csv, fit_log_decrease, log_decrease_series, run_cell, run_wishart_benchmark, wishart_problem, BenchConfig,
};
use wbary::{IterationConfig, Variant};

fn small_config() -> BenchConfig {
    BenchConfig {
        dims: vec![2, 3],
        ks: vec![2, 3],
        replicates: 12,
        seed: 7,
        ..BenchConfig::default()
    }
}

#[test]
fn tables_do_not_depend_on_scheduling() {
    let parallel = run_wishart_benchmark(&small_config()).unwrap();
    let serial = run_wishart_benchmark(&BenchConfig {
        parallel: false,
        ..small_config()
    })
    .unwrap();
    let again = run_wishart_benchmark(&small_config()).unwrap();
    assert_eq!(cells_to_csv(&parallel), cells_to_csv(&serial));
    assert_eq!(cells_to_csv(&parallel), cells_to_csv(&again));
}

#[test]
fn paper_iterations_do_not_grow_with_k() {
    let config = BenchConfig {
        dims: vec![5, 10],
        ks: vec![3, 5],
        variants: vec![Variant::Paper],
        ..BenchConfig::default()
    };
    let cells = run_wishart_benchmark(&config).unwrap();
    for d in [5, 10] {
        let cell = |k| cells.iter().find(|c| c.d == d && c.k == k).unwrap();
        let (k3, k5) = (cell(3), cell(5));
        assert_eq!(k3.failures + k5.failures, 0);
        let se = (k3.standard_error().powi(2) + k5.standard_error().powi(2)).sqrt();
        assert!(
            k5.mean_iter <= k3.mean_iter + se,
            "d={d}: {} vs {}",
            k5.mean_iter,
            k3.mean_iter
        );
    }
}

#[test]
fn converged_replicates_satisfy_bounds() {
    let config = BenchConfig {
        replicates: 30,
        ..BenchConfig::default()
    };
    for d in [2, 5] {
        for k in [2, 5] {
            for r in 0..config.replicates {
                let problem = wishart_problem(config.seed, d, k, r).unwrap();
                let (result, _) = wbary::solve(&problem, &IterationConfig::default()).unwrap();
                assert!(result.converged);
                assert!(result.bound_report.violations().is_empty());
            }
            assert!(run_cell(&config, d, k, Variant::Paper)
                .iter()
                .all(|o| o.as_ref().is_some_and(|o| o.converged)));
        }
    }
}

#[test]
fn log_decrease_is_linear() {
    for r in 0..10 {
        let problem = wishart_problem(3, 5, 5, r).unwrap();
        let series = log_decrease_series(&problem, &IterationConfig::default()).unwrap();
        let fit = fit_log_decrease(&series).unwrap();
        assert!(fit.slope < 0.0, "replicate {r}");
        assert!(fit.r2 >= 0.95, "replicate {r}: {}", fit.r2);
    }
}
