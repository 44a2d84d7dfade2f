//! Monte Carlo harness: Wishart-sampled problems, average iteration counts per
//! `(d, k, variant)` cell, and log-decrease series of the target functional.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fixpoint::{solve, IterationConfig, Variant, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::format_float;
use crate::gausswass::BarycenterProblem;
use crate::symmat::{sample_wishart, RngState};

pub const BENCH_CSV_HEADER: &str = "d,k,variant,mean_iter,stdev_iter,failures,replicates";
pub const SERIES_CSV_HEADER: &str = "n,log10_delta_v";

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub dims: Vec<usize>,
    pub ks: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub tol: f64,
    pub variants: Vec<Variant>,
    pub max_iter: usize,
    /// Run replicates on the rayon pool. Results do not depend on it.
    pub parallel: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            dims: vec![2, 3, 5, 10],
            ks: vec![2, 3, 5],
            replicates: 200,
            seed: 1,
            tol: DEFAULT_TOL,
            variants: vec![Variant::Paper, Variant::Ru],
            max_iter: DEFAULT_MAX_ITER,
            parallel: true,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("replicates must be at least 1".into()));
        }
        if self.dims.is_empty() || self.ks.is_empty() || self.variants.is_empty() {
            return Err(Error::InvalidConfig("dims, ks and variants must be nonempty".into()));
        }
        if self.dims.contains(&0) || self.ks.contains(&0) {
            return Err(Error::InvalidConfig("dims and ks must be positive".into()));
        }
        Ok(())
    }

    fn iteration_config(&self, variant: Variant) -> IterationConfig {
        IterationConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            ..IterationConfig::default()
        }
        .with_variant(variant)
    }
}

/// Aggregate over the replicates of one `(d, k, variant)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchCell {
    pub d: usize,
    pub k: usize,
    pub variant: Variant,
    /// Mean `n_iter` over converged replicates; NaN when none converged.
    pub mean_iter: f64,
    /// Sample standard deviation (zero for a single replicate).
    pub stdev_iter: f64,
    pub failures: usize,
    pub replicates: usize,
}

impl BenchCell {
    pub fn successes(&self) -> usize {
        self.replicates - self.failures
    }

    pub fn standard_error(&self) -> f64 {
        self.stdev_iter / (self.successes().max(1) as f64).sqrt()
    }
}

/// Outcome of one replicate. Errors raised by the solver count as failures.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOutcome {
    pub n_iter: usize,
    pub converged: bool,
    pub final_residual: f64,
}

/// The `k` Wishart `W_d(Id, d)` covariances of replicate `replicate`, with
/// equal weights. The stream depends only on `(seed, d, k, replicate)`.
pub fn wishart_problem(seed: u64, d: usize, k: usize, replicate: usize) -> Result<BarycenterProblem> {
    let mut rng = RngState::derive(seed, &[d as u64, k as u64, replicate as u64]);
    let covs = (0..k).map(|_| sample_wishart(&mut rng, d)).collect();
    BarycenterProblem::from_covariances(covs, vec![1.0 / k as f64; k])
}

fn run_replicate(config: &BenchConfig, d: usize, k: usize, variant: Variant, r: usize) -> Option<ReplicateOutcome> {
    let problem = wishart_problem(config.seed, d, k, r).ok()?;
    let (result, _) = solve(&problem, &config.iteration_config(variant)).ok()?;
    Some(ReplicateOutcome {
        n_iter: result.n_iter,
        converged: result.converged,
        final_residual: result.final_residual,
    })
}

/// Per-replicate outcomes of one cell, in replicate order.
pub fn run_cell(config: &BenchConfig, d: usize, k: usize, variant: Variant) -> Vec<Option<ReplicateOutcome>> {
    if config.parallel {
        (0..config.replicates)
            .into_par_iter()
            .map(|r| run_replicate(config, d, k, variant, r))
            .collect()
    } else {
        (0..config.replicates)
            .map(|r| run_replicate(config, d, k, variant, r))
            .collect()
    }
}

fn summarize(d: usize, k: usize, variant: Variant, outcomes: &[Option<ReplicateOutcome>]) -> BenchCell {
    let iters: Vec<f64> = outcomes
        .iter()
        .flatten()
        .filter(|o| o.converged)
        .map(|o| o.n_iter as f64)
        .collect();
    let n = iters.len();
    let mean_iter = if n == 0 {
        f64::NAN
    } else {
        iters.iter().sum::<f64>() / n as f64
    };
    let stdev_iter = if n < 2 {
        0.0
    } else {
        (iters.iter().map(|x| (x - mean_iter).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    BenchCell {
        d,
        k,
        variant,
        mean_iter,
        stdev_iter,
        failures: outcomes.len() - n,
        replicates: outcomes.len(),
    }
}

/// Runs every `(d, k, variant)` cell. Both variants see the same problems.
pub fn run_wishart_benchmark(config: &BenchConfig) -> Result<Vec<BenchCell>> {
    config.validate()?;
    let mut cells = Vec::new();
    for &d in &config.dims {
        for &k in &config.ks {
            for &variant in &config.variants {
                let outcomes = run_cell(config, d, k, variant);
                cells.push(summarize(d, k, variant, &outcomes));
            }
        }
    }
    Ok(cells)
}

pub fn cells_to_csv(cells: &[BenchCell]) -> String {
    let mut out = String::from(BENCH_CSV_HEADER);
    out.push('\n');
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            c.d,
            c.k,
            c.variant,
            format_float(c.mean_iter),
            format_float(c.stdev_iter),
            c.failures,
            c.replicates
        ));
    }
    out
}

/// `(n, log₁₀(V(S_n) − V(S_{n+1})))` along the iteration until the `ΔV` stop.
///
/// The series ends at the first decrease that is not above the rounding floor
/// `16 ε (Tr S_{n+1} + Σ λ_j Tr Σ_j)` of the functional.
pub fn log_decrease_series(problem: &BarycenterProblem, config: &IterationConfig) -> Result<Vec<(usize, f64)>> {
    if config.variant != Variant::Paper {
        return Err(Error::InvalidConfig(
            "log-decrease series is defined for the paper variant".into(),
        ));
    }
    let (_, trace) = solve(problem, &config.clone().without_polish())?;
    let scale = problem.weighted_trace();
    Ok(trace
        .main_phase()
        .iter()
        .skip(1)
        .map_while(|r| {
            let dv = r.delta_v?;
            let floor = 16.0 * f64::EPSILON * (r.trace + scale);
            (dv > floor).then(|| (r.n - 1, dv.log10()))
        })
        .collect())
}

pub fn series_to_csv(series: &[(usize, f64)]) -> String {
    let mut out = String::from(SERIES_CSV_HEADER);
    out.push('\n');
    for (n, y) in series {
        out.push_str(&format!("{},{}\n", n, format_float(*y)));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares of `y` on `x`.
pub fn fit_linear(points: &[(f64, f64)]) -> Result<LinearFit> {
    if points.len() < 3 {
        return Err(Error::TooShort {
            len: points.len(),
            min: 3,
        });
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let ss_tot: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        0.0
    };
    Ok(LinearFit { slope, intercept, r2 })
}

/// Central part of a series: drops `floor(len · (1 − fraction)/2)` points
/// from each end.
pub fn middle_fraction<T>(series: &[T], fraction: f64) -> &[T] {
    // the epsilon absorbs rounding in 1 − fraction
    let drop = ((series.len() as f64) * (1.0 - fraction) / 2.0 + 1e-9).floor() as usize;
    &series[drop..series.len() - drop]
}

/// Fit of the middle 80% of a log-decrease series.
pub fn fit_log_decrease(series: &[(usize, f64)]) -> Result<LinearFit> {
    let points: Vec<(f64, f64)> = middle_fraction(series, 0.8)
        .iter()
        .map(|&(n, y)| (n as f64, y))
        .collect();
    fit_linear(&points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmat::SymMat;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_replicate_cell() {
        let config = BenchConfig {
            dims: vec![3],
            ks: vec![2],
            replicates: 1,
            variants: vec![Variant::Paper],
            ..Default::default()
        };
        let cells = run_wishart_benchmark(&config).unwrap();
        let problem = wishart_problem(config.seed, 3, 2, 0).unwrap();
        let (result, _) = solve(&problem, &IterationConfig::default()).unwrap();
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].mean_iter, result.n_iter as f64);
        assert_eq!(cells[0].stdev_iter, 0.0);
    }

    #[test]
    fn config_validation() {
        let bad = [
            BenchConfig {
                replicates: 0,
                ..Default::default()
            },
            BenchConfig {
                dims: vec![],
                ..Default::default()
            },
            BenchConfig {
                ks: vec![0],
                ..Default::default()
            },
            BenchConfig {
                variants: vec![],
                ..Default::default()
            },
        ];
        for config in &bad {
            assert!(run_wishart_benchmark(config).is_err());
        }
    }

    #[test]
    fn csv_layout() {
        let cell = BenchCell {
            d: 2,
            k: 3,
            variant: Variant::Ru,
            mean_iter: 6.8,
            stdev_iter: 0.5,
            failures: 0,
            replicates: 10,
        };
        let csv = cells_to_csv(&[cell]);
        assert_eq!(
            csv,
            "d,k,variant,mean_iter,stdev_iter,failures,replicates\n2,3,ru,6.7999999999999998e0,5.0000000000000000e-1,0,10\n"
        );
        assert_eq!(
            series_to_csv(&[(0, -1.5)]),
            "n,log10_delta_v\n0,-1.5000000000000000e0\n"
        );
    }

    #[test]
    fn identity_problem_gives_empty_series() {
        let p = BarycenterProblem::from_covariances(vec![SymMat::identity(3); 2], vec![0.5, 0.5]).unwrap();
        assert!(log_decrease_series(&p, &IterationConfig::default()).unwrap().is_empty());
        let s = SymMat::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        let p = BarycenterProblem::from_covariances(vec![s.clone(), s], vec![0.5, 0.5]).unwrap();
        assert!(log_decrease_series(&p, &IterationConfig::default()).unwrap().len() <= 1);
        let ru = IterationConfig::default().with_variant(Variant::Ru);
        assert!(log_decrease_series(&p, &ru).is_err());
    }

    #[test]
    fn series_matches_trace_differences() {
        let p = wishart_problem(5, 4, 3, 0).unwrap();
        let config = IterationConfig::default();
        let series = log_decrease_series(&p, &config).unwrap();
        let (_, trace) = solve(&p, &config.clone().without_polish()).unwrap();
        let v = trace.v_values();
        assert!(!series.is_empty());
        for &(n, y) in &series {
            assert_eq!(y, (v[n] - v[n + 1]).log10());
        }
    }

    #[test]
    fn fit_examples() {
        let line: Vec<(f64, f64)> = (0..10).map(|n| (n as f64, -0.5 * n as f64 + 1.0)).collect();
        let fit = fit_linear(&line).unwrap();
        assert_abs_diff_eq!(fit.slope, -0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(fit.intercept, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(fit.r2, 1.0, epsilon = 1e-14);

        let flat: Vec<(f64, f64)> = (0..5).map(|n| (n as f64, 2.0)).collect();
        let fit = fit_linear(&flat).unwrap();
        assert_eq!(fit.slope, 0.0);

        assert_eq!(fit_linear(&line[..2]), Err(Error::TooShort { len: 2, min: 3 }));
    }

    #[test]
    fn fit_recovers_slope_under_small_noise() {
        let mut rng = RngState::new(17);
        let pts: Vec<(f64, f64)> = (0..50)
            .map(|n| (n as f64, -0.3 * n as f64 + 2.0 + rng.uniform(-1e-6, 1e-6)))
            .collect();
        let fit = fit_linear(&pts).unwrap();
        assert!((fit.slope + 0.3).abs() < 1e-4);
    }

    #[test]
    fn middle_fraction_trims_ends() {
        let xs: Vec<usize> = (0..10).collect();
        assert_eq!(middle_fraction(&xs, 0.8), &[1, 2, 3, 4, 5, 6, 7, 8]);
        assert_eq!(middle_fraction(&xs[..4], 0.8), &[0, 1, 2, 3]);
    }
}
