use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use wbary::benchmark::{
    cells_to_csv, fit_log_decrease, log_decrease_series, run_wishart_benchmark, series_to_csv, wishart_problem,
    BenchConfig,
};
use wbary::fixpoint::{Ellipsoid, DEFAULT_RESIDUAL_TOL};
use wbary::gausswass::{
    barycenter_mean, check_bounds, h_map, optimal_map_matrix, v_functional, w2_squared_gaussian, BoundViolation,
};
use wbary::symmat::log_det;
use wbary::{
    solve, BarycenterProblem, BarycenterResult, Family, IterationConfig, IterationTrace, StartPoint, StepRecord,
    SymMat, Variant,
};

use crate::error::CliError;
use crate::input::{self, LoadedProblem};
use crate::{EXIT_NOT_CONVERGED, EXIT_OK};

fn print_json(value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Input(e.to_string()))?;
    outln!("{text}");
    Ok(())
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct DistanceOutput {
    w2: f64,
    w2_squared: f64,
    map_matrix: Vec<f64>,
}

pub fn distance(path: &Path) -> Result<u8, CliError> {
    let LoadedProblem { problem, .. } = input::load(path)?;
    let [p, q] = problem.measures() else {
        return Err(CliError::Input(format!(
            "distance needs exactly two measures, got {}",
            problem.k()
        )));
    };
    let w2_squared = w2_squared_gaussian(p, q)?;
    let map = optimal_map_matrix(p.cov(), q.cov())?;
    print_json(&DistanceOutput {
        w2: w2_squared.max(0.0).sqrt(),
        w2_squared,
        map_matrix: map.into_vec(),
    })?;
    Ok(EXIT_OK)
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub variant: Variant,
    pub s0: String,
    pub residual_tol: f64,
    pub no_polish: bool,
}

impl SolverOptions {
    fn config(&self, dim: usize) -> Result<IterationConfig, CliError> {
        let s0 = match self.s0.trim() {
            "identity" | "id" => StartPoint::Identity,
            "first" => StartPoint::FirstCovariance,
            list => {
                let values = list
                    .split(',')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| {
                        CliError::Input(format!(
                            "--s0 must be `identity`, `first` or {} comma-separated numbers",
                            dim * dim
                        ))
                    })?;
                StartPoint::Explicit(
                    input::covariance(dim, &values).map_err(|e| CliError::Input(format!("--s0: {e}")))?,
                )
            }
        };
        let mut config = IterationConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            residual_tol: self.residual_tol,
            ..IterationConfig::default()
        }
        .with_variant(self.variant)
        .with_start(s0);
        if self.no_polish {
            config = config.without_polish();
        }
        config.validate()?;
        Ok(config)
    }
}

impl Default for SolverOptions {
    fn default() -> Self {
        let config = IterationConfig::default();
        Self {
            tol: config.tol,
            max_iter: config.max_iter,
            variant: config.variant,
            s0: "identity".into(),
            residual_tol: DEFAULT_RESIDUAL_TOL,
            no_polish: false,
        }
    }
}

#[derive(Serialize)]
struct BarycenterOutput {
    dim: usize,
    family: String,
    variant: String,
    mean: Vec<f64>,
    cov: Vec<f64>,
    n_iter: usize,
    polish_steps: usize,
    stopped_by_tol: bool,
    converged: bool,
    final_residual: f64,
    final_delta_v: Option<f64>,
    det_slack: f64,
    trace_slack: f64,
    bound_violations: Vec<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    semi_axes: Option<Vec<f64>>,
}

impl BarycenterOutput {
    fn new(result: &BarycenterResult) -> Result<Self, CliError> {
        let semi_axes = match result.family {
            Family::Ellipsoid => Some(Ellipsoid::new(result.mean.clone(), result.cov.clone())?.semi_axes()?),
            _ => None,
        };
        let report = result.bound_report;
        Ok(Self {
            dim: result.cov.dim(),
            family: result.family.to_string(),
            variant: result.variant.to_string(),
            mean: result.mean.clone(),
            cov: result.cov.as_slice().to_vec(),
            n_iter: result.n_iter,
            polish_steps: result.polish_steps,
            stopped_by_tol: result.stopped_by_tol,
            converged: result.converged,
            final_residual: result.final_residual,
            final_delta_v: result.final_delta_v,
            det_slack: report.det_slack,
            trace_slack: report.trace_slack,
            bound_violations: report
                .violations()
                .into_iter()
                .map(|v| match v {
                    BoundViolation::DeterminantFloor => "determinant_floor",
                    BoundViolation::TraceCeiling => "trace_ceiling",
                })
                .collect(),
            semi_axes,
        })
    }
}

/// A single measure is its own barycenter; echo it exactly instead of
/// approximating it by iteration.
fn echo_single(
    problem: &BarycenterProblem,
    config: &IterationConfig,
) -> Result<(BarycenterResult, IterationTrace), CliError> {
    let cov = problem.measures()[0].cov().clone();
    let residual = h_map(&cov, problem)?.frob_distance(&SymMat::identity(problem.dim()));
    let record = StepRecord {
        n: 0,
        v: v_functional(&cov, problem)?,
        delta_v: None,
        trace: cov.trace(),
        log_det: log_det(&cov)?,
        residual,
        polish: false,
    };
    let result = BarycenterResult {
        mean: barycenter_mean(problem),
        bound_report: check_bounds(&cov, problem),
        cov,
        n_iter: 0,
        polish_steps: 0,
        stopped_by_tol: true,
        converged: true,
        final_residual: residual,
        final_delta_v: None,
        variant: config.variant,
        family: Family::Gaussian,
    };
    Ok((
        result,
        IterationTrace {
            records: vec![record],
            n_iter: 0,
        },
    ))
}

pub fn barycenter(path: &Path, options: &SolverOptions, trace_out: Option<&Path>) -> Result<u8, CliError> {
    let LoadedProblem { problem, family } = input::load(path)?;
    let config = options.config(problem.dim())?;
    let (mut result, trace) = if problem.k() == 1 {
        echo_single(&problem, &config)?
    } else {
        solve(&problem, &config)?
    };
    result.family = family;
    print_json(&BarycenterOutput::new(&result)?)?;
    if let Some(out) = trace_out {
        write_file(out, &trace.to_csv())?;
    }
    if !result.converged {
        eprintln!(
            "warning: not converged (n_iter {}, residual {:e}, bound violations {})",
            result.n_iter,
            result.final_residual,
            result.bound_report.violations().len()
        );
        return Ok(EXIT_NOT_CONVERGED);
    }
    Ok(EXIT_OK)
}

pub fn bench(config: &BenchConfig, out: Option<&Path>) -> Result<u8, CliError> {
    config.validate()?;
    let cells = run_wishart_benchmark(config)?;
    let csv = cells_to_csv(&cells);
    let mut summary = Vec::new();
    for c in &cells {
        summary.push(format!(
            "d={} k={} {}: mean_iter {:.2} ± {:.2} (sd {:.2}), failures {}/{}",
            c.d,
            c.k,
            c.variant,
            c.mean_iter,
            c.standard_error(),
            c.stdev_iter,
            c.failures,
            c.replicates
        ));
    }
    let failures: usize = cells.iter().map(|c| c.failures).sum();
    match out {
        Some(path) => {
            write_file(path, &csv)?;
            for line in &summary {
                outln!("{line}");
            }
            outln!("wrote {}", path.display());
        }
        None => {
            out!("{csv}");
            for line in &summary {
                eprintln!("{line}");
            }
        }
    }
    if failures > 0 {
        eprintln!("warning: {failures} replicate(s) failed to converge");
    }
    Ok(EXIT_OK)
}

/// `--random d=5,k=5,seed=S`: replicate 0 of the benchmark cell `(d, k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomSpec {
    pub d: usize,
    pub k: usize,
    pub seed: u64,
}

impl std::str::FromStr for RandomSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut spec = RandomSpec { d: 5, k: 5, seed: 1 };
        for part in s.split(',').filter(|p| !p.trim().is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got `{part}`"))?;
            let bad = |_| format!("invalid value for `{}`: `{value}`", key.trim());
            match key.trim() {
                "d" => spec.d = value.trim().parse().map_err(bad)?,
                "k" => spec.k = value.trim().parse().map_err(bad)?,
                "seed" => spec.seed = value.trim().parse().map_err(bad)?,
                other => return Err(format!("unknown key `{other}` (expected d, k, seed)")),
            }
        }
        if spec.d == 0 || spec.k == 0 {
            return Err("d and k must be positive".into());
        }
        Ok(spec)
    }
}

pub fn logdecay(
    file: Option<&PathBuf>,
    random: Option<RandomSpec>,
    options: &SolverOptions,
    out: Option<&Path>,
) -> Result<u8, CliError> {
    let problem = match (file, random) {
        (Some(path), None) => input::load(path)?.problem,
        (None, Some(r)) => wishart_problem(r.seed, r.d, r.k, 0)?,
        _ => return Err(CliError::Input("give either a problem file or --random".into())),
    };
    if options.variant != Variant::Paper {
        return Err(CliError::Input("logdecay follows the paper variant only".into()));
    }
    let config = options.config(problem.dim())?;
    let series = log_decrease_series(&problem, &config)?;
    let (result, _) = solve(&problem, &config.clone().without_polish())?;
    let csv = series_to_csv(&series);
    match out {
        Some(path) => write_file(path, &csv)?,
        None => out!("{csv}"),
    }
    if series.is_empty() {
        outln!("# converged immediately");
    } else {
        outln!("# points {}", series.len());
        match fit_log_decrease(&series) {
            Ok(fit) => outln!(
                "# slope {:.6e} intercept {:.6e} r2 {:.6}",
                fit.slope,
                fit.intercept,
                fit.r2
            ),
            Err(_) => outln!("# too few points for a fit"),
        }
    }
    if !result.stopped_by_tol {
        eprintln!("warning: no ΔV stop within {} steps", config.max_iter);
        return Ok(EXIT_NOT_CONVERGED);
    }
    Ok(EXIT_OK)
}
