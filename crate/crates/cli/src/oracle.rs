//! Randomized end-to-end cross-checks against independent oracles.

use serde_json::{json, Value};
use wbary::fixpoint::barycenter_commuting;
use wbary::onedim::{barycenter_1d, brute_force_multimarginal, Empirical1D, Problem1D, QuantileGrid};
use wbary::{solve, BarycenterProblem, IterationConfig, RngState, SymMat};

use crate::error::CliError;
use crate::{EXIT_OK, EXIT_ORACLE};

/// Agreement required between a solver output and its oracle.
pub const ORACLE_TOL: f64 = 1e-9;

pub struct CaseFailure {
    pub case: usize,
    pub kind: &'static str,
    pub error: f64,
    pub replay: Value,
}

fn random_weights(rng: &mut RngState, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.uniform(0.1, 1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|x| x / total).collect();
    let head: f64 = w[..k - 1].iter().sum();
    w[k - 1] = 1.0 - head;
    w
}

/// Two equal-weight atom sets, `n ≤ 6`: quantile barycenter vs exhaustive
/// multimarginal search.
fn multimarginal_case(rng: &mut RngState, perturb: f64) -> Result<(f64, Value), CliError> {
    let n = 1 + rng.below(6);
    let weights = random_weights(rng, 2);
    let atoms: Vec<Vec<f64>> = (0..2)
        .map(|_| (0..n).map(|_| rng.uniform(-10.0, 10.0)).collect())
        .collect();
    let measures = atoms
        .iter()
        .map(|a| Empirical1D::uniform(a.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    let oracle = brute_force_multimarginal(&measures, &weights)?;
    let problem = Problem1D::new(measures, weights.clone())?;
    let mut values = barycenter_1d(&problem, n)?.values().to_vec();
    values[0] += perturb;
    let grid = QuantileGrid::new(values)?;
    let value_err = (problem.v(&grid.to_empirical()) - oracle.value).abs();
    let atom_err = grid
        .values()
        .iter()
        .zip(oracle.barycenter.atoms())
        .fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()));
    Ok((value_err.max(atom_err), json!({ "weights": weights, "atoms": atoms })))
}

fn problem_json(problem: &BarycenterProblem) -> Value {
    json!({
        "dim": problem.dim(),
        "weights": problem.weights(),
        "measures": problem.measures().iter().map(|m| json!({
            "mean": m.mean(),
            "cov": m.cov().as_slice(),
        })).collect::<Vec<_>>(),
    })
}

/// Commuting (diagonal) covariances: iteration vs closed form.
fn commuting_case(rng: &mut RngState, perturb: f64) -> Result<(f64, Value), CliError> {
    let d = 1 + rng.below(5);
    let k = 1 + rng.below(4);
    let covs = (0..k)
        .map(|_| SymMat::from_diag(&(0..d).map(|_| rng.uniform(0.1, 10.0)).collect::<Vec<_>>()))
        .collect();
    let weights = random_weights(rng, k);
    let problem = BarycenterProblem::from_covariances(covs, weights)?;
    let closed = barycenter_commuting(&problem)?;
    let (result, _) = solve(&problem, &IterationConfig::default())?;
    let mut cov = result.cov.as_slice().to_vec();
    cov[0] += perturb;
    let cov = SymMat::new(d, cov)?;
    let err = if result.converged {
        cov.frob_distance(&closed) / (1.0 + closed.frob_norm())
    } else {
        f64::INFINITY
    };
    Ok((err, problem_json(&problem)))
}

/// One-dimensional Gaussians: quantile-grid barycenter vs the grid of
/// `N(Σ λ_j m_j, (Σ λ_j σ_j)²)`.
fn gaussian_grid_case(rng: &mut RngState, perturb: f64) -> Result<(f64, Value), CliError> {
    let k = 1 + rng.below(4);
    let m = 50 + rng.below(200);
    let weights = random_weights(rng, k);
    let params: Vec<(f64, f64)> = (0..k)
        .map(|_| (rng.uniform(-5.0, 5.0), rng.uniform(0.1, 4.0)))
        .collect();
    let grids = params
        .iter()
        .map(|&(mu, sd)| QuantileGrid::gaussian(mu, sd, m))
        .collect::<Result<Vec<_>, _>>()?;
    let problem = Problem1D::from_grids(&grids, weights.clone())?;
    let bary = barycenter_1d(&problem, m)?;
    let mean: f64 = weights.iter().zip(&params).map(|(w, p)| w * p.0).sum();
    let sd: f64 = weights.iter().zip(&params).map(|(w, p)| w * p.1).sum();
    let expected = QuantileGrid::gaussian(mean, sd, m)?;
    let err = bary
        .values()
        .iter()
        .zip(expected.values())
        .enumerate()
        .fold(0.0f64, |acc, (i, (x, y))| {
            let x = if i == 0 { x + perturb } else { *x };
            acc.max((x - y).abs())
        });
    Ok((err, json!({ "m": m, "weights": weights, "mean_sd": params })))
}

/// Runs `cases` cross-checks, cycling through the three kinds. `perturb` is
/// added to every solver output as a negative control.
pub fn run(cases: usize, seed: u64, perturb: f64) -> Result<Vec<CaseFailure>, CliError> {
    let mut failures = Vec::new();
    for case in 0..cases {
        let mut rng = RngState::derive(seed, &[case as u64]);
        let (kind, (error, replay)) = match case % 3 {
            0 => ("multimarginal", multimarginal_case(&mut rng, perturb)?),
            1 => ("commuting", commuting_case(&mut rng, perturb)?),
            _ => ("gaussian-grid", gaussian_grid_case(&mut rng, perturb)?),
        };
        if error.is_nan() || error > ORACLE_TOL {
            failures.push(CaseFailure {
                case,
                kind,
                error,
                replay,
            });
        }
    }
    Ok(failures)
}

pub fn oracle_check(cases: usize, seed: u64, perturb: f64) -> Result<u8, CliError> {
    let failures = run(cases, seed, perturb)?;
    for f in &failures {
        outln!(
            "FAIL case {} ({}) error {:e}: {}",
            f.case,
            f.kind,
            f.error,
            serde_json::to_string(&f.replay).unwrap_or_default()
        );
    }
    outln!(
        "oracle-check: {}/{} passed (seed {seed})",
        cases - failures.len(),
        cases
    );
    Ok(if failures.is_empty() { EXIT_OK } else { EXIT_ORACLE })
}
