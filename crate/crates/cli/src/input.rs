//! Problem files.
//!
//! A problem file is a JSON object
//!
//! ```json
//! {
//!   "dim": 2,
//!   "family": "gaussian",
//!   "weights": [0.5, 0.5],
//!   "measures": [
//!     {"mean": [0, 0], "cov": [9, 0, 0, 1]},
//!     {"mean": [0, 0], "cov": [1, 0, 0, 4]}
//!   ]
//! }
//! ```
//!
//! with row-major covariances. `family` defaults to `gaussian` and `weights`
//! to `1/k`. The JSON printed by `wbary barycenter` is also accepted and reads
//! as a problem with that single measure.

use std::path::Path;

use serde::Deserialize;
use serde_json::Value;
use wbary::{BarycenterProblem, Family, GaussianMeasure, SymMat};

use crate::error::CliError;

/// Entries `a_ij` and `a_ji` may differ by this much (relative to the largest
/// entry, at least 1) before a covariance is rejected as asymmetric.
pub const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Deserialize)]
struct MeasureSpec {
    mean: Vec<f64>,
    cov: Vec<f64>,
}

#[derive(Debug, Deserialize)]
struct ProblemFile {
    dim: usize,
    #[serde(default)]
    family: Option<String>,
    #[serde(default)]
    weights: Option<Vec<f64>>,
    measures: Vec<MeasureSpec>,
}

#[derive(Debug, Deserialize)]
struct ResultFile {
    dim: usize,
    #[serde(default)]
    family: Option<String>,
    mean: Vec<f64>,
    cov: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LoadedProblem {
    pub problem: BarycenterProblem,
    pub family: Family,
}

pub fn load(path: &Path) -> Result<LoadedProblem, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    parse(&text).map_err(|e| match e {
        CliError::Input(msg) => CliError::Input(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse(text: &str) -> Result<LoadedProblem, CliError> {
    let value: Value = serde_json::from_str(text).map_err(|e| CliError::Input(e.to_string()))?;
    let is_result = value.get("measures").is_none() && value.get("cov").is_some();
    let file = if is_result {
        let r: ResultFile = serde_json::from_value(value).map_err(|e| CliError::Input(e.to_string()))?;
        ProblemFile {
            dim: r.dim,
            family: r.family,
            weights: None,
            measures: vec![MeasureSpec {
                mean: r.mean,
                cov: r.cov,
            }],
        }
    } else {
        serde_json::from_value(value).map_err(|e| CliError::Input(e.to_string()))?
    };
    build(file)
}

fn build(file: ProblemFile) -> Result<LoadedProblem, CliError> {
    let family = match &file.family {
        Some(tag) => tag.parse::<Family>().map_err(|e| CliError::Input(e.to_string()))?,
        None => Family::Gaussian,
    };
    if file.dim == 0 {
        return Err(CliError::Input("`dim` must be positive".into()));
    }
    if file.measures.is_empty() {
        return Err(CliError::Input("`measures` must not be empty".into()));
    }
    let k = file.measures.len();
    let weights = file.weights.unwrap_or_else(|| vec![1.0 / k as f64; k]);
    if weights.len() != k {
        return Err(CliError::Input(format!(
            "`weights` has {} entries for {k} measures",
            weights.len()
        )));
    }
    let measures = file
        .measures
        .into_iter()
        .enumerate()
        .map(|(j, m)| measure(file.dim, j, m))
        .collect::<Result<Vec<_>, _>>()?;
    let problem = BarycenterProblem::new(measures, weights)?;
    Ok(LoadedProblem { problem, family })
}

fn measure(dim: usize, j: usize, spec: MeasureSpec) -> Result<GaussianMeasure, CliError> {
    if spec.mean.len() != dim {
        return Err(CliError::Input(format!(
            "measures[{j}].mean has {} entries, expected {dim}",
            spec.mean.len()
        )));
    }
    let cov = covariance(dim, &spec.cov).map_err(|e| match e {
        CliError::Input(msg) => CliError::Input(format!("measures[{j}].cov: {msg}")),
        other => other,
    })?;
    Ok(GaussianMeasure::new(spec.mean, cov)?)
}

/// Row-major `dim × dim` data checked for symmetry, then symmetrized.
pub fn covariance(dim: usize, data: &[f64]) -> Result<SymMat, CliError> {
    if data.len() != dim * dim {
        return Err(CliError::Input(format!(
            "{} entries, expected {}",
            data.len(),
            dim * dim
        )));
    }
    let scale = data.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
    for i in 0..dim {
        for j in i + 1..dim {
            let (a, b) = (data[i * dim + j], data[j * dim + i]);
            if (a - b).abs() > SYMMETRY_TOL * scale {
                return Err(CliError::Input(format!("not symmetric at ({i},{j}): {a} vs {b}")));
            }
        }
    }
    Ok(SymMat::new(dim, data.to_vec())?)
}
