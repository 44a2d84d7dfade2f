#![allow(dead_code)]

use wbary::symmat::sample_wishart;
use wbary::{BarycenterProblem, RngState, SymMat};

/// Wishart draw shifted by `floor · Id` to keep the condition number moderate.
pub fn random_spd(rng: &mut RngState, d: usize, floor: f64) -> SymMat {
    sample_wishart(rng, d).shift_diagonal(floor)
}

/// Random symmetric matrix with standard normal entries.
pub fn random_sym(rng: &mut RngState, d: usize) -> SymMat {
    let data = (0..d * d).map(|_| rng.standard_normal()).collect();
    SymMat::new(d, data).unwrap()
}

/// Random positive weights summing to one.
pub fn random_weights(rng: &mut RngState, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.uniform(0.1, 1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|x| x / total).collect();
    let head: f64 = w[..k - 1].iter().sum();
    w[k - 1] = 1.0 - head;
    w
}

pub fn random_problem(rng: &mut RngState, d: usize, k: usize) -> BarycenterProblem {
    let covs = (0..k).map(|_| random_spd(rng, d, 0.1)).collect();
    let w = random_weights(rng, k);
    BarycenterProblem::from_covariances(covs, w).unwrap()
}
