//! Fixtures shared by the criterion benchmarks.

use wbary::benchmark::wishart_problem;
use wbary::BarycenterProblem;

pub const FIXTURE_SEED: u64 = 42;

/// Seeded `k`-measure Wishart problem in dimension `d`.
pub fn fixture(d: usize, k: usize) -> BarycenterProblem {
    wishart_problem(FIXTURE_SEED, d, k, 0).expect("Wishart draws are positive definite")
}
