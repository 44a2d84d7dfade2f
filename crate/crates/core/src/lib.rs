//! Wasserstein barycenters of Gaussian and location-scatter measures.
//!
//! The barycenter covariance `Σ₀` of `N(m_j, Σ_j)` with weights `λ_j` is the
//! unique positive definite solution of `Σ = Σ λ_j (Σ^{1/2} Σ_j Σ^{1/2})^{1/2}`.
//! [`fixpoint::solve`] finds it with a monotone fixed-point iteration; the
//! same `(m₀, Σ₀)` is the barycenter in any location-scatter family, e.g.
//! uniform laws on ellipsoids.
//!
//! Modules:
//! - [`symmat`]: symmetric matrices, Jacobi eigendecomposition, matrix roots,
//!   seeded Wishart sampling
//! - [`gausswass`]: distances, optimal maps, the functional `V` and map `H`
//! - [`fixpoint`]: the iteration, closed forms, ellipsoids
//! - [`onedim`]: exact transport on the line and a brute-force oracle
//! - [`benchmark`]: Wishart experiments and log-decrease series

pub mod benchmark;
pub mod error;
pub mod fixpoint;
pub mod gausswass;
pub mod onedim;
pub mod symmat;

pub use error::{Error, Result};
pub use fixpoint::{solve, BarycenterResult, Family, IterationConfig, IterationTrace, StartPoint, StepRecord, Variant};
pub use gausswass::{BarycenterProblem, BoundReport, GaussianMeasure};
pub use symmat::{RngState, SymMat};

/// Floats in CSV output: 17 significant digits, round-trip exact.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}
