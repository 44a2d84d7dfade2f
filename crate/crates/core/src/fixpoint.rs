//! Fixed-point solver for the barycenter covariance.
//!
//! The solver runs in two phases. The first applies the selected iteration
//! until the decrease `V(S_n) − V(S_{n+1})` falls below `tol`; the number of
//! steps taken there is `n_iter`, the figure reported by the benchmark
//! tables. A `ΔV` below `1e-10` only certifies `‖H(S) − Id‖` to roughly
//! `1e-5`, so a second phase keeps stepping until the fixed-point residual
//! meets `residual_tol`. Those extra steps are counted separately in
//! `polish_steps`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::format_float;
use crate::gausswass::{barycenter_mean, check_bounds, BarycenterProblem, BoundReport, Evaluation};
use crate::symmat::{log_det, sqrtm_psd, SymMat};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 5000;
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-6;

/// Pairs of covariances commute when `‖Σ_iΣ_j − Σ_jΣ_i‖_F` is below this
/// fraction of `max(1, ‖Σ_i‖_F ‖Σ_j‖_F)`.
pub const COMMUTE_REL_TOL: f64 = 1e-10;

/// Which fixed-point map to iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// `S ↦ S^{-1/2}(Σ λ_j (S^{1/2}Σ_jS^{1/2})^{1/2})² S^{-1/2}`
    Paper,
    /// `S ↦ Σ λ_j (S^{1/2}Σ_jS^{1/2})^{1/2}`
    Ru,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Paper => "paper",
            Variant::Ru => "ru",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "paper" => Ok(Variant::Paper),
            "ru" => Ok(Variant::Ru),
            other => Err(Error::InvalidConfig(format!("unknown variant `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StartPoint {
    Identity,
    FirstCovariance,
    Explicit(SymMat),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub variant: Variant,
    pub s0: StartPoint,
    /// Gate on `‖H(S) − Id‖_F` for the `converged` flag.
    pub residual_tol: f64,
    /// Continue past the `ΔV` stop until `residual_tol` is met.
    pub polish: bool,
}

impl Default for IterationConfig {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            variant: Variant::Paper,
            s0: StartPoint::Identity,
            residual_tol: DEFAULT_RESIDUAL_TOL,
            polish: true,
        }
    }
}

impl IterationConfig {
    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_start(mut self, s0: StartPoint) -> Self {
        self.s0 = s0;
        self
    }

    pub fn with_residual_tol(mut self, residual_tol: f64) -> Self {
        self.residual_tol = residual_tol;
        self
    }

    pub fn without_polish(mut self) -> Self {
        self.polish = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidConfig(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        if self.residual_tol.is_nan() || self.residual_tol <= 0.0 {
            return Err(Error::InvalidConfig("residual_tol must be positive".into()));
        }
        if let StartPoint::Explicit(s) = &self.s0 {
            if !crate::gausswass::is_pd(s) {
                return Err(Error::InvalidConfig("explicit S0 must be positive definite".into()));
            }
        }
        Ok(())
    }

    fn start(&self, problem: &BarycenterProblem) -> Result<SymMat> {
        let s0 = match &self.s0 {
            StartPoint::Identity => SymMat::identity(problem.dim()),
            StartPoint::FirstCovariance => {
                let first = problem.measures()[0].cov().clone();
                if !crate::gausswass::is_pd(&first) {
                    return Err(Error::InvalidConfig(
                        "first covariance is singular and cannot start the iteration".into(),
                    ));
                }
                first
            }
            StartPoint::Explicit(s) => s.clone(),
        };
        if s0.dim() != problem.dim() {
            return Err(Error::DimMismatch {
                expected: problem.dim(),
                got: s0.dim(),
            });
        }
        Ok(s0)
    }
}

/// Diagnostics for one iterate `S_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub n: usize,
    /// `V(S_n)`
    pub v: f64,
    /// `V(S_{n−1}) − V(S_n)`; absent for the starting point.
    pub delta_v: Option<f64>,
    pub trace: f64,
    pub log_det: f64,
    /// `‖H(S_n) − Id‖_F`
    pub residual: f64,
    /// Taken after the `ΔV` stop, while polishing the residual.
    pub polish: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationTrace {
    pub records: Vec<StepRecord>,
    /// Steps taken before the `ΔV` rule fired.
    pub n_iter: usize,
}

pub const TRACE_CSV_HEADER: &str = "n,v,delta_v,trace,log_det,residual,phase";

impl IterationTrace {
    pub fn v_values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.v).collect()
    }

    /// Records of the `ΔV` phase: `S_0, …, S_{n_iter}`.
    pub fn main_phase(&self) -> &[StepRecord] {
        &self.records[..=self.n_iter.min(self.records.len().saturating_sub(1))]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRACE_CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let dv = r.delta_v.map(format_float).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.n,
                format_float(r.v),
                dv,
                format_float(r.trace),
                format_float(r.log_det),
                format_float(r.residual),
                if r.polish { "polish" } else { "main" }
            ));
        }
        out
    }
}

/// How the measures of a problem are to be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Family {
    #[default]
    Gaussian,
    LocationScatter,
    Ellipsoid,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::LocationScatter => "location-scatter",
            Family::Ellipsoid => "ellipsoid",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Family::Gaussian),
            "location-scatter" | "location_scatter" => Ok(Family::LocationScatter),
            "ellipsoid" => Ok(Family::Ellipsoid),
            other => Err(Error::InvalidConfig(format!("unknown family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarycenterResult {
    pub mean: Vec<f64>,
    pub cov: SymMat,
    /// Steps applied up to and including the one whose `ΔV` fell below `tol`.
    pub n_iter: usize,
    pub polish_steps: usize,
    /// The `ΔV` rule fired before `max_iter`.
    pub stopped_by_tol: bool,
    pub converged: bool,
    pub final_residual: f64,
    pub final_delta_v: Option<f64>,
    pub bound_report: BoundReport,
    pub variant: Variant,
    pub family: Family,
}

impl BarycenterResult {
    /// Turns a non-converged result into [`Error::MaxIterExceeded`].
    pub fn into_converged(self, max_iter: usize) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::MaxIterExceeded { max_iter })
        }
    }
}

/// One step of the provably convergent iteration.
pub fn step_paper(s: &SymMat, problem: &BarycenterProblem) -> Result<SymMat> {
    Ok(Evaluation::pd(s, problem)?.paper_step())
}

/// One step of the comparison iteration.
pub fn step_ru(s: &SymMat, problem: &BarycenterProblem) -> Result<SymMat> {
    Ok(Evaluation::pd(s, problem)?.ru_step())
}

fn record(n: usize, s: &SymMat, eval: &Evaluation, delta_v: Option<f64>, polish: bool) -> Result<StepRecord> {
    Ok(StepRecord {
        n,
        v: eval.v,
        delta_v,
        trace: s.trace(),
        log_det: log_det(s)?,
        residual: eval.residual(),
        polish,
    })
}

/// Iterates the configured map from `S_0` and returns the barycenter with the
/// per-step trace.
///
/// Non-convergence is reported through `converged = false`, not as an error;
/// errors are reserved for singular iterates and invalid input.
pub fn solve(problem: &BarycenterProblem, config: &IterationConfig) -> Result<(BarycenterResult, IterationTrace)> {
    config.validate()?;
    let mut s = config.start(problem)?;
    let mut eval = Evaluation::pd(&s, problem)?;
    let mut records = vec![record(0, &s, &eval, None, false)?];

    let advance = |eval: &Evaluation| match config.variant {
        Variant::Paper => eval.paper_step(),
        Variant::Ru => eval.ru_step(),
    };

    let mut steps = 0;
    let mut stopped_by_tol = false;
    let mut final_delta_v = None;
    while steps < config.max_iter {
        let next = advance(&eval);
        let next_eval = Evaluation::pd(&next, problem)?;
        steps += 1;
        let dv = eval.v - next_eval.v;
        s = next;
        eval = next_eval;
        records.push(record(steps, &s, &eval, Some(dv), false)?);
        final_delta_v = Some(dv);
        if dv < config.tol {
            stopped_by_tol = true;
            break;
        }
    }
    let n_iter = steps;

    let mut polish_steps = 0;
    if stopped_by_tol && config.polish {
        while records.last().map_or(0.0, |r| r.residual) > config.residual_tol && steps < config.max_iter {
            let next = advance(&eval);
            let next_eval = Evaluation::pd(&next, problem)?;
            steps += 1;
            polish_steps += 1;
            let dv = eval.v - next_eval.v;
            s = next;
            eval = next_eval;
            records.push(record(steps, &s, &eval, Some(dv), true)?);
        }
    }

    let final_residual = records.last().map_or(f64::NAN, |r| r.residual);
    let bound_report = check_bounds(&s, problem);
    let converged = stopped_by_tol && final_residual <= config.residual_tol && bound_report.is_ok();
    let result = BarycenterResult {
        mean: barycenter_mean(problem),
        cov: s,
        n_iter,
        polish_steps,
        stopped_by_tol,
        converged,
        final_residual,
        final_delta_v,
        bound_report,
        variant: config.variant,
        family: Family::Gaussian,
    };
    Ok((result, IterationTrace { records, n_iter }))
}

/// Whether every pair of covariances commutes within [`COMMUTE_REL_TOL`].
pub fn covariances_commute(problem: &BarycenterProblem) -> bool {
    let covs: Vec<&SymMat> = problem.covariances().collect();
    covs.iter().enumerate().all(|(i, a)| {
        covs[i + 1..].iter().all(|b| {
            let scale = (a.frob_norm() * b.frob_norm()).max(1.0);
            a.commutator_norm(b) <= COMMUTE_REL_TOL * scale
        })
    })
}

/// Closed form `(Σ λ_j Σ_j^{1/2})²` for pairwise commuting covariances,
/// including every one-dimensional problem.
pub fn barycenter_commuting(problem: &BarycenterProblem) -> Result<SymMat> {
    if !covariances_commute(problem) {
        return Err(Error::NotCommuting);
    }
    let mut root_sum = SymMat::zeros(problem.dim());
    for (w, cov) in problem.weighted_covariances() {
        root_sum.add_scaled_in_place(&sqrtm_psd(cov)?, w);
    }
    Ok(root_sum.square())
}

/// Barycenter of members `P_{m_j,Σ_j}` of one location-scatter family: the
/// member `P_{m₀,Σ₀}` of the same family, with `Σ₀` from the Gaussian solver.
pub fn solve_location_scatter(
    problem: &BarycenterProblem,
    config: &IterationConfig,
    family: Family,
) -> Result<BarycenterResult> {
    let (mut result, _) = solve(problem, config)?;
    result.family = family;
    Ok(result)
}

/// Ellipsoid `{x : (x − c)ᵀ Σ⁻¹ (x − c) ≤ d + 2}`. The uniform law on it has
/// mean `c` and covariance `Σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    center: Vec<f64>,
    shape: SymMat,
}

impl Ellipsoid {
    pub fn new(center: Vec<f64>, shape: SymMat) -> Result<Self> {
        if center.len() != shape.dim() {
            return Err(Error::DimMismatch {
                expected: shape.dim(),
                got: center.len(),
            });
        }
        if !crate::gausswass::is_pd(&shape) {
            return Err(Error::InvalidMeasure(
                "ellipsoid shape must be positive definite".into(),
            ));
        }
        Ok(Self { center, shape })
    }

    /// Ball of the given radius, shape `r² Id / (d + 2)`.
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        let d = center.len();
        let shape = SymMat::identity(d).scale(radius * radius / (d as f64 + 2.0));
        Self::new(center, shape)
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn shape(&self) -> &SymMat {
        &self.shape
    }

    /// Semi-axis lengths `sqrt((d + 2) μ_i)`, descending.
    pub fn semi_axes(&self) -> Result<Vec<f64>> {
        let scale = self.center.len() as f64 + 2.0;
        Ok(crate::symmat::sym_eigen(&self.shape)?
            .eigenvalues()
            .iter()
            .map(|&mu| (scale * mu.max(0.0)).sqrt())
            .collect())
    }

    fn as_measure(&self) -> Result<crate::gausswass::GaussianMeasure> {
        crate::gausswass::GaussianMeasure::new(self.center.clone(), self.shape.clone())
    }
}

/// Barycentric ellipsoid of a weighted collection of ellipsoids, under the
/// Wasserstein distance between uniform laws on them.
pub fn ellipsoid_barycenter(
    ellipsoids: &[Ellipsoid],
    weights: &[f64],
    config: &IterationConfig,
) -> Result<(Ellipsoid, BarycenterResult)> {
    let measures = ellipsoids
        .iter()
        .map(Ellipsoid::as_measure)
        .collect::<Result<Vec<_>>>()?;
    let problem = BarycenterProblem::new(measures, weights.to_vec())?;
    let result = solve_location_scatter(&problem, config, Family::Ellipsoid)?;
    let ellipsoid = Ellipsoid::new(result.mean.clone(), result.cov.clone())?;
    Ok((ellipsoid, result))
}
