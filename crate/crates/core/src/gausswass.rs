//! Closed-form Wasserstein geometry of Gaussian and location-scatter measures.
//!
//! All covariance computations run on centered measures; means only enter
//! through the `‖m₁ − m₂‖²` term of the distance and the weighted mean of the
//! barycenter.

use crate::error::{Error, Result};
use crate::symmat::{det_via_eigen, sqrt_and_inv_sqrt, sqrtm_psd, sym_eigen, SymMat, PD_EPS_REL, PSD_CLAMP_REL};

/// Weights must sum to one within this tolerance.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Slack allowed on the determinant and trace bounds before a violation is
/// reported.
pub const BOUND_SLACK: f64 = 1e-8;

/// Squared distances above `-W2_CLAMP` are clamped to zero before the square
/// root.
pub const W2_CLAMP: f64 = 1e-9;

/// A measure described by its mean and covariance: a Gaussian `N(m, Σ)` or a
/// member `P_{m,Σ}` of any location-scatter family.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMeasure {
    mean: Vec<f64>,
    cov: SymMat,
}

impl GaussianMeasure {
    pub fn new(mean: Vec<f64>, cov: SymMat) -> Result<Self> {
        if mean.len() != cov.dim() {
            return Err(Error::DimMismatch {
                expected: cov.dim(),
                got: mean.len(),
            });
        }
        if mean.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let min = sym_eigen(&cov)?.min_eigenvalue();
        if min < -PSD_CLAMP_REL * cov.frob_norm() {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
        Ok(Self { mean, cov })
    }

    pub fn centered(cov: SymMat) -> Result<Self> {
        Self::new(vec![0.0; cov.dim()], cov)
    }

    pub fn dim(&self) -> usize {
        self.cov.dim()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn cov(&self) -> &SymMat {
        &self.cov
    }

    pub fn is_positive_definite(&self) -> bool {
        is_pd(&self.cov)
    }
}

pub(crate) fn is_pd(a: &SymMat) -> bool {
    sym_eigen(a)
        .map(|e| e.min_eigenvalue() > PD_EPS_REL * a.frob_norm().max(1.0))
        .unwrap_or(false)
}

/// `k` measures with positive weights summing to one, at least one of them
/// with a positive definite covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct BarycenterProblem {
    measures: Vec<GaussianMeasure>,
    weights: Vec<f64>,
}

impl BarycenterProblem {
    pub fn new(measures: Vec<GaussianMeasure>, weights: Vec<f64>) -> Result<Self> {
        let Some(first) = measures.first() else {
            return Err(Error::InvalidProblem("at least one measure is required".into()));
        };
        if weights.len() != measures.len() {
            return Err(Error::InvalidProblem(format!(
                "{} weights for {} measures",
                weights.len(),
                measures.len()
            )));
        }
        let dim = first.dim();
        if let Some(m) = measures.iter().find(|m| m.dim() != dim) {
            return Err(Error::DimMismatch {
                expected: dim,
                got: m.dim(),
            });
        }
        if weights.iter().any(|&w| !(w.is_finite() && w > 0.0)) {
            return Err(Error::InvalidProblem("weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidProblem(format!("weights sum to {total}, not 1")));
        }
        if !measures.iter().any(GaussianMeasure::is_positive_definite) {
            return Err(Error::NoPositiveDefinite);
        }
        Ok(Self { measures, weights })
    }

    /// Equal weights `1/k`.
    pub fn uniform(measures: Vec<GaussianMeasure>) -> Result<Self> {
        let k = measures.len().max(1);
        Self::new(measures, vec![1.0 / k as f64; k])
    }

    /// Centered measures with the given covariances.
    pub fn from_covariances(covs: Vec<SymMat>, weights: Vec<f64>) -> Result<Self> {
        let measures = covs
            .into_iter()
            .map(GaussianMeasure::centered)
            .collect::<Result<Vec<_>>>()?;
        Self::new(measures, weights)
    }

    pub fn dim(&self) -> usize {
        self.measures[0].dim()
    }

    pub fn k(&self) -> usize {
        self.measures.len()
    }

    pub fn measures(&self) -> &[GaussianMeasure] {
        &self.measures
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn covariances(&self) -> impl Iterator<Item = &SymMat> + '_ {
        self.measures.iter().map(|m| &m.cov)
    }

    /// `(λ_j, Σ_j)` pairs.
    pub fn weighted_covariances(&self) -> impl Iterator<Item = (f64, &SymMat)> + '_ {
        self.weights.iter().copied().zip(self.covariances())
    }

    /// `Σ λ_j Tr(Σ_j)`
    pub fn weighted_trace(&self) -> f64 {
        self.weighted_covariances().map(|(w, c)| w * c.trace()).sum()
    }

    /// `Σ λ_j det(Σ_j)^{1/2d}`
    pub fn weighted_det_root(&self) -> f64 {
        let d = self.dim() as f64;
        self.weighted_covariances()
            .map(|(w, c)| w * det_via_eigen(c).unwrap_or(0.0).max(0.0).powf(0.5 / d))
            .sum()
    }

    fn check_dim(&self, s: &SymMat) -> Result<()> {
        if s.dim() != self.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                got: s.dim(),
            });
        }
        Ok(())
    }
}

/// Quantities derived from `S` that the functional, the `H` map and both
/// iteration steps share.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub s_sqrt: SymMat,
    /// Present when `S` was required to be positive definite.
    pub s_inv_sqrt: Option<SymMat>,
    /// `Σ λ_j (S^{1/2} Σ_j S^{1/2})^{1/2}`
    pub root_sum: SymMat,
    /// `V(S)`
    pub v: f64,
}

impl Evaluation {
    /// Evaluates at a PSD `s`; `S^{-1/2}` is not formed.
    pub fn psd(s: &SymMat, problem: &BarycenterProblem) -> Result<Self> {
        problem.check_dim(s)?;
        let s_sqrt = sqrtm_psd(s)?;
        Self::finish(s, s_sqrt, None, problem)
    }

    /// Evaluates at a positive definite `s`, keeping `S^{-1/2}`.
    pub fn pd(s: &SymMat, problem: &BarycenterProblem) -> Result<Self> {
        problem.check_dim(s)?;
        let (s_sqrt, s_inv_sqrt) = sqrt_and_inv_sqrt(s)?;
        Self::finish(s, s_sqrt, Some(s_inv_sqrt), problem)
    }

    fn finish(s: &SymMat, s_sqrt: SymMat, s_inv_sqrt: Option<SymMat>, problem: &BarycenterProblem) -> Result<Self> {
        let mut root_sum = SymMat::zeros(s.dim());
        for (w, cov) in problem.weighted_covariances() {
            let root = sqrtm_psd(&s_sqrt.sandwich(cov))?;
            root_sum.add_scaled_in_place(&root, w);
        }
        let v = s.trace() + problem.weighted_trace() - 2.0 * root_sum.trace();
        Ok(Self {
            s_sqrt,
            s_inv_sqrt,
            root_sum,
            v,
        })
    }

    fn inv_sqrt(&self) -> &SymMat {
        self.s_inv_sqrt.as_ref().expect("evaluation built without S^{-1/2}")
    }

    /// `H(S) = S^{-1/2} root_sum S^{-1/2}`
    pub fn h(&self) -> SymMat {
        self.inv_sqrt().sandwich(&self.root_sum)
    }

    /// `‖H(S) − Id‖_F`
    pub fn residual(&self) -> f64 {
        self.h().frob_distance(&SymMat::identity(self.root_sum.dim()))
    }

    /// `S^{-1/2} root_sum² S^{-1/2}`
    pub fn paper_step(&self) -> SymMat {
        self.inv_sqrt().sandwich(&self.root_sum.square())
    }

    pub fn ru_step(&self) -> SymMat {
        self.root_sum.clone()
    }
}

/// Squared L2-Wasserstein distance between two Gaussian measures.
pub fn w2_squared_gaussian(p: &GaussianMeasure, q: &GaussianMeasure) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::DimMismatch {
            expected: p.dim(),
            got: q.dim(),
        });
    }
    let mean_term: f64 = p.mean.iter().zip(&q.mean).map(|(a, b)| (a - b) * (a - b)).sum();
    let p_sqrt = sqrtm_psd(&p.cov)?;
    let cross = sqrtm_psd(&p_sqrt.sandwich(&q.cov))?;
    let sq = mean_term + p.cov.trace() + q.cov.trace() - 2.0 * cross.trace();
    // tiny negatives come from cancellation when p ≈ q
    Ok(if sq >= -W2_CLAMP { sq.max(0.0) } else { sq })
}

/// L2-Wasserstein distance between two Gaussian measures.
pub fn w2_gaussian(p: &GaussianMeasure, q: &GaussianMeasure) -> Result<f64> {
    Ok(w2_squared_gaussian(p, q)?.max(0.0).sqrt())
}

/// Moment lower bound on the squared Wasserstein distance between any two
/// laws with the given means and covariances; equality for Gaussians and for
/// pairs in one location-scatter family.
pub fn gelbrich_lower_bound(m_p: &[f64], cov_p: &SymMat, m_q: &[f64], cov_q: &SymMat) -> Result<f64> {
    let d = cov_p.dim();
    for got in [m_p.len(), m_q.len(), cov_q.dim()] {
        if got != d {
            return Err(Error::DimMismatch { expected: d, got });
        }
    }
    let (p_sqrt, _) = sqrt_and_inv_sqrt(cov_p)?;
    let cross = sqrtm_psd(&p_sqrt.sandwich(cov_q))?;
    let mean_term: f64 = m_p.iter().zip(m_q).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(mean_term + cov_p.trace() + cov_q.trace() - 2.0 * cross.trace())
}

/// Matrix `A` of the optimal linear map `x ↦ A x` pushing `N(0, cov_p)` to
/// `N(0, cov_q)`: `A = Σ_P^{-1/2}(Σ_P^{1/2} Σ_Q Σ_P^{1/2})^{1/2} Σ_P^{-1/2}`.
pub fn optimal_map_matrix(cov_p: &SymMat, cov_q: &SymMat) -> Result<SymMat> {
    if cov_p.dim() != cov_q.dim() {
        return Err(Error::DimMismatch {
            expected: cov_p.dim(),
            got: cov_q.dim(),
        });
    }
    let (p_sqrt, p_inv_sqrt) = sqrt_and_inv_sqrt(cov_p)?;
    let cross = sqrtm_psd(&p_sqrt.sandwich(cov_q))?;
    Ok(p_inv_sqrt.sandwich(&cross))
}

/// `E‖X − AX‖²` for `X ~ N(0, cov_p)` given that `AX ~ N(0, cov_q)`:
/// `Tr(Σ_P) + Tr(Σ_Q) − 2 Tr(A Σ_P)`.
pub fn linear_transport_cost(cov_p: &SymMat, cov_q: &SymMat, map: &SymMat) -> f64 {
    cov_p.trace() + cov_q.trace() - 2.0 * map.trace_product(cov_p)
}

/// `V(S) = Σ λ_j W₂²(N(0,S), N(0,Σ_j))`; means of the problem are ignored.
pub fn v_functional(s: &SymMat, problem: &BarycenterProblem) -> Result<f64> {
    Ok(Evaluation::psd(s, problem)?.v)
}

/// `H(S) = Σ λ_j S^{-1/2}(S^{1/2} Σ_j S^{1/2})^{1/2} S^{-1/2}`; equals the
/// identity exactly at the barycenter covariance.
pub fn h_map(s: &SymMat, problem: &BarycenterProblem) -> Result<SymMat> {
    Ok(Evaluation::pd(s, problem)?.h())
}

/// Weighted average of the means.
pub fn barycenter_mean(problem: &BarycenterProblem) -> Vec<f64> {
    let mut mean = vec![0.0; problem.dim()];
    for (m, &w) in problem.measures.iter().zip(&problem.weights) {
        for (acc, x) in mean.iter_mut().zip(&m.mean) {
            *acc += w * x;
        }
    }
    mean
}

/// Slacks of the determinant floor and trace ceiling satisfied by the
/// barycenter covariance. Negative slack beyond [`BOUND_SLACK`] is a
/// violation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    /// `det(Σ₀)^{1/2d} − Σ λ_j det(Σ_j)^{1/2d}`
    pub det_slack: f64,
    /// `Σ λ_j Tr(Σ_j) − Tr(Σ₀)`
    pub trace_slack: f64,
    /// All input covariances coincide, the only case where the trace bound
    /// is attained.
    pub all_equal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundViolation {
    DeterminantFloor,
    TraceCeiling,
}

impl BoundReport {
    pub fn violations(&self) -> Vec<BoundViolation> {
        let mut out = Vec::new();
        if self.det_slack.is_nan() || self.det_slack < -BOUND_SLACK {
            out.push(BoundViolation::DeterminantFloor);
        }
        if self.trace_slack.is_nan() || self.trace_slack < -BOUND_SLACK {
            out.push(BoundViolation::TraceCeiling);
        }
        out
    }

    pub fn is_ok(&self) -> bool {
        self.violations().is_empty()
    }
}

pub fn check_bounds(sigma0: &SymMat, problem: &BarycenterProblem) -> BoundReport {
    let d = problem.dim() as f64;
    let det_slack = match det_via_eigen(sigma0) {
        Ok(det) => det.max(0.0).powf(0.5 / d) - problem.weighted_det_root(),
        Err(_) => f64::NAN,
    };
    let trace_slack = problem.weighted_trace() - sigma0.trace();
    let first = &problem.measures[0].cov;
    let scale = 1.0 + first.frob_norm();
    let all_equal = problem.covariances().all(|c| c.frob_distance(first) <= 1e-12 * scale);
    BoundReport {
        det_slack,
        trace_slack,
        all_equal,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn scalar_problem(vars: &[f64], weights: &[f64]) -> BarycenterProblem {
        BarycenterProblem::from_covariances(vars.iter().map(|&v| SymMat::scalar(v)).collect(), weights.to_vec())
            .unwrap()
    }

    fn top_row() -> BarycenterProblem {
        BarycenterProblem::from_covariances(
            vec![SymMat::from_diag(&[9.0, 1.0]), SymMat::from_diag(&[1.0, 4.0])],
            vec![0.5, 0.5],
        )
        .unwrap()
    }

    #[test]
    fn problem_validation() {
        let c = || GaussianMeasure::centered(SymMat::identity(2)).unwrap();
        assert!(BarycenterProblem::new(vec![], vec![]).is_err());
        assert!(BarycenterProblem::new(vec![c(), c()], vec![0.5]).is_err());
        assert!(BarycenterProblem::new(vec![c(), c()], vec![0.6, 0.6]).is_err());
        assert!(BarycenterProblem::new(vec![c(), c()], vec![1.5, -0.5]).is_err());
        let singular = GaussianMeasure::centered(SymMat::from_diag(&[1.0, 0.0])).unwrap();
        assert!(BarycenterProblem::uniform(vec![singular.clone(), singular.clone()]).is_err());
        // one PD member suffices
        assert!(BarycenterProblem::uniform(vec![singular, c()]).is_ok());
        let other = GaussianMeasure::centered(SymMat::identity(3)).unwrap();
        assert!(matches!(
            BarycenterProblem::uniform(vec![c(), other]),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn measure_validation() {
        assert!(GaussianMeasure::new(vec![0.0], SymMat::identity(2)).is_err());
        assert!(GaussianMeasure::centered(SymMat::from_diag(&[1.0, -1.0])).is_err());
    }

    #[test]
    fn distance_examples() {
        let p = GaussianMeasure::centered(SymMat::from_diag(&[9.0, 1.0])).unwrap();
        assert_eq!(w2_gaussian(&p, &p).unwrap(), 0.0);

        let a = GaussianMeasure::centered(SymMat::scalar(1.0)).unwrap();
        let b = GaussianMeasure::centered(SymMat::scalar(4.0)).unwrap();
        assert_abs_diff_eq!(w2_gaussian(&a, &b).unwrap(), 1.0, epsilon = 1e-14);

        let q = GaussianMeasure::centered(SymMat::from_diag(&[1.0, 4.0])).unwrap();
        assert_abs_diff_eq!(w2_gaussian(&p, &q).unwrap(), 5f64.sqrt(), epsilon = 1e-14);

        let shifted = GaussianMeasure::new(vec![3.0, 4.0], SymMat::from_diag(&[9.0, 1.0])).unwrap();
        assert_abs_diff_eq!(w2_gaussian(&p, &shifted).unwrap(), 5.0, epsilon = 1e-14);
    }

    #[test]
    fn gelbrich_examples() {
        let z = [0.0, 0.0];
        let p = SymMat::from_diag(&[9.0, 1.0]);
        let q = SymMat::from_diag(&[1.0, 4.0]);
        assert_abs_diff_eq!(gelbrich_lower_bound(&z, &p, &z, &p).unwrap(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(gelbrich_lower_bound(&z, &p, &z, &q).unwrap(), 5.0, epsilon = 1e-14);
        assert!(matches!(
            gelbrich_lower_bound(&z, &SymMat::from_diag(&[1.0, 0.0]), &z, &q),
            Err(Error::SingularMatrix { .. })
        ));
    }

    #[test]
    fn map_examples() {
        let p = SymMat::from_diag(&[9.0, 1.0]);
        let a = optimal_map_matrix(&p, &p).unwrap();
        assert!(a.frob_distance(&SymMat::identity(2)) < 1e-14);

        let a = optimal_map_matrix(&SymMat::scalar(1.0), &SymMat::scalar(4.0)).unwrap();
        assert_abs_diff_eq!(a.get(0, 0), 2.0, epsilon = 1e-14);

        let a = optimal_map_matrix(&p, &SymMat::from_diag(&[1.0, 4.0])).unwrap();
        assert_abs_diff_eq!(a.get(0, 0), 1.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(a.get(1, 1), 2.0, epsilon = 1e-14);
        assert_eq!(a.get(0, 1), 0.0);
    }

    #[test]
    fn v_examples() {
        let s = SymMat::from_diag(&[9.0, 1.0]);
        let same = BarycenterProblem::from_covariances(vec![s.clone(), s.clone()], vec![0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(v_functional(&s, &same).unwrap(), 0.0, epsilon = 1e-13);

        let p = scalar_problem(&[1.0, 4.0], &[0.5, 0.5]);
        assert_abs_diff_eq!(v_functional(&SymMat::scalar(1.0), &p).unwrap(), 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(v_functional(&SymMat::scalar(2.25), &p).unwrap(), 0.25, epsilon = 1e-14);
        assert!(matches!(
            v_functional(&SymMat::identity(2), &p),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn h_examples() {
        let s = SymMat::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        let same = BarycenterProblem::from_covariances(vec![s.clone(), s.clone()], vec![0.5, 0.5]).unwrap();
        assert!(h_map(&s, &same).unwrap().frob_distance(&SymMat::identity(2)) < 1e-13);

        let p = scalar_problem(&[1.0, 4.0], &[0.5, 0.5]);
        assert_abs_diff_eq!(h_map(&SymMat::scalar(1.0), &p).unwrap().get(0, 0), 1.5, epsilon = 1e-14);
        assert_abs_diff_eq!(
            h_map(&SymMat::scalar(2.25), &p).unwrap().get(0, 0),
            1.0,
            epsilon = 1e-14
        );
        assert!(matches!(
            h_map(&SymMat::scalar(0.0), &p),
            Err(Error::SingularMatrix { .. })
        ));
    }

    #[test]
    fn mean_examples() {
        let m = |mean: Vec<f64>| GaussianMeasure::new(mean, SymMat::identity(2)).unwrap();
        let p = BarycenterProblem::uniform(vec![m(vec![0.0, 0.0]), m(vec![0.0, 0.0])]).unwrap();
        assert_eq!(barycenter_mean(&p), vec![0.0, 0.0]);
        let p = BarycenterProblem::uniform(vec![m(vec![0.0, 0.0]), m(vec![2.0, 4.0])]).unwrap();
        assert_eq!(barycenter_mean(&p), vec![1.0, 2.0]);
        let p = BarycenterProblem::uniform(vec![m(vec![1.0, 0.0]), m(vec![0.0, 1.0]), m(vec![-1.0, -1.0])]).unwrap();
        let mean = barycenter_mean(&p);
        assert_abs_diff_eq!(mean[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(mean[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn bound_report_examples() {
        let s = SymMat::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        let same = BarycenterProblem::from_covariances(vec![s.clone(), s.clone()], vec![0.5, 0.5]).unwrap();
        let r = check_bounds(&s, &same);
        assert!(r.all_equal);
        assert_abs_diff_eq!(r.trace_slack, 0.0, epsilon = 1e-14);
        assert!(r.is_ok());

        let p = scalar_problem(&[1.0, 4.0], &[0.5, 0.5]);
        let r = check_bounds(&SymMat::scalar(2.25), &p);
        assert_abs_diff_eq!(r.det_slack, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.trace_slack, 0.25, epsilon = 1e-14);
        assert!(!r.all_equal);
        assert!(r.is_ok());

        let r = check_bounds(&SymMat::scalar(1.0), &p);
        assert_eq!(r.violations(), vec![BoundViolation::DeterminantFloor]);
        let r = check_bounds(&SymMat::scalar(3.0), &p);
        assert_eq!(r.violations(), vec![BoundViolation::TraceCeiling]);
    }

    #[test]
    fn evaluation_steps_on_top_row() {
        let e = Evaluation::pd(&SymMat::identity(2), &top_row()).unwrap();
        let next = e.paper_step();
        assert_abs_diff_eq!(next.get(0, 0), 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(next.get(1, 1), 2.25, epsilon = 1e-14);
    }
}
