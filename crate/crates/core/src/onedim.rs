//! Exact optimal transport on the real line.
//!
//! In one dimension the monotone (quantile) coupling is optimal, so the
//! Wasserstein distance is the L² distance between quantile functions and the
//! barycenter's quantile function is the weighted average of the inputs'.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Couplings enumerated by [`brute_force_multimarginal`] are capped here.
pub const ENUMERATION_CAP: f64 = 1e6;

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Anything with a generalized inverse CDF on `(0, 1)`.
pub trait Quantile {
    /// Quantile at a level `u` already known to be in `(0, 1)`.
    fn quantile_unchecked(&self, u: f64) -> f64;

    fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::OutOfRange(u));
        }
        Ok(self.quantile_unchecked(u))
    }
}

/// Discrete measure: ascending atoms with positive weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Empirical1D {
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

impl Empirical1D {
    pub fn new(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} atoms with {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        if atoms.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        if atoms.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidMeasure("atoms must be ascending".into()));
        }
        if weights.iter().any(|&w| !(w.is_finite() && w > 0.0)) {
            return Err(Error::InvalidMeasure("weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}")));
        }
        Ok(Self { atoms, weights })
    }

    /// Equal-weight measure on the given points, sorted.
    pub fn uniform(mut atoms: Vec<f64>) -> Result<Self> {
        atoms.sort_by(f64::total_cmp);
        let n = atoms.len().max(1);
        Self::new(atoms, vec![1.0 / n as f64; n])
    }

    pub fn dirac(x: f64) -> Self {
        Self {
            atoms: vec![x],
            weights: vec![1.0],
        }
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().zip(&self.weights).map(|(x, w)| x * w).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.atoms
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * (x - m) * (x - m))
            .sum()
    }

    fn has_equal_weights(&self) -> bool {
        let w = 1.0 / self.len() as f64;
        self.weights.iter().all(|x| (x - w).abs() <= WEIGHT_SUM_TOL)
    }
}

impl Quantile for Empirical1D {
    /// Smallest atom whose cumulative weight reaches `u`.
    fn quantile_unchecked(&self, u: f64) -> f64 {
        let mut cum = 0.0;
        for (x, w) in self.atoms.iter().zip(&self.weights) {
            cum += w;
            if cum >= u {
                return *x;
            }
        }
        *self.atoms.last().expect("non-empty measure")
    }
}

/// Quantile function sampled at the midpoint levels `(i − ½)/m`.
///
/// Read as a measure, it puts mass `1/m` on each value.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileGrid {
    values: Vec<f64>,
}

impl QuantileGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidMeasure("empty quantile grid".into()));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        if values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidMeasure("quantile values must be nondecreasing".into()));
        }
        Ok(Self { values })
    }

    pub fn level(i: usize, m: usize) -> f64 {
        (i as f64 + 0.5) / m as f64
    }

    pub fn levels(m: usize) -> impl Iterator<Item = f64> {
        (0..m).map(move |i| Self::level(i, m))
    }

    /// Samples any quantile function on an `m`-point grid.
    pub fn from_quantile(q: &impl Quantile, m: usize) -> Result<Self> {
        Self::new(Self::levels(m).map(|u| q.quantile_unchecked(u)).collect())
    }

    /// Quantile grid of `N(mean, sd²)`.
    pub fn gaussian(mean: f64, sd: f64, m: usize) -> Result<Self> {
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        Self::new(Self::levels(m).map(|u| mean + sd * normal.inverse_cdf(u)).collect())
    }

    pub fn m(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The grid as an equal-weight discrete measure.
    pub fn to_empirical(&self) -> Empirical1D {
        let m = self.m();
        Empirical1D {
            atoms: self.values.clone(),
            weights: vec![1.0 / m as f64; m],
        }
    }
}

impl Quantile for QuantileGrid {
    fn quantile_unchecked(&self, u: f64) -> f64 {
        let m = self.values.len();
        let idx = ((u * m as f64).ceil() as usize).clamp(1, m) - 1;
        self.values[idx]
    }
}

/// Weighted collection of one-dimensional measures.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem1D {
    measures: Vec<Empirical1D>,
    weights: Vec<f64>,
}

impl Problem1D {
    pub fn new(measures: Vec<Empirical1D>, weights: Vec<f64>) -> Result<Self> {
        if measures.is_empty() || measures.len() != weights.len() {
            return Err(Error::InvalidProblem(format!(
                "{} measures with {} weights",
                measures.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|&w| !(w.is_finite() && w > 0.0)) {
            return Err(Error::InvalidProblem("weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidProblem(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { measures, weights })
    }

    pub fn from_grids(grids: &[QuantileGrid], weights: Vec<f64>) -> Result<Self> {
        Self::new(grids.iter().map(QuantileGrid::to_empirical).collect(), weights)
    }

    pub fn measures(&self) -> &[Empirical1D] {
        &self.measures
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Σ λ_j W₂²(mu, ν_j)`
    pub fn v(&self, mu: &Empirical1D) -> f64 {
        self.measures
            .iter()
            .zip(&self.weights)
            .map(|(nu, w)| w * w2_squared_1d(mu, nu))
            .sum()
    }
}

/// Generalized inverse CDF of `p` at `u ∈ (0, 1)`.
pub fn quantile(p: &Empirical1D, u: f64) -> Result<f64> {
    p.quantile(u)
}

/// Squared distance between quantile functions, integrated exactly over the
/// merged breakpoints of both CDFs.
pub fn w2_squared_1d(p: &Empirical1D, q: &Empirical1D) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut rem_p = p.weights[0];
    let mut rem_q = q.weights[0];
    let mut cost = 0.0;
    loop {
        let mass = rem_p.min(rem_q);
        let gap = p.atoms[i] - q.atoms[j];
        cost += mass * gap * gap;
        rem_p -= mass;
        rem_q -= mass;
        let advance_p = rem_p <= rem_q;
        let advance_q = rem_q <= rem_p;
        if advance_p {
            i += 1;
            if i == p.len() {
                break;
            }
            rem_p = p.weights[i];
        }
        if advance_q {
            j += 1;
            if j == q.len() {
                break;
            }
            rem_q = q.weights[j];
        }
    }
    cost
}

pub fn w2_1d(p: &Empirical1D, q: &Empirical1D) -> f64 {
    w2_squared_1d(p, q).sqrt()
}

/// Exact `W₂` between an equal-weight grid measure and the continuous law
/// `N(mean, sd²)`.
///
/// Each grid cell `[(i−1)/m, i/m]` is integrated in closed form using
/// `∫ z φ(z) dz = −φ(z)` and `∫ z² φ(z) dz = Φ(z) − z φ(z)`.
pub fn w2_grid_to_gaussian(grid: &QuantileGrid, mean: f64, sd: f64) -> f64 {
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let m = grid.m();
    let z_at = |u: f64| -> f64 {
        if u <= 0.0 {
            f64::NEG_INFINITY
        } else if u >= 1.0 {
            f64::INFINITY
        } else {
            normal.inverse_cdf(u)
        }
    };
    let phi = |z: f64| {
        if z.is_finite() {
            (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
        } else {
            0.0
        }
    };
    let z_phi = |z: f64| if z.is_finite() { z * phi(z) } else { 0.0 };
    let mut total = 0.0;
    for (i, &v) in grid.values().iter().enumerate() {
        let a = i as f64 / m as f64;
        let b = (i + 1) as f64 / m as f64;
        let (za, zb) = (z_at(a), z_at(b));
        let int_z = phi(za) - phi(zb);
        let int_z2 = (b - a) - (z_phi(zb) - z_phi(za));
        // ∫ (v − mean − sd z)² du
        let c = v - mean;
        total += c * c * (b - a) - 2.0 * c * sd * int_z + sd * sd * int_z2;
    }
    total.max(0.0).sqrt()
}

/// Monotone coupling of `mu` with each `ν_j`, sampled at the `m` grid levels:
/// entry `i` is `(x, [T_1(x), …, T_k(x)])` with `x = F_mu⁻¹(u_i)` and
/// `T_j(x) = F_j⁻¹(u_i)`.
pub fn quantile_coupling(mu: &impl Quantile, problem: &Problem1D, m: usize) -> Vec<(f64, Vec<f64>)> {
    QuantileGrid::levels(m)
        .map(|u| {
            let targets = problem.measures.iter().map(|nu| nu.quantile_unchecked(u)).collect();
            (mu.quantile_unchecked(u), targets)
        })
        .collect()
}

/// One application of the averaging operator: with `X ~ mu` and `T_j` the
/// monotone maps onto the `ν_j`, returns the quantile grid of
/// `Σ λ_j T_j(X)`.
///
/// The result is `Σ λ_j F_j⁻¹` on the grid whatever `mu` is, so applying the
/// operator twice gives the same grid as applying it once.
pub fn g_operator_1d(mu: &impl Quantile, problem: &Problem1D, m: usize) -> Result<QuantileGrid> {
    if m == 0 {
        return Err(Error::InvalidConfig("grid size must be positive".into()));
    }
    let values = quantile_coupling(mu, problem, m)
        .into_iter()
        .map(|(_, targets)| targets.iter().zip(&problem.weights).map(|(t, w)| w * t).sum())
        .collect();
    QuantileGrid::new(values)
}

/// Barycenter quantile grid; in one dimension one step of the averaging
/// operator from any starting measure already lands on it.
pub fn barycenter_1d(problem: &Problem1D, m: usize) -> Result<QuantileGrid> {
    g_operator_1d(&problem.measures[0], problem, m)
}

/// Result of exhaustive multimarginal minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct MultimarginalSolution {
    /// `min_π ∫ Σ λ_j |x̄ − x_j|² dπ`
    pub value: f64,
    /// Law of `x̄ = Σ λ_j x_j` under the optimal coupling.
    pub barycenter: Empirical1D,
    /// Optimal permutation for each marginal; the first is the identity.
    pub permutations: Vec<Vec<usize>>,
}

fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    fn extend(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                extend(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

/// Cost of the coupling that matches atom `i` of the first marginal with atom
/// `perms[j][i]` of marginal `j`.
pub fn coupling_cost(measures: &[Empirical1D], weights: &[f64], perms: &[&[usize]]) -> (f64, Vec<f64>) {
    let n = measures[0].len();
    let mut cost = 0.0;
    let mut centers = Vec::with_capacity(n);
    #[allow(clippy::needless_range_loop)]
    for i in 0..n {
        let point = |j: usize| measures[j].atoms[perms[j][i]];
        let center: f64 = (0..measures.len()).map(|j| weights[j] * point(j)).sum();
        cost += (0..measures.len())
            .map(|j| weights[j] * (center - point(j)).powi(2))
            .sum::<f64>();
        centers.push(center);
    }
    (cost / n as f64, centers)
}

/// Minimizes the multimarginal functional over all permutation couplings of
/// `k` equal-weight measures with `n` atoms each.
///
/// For equal-weight marginals the extreme points of the coupling polytope are
/// permutation couplings, so the enumeration is exact. Intended as an
/// independent oracle for tiny instances.
pub fn brute_force_multimarginal(measures: &[Empirical1D], weights: &[f64]) -> Result<MultimarginalSolution> {
    let Some(first) = measures.first() else {
        return Err(Error::InvalidProblem("no measures".into()));
    };
    if weights.len() != measures.len() {
        return Err(Error::InvalidProblem("one weight per measure required".into()));
    }
    let n = first.len();
    if measures.iter().any(|m| m.len() != n || !m.has_equal_weights()) {
        return Err(Error::InvalidProblem(
            "marginals must share the atom count and carry equal weights".into(),
        ));
    }
    let k = measures.len();
    let factorial: f64 = (1..=n).map(|i| i as f64).product();
    let couplings = factorial.powi(k as i32 - 1);
    if couplings > ENUMERATION_CAP {
        return Err(Error::TooLarge {
            couplings,
            cap: ENUMERATION_CAP,
        });
    }

    let perms = all_permutations(n);
    let identity: Vec<usize> = (0..n).collect();
    // odometer over the permutations of marginals 2..k
    let mut digits = vec![0usize; k - 1];
    let mut best: Option<(f64, Vec<f64>, Vec<usize>)> = None;
    loop {
        let chosen: Vec<&[usize]> = std::iter::once(identity.as_slice())
            .chain(digits.iter().map(|&d| perms[d].as_slice()))
            .collect();
        let (cost, centers) = coupling_cost(measures, weights, &chosen);
        if best.as_ref().is_none_or(|(c, _, _)| cost < *c) {
            best = Some((cost, centers, digits.clone()));
        }
        let mut pos = 0;
        while pos < digits.len() {
            digits[pos] += 1;
            if digits[pos] < perms.len() {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
        if pos == digits.len() {
            break;
        }
    }

    let (value, mut centers, best_digits) = best.expect("at least one coupling");
    centers.sort_by(f64::total_cmp);
    let permutations = std::iter::once(identity.clone())
        .chain(best_digits.iter().map(|&d| perms[d].clone()))
        .collect();
    Ok(MultimarginalSolution {
        value,
        barycenter: Empirical1D::uniform(centers)?,
        permutations,
    })
}
