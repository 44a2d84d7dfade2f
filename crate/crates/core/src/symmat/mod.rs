//! Dense symmetric matrices and the spectral kernels built on them.
//!
//! Everything above this module works with [`SymMat`]: covariances, iterates
//! of the barycenter solver, optimal-map matrices. Storage is row-major and
//! symmetry is exact: every constructor and every product that is
//! mathematically symmetric averages `(A + Aᵀ)/2` before returning.

mod eigen;
mod wishart;

pub use eigen::{
    det_via_eigen, inv_sqrtm_pd, log_det, sqrt_and_inv_sqrt, sqrtm_psd, sym_eigen, EigenDecomp, JACOBI_MAX_SWEEPS,
    JACOBI_REL_TOL,
};
pub use wishart::{sample_wishart, RngState};

use crate::error::{Error, Result};

/// Relative threshold below which a negative eigenvalue is treated as rounding
/// noise and clamped to zero.
pub const PSD_CLAMP_REL: f64 = 1e-10;

/// Relative threshold used for positive definiteness: an eigenvalue must
/// exceed `PD_EPS_REL * max(1, ‖A‖_F)`.
pub const PD_EPS_REL: f64 = 1e-12;

/// Dense symmetric `dim × dim` matrix of `f64`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMat {
    dim: usize,
    data: Vec<f64>,
}

impl SymMat {
    /// Builds a symmetric matrix from row-major data, replacing it by
    /// `(A + Aᵀ)/2`.
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidMeasure("matrix dimension must be positive".into()));
        }
        if data.len() != dim * dim {
            return Err(Error::BadLength {
                expected: dim * dim,
                got: data.len(),
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self::symmetrized(dim, data))
    }

    /// Convenience constructor from nested rows.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::BadLength {
                    expected: dim,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(dim, data)
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diag(&vec![1.0; dim])
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let dim = diag.len();
        let mut data = vec![0.0; dim * dim];
        for (i, &x) in diag.iter().enumerate() {
            data[i * dim + i] = x;
        }
        Self { dim, data }
    }

    /// `1 × 1` matrix holding `x`.
    pub fn scalar(x: f64) -> Self {
        Self::from_diag(&[x])
    }

    /// Symmetrizes without validation; used for results of internal products.
    pub(crate) fn symmetrized(dim: usize, mut data: Vec<f64>) -> Self {
        for i in 0..dim {
            for j in (i + 1)..dim {
                let avg = 0.5 * (data[i * dim + j] + data[j * dim + i]);
                data[i * dim + j] = avg;
                data[j * dim + i] = avg;
            }
        }
        Self { dim, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Frobenius norm of `self - other`.
    pub fn frob_distance(&self, other: &SymMat) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs_diff(&self, other: &SymMat) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn add(&self, other: &SymMat) -> SymMat {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SymMat) -> SymMat {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, factor: f64) -> SymMat {
        SymMat {
            dim: self.dim,
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }

    /// `self += factor * other`
    pub fn add_scaled_in_place(&mut self, other: &SymMat, factor: f64) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += factor * b;
        }
    }

    /// `self + shift * Id`
    pub fn shift_diagonal(&self, shift: f64) -> SymMat {
        let mut out = self.clone();
        for i in 0..self.dim {
            out.data[i * self.dim + i] += shift;
        }
        out
    }

    fn zip_with(&self, other: &SymMat, f: impl Fn(f64, f64) -> f64) -> SymMat {
        debug_assert_eq!(self.dim, other.dim);
        SymMat {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// General (not necessarily symmetric) product `self · other`, row-major.
    pub fn mul_raw(&self, other: &SymMat) -> Vec<f64> {
        mat_mul(self.dim, &self.data, &other.data)
    }

    /// `self · inner · self`, symmetrized.
    pub fn sandwich(&self, inner: &SymMat) -> SymMat {
        let n = self.dim;
        let left = mat_mul(n, &self.data, &inner.data);
        SymMat::symmetrized(n, mat_mul(n, &left, &self.data))
    }

    /// `self²`, symmetrized.
    pub fn square(&self) -> SymMat {
        SymMat::symmetrized(self.dim, mat_mul(self.dim, &self.data, &self.data))
    }

    /// `Tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &SymMat) -> f64 {
        // Tr(AB) = Σ a_ij b_ji and b is symmetric
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    /// `‖AB − BA‖_F`.
    pub fn commutator_norm(&self, other: &SymMat) -> f64 {
        let ab = self.mul_raw(other);
        let ba = other.mul_raw(self);
        ab.iter().zip(&ba).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n)
            .map(|i| (0..n).map(|j| self.data[i * n + j] * v[j]).sum())
            .collect()
    }
}

/// Row-major `n × n` product.
pub(crate) fn mat_mul(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        let row = &mut out[i * n..(i + 1) * n];
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            let brow = &b[k * n..(k + 1) * n];
            for (o, &bkj) in row.iter_mut().zip(brow) {
                *o += aik * bkj;
            }
        }
    }
    out
}

/// Sum of diagonal entries.
pub fn trace(a: &SymMat) -> f64 {
    a.trace()
}

/// Frobenius norm.
pub fn frob_norm(a: &SymMat) -> f64 {
    a.frob_norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructor_symmetrizes() {
        let a = SymMat::new(2, vec![1.0, 2.0, 4.0, 3.0]).unwrap();
        assert_eq!(a.get(0, 1), 3.0);
        assert_eq!(a.get(1, 0), 3.0);
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert_eq!(
            SymMat::new(2, vec![1.0, 0.0, 0.0]),
            Err(Error::BadLength { expected: 4, got: 3 })
        );
        assert_eq!(SymMat::new(1, vec![f64::NAN]), Err(Error::NonFinite));
        assert!(SymMat::new(0, vec![]).is_err());
    }

    #[test]
    fn trace_and_norm() {
        assert_eq!(trace(&SymMat::from_diag(&[9.0, 1.0])), 10.0);
        let a = SymMat::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        assert_eq!(frob_norm(&a), 10f64.sqrt());
    }

    #[test]
    fn sandwich_matches_explicit_product() {
        let a = SymMat::from_rows(&[&[2.0, 1.0], &[1.0, 3.0]]).unwrap();
        let b = SymMat::from_rows(&[&[1.0, -1.0], &[-1.0, 4.0]]).unwrap();
        let ab = a.mul_raw(&b);
        // (AB)A by hand
        let expected = [
            ab[0] * 2.0 + ab[1] * 1.0,
            ab[0] * 1.0 + ab[1] * 3.0,
            ab[2] * 2.0 + ab[3] * 1.0,
            ab[2] * 1.0 + ab[3] * 3.0,
        ];
        let s = a.sandwich(&b);
        for (x, y) in s.as_slice().iter().zip(expected) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn trace_product_matches_product_trace() {
        let a = SymMat::from_rows(&[&[2.0, 1.0], &[1.0, 3.0]]).unwrap();
        let b = SymMat::from_rows(&[&[1.0, -1.0], &[-1.0, 4.0]]).unwrap();
        let ab = a.mul_raw(&b);
        assert_eq!(a.trace_product(&b), ab[0] + ab[3]);
    }

    #[test]
    fn diagonal_matrices_commute() {
        let a = SymMat::from_diag(&[9.0, 1.0]);
        let b = SymMat::from_diag(&[1.0, 4.0]);
        assert_eq!(a.commutator_norm(&b), 0.0);
        let c = SymMat::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        assert!(a.commutator_norm(&c) > 1.0);
    }
}
