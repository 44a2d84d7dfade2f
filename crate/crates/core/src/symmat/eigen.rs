use super::{SymMat, PD_EPS_REL, PSD_CLAMP_REL};
use crate::error::{Error, Result};

/// Maximum number of cyclic Jacobi sweeps.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Sweeps stop once the off-diagonal Frobenius norm drops below
/// `JACOBI_REL_TOL * ‖A‖_F`.
pub const JACOBI_REL_TOL: f64 = 1e-12;

/// Spectral decomposition `A = Q Λ Qᵀ` with eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct EigenDecomp {
    dim: usize,
    /// Row-major; column `i` is the eigenvector for `lambda[i]`.
    q: Vec<f64>,
    lambda: Vec<f64>,
}

impl EigenDecomp {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.lambda
    }

    /// Row-major eigenvector matrix (eigenvectors in columns).
    pub fn eigenvectors(&self) -> &[f64] {
        &self.q
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.lambda.last().copied().unwrap_or(0.0)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.lambda.first().copied().unwrap_or(0.0)
    }

    /// `Q f(Λ) Qᵀ`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SymMat {
        let n = self.dim;
        let fl: Vec<f64> = self.lambda.iter().map(|&l| f(l)).collect();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for (k, &w) in fl.iter().enumerate() {
                    acc += self.q[i * n + k] * w * self.q[j * n + k];
                }
                out[i * n + j] = acc;
                out[j * n + i] = acc;
            }
        }
        SymMat { dim: n, data: out }
    }

    /// `Q Λ Qᵀ`.
    pub fn reconstruct(&self) -> SymMat {
        self.map(|l| l)
    }

    /// `‖QQᵀ − Id‖_F`.
    pub fn orthogonality_error(&self) -> f64 {
        let n = self.dim;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = (0..n).map(|k| self.q[i * n + k] * self.q[j * n + k]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                acc += (dot - target).powi(2);
            }
        }
        acc.sqrt()
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
pub fn sym_eigen(a: &SymMat) -> Result<EigenDecomp> {
    let n = a.dim();
    let mut m = a.as_slice().to_vec();
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        q[i * n + i] = 1.0;
    }
    let threshold = JACOBI_REL_TOL * a.frob_norm();

    let off_norm = |m: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[i * n + j] * m[i * n + j];
                }
            }
        }
        s.sqrt()
    };

    let mut converged = off_norm(&m) <= threshold;
    let mut sweeps = 0;
    while !converged {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::EigenNoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for r in (p + 1)..n {
                let apq = m[p * n + r];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[r * n + r];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + r];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + r] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[r * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[r * n + k] = s * apk + c * aqk;
                }
                m[p * n + r] = 0.0;
                m[r * n + p] = 0.0;

                for k in 0..n {
                    let vkp = q[k * n + p];
                    let vkq = q[k * n + r];
                    q[k * n + p] = c * vkp - s * vkq;
                    q[k * n + r] = s * vkp + c * vkq;
                }
            }
        }
        converged = off_norm(&m) <= threshold;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].total_cmp(&m[i * n + i]));
    let lambda = order.iter().map(|&i| m[i * n + i]).collect();
    let mut q_sorted = vec![0.0; n * n];
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..n {
            q_sorted[row * n + new_col] = q[row * n + old_col];
        }
    }
    Ok(EigenDecomp {
        dim: n,
        q: q_sorted,
        lambda,
    })
}

fn psd_floor(a: &SymMat) -> f64 {
    -PSD_CLAMP_REL * a.frob_norm()
}

fn pd_eps(a: &SymMat) -> f64 {
    PD_EPS_REL * a.frob_norm().max(1.0)
}

/// Principal square root of a PSD matrix. Eigenvalues in `(-1e-10‖A‖_F, 0)`
/// are clamped to zero.
pub fn sqrtm_psd(a: &SymMat) -> Result<SymMat> {
    let eig = sym_eigen(a)?;
    let min = eig.min_eigenvalue();
    if min < psd_floor(a) {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    Ok(eig.map(|l| l.max(0.0).sqrt()))
}

/// `A^{-1/2}` for a positive definite `A`.
pub fn inv_sqrtm_pd(a: &SymMat) -> Result<SymMat> {
    let eig = sym_eigen(a)?;
    let min = eig.min_eigenvalue();
    if min <= pd_eps(a) {
        return Err(Error::SingularMatrix { min_eigenvalue: min });
    }
    Ok(eig.map(|l| 1.0 / l.sqrt()))
}

/// `(A^{1/2}, A^{-1/2})` from a single decomposition.
pub fn sqrt_and_inv_sqrt(a: &SymMat) -> Result<(SymMat, SymMat)> {
    let eig = sym_eigen(a)?;
    let min = eig.min_eigenvalue();
    if min <= pd_eps(a) {
        return Err(Error::SingularMatrix { min_eigenvalue: min });
    }
    Ok((eig.map(f64::sqrt), eig.map(|l| 1.0 / l.sqrt())))
}

/// Determinant as the product of eigenvalues.
pub fn det_via_eigen(a: &SymMat) -> Result<f64> {
    Ok(sym_eigen(a)?.eigenvalues().iter().product())
}

/// `log det A`; `-inf` or NaN when `A` is not positive definite.
pub fn log_det(a: &SymMat) -> Result<f64> {
    Ok(sym_eigen(a)?.eigenvalues().iter().map(|l| l.ln()).sum())
}
