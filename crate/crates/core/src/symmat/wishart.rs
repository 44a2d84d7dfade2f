use super::{mat_mul, SymMat};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic counter-based generator (SplitMix64 output function) with
/// Box–Muller normal variates.
///
/// The `n`-th raw output depends only on `(seed, n)`, so streams are
/// reproducible across runs and platforms.
#[derive(Debug, Clone, PartialEq)]
pub struct RngState {
    seed: u64,
    counter: u64,
    spare_normal: Option<f64>,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            counter: 0,
            spare_normal: None,
        }
    }

    /// Independent stream keyed by `seed` and a path of integers, e.g.
    /// `(d, k, replicate)`.
    pub fn derive(seed: u64, path: &[u64]) -> Self {
        let mut h = mix64(seed ^ 0x5851_F42D_4C95_7F2D);
        for &p in path {
            h = mix64(h ^ mix64(p.wrapping_add(GOLDEN_GAMMA)));
        }
        Self::new(h)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.seed.wrapping_add(self.counter.wrapping_mul(GOLDEN_GAMMA)))
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        ((self.next_f64() * n as f64) as usize).min(n - 1)
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        // u1 in (0, 1] keeps the logarithm finite
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.next_f64();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare_normal = Some(radius * angle.sin());
        radius * angle.cos()
    }
}

/// Draw from the Wishart distribution `W_d(Id, d)` as `G Gᵀ`, `G` a `d × d`
/// matrix of independent standard normals.
pub fn sample_wishart(rng: &mut RngState, d: usize) -> SymMat {
    let g: Vec<f64> = (0..d * d).map(|_| rng.standard_normal()).collect();
    let mut gt = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            gt[j * d + i] = g[i * d + j];
        }
    }
    SymMat::symmetrized(d, mat_mul(d, &g, &gt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmat::sym_eigen;

    #[test]
    fn equal_seeds_give_equal_streams() {
        let mut a = RngState::new(42);
        let mut b = RngState::new(42);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        let wa = sample_wishart(&mut RngState::new(7), 5);
        let wb = sample_wishart(&mut RngState::new(7), 5);
        assert_eq!(wa.as_slice(), wb.as_slice());
        assert_ne!(RngState::new(1).next_u64(), RngState::new(2).next_u64());
    }

    #[test]
    fn derived_streams_differ() {
        let a = RngState::derive(1, &[2, 2, 0]);
        let b = RngState::derive(1, &[2, 2, 1]);
        let c = RngState::derive(1, &[2, 2, 0]);
        assert_ne!(a.seed(), b.seed());
        assert_eq!(a, c);
    }

    #[test]
    fn normal_moments() {
        let mut rng = RngState::new(3);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "var {var}");
    }

    #[test]
    fn wishart_is_symmetric_psd() {
        let mut rng = RngState::new(11);
        for d in 1..=6 {
            let w = sample_wishart(&mut rng, d);
            for i in 0..d {
                for j in 0..d {
                    assert_eq!(w.get(i, j), w.get(j, i));
                }
            }
            assert!(sym_eigen(&w).unwrap().min_eigenvalue() >= -1e-12);
        }
    }

    #[test]
    fn wishart_scalar_mean_is_one() {
        // W_1(1, 1) is chi-squared with one degree of freedom
        let mut rng = RngState::new(2024);
        let n = 100_000;
        let mean = (0..n).map(|_| sample_wishart(&mut rng, 1).get(0, 0)).sum::<f64>() / n as f64;
        assert!((0.97..=1.03).contains(&mean), "mean {mean}");
    }

    #[test]
    fn wishart_mean_matrix() {
        // E[W_d(Id, d)] = d · Id
        let d = 2;
        let n = 100_000;
        let mut rng = RngState::new(99);
        let mut acc = SymMat::zeros(d);
        for _ in 0..n {
            acc.add_scaled_in_place(&sample_wishart(&mut rng, d), 1.0 / n as f64);
        }
        let expected = SymMat::identity(d).scale(d as f64);
        assert!(acc.max_abs_diff(&expected) <= 0.05 * d as f64, "{acc:?}");
    }
}
