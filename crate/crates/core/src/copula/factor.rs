use nalgebra::DMatrix;

use super::CorrelationMatrix;

/// Reconstruction tolerance for `L Lᵀ` against the source matrix.
pub const FACTOR_TOLERANCE: f64 = 1e-8;

/// Pivots at or below this are treated as exact zeros.
const PIVOT_EPS: f64 = 1e-12;

/// Lower-triangular `L` with `L Lᵀ = Σ`, possibly rank deficient.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationFactor {
    d: usize,
    l: Vec<f64>,
    rank: usize,
    identity: bool,
}

impl CorrelationFactor {
    /// Factors a validated correlation matrix.
    ///
    /// A semidefinite Cholesky is tried first: it is exact for the common
    /// cases, and for perfectly correlated pairs it produces rows that are
    /// identical up to sign. If that does not reproduce the matrix (nearly
    /// singular input), the factor is rebuilt from the clamped eigen
    /// decomposition and re-triangularized by QR.
    pub fn new(sigma: &CorrelationMatrix) -> Self {
        let d = sigma.dim();
        if sigma.is_identity() {
            return Self::identity(d);
        }
        if let Some((l, rank)) = semidefinite_cholesky(sigma) {
            if max_reconstruction_error(&l, sigma) <= FACTOR_TOLERANCE {
                return Self {
                    d,
                    l,
                    rank,
                    identity: false,
                };
            }
        }
        let (l, rank) = eigen_factor(sigma);
        Self {
            d,
            l,
            rank,
            identity: false,
        }
    }

    pub fn identity(d: usize) -> Self {
        let mut l = vec![0.0; d * d];
        for i in 0..d {
            l[i * d + i] = 1.0;
        }
        Self {
            d,
            l,
            rank: d,
            identity: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.l[i * self.d + j]
    }

    /// Row-major entries of `L`.
    pub fn entries(&self) -> &[f64] {
        &self.l
    }

    /// Writes `L g` into `z`. Zero entries are skipped so an identity row
    /// passes its input through unchanged.
    #[inline]
    pub fn apply(&self, g: &[f64], z: &mut [f64]) {
        let d = self.d;
        for (i, zi) in z.iter_mut().enumerate().take(d) {
            let row = &self.l[i * d..i * d + i + 1];
            let mut acc = 0.0;
            let mut first = true;
            for (j, &lij) in row.iter().enumerate() {
                if lij != 0.0 {
                    let term = lij * g[j];
                    acc = if first { term } else { acc + term };
                    first = false;
                }
            }
            *zi = acc;
        }
    }

    pub fn max_reconstruction_error(&self, sigma: &CorrelationMatrix) -> f64 {
        max_reconstruction_error(&self.l, sigma)
    }
}

fn semidefinite_cholesky(sigma: &CorrelationMatrix) -> Option<(Vec<f64>, usize)> {
    let d = sigma.dim();
    let mut l = vec![0.0; d * d];
    let mut rank = 0;
    for j in 0..d {
        let s = sigma.get(j, j) - (0..j).map(|k| l[j * d + k] * l[j * d + k]).sum::<f64>();
        if s > PIVOT_EPS {
            let pivot = s.sqrt();
            l[j * d + j] = pivot;
            rank += 1;
            for i in (j + 1)..d {
                let t = sigma.get(i, j) - (0..j).map(|k| l[i * d + k] * l[j * d + k]).sum::<f64>();
                l[i * d + j] = t / pivot;
            }
        } else if s < -FACTOR_TOLERANCE {
            return None;
        }
    }
    Some((l, rank))
}

fn eigen_factor(sigma: &CorrelationMatrix) -> (Vec<f64>, usize) {
    let d = sigma.dim();
    let eig = DMatrix::from_row_slice(d, d, sigma.entries()).symmetric_eigen();
    let mut b = eig.eigenvectors.clone();
    let mut rank = 0;
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let scale = lambda.max(0.0).sqrt();
        if lambda > PIVOT_EPS {
            rank += 1;
        }
        b.column_mut(k).scale_mut(scale);
    }
    // Σ = B Bᵀ; with Bᵀ = Q R we get Σ = Rᵀ R, so Rᵀ is a lower factor.
    let r = b.transpose().qr().r();
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            l[i * d + j] = r[(j, i)];
        }
    }
    // Fix signs so the diagonal is non-negative.
    for j in 0..d {
        if l[j * d + j] < 0.0 {
            for i in j..d {
                l[i * d + j] = -l[i * d + j];
            }
        }
    }
    (l, rank)
}

fn max_reconstruction_error(l: &[f64], sigma: &CorrelationMatrix) -> f64 {
    let d = sigma.dim();
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let v: f64 = (0..d).map(|k| l[i * d + k] * l[j * d + k]).sum();
            worst = worst.max((v - sigma.get(i, j)).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corr2(rho: f64) -> CorrelationMatrix {
        CorrelationMatrix::from_pairs(2, &[(0, 1, rho)]).unwrap()
    }

    #[test]
    fn identity_factor() {
        let f = CorrelationFactor::new(&CorrelationMatrix::identity(3));
        assert!(f.is_identity());
        assert_eq!(f.entries(), CorrelationFactor::identity(3).entries());
    }

    #[test]
    fn hand_cholesky() {
        let f = CorrelationFactor::new(&corr2(0.5));
        assert_eq!(f.get(0, 0), 1.0);
        assert_eq!(f.get(0, 1), 0.0);
        assert_eq!(f.get(1, 0), 0.5);
        assert!((f.get(1, 1) - 0.75f64.sqrt()).abs() < 1e-15);
        assert_eq!(f.rank(), 2);
    }

    #[test]
    fn perfect_correlation_is_rank_one() {
        for rho in [1.0, -1.0] {
            let s = corr2(rho);
            let f = CorrelationFactor::new(&s);
            assert_eq!(f.rank(), 1);
            assert!(f.max_reconstruction_error(&s) <= FACTOR_TOLERANCE);
            let mut z = [0.0; 2];
            f.apply(&[0.731, -1.2], &mut z);
            assert_eq!(z[1], rho * z[0]);
        }
    }

    #[test]
    fn rank_deficient_three_by_three() {
        // Rank-2 three-dimensional matrix with rounding in the entries.
        let a = 0.3f64;
        let rows = vec![
            vec![1.0, a.cos(), (2.0 * a).cos()],
            vec![a.cos(), 1.0, a.cos()],
            vec![(2.0 * a).cos(), a.cos(), 1.0],
        ];
        let s = CorrelationMatrix::new(&rows).unwrap();
        let f = CorrelationFactor::new(&s);
        assert!(f.max_reconstruction_error(&s) <= FACTOR_TOLERANCE);
        assert_eq!(f.rank(), 2);
        for i in 0..3 {
            for j in (i + 1)..3 {
                assert_eq!(f.get(i, j), 0.0);
            }
        }
    }

    #[test]
    fn eigen_path_reconstructs_general_matrix() {
        let s = CorrelationMatrix::new(&[vec![1.0, 0.2, -0.4], vec![0.2, 1.0, 0.3], vec![-0.4, 0.3, 1.0]]).unwrap();
        let (l, rank) = eigen_factor(&s);
        assert_eq!(rank, 3);
        assert!(max_reconstruction_error(&l, &s) < 1e-12);
    }
}
