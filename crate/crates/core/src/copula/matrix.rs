use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::CorrelationError;

/// Smallest eigenvalue still accepted as positive semi-definite.
pub const PSD_TOLERANCE: f64 = -1e-10;

/// How to treat a matrix that is not exactly symmetric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Symmetry {
    /// Any asymmetry is an error.
    #[default]
    Reject,
    /// Replace both mirrored entries by their mean before validating.
    Symmetrize,
}

/// A validated correlation matrix: symmetric, unit diagonal, entries in
/// `[-1, 1]`, positive semi-definite.
#[derive(Clone, PartialEq)]
pub struct CorrelationMatrix {
    d: usize,
    entries: Vec<f64>,
    min_eigenvalue: f64,
    max_eigenvalue: f64,
}

impl CorrelationMatrix {
    /// Validates rows, rejecting asymmetric input.
    pub fn new(rows: &[Vec<f64>]) -> Result<Self, CorrelationError> {
        Self::with_symmetry(rows, Symmetry::Reject)
    }

    pub fn with_symmetry(rows: &[Vec<f64>], symmetry: Symmetry) -> Result<Self, CorrelationError> {
        let d = rows.len();
        if d == 0 {
            return Err(CorrelationError::Empty);
        }
        for (row, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(CorrelationError::NotSquare {
                    rows: d,
                    row,
                    len: r.len(),
                });
            }
        }
        let mut entries: Vec<f64> = rows.iter().flatten().copied().collect();
        if let Some(k) = entries.iter().position(|v| !v.is_finite()) {
            return Err(CorrelationError::NonFinite(k / d, k % d));
        }
        for i in 0..d {
            for j in (i + 1)..d {
                let (a, b) = (entries[i * d + j], entries[j * d + i]);
                if a != b {
                    match symmetry {
                        Symmetry::Reject => return Err(CorrelationError::Asymmetric(i, j)),
                        Symmetry::Symmetrize => {
                            let m = 0.5 * (a + b);
                            entries[i * d + j] = m;
                            entries[j * d + i] = m;
                        }
                    }
                }
            }
        }
        for i in 0..d {
            let v = entries[i * d + i];
            if v != 1.0 {
                return Err(CorrelationError::DiagonalNotUnit(i, v));
            }
        }
        for i in 0..d {
            for j in (i + 1)..d {
                let v = entries[i * d + j];
                if !(-1.0..=1.0).contains(&v) {
                    return Err(CorrelationError::OutOfRange(i, j, v));
                }
            }
        }
        let eigenvalues = DMatrix::from_row_slice(d, d, &entries).symmetric_eigenvalues();
        let min_eigenvalue = eigenvalues.min();
        let max_eigenvalue = eigenvalues.max();
        if min_eigenvalue < PSD_TOLERANCE {
            return Err(CorrelationError::NotPsd(min_eigenvalue));
        }
        Ok(Self {
            d,
            entries,
            min_eigenvalue,
            max_eigenvalue,
        })
    }

    pub fn identity(d: usize) -> Self {
        let mut entries = vec![0.0; d * d];
        for i in 0..d {
            entries[i * d + i] = 1.0;
        }
        Self {
            d,
            entries,
            min_eigenvalue: 1.0,
            max_eigenvalue: 1.0,
        }
    }

    /// `d x d` matrix equal to the identity except for the listed
    /// off-diagonal pairs, which are set symmetrically.
    pub fn from_pairs(d: usize, pairs: &[(usize, usize, f64)]) -> Result<Self, CorrelationError> {
        let mut rows = vec![vec![0.0; d]; d];
        for (i, row) in rows.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        for &(i, j, v) in pairs {
            rows[i][j] = v;
            rows[j][i] = v;
        }
        Self::new(&rows)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.d + j]
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.d).map(<[f64]>::to_vec).collect()
    }

    pub fn is_identity(&self) -> bool {
        (0..self.d).all(|i| (0..self.d).all(|j| self.get(i, j) == if i == j { 1.0 } else { 0.0 }))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.max_eigenvalue
    }

    /// Ratio of extreme eigenvalues; infinite for singular matrices.
    pub fn condition_number(&self) -> f64 {
        if self.min_eigenvalue > 0.0 {
            self.max_eigenvalue / self.min_eigenvalue
        } else {
            f64::INFINITY
        }
    }
}

impl fmt::Debug for CorrelationMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.entries.chunks(self.d)).finish()
    }
}

/// Row-major text form, `;` between rows and `,` within a row.
impl fmt::Display for CorrelationMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, row) in self.entries.chunks(self.d).enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{v}")?;
            }
        }
        Ok(())
    }
}

impl Serialize for CorrelationMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.rows().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CorrelationMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(deserializer)?;
        CorrelationMatrix::new(&rows).map_err(serde::de::Error::custom)
    }
}
