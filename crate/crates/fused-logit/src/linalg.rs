//! Dense symmetric positive-definite factorization used by the Newton
//! solvers. Matrices here are small (order of the sample or feature count),
//! so a plain Cholesky without pivoting is adequate.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    l: Array2<f64>,
    /// True when the factorization only succeeded after diagonal jitter.
    pub jittered: bool,
}

impl CholeskyFactor {
    /// Factorizes `a` as L Lᵀ. Fails if a pivot is not strictly positive.
    pub fn decompose(a: &Array2<f64>) -> Result<Self> {
        let factor = cholesky_lower(a)?;
        Ok(CholeskyFactor {
            l: factor,
            jittered: false,
        })
    }

    /// Factorizes `a`, retrying at most `max_attempts` times with diagonal
    /// jitter `1e-10 * trace(a)/n` added before each retry.
    pub fn decompose_with_jitter(a: &Array2<f64>, max_attempts: usize) -> Result<Self> {
        match cholesky_lower(a) {
            Ok(l) => {
                return Ok(CholeskyFactor { l, jittered: false });
            }
            Err(_) => {}
        }
        let n = a.nrows();
        let jitter = 1e-10 * a.diag().sum() / n.max(1) as f64;
        let mut work = a.clone();
        for _ in 0..max_attempts {
            for i in 0..n {
                work[[i, i]] += jitter;
            }
            if let Ok(l) = cholesky_lower(&work) {
                return Ok(CholeskyFactor { l, jittered: true });
            }
        }
        Err(Error::SingularMatrix(format!(
            "{n}x{n} matrix not positive definite after {max_attempts} jitter attempts"
        )))
    }

    /// Solves A x = b given the stored factor.
    pub fn solve(&self, b: &Array1<f64>) -> Array1<f64> {
        let n = self.l.nrows();
        debug_assert_eq!(b.len(), n);
        // Forward substitution: L z = b.
        let mut z = b.clone();
        for i in 0..n {
            let mut s = z[i];
            for k in 0..i {
                s -= self.l[[i, k]] * z[k];
            }
            z[i] = s / self.l[[i, i]];
        }
        // Back substitution: Lᵀ x = z.
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in (i + 1)..n {
                s -= self.l[[k, i]] * z[k];
            }
            z[i] = s / self.l[[i, i]];
        }
        z
    }
}

fn cholesky_lower(a: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "cholesky needs a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return Err(Error::SingularMatrix(format!(
                        "non-positive pivot {s:.3e} at row {i}"
                    )));
                }
                l[[i, j]] = s.sqrt();
            } else {
                l[[i, j]] = s / l[[j, j]];
            }
        }
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn solves_spd_system() {
        let a = array![[4.0, 2.0, 0.6], [2.0, 5.0, 1.0], [0.6, 1.0, 3.0]];
        let x_true = array![1.0, -2.0, 0.5];
        let b = a.dot(&x_true);
        let f = CholeskyFactor::decompose(&a).unwrap();
        let x = f.solve(&b);
        for i in 0..3 {
            assert!((x[i] - x_true[i]).abs() < 1e-12);
        }
        assert!(!f.jittered);
    }

    #[test]
    fn rejects_indefinite_matrix() {
        let a = array![[1.0, 2.0], [2.0, 1.0]];
        assert!(CholeskyFactor::decompose(&a).is_err());
    }

    #[test]
    fn jitter_recovers_rank_deficient_gram() {
        // Gram matrix of duplicated rows is exactly singular; jitter makes
        // it factorizable and the flag records that it was needed.
        let a = array![[5.0, 5.0], [5.0, 5.0]];
        let f = CholeskyFactor::decompose_with_jitter(&a, 2).unwrap();
        assert!(f.jittered);
    }

    #[test]
    fn jitter_attempts_are_bounded() {
        let a = array![[0.0, 0.0], [0.0, -1.0]];
        assert!(CholeskyFactor::decompose_with_jitter(&a, 2).is_err());
    }
}
