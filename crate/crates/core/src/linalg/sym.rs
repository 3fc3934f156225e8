use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Dense symmetric matrix.
///
/// Symmetry is exact: construction replaces the input by `(A + Aᵀ)/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    inner: Matrix,
}

impl SymMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        let (r, c) = m.shape();
        if r != c {
            return Err(Error::mismatch("SymMatrix::new", "square", format!("{r}x{c}")));
        }
        let sym = Matrix::from_fn(r, r, |i, j| {
            if i == j {
                m[(i, i)]
            } else {
                0.5 * (m[(i, j)] + m[(j, i)])
            }
        });
        Ok(Self { inner: sym })
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        Self {
            inner: Matrix::from_diag(diag),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    /// `V · diag(λ) · Vᵀ`.
    pub fn from_eigen(vectors: &Matrix, values: &[f64]) -> Result<Self> {
        if vectors.cols() != values.len() {
            return Err(Error::mismatch("from_eigen", vectors.cols(), values.len()));
        }
        let mut scaled = vectors.clone();
        for (j, &l) in values.iter().enumerate() {
            scaled.col_mut(j).iter_mut().for_each(|x| *x *= l);
        }
        Self::new(scaled.matmul_tr(vectors)?)
    }

    /// Sample second-moment matrix `XᵀX / n` of an `n×p` data matrix.
    pub fn gram(data: &Matrix, scale: f64) -> Self {
        let g = data.tr_matmul(data).expect("same row count");
        Self::new(g.scale(scale)).expect("gram matrices are square")
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.inner.rows()
    }

    #[inline]
    pub fn as_matrix(&self) -> &Matrix {
        &self.inner
    }

    pub fn into_matrix(self) -> Matrix {
        self.inner
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner[(i, j)]
    }

    pub fn add(&self, rhs: &SymMatrix) -> Result<SymMatrix> {
        Ok(Self {
            inner: self.inner.add(&rhs.inner)?,
        })
    }

    pub fn sub(&self, rhs: &SymMatrix) -> Result<SymMatrix> {
        Ok(Self {
            inner: self.inner.sub(&rhs.inner)?,
        })
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        Self {
            inner: self.inner.scale(s),
        }
    }

    pub fn trace(&self) -> f64 {
        self.inner.trace()
    }

    /// Principal submatrix on the given indices.
    pub fn principal(&self, idx: &[usize]) -> SymMatrix {
        let k = idx.len();
        Self {
            inner: Matrix::from_fn(k, k, |i, j| self.inner[(idx[i], idx[j])]),
        }
    }

    pub fn is_symmetric_exact(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..i).all(|j| self.inner[(i, j)] == self.inner[(j, i)]))
    }

    /// Smallest eigenvalue is at least `-tol·‖A‖₂`.
    pub fn is_psd(&self, tol: f64) -> bool {
        let vals = super::sym_eigvals(self);
        let top = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        vals.last().is_none_or(|&l| l >= -tol * top)
    }
}

impl std::ops::Index<(usize, usize)> for SymMatrix {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.inner[idx]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_symmetrizes() {
        let m = Matrix::from_rows(&[[1.0, 2.0], [4.0, 3.0]]).unwrap();
        let s = SymMatrix::new(m).unwrap();
        assert_eq!(s.get(0, 1), 3.0);
        assert_eq!(s.get(1, 0), 3.0);
        assert!(s.is_symmetric_exact());
    }

    #[test]
    fn rejects_rectangular() {
        assert!(SymMatrix::new(Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn psd_check() {
        assert!(SymMatrix::from_diag(&[1.0, 0.0]).is_psd(1e-12));
        assert!(!SymMatrix::from_diag(&[1.0, -0.5]).is_psd(1e-12));
    }
}
