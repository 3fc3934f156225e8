//! Symmetric operators accessed only through products.

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm2, Matrix, SymMatrix};

/// A symmetric `p×p` linear map.
pub trait SymOperator: Sync {
    fn dim(&self) -> usize;

    /// `A·Q` for a `p×m` block.
    fn apply(&self, q: &Matrix) -> Result<Matrix>;

    fn apply_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        let q = Matrix::from_col_major(v.len(), 1, v.to_vec())?;
        Ok(self.apply(&q)?.col(0).to_vec())
    }
}

impl SymOperator for SymMatrix {
    fn dim(&self) -> usize {
        SymMatrix::dim(self)
    }

    fn apply(&self, q: &Matrix) -> Result<Matrix> {
        self.as_matrix().matmul(q)
    }

    fn apply_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.as_matrix().mat_vec(v)
    }
}

impl<T: SymOperator + ?Sized> SymOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, q: &Matrix) -> Result<Matrix> {
        (**self).apply(q)
    }

    fn apply_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        (**self).apply_vec(v)
    }
}

/// `A = s·XᵀX` applied as `s·Xᵀ(XQ)`, costing `O(npm)` per block product.
#[derive(Debug, Clone)]
pub struct GramOperator {
    data: Matrix,
    scale: f64,
}

impl GramOperator {
    pub fn new(data: Matrix, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidArgument(format!("gram scale {scale} must be positive")));
        }
        Ok(Self { data, scale })
    }

    /// Sample covariance form `XᵀX/n`.
    pub fn covariance(data: Matrix) -> Self {
        let n = data.rows() as f64;
        Self { data, scale: 1.0 / n }
    }

    pub fn data(&self) -> &Matrix {
        &self.data
    }

    pub fn materialize(&self) -> SymMatrix {
        SymMatrix::gram(&self.data, self.scale)
    }
}

impl SymOperator for GramOperator {
    fn dim(&self) -> usize {
        self.data.cols()
    }

    fn apply(&self, q: &Matrix) -> Result<Matrix> {
        let xq = self.data.matmul(q)?;
        Ok(self.data.tr_matmul(&xq)?.scale(self.scale))
    }
}

/// `B·A·B` with `B = Π(I − u_i u_iᵀ)` over the found vectors, never formed.
#[derive(Debug, Clone)]
pub struct DeflatedOperator<O> {
    base: O,
    found: Vec<Vec<f64>>,
}

impl<O: SymOperator> DeflatedOperator<O> {
    pub fn new(base: O) -> Self {
        Self {
            base,
            found: Vec::new(),
        }
    }

    /// Adds `u` (normalized) to the projection chain.
    pub fn deflate(mut self, u: &[f64]) -> Result<Self> {
        self.push(u)?;
        Ok(self)
    }

    pub fn push(&mut self, u: &[f64]) -> Result<()> {
        if u.len() != self.base.dim() {
            return Err(Error::mismatch("deflate", self.base.dim(), u.len()));
        }
        let n = norm2(u);
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidArgument("deflation vector must be nonzero".into()));
        }
        self.found.push(u.iter().map(|x| x / n).collect());
        Ok(())
    }

    pub fn found(&self) -> &[Vec<f64>] {
        &self.found
    }

    pub fn base(&self) -> &O {
        &self.base
    }

    /// `v ← (I − u uᵀ) v` for the most recent vector first.
    ///
    /// Deflation `j` wraps the previous operator as `(I−u_j u_jᵀ)·A_{j−1}·(I−u_j u_jᵀ)`,
    /// so the right factor is applied latest-first and the left factor
    /// earliest-first.
    fn project_latest_first(&self, v: &mut [f64]) {
        for u in self.found.iter().rev() {
            let c = dot(u, v);
            axpy(-c, u, v);
        }
    }

    fn project_earliest_first(&self, v: &mut [f64]) {
        for u in &self.found {
            let c = dot(u, v);
            axpy(-c, u, v);
        }
    }
}

impl<O: SymOperator> SymOperator for DeflatedOperator<O> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn apply(&self, q: &Matrix) -> Result<Matrix> {
        if self.found.is_empty() {
            return self.base.apply(q);
        }
        let mut right = q.clone();
        for j in 0..right.cols() {
            self.project_latest_first(right.col_mut(j));
        }
        let mut out = self.base.apply(&right)?;
        for j in 0..out.cols() {
            self.project_earliest_first(out.col_mut(j));
        }
        Ok(out)
    }
}

/// Dense `p×p` matrix of an operator, for small-scale checks.
pub fn materialize<O: SymOperator + ?Sized>(op: &O) -> Result<SymMatrix> {
    SymMatrix::new(op.apply(&Matrix::identity(op.dim()))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{householder_qr, sym_eigvals};
    use crate::rng::{gaussian_matrix, gaussian_vec, seeded};

    #[test]
    fn gram_matches_materialized() {
        let x = gaussian_matrix(&mut seeded(1), 15, 6);
        let g = GramOperator::covariance(x);
        let q = gaussian_matrix(&mut seeded(2), 6, 2);
        let lazy = g.apply(&q).unwrap();
        let dense = g.materialize().as_matrix().matmul(&q).unwrap();
        assert!(lazy.sub(&dense).unwrap().frobenius_norm() <= 1e-12 * dense.frobenius_norm());
    }

    #[test]
    fn deflating_an_eigenvector_zeroes_its_eigenvalue() {
        let v = householder_qr(&gaussian_matrix(&mut seeded(3), 6, 6)).unwrap().q;
        let lambda = [4.0, 3.0, 2.0, 1.0, 0.5, 0.25];
        let a = SymMatrix::from_eigen(&v, &lambda).unwrap();
        let d = DeflatedOperator::new(&a).deflate(v.col(0)).unwrap();
        let vals = sym_eigvals(&materialize(&d).unwrap());
        let mut expect: Vec<f64> = vec![3.0, 2.0, 1.0, 0.5, 0.25, 0.0];
        expect.sort_by(|a, b| b.total_cmp(a));
        for (x, y) in vals.iter().zip(&expect) {
            assert!((x - y).abs() <= 1e-12, "{vals:?}");
        }
    }

    #[test]
    fn deflating_an_orthogonal_vector_keeps_leading_pair() {
        let a = SymMatrix::from_diag(&[5.0, 2.0, 1.0]);
        let d = DeflatedOperator::new(&a).deflate(&[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(d.apply_vec(&[1.0, 0.0, 0.0]).unwrap(), vec![5.0, 0.0, 0.0]);
    }

    #[test]
    fn two_deflations_match_explicit_products() {
        let p = 7;
        let g = gaussian_matrix(&mut seeded(4), p, p);
        let a = SymMatrix::gram(&g, 1.0);
        let u1 = gaussian_vec(&mut seeded(5), p);
        let u2 = gaussian_vec(&mut seeded(6), p);
        let d = DeflatedOperator::new(&a).deflate(&u1).unwrap().deflate(&u2).unwrap();
        let proj = |u: &[f64]| {
            let n = norm2(u);
            let uu = Matrix::from_fn(p, p, |i, j| u[i] * u[j] / (n * n));
            Matrix::identity(p).sub(&uu).unwrap()
        };
        let (b1, b2) = (proj(&u1), proj(&u2));
        let a1 = b1.matmul(a.as_matrix()).unwrap().matmul(&b1).unwrap();
        let a2 = b2.matmul(&a1).unwrap().matmul(&b2).unwrap();
        let lazy = materialize(&d).unwrap();
        assert!(lazy.as_matrix().sub(&a2).unwrap().frobenius_norm() <= 1e-12 * a2.frobenius_norm());
    }
}
