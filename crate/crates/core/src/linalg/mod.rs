//! Dense kernels: products, Householder QR, Jacobi SVD, symmetric
//! eigendecomposition, Cholesky and norms.

mod chol;
mod eig;
mod matrix;
mod qr;
mod svd;
mod sym;

pub use chol::{cholesky_solve, cholesky_upper};
pub use eig::{sym_eig, sym_eigvals, SymEigen};
pub use matrix::{axpy, dot, norm2, Matrix};
pub use qr::{householder_qr, QrFactors, RANK_TOL};
pub use svd::{svd_small, Svd};
pub use sym::SymMatrix;

/// Largest singular value.
///
/// Computed as the square root of the top eigenvalue of the smaller Gram
/// matrix, so a `p×m` argument costs `O(p·m² + m³)`.
pub fn spectral_norm(m: &Matrix) -> f64 {
    let gram = if m.rows() >= m.cols() {
        m.tr_matmul(m)
    } else {
        m.matmul_tr(m)
    }
    .expect("gram shapes agree");
    let top = sym_eigvals(&SymMatrix::new(gram).expect("gram is square"))[0];
    top.max(0.0).sqrt()
}

/// Spectral norm of a symmetric matrix, `max |λ|`.
pub fn sym_spectral_norm(a: &SymMatrix) -> f64 {
    let vals = sym_eigvals(a);
    vals.first()
        .copied()
        .unwrap_or(0.0)
        .abs()
        .max(vals.last().copied().unwrap_or(0.0).abs())
}
