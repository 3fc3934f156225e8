use super::matrix::Matrix;
use super::sym::SymMatrix;
use crate::error::{Error, Result};

/// Upper-triangular `R` with `RᵀR = A`.
pub fn cholesky_upper(a: &SymMatrix) -> Result<Matrix> {
    let n = a.dim();
    let mut r = Matrix::zeros(n, n);
    let scale = a.as_matrix().max_abs().max(f64::MIN_POSITIVE);
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d -= r[(k, j)] * r[(k, j)];
        }
        if !(d > 1e-14 * scale) {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let rjj = d.sqrt();
        r[(j, j)] = rjj;
        for i in j + 1..n {
            let mut s = a.get(j, i);
            for k in 0..j {
                s -= r[(k, j)] * r[(k, i)];
            }
            r[(j, i)] = s / rjj;
        }
    }
    Ok(r)
}

/// Solves `A X = B` given the upper Cholesky factor of `A`.
pub fn cholesky_solve(r: &Matrix, b: &Matrix) -> Matrix {
    let n = r.rows();
    let mut x = b.clone();
    for c in 0..b.cols() {
        let col = x.col_mut(c);
        // Rᵀ y = b
        for i in 0..n {
            let mut s = col[i];
            for k in 0..i {
                s -= r[(k, i)] * col[k];
            }
            col[i] = s / r[(i, i)];
        }
        // R x = y
        for i in (0..n).rev() {
            let mut s = col[i];
            for k in i + 1..n {
                s -= r[(i, k)] * col[k];
            }
            col[i] = s / r[(i, i)];
        }
    }
    x
}
