use super::matrix::{dot, norm2, Matrix};

/// Thin singular value decomposition `M = U·diag(S)·Vᵀ`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    /// Non-negative, non-increasing.
    pub s: Vec<f64>,
    pub v: Matrix,
}

impl Svd {
    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for (j, &s) in self.s.iter().enumerate() {
            us.col_mut(j).iter_mut().for_each(|x| *x *= s);
        }
        us.matmul_tr(&self.v).expect("factor shapes agree")
    }
}

const MAX_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi SVD.
///
/// Rotates column pairs of a working copy until all pairs are orthogonal to
/// working precision. Relative accuracy is high for every singular value,
/// which the canonical-angle code relies on when σ is close to 1.
pub fn svd_small(m: &Matrix) -> Svd {
    if m.rows() < m.cols() {
        let t = svd_small(&m.transpose());
        return Svd { u: t.v, s: t.s, v: t.u };
    }
    let (rows, n) = m.shape();
    let mut w = m.clone();
    let mut v = Matrix::identity(n);
    let eps = f64::EPSILON;

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = dot(w.col(i), w.col(i));
                let beta = dot(w.col(j), w.col(j));
                let gamma = dot(w.col(i), w.col(j));
                if gamma == 0.0 || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + zeta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = c * t;
                rotate(&mut w, i, j, c, s);
                rotate(&mut v, i, j, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut s: Vec<f64> = w.columns().map(norm2).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    let w = w.select_columns(&order);
    let v = v.select_columns(&order);
    s = order.iter().map(|&i| s[i]).collect();

    let scale = s.first().copied().unwrap_or(0.0);
    let mut u = Matrix::zeros(rows, n);
    let mut filled = Vec::with_capacity(n);
    for j in 0..n {
        if s[j] > eps * scale * (rows as f64) && s[j] > 0.0 {
            let col: Vec<f64> = w.col(j).iter().map(|x| x / s[j]).collect();
            u.set_col(j, &col);
            filled.push(j);
        } else {
            s[j] = if s[j] > 0.0 { s[j] } else { 0.0 };
        }
    }
    complete_orthonormal(&mut u, &filled);
    Svd { u, s, v }
}

fn rotate(m: &mut Matrix, i: usize, j: usize, c: f64, s: f64) {
    let rows = m.rows();
    for k in 0..rows {
        let a = m[(k, i)];
        let b = m[(k, j)];
        m[(k, i)] = c * a - s * b;
        m[(k, j)] = s * a + c * b;
    }
}

/// Fills the columns of `u` not listed in `filled` with unit vectors
/// orthogonal to everything already present.
pub(crate) fn complete_orthonormal(u: &mut Matrix, filled: &[usize]) {
    let (rows, n) = u.shape();
    let mut have: Vec<usize> = filled.to_vec();
    let mut basis_idx = 0;
    for j in 0..n {
        if filled.contains(&j) {
            continue;
        }
        loop {
            assert!(basis_idx < rows, "cannot complete an orthonormal set");
            let mut cand = vec![0.0; rows];
            cand[basis_idx] = 1.0;
            basis_idx += 1;
            // Two passes of Gram–Schmidt for numerical orthogonality.
            for _ in 0..2 {
                for &h in &have {
                    let proj = dot(u.col(h), &cand);
                    for (c, x) in cand.iter_mut().zip(u.col(h)) {
                        *c -= proj * x;
                    }
                }
            }
            let nrm = norm2(&cand);
            if nrm > 1e-8 {
                cand.iter_mut().for_each(|x| *x /= nrm);
                u.set_col(j, &cand);
                have.push(j);
                break;
            }
        }
    }
}
