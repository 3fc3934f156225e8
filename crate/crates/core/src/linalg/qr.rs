use super::matrix::{dot, norm2, Matrix};
use crate::error::{Error, Result};

/// Thin QR factors with the `R(i,i) ≥ 0` sign convention.
#[derive(Debug, Clone)]
pub struct QrFactors {
    pub q: Matrix,
    pub r: Matrix,
}

/// Relative threshold on `|R(i,i)|` below which the input is rank deficient.
pub const RANK_TOL: f64 = 1e-14;

/// Householder QR of a tall `p×m` matrix.
///
/// Reflectors are stored as `v` with `v[0] = 1` and `τ = (β − α)/β`. When a
/// pivot entry is exactly zero this gives `τ = 1` exactly, so rows that are
/// structurally zero in the input stay exactly zero in `Q`. Truncated
/// iterates with disjoint supports therefore come back exactly sparse.
///
/// The factorization is unique for full-rank input: every `R(i,i)` is made
/// non-negative by flipping the matching column of `Q` and row of `R`.
pub fn householder_qr(a: &Matrix) -> Result<QrFactors> {
    let (p, m) = a.shape();
    if p < m {
        return Err(Error::mismatch("householder_qr", format!("rows >= {m}"), p));
    }
    let input_norm = a.frobenius_norm();
    let mut w = a.clone();
    let mut taus = vec![0.0; m];

    for j in 0..m {
        let (alpha, tail_norm) = {
            let c = w.col(j);
            (c[j], norm2(&c[j + 1..]))
        };
        let (beta, tau) = if tail_norm == 0.0 {
            (alpha, 0.0)
        } else {
            let sign = if alpha < 0.0 { -1.0 } else { 1.0 };
            let beta = -sign * alpha.hypot(tail_norm);
            let tau = (beta - alpha) / beta;
            let scale = 1.0 / (alpha - beta);
            let c = w.col_mut(j);
            for x in &mut c[j + 1..] {
                *x *= scale;
            }
            (beta, tau)
        };
        if beta.abs() < RANK_TOL * input_norm || input_norm == 0.0 {
            return Err(Error::RankDeficient { column: j });
        }
        w[(j, j)] = beta;
        taus[j] = tau;

        if tau != 0.0 {
            // Apply H_j = I − τ v vᵀ to the trailing columns.
            let v_tail: Vec<f64> = w.col(j)[j + 1..].to_vec();
            for c in j + 1..m {
                let col = w.col_mut(c);
                let s = col[j] + dot(&v_tail, &col[j + 1..]);
                if s == 0.0 {
                    continue;
                }
                let ts = tau * s;
                col[j] -= ts;
                for (x, v) in col[j + 1..].iter_mut().zip(&v_tail) {
                    *x -= ts * v;
                }
            }
        }
    }

    let mut r = Matrix::zeros(m, m);
    for j in 0..m {
        for i in 0..=j {
            r[(i, j)] = w[(i, j)];
        }
    }

    // Accumulate Q = H_0 H_1 … H_{m-1} applied to the leading identity columns.
    let mut q = Matrix::eye(p, m);
    for j in (0..m).rev() {
        let tau = taus[j];
        if tau == 0.0 {
            continue;
        }
        let v_tail: Vec<f64> = w.col(j)[j + 1..].to_vec();
        for c in j..m {
            let col = q.col_mut(c);
            let s = col[j] + dot(&v_tail, &col[j + 1..]);
            if s == 0.0 {
                continue;
            }
            let ts = tau * s;
            col[j] -= ts;
            for (x, v) in col[j + 1..].iter_mut().zip(&v_tail) {
                *x -= ts * v;
            }
        }
    }

    for j in 0..m {
        if r[(j, j)] < 0.0 {
            for c in j..m {
                r[(j, c)] = -r[(j, c)];
            }
            for x in q.col_mut(j) {
                *x = -*x;
            }
        }
    }

    Ok(QrFactors { q, r })
}
