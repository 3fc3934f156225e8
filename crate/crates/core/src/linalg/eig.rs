use super::matrix::Matrix;
use super::sym::SymMatrix;

/// Symmetric eigendecomposition with eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, column `i` pairs with `values[i]`.
    pub vectors: Matrix,
}

/// Full symmetric eigendecomposition.
///
/// Householder tridiagonalization followed by implicit-shift QL, the
/// classical tred2/tql2 pair. `O(p³)`.
pub fn sym_eig(a: &SymMatrix) -> SymEigen {
    let n = a.dim();
    let mut z = a.as_matrix().clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut z, &mut d, &mut e, true);
    ql_implicit(&mut d, &mut e, Some(&mut z));
    sort_descending(d, Some(z))
}

/// Eigenvalues only, descending. Skips eigenvector accumulation.
pub fn sym_eigvals(a: &SymMatrix) -> Vec<f64> {
    let n = a.dim();
    let mut z = a.as_matrix().clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut z, &mut d, &mut e, false);
    ql_implicit(&mut d, &mut e, None);
    sort_descending(d, None).values
}

fn sort_descending(d: Vec<f64>, z: Option<Matrix>) -> SymEigen {
    let n = d.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].total_cmp(&d[i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = match z {
        Some(z) => z.select_columns(&order),
        None => Matrix::zeros(1, 1),
    };
    SymEigen { values, vectors }
}

// Householder reduction to tridiagonal form (EISPACK tred2). On exit `d`
// holds the diagonal, `e[1..]` the sub-diagonal and, when `vectors` is set,
// `z` the accumulated orthogonal transformation.
fn tridiagonalize(z: &mut Matrix, d: &mut [f64], e: &mut [f64], vectors: bool) {
    let n = d.len();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| z.row(i)).collect();
    for j in 0..n {
        d[j] = v[n - 1][j];
    }

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
                v[j][i] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }

            for j in 0..i {
                f = d[j];
                v[j][i] = f;
                g = e[j] + v[j][j] * f;
                for k in j + 1..i {
                    g += v[k][j] * d[k];
                    e[k] += v[k][j] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k][j] -= f * e[k] + g * d[k];
                }
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
            }
        }
        d[i] = h;
    }

    if vectors {
        for i in 0..n.saturating_sub(1) {
            v[n - 1][i] = v[i][i];
            v[i][i] = 1.0;
            let h = d[i + 1];
            if h != 0.0 {
                for k in 0..=i {
                    d[k] = v[k][i + 1] / h;
                }
                for j in 0..=i {
                    let mut g = 0.0;
                    for k in 0..=i {
                        g += v[k][i + 1] * v[k][j];
                    }
                    for k in 0..=i {
                        v[k][j] -= g * d[k];
                    }
                }
            }
            for k in 0..=i {
                v[k][i + 1] = 0.0;
            }
        }
        for j in 0..n {
            d[j] = v[n - 1][j];
            v[n - 1][j] = 0.0;
        }
        v[n - 1][n - 1] = 1.0;
        *z = Matrix::from_fn(n, n, |i, j| v[i][j]);
    } else {
        // The reduced diagonal is left in place on v's diagonal.
        for j in 0..n {
            d[j] = v[j][j];
        }
    }
    e.rotate_left(1);
    e[n - 1] = 0.0;
}

// Implicit QL iterations on a symmetric tridiagonal matrix (EISPACK tql2).
fn ql_implicit(d: &mut [f64], e: &mut [f64], mut z: Option<&mut Matrix>) {
    let n = d.len();
    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;

    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m == n {
            m = n - 1;
        }

        if m > l {
            loop {
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(z) = z.as_deref_mut() {
                        let (lo, hi) = (i, i + 1);
                        for k in 0..n {
                            let zk1 = z[(k, hi)];
                            let zk = z[(k, lo)];
                            z[(k, hi)] = s * zk + c * zk1;
                            z[(k, lo)] = c * zk - s * zk1;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;

                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::householder_qr;
    use crate::rng::{gaussian_matrix, seeded};

    fn residual(a: &SymMatrix, eig: &SymEigen) -> f64 {
        let av = a.as_matrix().matmul(&eig.vectors).unwrap();
        let vl = eig.vectors.matmul(&Matrix::from_diag(&eig.values)).unwrap();
        av.sub(&vl).unwrap().frobenius_norm()
    }

    #[test]
    fn diagonal_input() {
        let a = SymMatrix::from_diag(&[3.0, 4.0, 1.0]);
        let eig = sym_eig(&a);
        assert_eq!(eig.values, vec![4.0, 3.0, 1.0]);
        assert!((eig.vectors[(1, 0)].abs() - 1.0).abs() < 1e-15);
        assert!((eig.vectors[(0, 1)].abs() - 1.0).abs() < 1e-15);
        assert!((eig.vectors[(2, 2)].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn swap_matrix() {
        let a = SymMatrix::new(Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap()).unwrap();
        let eig = sym_eig(&a);
        assert!((eig.values[0] - 1.0).abs() < 1e-15);
        assert!((eig.values[1] + 1.0).abs() < 1e-15);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((eig.vectors[(0, 0)].abs() - s).abs() < 1e-14);
        assert!((eig.vectors[(0, 0)] - eig.vectors[(1, 0)]).abs() < 1e-14);
        assert!((eig.vectors[(0, 1)] + eig.vectors[(1, 1)]).abs() < 1e-14);
    }

    #[test]
    fn random_psd_reconstruction() {
        let mut rng = seeded(11);
        let g = gaussian_matrix(&mut rng, 12, 12);
        let a = SymMatrix::new(g.tr_matmul(&g).unwrap()).unwrap();
        let eig = sym_eig(&a);
        let rec = eig
            .vectors
            .matmul(&Matrix::from_diag(&eig.values))
            .unwrap()
            .matmul_tr(&eig.vectors)
            .unwrap();
        assert!(rec.sub(a.as_matrix()).unwrap().frobenius_norm() <= 1e-9);
        assert!(residual(&a, &eig) <= 1e-10 * eig.values[0]);
        assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
        let vtv = eig.vectors.tr_matmul(&eig.vectors).unwrap();
        assert!(vtv.sub(&Matrix::identity(12)).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn recovers_planted_spectrum() {
        let mut rng = seeded(5);
        let v = householder_qr(&gaussian_matrix(&mut rng, 9, 9)).unwrap().q;
        let lambda = [5.0, 3.5, 3.0, 1.0, 0.5, 0.25, -0.5, -1.0, -2.0];
        let a = SymMatrix::from_eigen(&v, &lambda).unwrap();
        let eig = sym_eig(&a);
        for (x, y) in eig.values.iter().zip(lambda) {
            assert!((x - y).abs() <= 1e-9);
        }
        let vals = sym_eigvals(&a);
        for (x, y) in vals.iter().zip(lambda) {
            assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn one_by_one() {
        let a = SymMatrix::from_diag(&[-2.5]);
        let eig = sym_eig(&a);
        assert_eq!(eig.values, vec![-2.5]);
        assert_eq!(eig.vectors[(0, 0)].abs(), 1.0);
    }
}
