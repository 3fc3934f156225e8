use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, cholesky_upper, householder_qr, Matrix, SymMatrix};

/// Either a data matrix `X` (`n×p`) or the matrix `A = XᵀX`.
#[derive(Debug, Clone, Copy)]
pub enum DataOrCov<'a> {
    Data(&'a Matrix),
    Cov(&'a SymMatrix),
}

impl DataOrCov<'_> {
    pub fn p(&self) -> usize {
        match self {
            DataOrCov::Data(x) => x.cols(),
            DataOrCov::Cov(a) => a.dim(),
        }
    }

    /// `trace(XᵀX)` or `trace(A)`.
    pub fn total_variance(&self) -> f64 {
        match self {
            DataOrCov::Data(x) => x.frobenius_norm_sq(),
            DataOrCov::Cov(a) => a.trace(),
        }
    }

    /// `VᵀAV`.
    fn projected(&self, v: &Matrix) -> Result<SymMatrix> {
        match self {
            DataOrCov::Data(x) => {
                let y = x.matmul(v)?;
                SymMatrix::new(y.tr_matmul(&y)?)
            }
            DataOrCov::Cov(a) => SymMatrix::new(v.tr_matmul(&a.as_matrix().matmul(v)?)?),
        }
    }
}

fn check_loadings(src: &DataOrCov<'_>, v: &Matrix) -> Result<()> {
    if v.rows() != src.p() {
        return Err(Error::mismatch("loadings", src.p(), v.rows()));
    }
    if let Some(j) = v.columns().position(|c| c.iter().all(|x| *x == 0.0)) {
        return Err(Error::Degenerate(format!("loading column {j} is zero")));
    }
    Ok(())
}

/// `Σ_j R_jj²` with `R` from `qr(XV)` (data) or `chol(VᵀAV)` (covariance).
pub fn adjusted_variance(src: DataOrCov<'_>, v: &Matrix) -> Result<f64> {
    check_loadings(&src, v)?;
    let r = match src {
        DataOrCov::Data(x) => {
            let y = x.matmul(v)?;
            match householder_qr(&y) {
                Ok(f) => f.r,
                Err(Error::RankDeficient { column }) => {
                    return Err(Error::Degenerate(format!(
                        "component scores are linearly dependent at column {column}"
                    )))
                }
                Err(e) => return Err(e),
            }
        }
        DataOrCov::Cov(_) => match cholesky_upper(&src.projected(v)?) {
            Ok(r) => r,
            Err(Error::NotPositiveDefinite { pivot }) => {
                return Err(Error::Degenerate(format!(
                    "VᵀAV is not positive definite at pivot {pivot}"
                )))
            }
            Err(e) => return Err(e),
        },
    };
    Ok(r.diag().iter().map(|d| d * d).sum())
}

/// Adjusted variance as a fraction of the total variance.
pub fn prop_adjusted_variance(src: DataOrCov<'_>, v: &Matrix) -> Result<f64> {
    Ok(adjusted_variance(src, v)? / src.total_variance())
}

/// `trace(X_mᵀX_m) / trace(XᵀX)` for `X_m = XV(VᵀV)⁻¹Vᵀ`.
///
/// Evaluated as `trace((VᵀV)⁻¹·VᵀAV) / trace(A)`.
pub fn cpev(src: DataOrCov<'_>, v: &Matrix) -> Result<f64> {
    check_loadings(&src, v)?;
    let gram = SymMatrix::new(v.tr_matmul(v)?)?;
    let r = match cholesky_upper(&gram) {
        Ok(r) => r,
        Err(Error::NotPositiveDefinite { pivot }) => return Err(Error::RankDeficient { column: pivot }),
        Err(e) => return Err(e),
    };
    let vav = src.projected(v)?;
    let solved = cholesky_solve(&r, vav.as_matrix());
    Ok(solved.trace() / src.total_variance())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sym_eig;
    use crate::rng::{gaussian_matrix, seeded};

    #[test]
    fn adjvar_of_eigenvectors_is_eigenvalue_sum() {
        let x = gaussian_matrix(&mut seeded(1), 30, 6);
        let a = SymMatrix::gram(&x, 1.0);
        let eig = sym_eig(&a);
        let v = eig.vectors.leading_columns(3);
        let expect: f64 = eig.values[..3].iter().sum();
        let cov = adjusted_variance(DataOrCov::Cov(&a), &v).unwrap();
        let data = adjusted_variance(DataOrCov::Data(&x), &v).unwrap();
        assert!((cov - expect).abs() <= 1e-10 * expect);
        assert!((data - expect).abs() <= 1e-10 * expect);
        let c = cpev(DataOrCov::Cov(&a), &v).unwrap();
        assert!((c - expect / a.trace()).abs() <= 1e-12);
    }

    #[test]
    fn duplicated_loading_is_degenerate() {
        let a = SymMatrix::from_diag(&[3.0, 2.0, 1.0]);
        let v = Matrix::from_rows(&[[1.0, 1.0], [0.0, 0.0], [0.0, 0.0]]).unwrap();
        assert!(matches!(
            adjusted_variance(DataOrCov::Cov(&a), &v),
            Err(Error::Degenerate(_))
        ));
        assert!(cpev(DataOrCov::Cov(&a), &v).is_err());
    }

    #[test]
    fn cpev_examples() {
        let a = SymMatrix::from_diag(&[4.0, 3.0, 2.0, 1.0]);
        let v = Matrix::eye(4, 2);
        assert!((cpev(DataOrCov::Cov(&a), &v).unwrap() - 0.7).abs() < 1e-15);
        let full = Matrix::identity(4);
        assert!((cpev(DataOrCov::Cov(&a), &full).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn data_and_covariance_forms_agree_on_sparse_loadings() {
        let x = gaussian_matrix(&mut seeded(2), 40, 8);
        let a = SymMatrix::gram(&x, 1.0);
        let mut v = gaussian_matrix(&mut seeded(3), 8, 3);
        v[(0, 0)] = 0.0;
        v[(5, 1)] = 0.0;
        let d = adjusted_variance(DataOrCov::Data(&x), &v).unwrap();
        let c = adjusted_variance(DataOrCov::Cov(&a), &v).unwrap();
        assert!((d - c).abs() <= 1e-10 * c);
        let cd = cpev(DataOrCov::Data(&x), &v).unwrap();
        let cc = cpev(DataOrCov::Cov(&a), &v).unwrap();
        assert!((cd - cc).abs() <= 1e-12);
    }

    #[test]
    fn eigenbasis_cpev_is_maximal() {
        let x = gaussian_matrix(&mut seeded(4), 20, 6);
        let a = SymMatrix::gram(&x, 1.0);
        let top = cpev(DataOrCov::Cov(&a), &sym_eig(&a).vectors.leading_columns(2)).unwrap();
        let mut rng = seeded(5);
        for _ in 0..1000 {
            let v = gaussian_matrix(&mut rng, 6, 2);
            assert!(cpev(DataOrCov::Cov(&a), &v).unwrap() <= top + 1e-12);
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]

        #[test]
        fn adjvar_bounded_by_trace_and_forms_agree(seed in proptest::prelude::any::<u64>(), m in 1usize..4) {
            let x = gaussian_matrix(&mut seeded(seed), 25, 5);
            let a = SymMatrix::gram(&x, 1.0);
            let v = crate::Basis::from_span(&gaussian_matrix(&mut seeded(seed ^ 1), 5, m)).unwrap();
            let c = adjusted_variance(DataOrCov::Cov(&a), v.matrix()).unwrap();
            let d = adjusted_variance(DataOrCov::Data(&x), v.matrix()).unwrap();
            proptest::prop_assert!(c <= a.trace() * (1.0 + 1e-12));
            proptest::prop_assert!((c - d).abs() <= 1e-10 * c);
        }
    }
}
