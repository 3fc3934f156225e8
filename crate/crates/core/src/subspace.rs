//! Distances between equal-dimensional subspaces.
//!
//! All distances go through the `m×m` matrix `XᵀY`, so projectors `XXᵀ`
//! and orthogonal complements are never formed for large `p`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{householder_qr, norm2, svd_small, Matrix};

/// Tolerance for the orthonormal flavor of [`Basis`].
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// Tolerance on unit column norms for the sparse-unit flavor.
pub const UNIT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    /// `‖QᵀQ − I‖_F ≤ 1e-10·√m`.
    Orthonormal,
    /// Unit-norm columns, not necessarily orthogonal.
    SparseUnit,
}

/// A `p×m` matrix whose columns span (or approximately span) a subspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Basis {
    cols: Matrix,
    kind: BasisKind,
}

impl Basis {
    /// Wraps orthonormal columns, checking the orthonormality tolerance.
    pub fn orthonormal(cols: Matrix) -> Result<Self> {
        let m = cols.cols();
        if cols.rows() < m {
            return Err(Error::mismatch("Basis::orthonormal", format!("p >= {m}"), cols.rows()));
        }
        let defect = orthogonality_defect(&cols);
        if defect > ORTHONORMAL_TOL * (m as f64).sqrt() {
            return Err(Error::InvalidArgument(format!(
                "columns are not orthonormal (‖QᵀQ−I‖_F = {defect:.3e})"
            )));
        }
        Ok(Self {
            cols,
            kind: BasisKind::Orthonormal,
        })
    }

    /// Wraps unit-norm columns that need not be orthogonal.
    pub fn sparse_unit(cols: Matrix) -> Result<Self> {
        for (j, c) in cols.columns().enumerate() {
            let n = norm2(c);
            if (n - 1.0).abs() > UNIT_TOL {
                return Err(Error::InvalidArgument(format!("column {j} has norm {n}, expected 1")));
            }
        }
        Ok(Self {
            cols,
            kind: BasisKind::SparseUnit,
        })
    }

    /// Orthonormal basis for the span of arbitrary full-rank columns.
    pub fn from_span(cols: &Matrix) -> Result<Self> {
        let q = householder_qr(cols)?.q;
        Ok(Self {
            cols: q,
            kind: BasisKind::Orthonormal,
        })
    }

    pub fn from_parts_unchecked(cols: Matrix, kind: BasisKind) -> Self {
        Self { cols, kind }
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.cols.rows()
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.cols.cols()
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn matrix(&self) -> &Matrix {
        &self.cols
    }

    pub fn into_matrix(self) -> Matrix {
        self.cols
    }

    pub fn col(&self, j: usize) -> &[f64] {
        self.cols.col(j)
    }

    /// Orthonormal basis for the same span; identity for orthonormal bases.
    pub fn orthonormalized(&self) -> Result<Basis> {
        match self.kind {
            BasisKind::Orthonormal => Ok(self.clone()),
            BasisKind::SparseUnit => Basis::from_span(&self.cols),
        }
    }

    /// Leading `i` columns as a basis of the same flavor.
    pub fn leading(&self, i: usize) -> Basis {
        Basis {
            cols: self.cols.leading_columns(i),
            kind: self.kind,
        }
    }

    /// Number of nonzero entries per column.
    pub fn column_nnz(&self) -> Vec<usize> {
        self.cols
            .columns()
            .map(|c| c.iter().filter(|v| **v != 0.0).count())
            .collect()
    }

    /// Indices of the nonzero entries of column `j`.
    pub fn column_support(&self, j: usize) -> Vec<usize> {
        self.cols
            .col(j)
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Canonical angles, ascending, each in `[0, π/2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleSpectrum {
    pub thetas: Vec<f64>,
}

impl AngleSpectrum {
    pub fn largest(&self) -> f64 {
        self.thetas.last().copied().unwrap_or(0.0)
    }
}

fn check_pair(x: &Basis, y: &Basis, op: &'static str) -> Result<()> {
    if x.p() != y.p() || x.m() != y.m() {
        return Err(Error::mismatch(
            op,
            format!("{}x{}", x.p(), x.m()),
            format!("{}x{}", y.p(), y.m()),
        ));
    }
    Ok(())
}

/// Singular values of `XᵀY`, clamped to `[0, 1]`, descending.
fn cosines(x: &Basis, y: &Basis) -> Result<Vec<f64>> {
    let xty = x.matrix().tr_matmul(y.matrix())?;
    Ok(svd_small(&xty).s.into_iter().map(|s| s.clamp(0.0, 1.0)).collect())
}

pub fn canonical_angles(x: &Basis, y: &Basis) -> Result<AngleSpectrum> {
    check_pair(x, y, "canonical_angles")?;
    let mut thetas: Vec<f64> = cosines(x, y)?.into_iter().map(f64::acos).collect();
    thetas.sort_by(f64::total_cmp);
    Ok(AngleSpectrum { thetas })
}

/// `‖sin Θ(X, Y)‖_F = √(m − ‖XᵀY‖_F²)`, clamped at zero.
///
/// The identity uses the subspace dimension `m`. It agrees with
/// `(1/√2)‖XXᵀ − YYᵀ‖_F` for orthonormal bases. Near zero the difference
/// cancels, so small distances are recomputed as `‖Y − XXᵀY‖_F`, which is the
/// same quantity for orthonormal bases.
pub fn sin_theta_fro(x: &Basis, y: &Basis) -> Result<f64> {
    check_pair(x, y, "sin_theta_fro")?;
    let xty = x.matrix().tr_matmul(y.matrix())?;
    let v = x.m() as f64 - xty.frobenius_norm_sq();
    if v > 1e-2 {
        return Ok(v.sqrt());
    }
    let resid = y.matrix().sub(&x.matrix().matmul(&xty)?)?;
    Ok(resid.frobenius_norm())
}

/// `‖sin Θ(X, Y)‖_2`, the sine of the largest canonical angle.
///
/// Computed as `√(1 − σ_min(XᵀY)²)`; when the angle is small this loses
/// accuracy, so the complement route `‖(I − XXᵀ)Y‖₂` is used instead.
pub fn sin_theta_two(x: &Basis, y: &Basis) -> Result<f64> {
    check_pair(x, y, "sin_theta_two")?;
    let cos = cosines(x, y)?;
    let smallest = cos.last().copied().unwrap_or(1.0);
    let via_cos = (1.0 - smallest * smallest).max(0.0).sqrt();
    if via_cos > 0.1 {
        return Ok(via_cos.min(1.0));
    }
    Ok(complement_norm(x, y)?.min(1.0))
}

/// `‖(I − XXᵀ)Y‖₂`, which equals `‖X^⊥ᵀY‖₂`.
fn complement_norm(x: &Basis, y: &Basis) -> Result<f64> {
    let xty = x.matrix().tr_matmul(y.matrix())?;
    let proj = x.matrix().matmul(&xty)?;
    let resid = y.matrix().sub(&proj)?;
    Ok(svd_small(&resid).s[0])
}

/// `‖I − QᵀQ‖_F²`.
pub fn orthogonality_loss(q: &Basis) -> f64 {
    orthogonality_loss_of(q.matrix())
}

pub(crate) fn orthogonality_loss_of(q: &Matrix) -> f64 {
    let defect = orthogonality_defect(q);
    defect * defect
}

fn orthogonality_defect(q: &Matrix) -> f64 {
    let g = q.tr_matmul(q).expect("same rows");
    let m = q.cols();
    let mut ss = 0.0;
    for j in 0..m {
        for i in 0..m {
            let d = if i == j { 1.0 - g[(i, j)] } else { -g[(i, j)] };
            ss += d * d;
        }
    }
    ss.sqrt()
}

/// `|⟨x_i, y_i⟩|` for each column pair.
pub fn column_inner_products(x: &Matrix, y: &Matrix) -> Result<Vec<f64>> {
    if x.shape() != y.shape() {
        return Err(Error::mismatch(
            "column_inner_products",
            format!("{:?}", x.shape()),
            format!("{:?}", y.shape()),
        ));
    }
    Ok(x.columns()
        .zip(y.columns())
        .map(|(a, b)| crate::linalg::dot(a, b).abs())
        .collect())
}
