use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{cholesky_upper, Matrix, SymMatrix};
use crate::rng::{derive_seed, gaussian_matrix, seeded};
use crate::subspace::Basis;
use crate::truncation::SupportSet;

pub const GRID: usize = 20;
pub const BLOCK: usize = 10;
pub const SIGNAL_DIM: usize = GRID * GRID;
pub const DEFAULT_SIGNALS: usize = 250;
/// Noise standard deviation relative to the unit block amplitude.
pub const DEFAULT_NOISE_SIGMA: f64 = 0.1;

/// Top-left `(row, col)` corner of each dictionary block on the grid.
pub const BLOCK_CORNERS: [(usize, usize); 3] = [(0, 0), (0, 10), (10, 5)];

/// Covariance of the mixing coefficients `[u₁, u₂, u₃]`.
pub const COEFFICIENT_COV: [[f64; 3]; 3] = [[1.0, 0.0, 0.5], [0.0, 1.0, 0.5], [0.5, 0.5, 1.0]];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DenoisingData {
    /// `n × 400` signals, one per row.
    pub data: Matrix,
    /// Unit-norm dictionary elements, `400 × 3`.
    pub truth: Basis,
    pub supports: Vec<SupportSet>,
}

/// Grid pixel `(r, c)` as a signal index.
pub fn pixel(r: usize, c: usize) -> usize {
    r * GRID + c
}

pub fn block_support(corner: (usize, usize)) -> SupportSet {
    let mut idx = Vec::with_capacity(BLOCK * BLOCK);
    for r in corner.0..corner.0 + BLOCK {
        for c in corner.1..corner.1 + BLOCK {
            idx.push(pixel(r, c));
        }
    }
    SupportSet::new(idx, SIGNAL_DIM).expect("blocks lie inside the grid")
}

/// Signals `x = Σ u_i·V^i + ε` with unit-amplitude blocks `V^i` and
/// `ε ~ N(0, σ² I)`.
pub fn denoising_signals(n: usize, noise_sigma: f64, seed: u64) -> Result<DenoisingData> {
    let supports: Vec<SupportSet> = BLOCK_CORNERS.iter().map(|&c| block_support(c)).collect();
    let mut dict = Matrix::zeros(SIGNAL_DIM, 3);
    for (j, s) in supports.iter().enumerate() {
        for &i in s.indices() {
            dict[(i, j)] = 1.0;
        }
    }
    let cov = SymMatrix::new(Matrix::from_rows(&COEFFICIENT_COV)?)?;
    let r = cholesky_upper(&cov)?;
    // Rows of Z·R have covariance RᵀR.
    let z = gaussian_matrix(&mut seeded(derive_seed(seed, 0, 0)), n, 3);
    let coeffs = z.matmul(&r)?;
    let noise = gaussian_matrix(&mut seeded(derive_seed(seed, 1, 0)), n, SIGNAL_DIM);
    let data = coeffs.matmul_tr(&dict)?.add(&noise.scale(noise_sigma))?;
    let truth = Basis::orthonormal(dict.scale(1.0 / BLOCK as f64))?;
    Ok(DenoisingData { data, truth, supports })
}

/// A length-400 vector laid out as 20 rows of 20 grid values.
pub fn to_grid(v: &[f64]) -> Vec<Vec<f64>> {
    v.chunks(GRID).map(<[f64]>::to_vec).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sym_eig;
    use crate::subspace::{orthogonality_loss, sin_theta_fro};

    #[test]
    fn dictionary_is_orthonormal_with_disjoint_blocks() {
        let d = denoising_signals(5, 0.1, 1).unwrap();
        assert!(orthogonality_loss(&d.truth) < 1e-28);
        assert_eq!(d.truth.column_nnz(), vec![100, 100, 100]);
        for i in 0..3 {
            for j in i + 1..3 {
                assert_eq!(d.supports[i].intersection_len(&d.supports[j]), 0);
            }
        }
        assert_eq!(d.data.shape(), (5, 400));
    }

    #[test]
    fn noiseless_covariance_spans_dictionary() {
        let d = denoising_signals(2000, 0.0, 2).unwrap();
        let cov = SymMatrix::gram(&d.data, 1.0 / 2000.0);
        let top = Basis::orthonormal(sym_eig(&cov).vectors.leading_columns(3)).unwrap();
        assert!(sin_theta_fro(&top, &d.truth).unwrap() < 1e-8);
    }

    #[test]
    fn coefficient_covariance_matches() {
        let n = 20_000;
        let d = denoising_signals(n, 0.0, 3).unwrap();
        // Pixel (0,0) carries u₁, (0,10) carries u₂, (10,5) carries u₃.
        let u: Vec<Vec<f64>> = BLOCK_CORNERS
            .iter()
            .map(|&(r, c)| (0..n).map(|t| d.data[(t, pixel(r, c))]).collect())
            .collect();
        for i in 0..3 {
            for j in 0..3 {
                let c: f64 = u[i].iter().zip(&u[j]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
                assert!((c - COEFFICIENT_COV[i][j]).abs() < 0.05, "{i}{j}: {c}");
            }
        }
    }

    #[test]
    fn grid_layout() {
        let g = to_grid(&(0..400).map(|x| x as f64).collect::<Vec<_>>());
        assert_eq!(g.len(), 20);
        assert_eq!(g[3][7], pixel(3, 7) as f64);
    }
}
