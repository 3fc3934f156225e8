use serde::{Deserialize, Serialize};

use super::config::{CardinalityProfile, Method};
use crate::subspace::Basis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIter,
    RankDeficientRecovered,
}

/// Distances from an iterate to the reference basis `P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceStats {
    pub sin_theta_fro: f64,
    pub sin_theta_two: f64,
    /// `‖PᵀQ‖_F²`.
    pub pq_fro_sq: f64,
    /// `‖PᵀQ‖_2²`.
    pub pq_two_sq: f64,
    /// `|p_iᵀq_i|` per column.
    pub column_cosines: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    /// 1-based, counted across all levels.
    pub iter: usize,
    pub level: usize,
    /// `‖Q_t − Q_{t−1}‖_2`.
    pub residual: f64,
    /// `‖sinΘ(Q_t, Q_{t−1})‖_F²`, the jump statistic used when halving.
    pub step_sin_theta_fro_sq: f64,
    pub orthogonality_loss: f64,
    /// Number of rows of `Q_t` with a nonzero entry.
    pub row_support: usize,
    /// `‖Q_truncate − Q̃‖_F²` for TOrthT.
    pub post_truncation_gap: Option<f64>,
    /// Smallest singular value of the orthogonalization factor `R_t`.
    pub r_sigma_min: Option<f64>,
    pub restarts: usize,
    pub reference: Option<ReferenceStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub profile: CardinalityProfile,
    pub iterations: usize,
    pub termination: Termination,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub method: Method,
    pub final_basis: Basis,
    pub iterations: usize,
    pub termination: Termination,
    pub restarts: usize,
    pub levels: Vec<LevelSummary>,
    /// Nonzero rows of the starting basis.
    pub initial_row_support: usize,
    /// Reference distances of the starting basis.
    pub initial_reference: Option<ReferenceStats>,
    pub per_iter: Vec<IterRecord>,
}

impl RunReport {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    pub fn final_level(&self) -> Option<&LevelSummary> {
        self.levels.last()
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.per_iter.iter().map(|r| r.residual).collect()
    }
}
