use serde::{Deserialize, Serialize};

use super::block::run_block;
use super::config::{CardinalityProfile, Method, SolverConfig};
use super::report::{RunReport, Termination};
use crate::error::{Error, Result};
use crate::linalg::{norm2, Matrix};
use crate::operator::{DeflatedOperator, SymOperator};
use crate::subspace::{Basis, BasisKind};

/// Found vectors plus the lazily deflated operator.
pub type DeflationState<O> = DeflatedOperator<O>;

/// `A ↦ (I − uuᵀ)·A·(I − uuᵀ)` on top of the existing deflations.
pub fn deflate<O: SymOperator>(state: DeflationState<O>, u: &[f64]) -> Result<DeflationState<O>> {
    state.deflate(u)
}

/// Truncated power method: `v ← Truncate(A·v, k) / ‖·‖`.
pub fn tpower<O: SymOperator + ?Sized>(a: &O, v0: &[f64], k: usize, cfg: &SolverConfig) -> Result<RunReport> {
    let p = a.dim();
    if v0.len() != p {
        return Err(Error::mismatch("tpower start", p, v0.len()));
    }
    let n = norm2(v0);
    if !(n > 0.0) {
        return Err(Error::InvalidArgument("tpower start vector is zero".into()));
    }
    let v: Vec<f64> = v0.iter().map(|x| x / n).collect();
    let q0 = Basis::from_parts_unchecked(Matrix::from_col_major(p, 1, v)?, BasisKind::Orthonormal);
    let k = CardinalityProfile::new(vec![k], p)?;
    run_block(a, &q0, &k, cfg, Method::TPower)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeflationRun {
    /// Unit-norm sparse components, one column per round.
    pub components: Basis,
    pub rounds: Vec<RunReport>,
    pub termination: Termination,
}

impl DeflationRun {
    pub fn iterations(&self) -> usize {
        self.rounds.iter().map(|r| r.iterations).sum()
    }
}

/// `m` rounds of TPower with projection deflation between rounds. Round `i`
/// starts from column `i` of `starts` and uses the configured schedule on its
/// own cardinality `k_i`.
pub fn tpower_deflation<O: SymOperator>(
    a: O,
    starts: &Matrix,
    k: &CardinalityProfile,
    cfg: &SolverConfig,
) -> Result<DeflationRun> {
    let p = a.dim();
    let m = starts.cols();
    if starts.rows() != p {
        return Err(Error::mismatch("tpower_deflation starts", p, starts.rows()));
    }
    k.check_dims(p, m)?;
    if let Some(r) = &cfg.reference {
        if r.p() != p || r.m() != m {
            return Err(Error::mismatch(
                "reference basis",
                format!("{p}x{m}"),
                format!("{}x{}", r.p(), r.m()),
            ));
        }
    }
    let mut state = DeflationState::new(a);
    let mut rounds = Vec::with_capacity(m);
    let mut columns = Vec::with_capacity(m);
    let mut termination = Termination::Converged;
    for i in 0..m {
        let mut round_cfg = cfg.clone();
        round_cfg.seed = cfg.seed.wrapping_add(i as u64);
        round_cfg.reference = cfg
            .reference
            .as_ref()
            .map(|r| Basis::from_parts_unchecked(r.matrix().select_columns(&[i]), BasisKind::Orthonormal));
        let report = tpower(&state, starts.col(i), k.as_slice()[i], &round_cfg)?;
        if report.termination != Termination::Converged && termination == Termination::Converged {
            termination = report.termination;
        }
        let u = report.final_basis.col(0).to_vec();
        state.push(&u)?;
        columns.push(u);
        rounds.push(report);
    }
    Ok(DeflationRun {
        components: Basis::from_parts_unchecked(Matrix::from_columns(&columns)?, BasisKind::SparseUnit),
        rounds,
        termination,
    })
}
