use serde::Serialize;

use super::block::{standard_orth_iter, torth, torth_t};
use super::config::{CardinalityProfile, Method, SolverConfig};
use super::report::{RunReport, Termination};
use super::tpower::tpower_deflation;
use crate::error::Result;
use crate::operator::SymOperator;
use crate::subspace::Basis;

/// Result of any solver, with the per-round reports for TPower.
#[derive(Debug, Clone, Serialize)]
pub struct MethodRun {
    pub method: Method,
    pub components: Basis,
    pub iterations: usize,
    pub termination: Termination,
    pub restarts: usize,
    /// One report for block methods, one per deflation round for TPower.
    pub reports: Vec<RunReport>,
}

impl MethodRun {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

/// Runs `method` from `q0`. TPower deflates once per column of `q0`, using
/// that column as the start of its round.
pub fn solve<O: SymOperator>(
    method: Method,
    a: &O,
    q0: &Basis,
    k: &CardinalityProfile,
    cfg: &SolverConfig,
) -> Result<MethodRun> {
    let block = |r: RunReport| MethodRun {
        method,
        components: r.final_basis.clone(),
        iterations: r.iterations,
        termination: r.termination,
        restarts: r.restarts,
        reports: vec![r],
    };
    Ok(match method {
        Method::TOrth => block(torth(a, q0, k, cfg)?),
        Method::TOrthT => block(torth_t(a, q0, k, cfg)?),
        Method::Standard => block(standard_orth_iter(a, q0, cfg)?),
        Method::TPower => {
            let run = tpower_deflation(a, q0.matrix(), k, cfg)?;
            MethodRun {
                method,
                iterations: run.iterations(),
                termination: run.termination,
                restarts: run.rounds.iter().map(|r| r.restarts).sum(),
                components: run.components,
                reports: run.rounds,
            }
        }
    })
}
