//! Block and single-vector solvers.
//!
//! Every solver sees `A` only through [`SymOperator`](crate::SymOperator)
//! products, so dense matrices, lazy `XᵀX` forms and deflated operators are
//! interchangeable.

mod block;
mod config;
mod dispatch;
mod report;
mod schedule;
mod tpower;

pub use block::{random_start, row_support, standard_orth_iter, torth, torth_t};
pub use config::{CardinalityProfile, Method, Ortho, Schedule, SolverConfig};
pub use dispatch::{solve, MethodRun};
pub use report::{IterRecord, LevelSummary, ReferenceStats, RunReport, Termination};
pub use schedule::{adaptive_halving, halve, resolve_levels, warm_start_schedule};
pub use tpower::{deflate, tpower, tpower_deflation, DeflationRun, DeflationState};
