//! Sparse eigenvector estimation by truncated orthogonal iteration.
//!
//! The crate provides the block solvers (`TOrth`, `TOrthT`), the truncated
//! power method with projection deflation, the dense kernels they run on,
//! subspace distances, the bound calculators used to check convergence
//! guarantees at runtime, and generators for the standard experiments.

pub mod campaign;
pub mod datagen;
pub mod error;
pub mod evaluation;
pub mod linalg;
pub mod operator;
pub mod rng;
pub mod solvers;
pub mod subspace;
pub mod truncation;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::{Matrix, SymMatrix};
pub use operator::{DeflatedOperator, GramOperator, SymOperator};
pub use subspace::{Basis, BasisKind};
pub use truncation::SupportSet;
