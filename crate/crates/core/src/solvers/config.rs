use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::subspace::Basis;

/// Per-column sparsity budget `K = [k_1, …, k_m]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CardinalityProfile {
    k: Vec<usize>,
}

impl CardinalityProfile {
    pub fn new(k: Vec<usize>, p: usize) -> Result<Self> {
        if k.is_empty() {
            return Err(Error::InvalidArgument("cardinality profile is empty".into()));
        }
        if let Some(&bad) = k.iter().find(|&&ki| ki == 0 || ki > p) {
            return Err(Error::InvalidCardinality { k: bad, p });
        }
        Ok(Self { k })
    }

    pub fn uniform(k: usize, m: usize, p: usize) -> Result<Self> {
        Self::new(vec![k; m], p)
    }

    /// No truncation: every `k_i = p`.
    pub fn full(p: usize, m: usize) -> Self {
        Self { k: vec![p; m] }
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.k
    }

    pub fn m(&self) -> usize {
        self.k.len()
    }

    pub fn min(&self) -> usize {
        *self.k.iter().min().expect("non-empty")
    }

    pub fn max(&self) -> usize {
        *self.k.iter().max().expect("non-empty")
    }

    pub fn total(&self) -> usize {
        self.k.iter().sum()
    }

    pub fn is_full(&self, p: usize) -> bool {
        self.k.iter().all(|&k| k >= p)
    }

    pub(crate) fn check_dims(&self, p: usize, m: usize) -> Result<()> {
        if self.k.len() != m {
            return Err(Error::mismatch("cardinality profile", m, self.k.len()));
        }
        if let Some(&bad) = self.k.iter().find(|&&ki| ki == 0 || ki > p) {
            return Err(Error::InvalidCardinality { k: bad, p });
        }
        Ok(())
    }
}

impl std::fmt::Display for CardinalityProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.k.iter().map(usize::to_string).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[serde(rename = "torth")]
    TOrth,
    #[serde(rename = "torth_t")]
    TOrthT,
    #[serde(rename = "tpower")]
    TPower,
    Standard,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Standard, Method::TPower, Method::TOrth, Method::TOrthT];

    pub fn name(self) -> &'static str {
        match self {
            Method::TOrth => "torth",
            Method::TOrthT => "torth_t",
            Method::TPower => "tpower",
            Method::Standard => "standard",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "torth" => Ok(Method::TOrth),
            "torth_t" | "torthT" => Ok(Method::TOrthT),
            "tpower" => Ok(Method::TPower),
            "standard" => Ok(Method::Standard),
            other => Err(Error::InvalidArgument(format!("unknown method '{other}'"))),
        }
    }
}

/// How the block iterate is re-orthonormalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ortho {
    #[default]
    Qr,
    /// `Q = UVᵀ` from the thin SVD.
    Polar,
}

/// Sequence of cardinality levels the solver walks through.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "levels")]
pub enum Schedule {
    /// Only the target profile.
    Single,
    /// `{8k, 4k, 2k, k}` clamped to `p`.
    #[default]
    WarmStart,
    /// Caller-supplied levels; the last one is the target.
    Explicit(Vec<CardinalityProfile>),
    /// Start at the first profile and halve until the floor.
    Halving {
        start: CardinalityProfile,
        floor: CardinalityProfile,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    pub ortho: Ortho,
    pub tol: f64,
    /// Iteration cap, applied to each cardinality level separately.
    pub max_iter: usize,
    pub schedule: Schedule,
    /// Non-final levels run exactly this many iterations when set.
    pub level_iters: Option<usize>,
    /// In TOrthT, orthogonalize the untruncated `AQ` and truncate afterwards.
    pub qr_on_untruncated: bool,
    pub max_restarts: usize,
    pub seed: u64,
    /// Ground-truth basis for per-iteration diagnostics.
    #[serde(skip)]
    pub reference: Option<Basis>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            ortho: Ortho::Qr,
            tol: 1e-12,
            max_iter: 200,
            schedule: Schedule::WarmStart,
            level_iters: None,
            qr_on_untruncated: false,
            max_restarts: 3,
            seed: 0,
            reference: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        if self.level_iters == Some(0) {
            return Err(Error::InvalidArgument("level_iters must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_reference(mut self, reference: Basis) -> Self {
        self.reference = Some(reference);
        self
    }

    pub fn with_schedule(mut self, schedule: Schedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}
