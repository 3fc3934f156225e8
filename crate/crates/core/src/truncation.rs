//! Top-k support selection, truncation and thresholding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Relative magnitude below which an entry does not count as support.
pub const NUMERICAL_SUPPORT_TOL: f64 = 1e-12;

/// Strictly increasing list of indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SupportSet {
    indices: Vec<usize>,
}

impl SupportSet {
    /// Sorts and deduplicates `indices`, rejecting any index `≥ p`.
    pub fn new(mut indices: Vec<usize>, p: usize) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if let Some(&bad) = indices.iter().find(|&&i| i >= p) {
            return Err(Error::InvalidArgument(format!(
                "support index {bad} out of range 0..{p}"
            )));
        }
        Ok(Self { indices })
    }

    pub fn full(p: usize) -> Self {
        Self {
            indices: (0..p).collect(),
        }
    }

    pub fn range(start: usize, end: usize) -> Self {
        Self {
            indices: (start..end).collect(),
        }
    }

    /// Indices of the nonzero entries of `v`.
    pub fn of_nonzeros(v: &[f64]) -> Self {
        Self {
            indices: v
                .iter()
                .enumerate()
                .filter(|(_, x)| **x != 0.0)
                .map(|(i, _)| i)
                .collect(),
        }
    }

    /// Indices with `|v_i| > rel_tol·‖v‖_∞`. With [`NUMERICAL_SUPPORT_TOL`] this
    /// ignores the round-off fill that QR leaves in exactly-zero rows.
    pub fn of_significant(v: &[f64], rel_tol: f64) -> Self {
        let cut = rel_tol * v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        Self {
            indices: v
                .iter()
                .enumerate()
                .filter(|(_, x)| x.abs() > cut)
                .map(|(i, _)| i)
                .collect(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn k(&self) -> usize {
        self.indices.len()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn is_subset_of(&self, other: &SupportSet) -> bool {
        self.indices.iter().all(|&i| other.contains(i))
    }

    pub fn intersection_len(&self, other: &SupportSet) -> usize {
        self.indices.iter().filter(|&&i| other.contains(i)).count()
    }

    /// `|A ∩ B| / |A ∪ B|`, with two empty sets counting as identical.
    pub fn jaccard(&self, other: &SupportSet) -> f64 {
        let inter = self.intersection_len(other);
        let union = self.k() + other.k() - inter;
        if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        }
    }
}

/// Indices of the `k` largest `|v_i|`, ties broken by lower index.
pub fn supp(v: &[f64], k: usize) -> Result<SupportSet> {
    let p = v.len();
    if k == 0 || k > p {
        return Err(Error::InvalidCardinality { k, p });
    }
    let mut idx: Vec<usize> = (0..p).collect();
    if k < p {
        let by_magnitude = |a: &usize, b: &usize| v[*b].abs().total_cmp(&v[*a].abs()).then(a.cmp(b));
        idx.select_nth_unstable_by(k - 1, by_magnitude);
        idx.truncate(k);
    }
    idx.sort_unstable();
    Ok(SupportSet { indices: idx })
}

/// Keeps entries in `f`, zeroes the rest.
pub fn truncate(v: &[f64], f: &SupportSet) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for &i in f.indices() {
        out[i] = v[i];
    }
    out
}

/// `truncate(v, supp(v, k))` in place.
pub fn truncate_top_k(v: &mut [f64], k: usize) -> Result<SupportSet> {
    let f = supp(v, k)?;
    let mut keep = f.indices().iter().peekable();
    for (i, x) in v.iter_mut().enumerate() {
        if keep.peek() == Some(&&i) {
            keep.next();
        } else {
            *x = 0.0;
        }
    }
    Ok(f)
}

/// Column-wise top-k truncation.
#[derive(Debug, Clone)]
pub struct TruncatedColumns {
    pub matrix: Matrix,
    pub supports: Vec<SupportSet>,
    /// Columns that are identically zero after truncation.
    pub zero_columns: Vec<usize>,
}

pub fn truncate_columns(m: &Matrix, k: &[usize]) -> Result<TruncatedColumns> {
    if k.len() != m.cols() {
        return Err(Error::mismatch("truncate_columns", m.cols(), k.len()));
    }
    let mut out = m.clone();
    let mut supports = Vec::with_capacity(k.len());
    let mut zero_columns = Vec::new();
    for (j, &kj) in k.iter().enumerate() {
        let col = out.col_mut(j);
        supports.push(truncate_top_k(col, kj)?);
        if col.iter().all(|x| *x == 0.0) {
            zero_columns.push(j);
        }
    }
    Ok(TruncatedColumns {
        matrix: out,
        supports,
        zero_columns,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKind {
    Hard,
    Soft,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRule {
    pub kind: ThresholdKind,
    pub level: f64,
}

impl ThresholdRule {
    pub fn new(kind: ThresholdKind, level: f64) -> Result<Self> {
        if !(level >= 0.0 && level.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "threshold level {level} must be finite and >= 0"
            )));
        }
        Ok(Self { kind, level })
    }

    pub fn apply(&self, y: f64) -> f64 {
        let t = self.level;
        match self.kind {
            ThresholdKind::Hard => {
                if y.abs() >= t {
                    y
                } else {
                    0.0
                }
            }
            ThresholdKind::Soft => y.signum() * (y.abs() - t).max(0.0),
        }
    }
}

pub fn threshold(v: &[f64], rule: ThresholdRule) -> Vec<f64> {
    v.iter().map(|&y| rule.apply(y)).collect()
}

/// `δ_Truncate = 2m·√(min{k̄_max, p − k_min}/p)`.
pub fn truncation_error_bound(k_bar_max: usize, k_min: usize, p: usize, m: usize) -> f64 {
    let slack = k_bar_max.min(p.saturating_sub(k_min));
    2.0 * m as f64 * (slack as f64 / p as f64).sqrt()
}

/// Per-vector truncation penalty `√(min{k̄, p − k}/p)`.
pub fn vector_truncation_penalty(k_bar: usize, k: usize, p: usize) -> f64 {
    let slack = k_bar.min(p.saturating_sub(k));
    (slack as f64 / p as f64).sqrt()
}
