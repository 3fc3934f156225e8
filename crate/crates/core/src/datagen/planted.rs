use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, householder_qr, norm2, sym_spectral_norm, Matrix, SymMatrix};
use crate::rng::{derive_seed, gaussian_matrix, seeded};
use crate::subspace::Basis;
use crate::truncation::SupportSet;

use rand::Rng;

pub const DEFAULT_K_BAR: usize = 10;

/// How the supports of the planted eigenvectors relate to each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapCase {
    /// All supports are `0..k̄`.
    Identical,
    /// Support `i` is `i·⌊k̄/2⌋ .. i·⌊k̄/2⌋ + k̄`, so neighbours share half
    /// their entries.
    Partial,
    /// Support `i` is `i·k̄ .. (i+1)·k̄`.
    Disjoint,
}

impl OverlapCase {
    /// Cases 1, 2, 3 of the simulation study.
    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Self::Identical),
            2 => Ok(Self::Partial),
            3 => Ok(Self::Disjoint),
            _ => Err(Error::InvalidArgument(format!("case must be 1, 2 or 3, got {n}"))),
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Self::Identical => 1,
            Self::Partial => 2,
            Self::Disjoint => 3,
        }
    }

    pub fn supports(self, m: usize, k_bar: usize, p: usize) -> Result<Vec<SupportSet>> {
        if k_bar == 0 {
            return Err(Error::InfeasibleSupport("k̄ must be positive".into()));
        }
        let shift = match self {
            Self::Identical => 0,
            Self::Partial => (k_bar / 2).max(1),
            Self::Disjoint => k_bar,
        };
        let end = shift * m.saturating_sub(1) + k_bar;
        if end > p {
            return Err(Error::InfeasibleSupport(format!(
                "{m} supports of size {k_bar} in {self:?} layout need p >= {end}, got {p}"
            )));
        }
        if self == Self::Identical && m > k_bar {
            return Err(Error::InfeasibleSupport(format!(
                "{m} orthonormal vectors cannot share a support of size {k_bar}"
            )));
        }
        Ok((0..m)
            .map(|i| SupportSet::range(i * shift, i * shift + k_bar))
            .collect())
    }
}

/// Everything needed to regenerate an instance bit-for-bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedParams {
    pub p: usize,
    pub m: usize,
    pub k_bar: usize,
    pub case: OverlapCase,
    /// Eigenvalues of `Ā`, descending, length `p`.
    pub spectrum: Vec<f64>,
    /// Target for `‖E‖₂`.
    pub rho_e_target: f64,
    pub seed: u64,
}

impl PlantedParams {
    /// `λ = [1, 0.9, 0.8, 0.1, …]` with the given size, case and noise level.
    pub fn simulation(p: usize, case: OverlapCase, rho_e_target: f64, seed: u64) -> Self {
        Self {
            p,
            m: 3,
            k_bar: DEFAULT_K_BAR,
            case,
            spectrum: step_spectrum(&[1.0, 0.9, 0.8], 0.1, p),
            rho_e_target,
            seed,
        }
    }

    /// The `p = 1000`, `ρ(E) = 0.22` setting of the simulation campaign.
    pub fn campaign(case: OverlapCase, seed: u64) -> Self {
        Self::simulation(1000, case, 0.22, seed)
    }

    /// The `p = 100`, `ρ(E) = 0.21` toy problem.
    pub fn toy(case: OverlapCase, seed: u64) -> Self {
        Self::simulation(100, case, 0.21, seed)
    }
}

/// `leading` followed by `p − leading.len()` copies of `tail`.
pub fn step_spectrum(leading: &[f64], tail: f64, p: usize) -> Vec<f64> {
    let mut s = leading.to_vec();
    s.resize(p.max(leading.len()), tail);
    s
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantedInstance {
    pub params: PlantedParams,
    pub a_bar: SymMatrix,
    pub e: SymMatrix,
    pub a: SymMatrix,
    pub truth: Basis,
    pub supports: Vec<SupportSet>,
}

impl PlantedInstance {
    pub fn spectrum(&self) -> &[f64] {
        &self.params.spectrum
    }
}

/// Planted sparse eigenvectors plus symmetric Gaussian noise.
///
/// On each support the vector starts as `±1/√k̄` with random signs. Vector `j`
/// is then projected off the restrictions of vectors `0..j` to its own support,
/// which keeps it inside that support and makes it exactly orthogonal to its
/// predecessors. Draws that leave a support entry (numerically) zero are
/// rejected.
pub fn planted_instance(params: &PlantedParams) -> Result<PlantedInstance> {
    let PlantedParams { p, m, k_bar, .. } = *params;
    if m == 0 || m >= p {
        return Err(Error::InvalidArgument(format!("need 0 < m < p, got m = {m}, p = {p}")));
    }
    if params.spectrum.len() != p {
        return Err(Error::mismatch("spectrum", p, params.spectrum.len()));
    }
    if params.spectrum.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument("spectrum must be descending".into()));
    }
    if !(params.rho_e_target >= 0.0 && params.rho_e_target.is_finite()) {
        return Err(Error::InvalidArgument(
            "rho_e_target must be finite and non-negative".into(),
        ));
    }
    let supports = params.case.supports(m, k_bar, p)?;
    let truth = plant_vectors(&supports, p, derive_seed(params.seed, 0, 0))?;
    let a_bar = assemble(&truth, &params.spectrum, derive_seed(params.seed, 1, 0))?;
    let e = noise(p, params.rho_e_target, derive_seed(params.seed, 2, 0))?;
    let a = a_bar.add(&e)?;
    Ok(PlantedInstance {
        params: params.clone(),
        a_bar,
        e,
        a,
        truth,
        supports,
    })
}

const MAX_DRAWS: usize = 1000;

fn plant_vectors(supports: &[SupportSet], p: usize, seed: u64) -> Result<Basis> {
    let mut rng = seeded(seed);
    let mut planted: Vec<Vec<f64>> = Vec::with_capacity(supports.len());
    for (j, s) in supports.iter().enumerate() {
        let idx = s.indices();
        // A later column sharing these indices must avoid every coordinate
        // vector in the span, or it could not be nonzero there.
        let guard = supports[j + 1..].iter().any(|t| t.intersection_len(s) > 0);
        let scale = 1.0 / (idx.len() as f64).sqrt();
        // Orthonormal basis of the previous vectors restricted to this support.
        let mut restricted: Vec<Vec<f64>> = Vec::new();
        for v in &planted {
            let mut r: Vec<f64> = idx.iter().map(|&i| v[i]).collect();
            for _ in 0..2 {
                for b in &restricted {
                    let c = dot(b, &r);
                    r.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
                }
            }
            let n = norm2(&r);
            if n > 1e-12 {
                r.iter_mut().for_each(|x| *x /= n);
                restricted.push(r);
            }
        }
        let mut found = None;
        for _ in 0..MAX_DRAWS {
            let mut x: Vec<f64> = idx
                .iter()
                .map(|_| if rng.random::<bool>() { scale } else { -scale })
                .collect();
            for _ in 0..2 {
                for b in &restricted {
                    let c = dot(b, &x);
                    x.iter_mut().zip(b).for_each(|(xi, bi)| *xi -= c * bi);
                }
            }
            let n = norm2(&x);
            if n > 1e-6 && x.iter().all(|xi| xi.abs() > 1e-6 * n) {
                x.iter_mut().for_each(|xi| *xi /= n);
                if guard && restricted.len() + 1 < idx.len() && spans_a_coordinate(&restricted, &x) {
                    continue;
                }
                found = Some(x);
                break;
            }
        }
        let x = found.ok_or_else(|| {
            Error::InfeasibleSupport(format!(
                "could not plant a full-support vector on {} indices",
                idx.len()
            ))
        })?;
        let mut v = vec![0.0; p];
        for (&i, xi) in idx.iter().zip(x) {
            v[i] = xi;
        }
        planted.push(v);
    }
    Basis::orthonormal(Matrix::from_columns(&planted)?)
}

/// True when some `e_i` lies in the span of the orthonormal `basis` and `x`.
fn spans_a_coordinate(basis: &[Vec<f64>], x: &[f64]) -> bool {
    (0..x.len()).any(|i| {
        let lev: f64 = basis.iter().map(|b| b[i] * b[i]).sum::<f64>() + x[i] * x[i];
        1.0 - lev < 1e-8
    })
}

/// `Ā = Σ λ_j w_j w_jᵀ` with `w_j = v_j` for the planted columns.
fn assemble(truth: &Basis, spectrum: &[f64], seed: u64) -> Result<SymMatrix> {
    let (p, m) = (truth.p(), truth.m());
    let tail = spectrum[m];
    let v = truth.matrix();
    if spectrum[m..].iter().all(|l| *l == tail) {
        // The completion is irrelevant when the tail is flat:
        // Ā = tail·I + Σ_{i<m} (λ_i − tail) v_i v_iᵀ.
        let mut scaled = v.clone();
        for j in 0..m {
            let c = spectrum[j] - tail;
            scaled.col_mut(j).iter_mut().for_each(|x| *x *= c);
        }
        let mut low = scaled.matmul_tr(v)?;
        for i in 0..p {
            low[(i, i)] += tail;
        }
        return SymMatrix::new(low);
    }
    let mut cols = gaussian_matrix(&mut seeded(seed), p, p);
    for j in 0..m {
        cols.set_col(j, v.col(j));
    }
    let mut w = householder_qr(&cols)?.q;
    for j in 0..m {
        w.set_col(j, v.col(j));
    }
    SymMatrix::from_eigen(&w, spectrum)
}

fn noise(p: usize, rho: f64, seed: u64) -> Result<SymMatrix> {
    if rho == 0.0 {
        return Ok(SymMatrix::from_diag(&vec![0.0; p]));
    }
    let g = SymMatrix::new(gaussian_matrix(&mut seeded(seed), p, p))?;
    let norm = sym_spectral_norm(&g);
    Ok(g.scale(rho / norm))
}
