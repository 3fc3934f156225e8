//! Randomized checks of the inequalities behind the convergence analysis.
//!
//! Every trial draws its inputs from its own seed, derived from the suite seed
//! and the trial index, so any violation can be replayed in isolation.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::datagen::{planted_instance, step_spectrum, OverlapCase, PlantedInstance, PlantedParams};
use crate::error::{Error, Result};
use crate::evaluation::{
    block_lower_bound_rhs, exact_progress_rhs, one_step_fro_bound, rho_sparse, rho_support_size, rt_inverse_bound,
    BoundInputs, RhoMode, EXACT_MAX_P,
};
use crate::linalg::{dot, householder_qr, norm2, svd_small, Matrix, SymMatrix};
use crate::rng::{derive_seed, gaussian_matrix, gaussian_vec, random_subset, seeded, SolverRng};
use crate::solvers::{random_start, standard_orth_iter, torth, CardinalityProfile, ReferenceStats, SolverConfig};
use crate::subspace::{sin_theta_fro, sin_theta_two, Basis};
use crate::truncation::{
    threshold, truncate_top_k, vector_truncation_penalty, SupportSet, ThresholdKind, ThresholdRule,
};

/// Keeps the `k` largest-magnitude entries of a vector.
pub type Truncator = fn(&[f64], usize) -> Vec<f64>;

pub fn top_k(v: &[f64], k: usize) -> Vec<f64> {
    let mut out = v.to_vec();
    truncate_top_k(&mut out, k.min(v.len())).expect("k <= len");
    out
}

/// Deliberately broken truncation that keeps one entry too few.
pub fn top_k_minus_one(v: &[f64], k: usize) -> Vec<f64> {
    let k = k.saturating_sub(1);
    if k == 0 {
        return vec![0.0; v.len()];
    }
    top_k(v, k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    /// Vector truncation keeps the angle to a sparse unit vector.
    VectorTruncation,
    /// Column-wise truncation of a matrix against a sparse basis.
    MatrixTruncation,
    /// Truncation to supersets of the true supports loses nothing.
    SupportContainment,
    /// Thresholding keeps the angle to a sparse unit vector.
    Thresholding,
    /// Progress of one exact orthogonal-iteration step.
    ExactProgress,
    /// Effect of a perturbation `E` on the projected energy.
    Perturbation,
    /// One-step Frobenius contraction of orthogonal iteration.
    OneStepFrobenius,
    /// Norm of the inverse orthogonalization factor.
    RtInverse,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::VectorTruncation,
        Suite::MatrixTruncation,
        Suite::SupportContainment,
        Suite::Thresholding,
        Suite::ExactProgress,
        Suite::Perturbation,
        Suite::OneStepFrobenius,
        Suite::RtInverse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::VectorTruncation => "vector_truncation",
            Suite::MatrixTruncation => "matrix_truncation",
            Suite::SupportContainment => "support_containment",
            Suite::Thresholding => "thresholding",
            Suite::ExactProgress => "exact_progress",
            Suite::Perturbation => "perturbation",
            Suite::OneStepFrobenius => "one_step_frobenius",
            Suite::RtInverse => "rt_inverse",
        }
    }

    fn stream(self) -> u64 {
        Suite::ALL.iter().position(|s| *s == self).expect("listed") as u64
    }

    fn uses_truncation(self) -> bool {
        matches!(
            self,
            Suite::VectorTruncation | Suite::MatrixTruncation | Suite::SupportContainment
        )
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyConfig {
    pub trials: usize,
    pub seed: u64,
    /// Allowed excess, relative to `max(1, |rhs|)`.
    pub slack: f64,
    /// Largest dimension drawn by the suites without exact `ρ(E,K)`.
    pub max_p: usize,
    /// Largest dimension for the suite that evaluates `ρ(E,K)` exactly.
    pub exact_max_p: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            trials: 10_000,
            seed: 0,
            slack: 1e-10,
            max_p: 40,
            exact_max_p: 10,
        }
    }
}

/// One failed trial. `lhs ≥ rhs` (or `lhs ≤ rhs` for upper bounds) was
/// expected.
#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub suite: &'static str,
    pub trial: usize,
    pub seed: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub excess: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub trials: usize,
    pub violations: usize,
    /// Trials whose bound was vacuous (`‖sinΘ‖₂ ≥ 1`) or whose inputs were
    /// redrawn too often.
    pub skipped: usize,
    /// Largest `excess / max(1, |rhs|)` over all trials; negative when every
    /// trial holds with room to spare.
    pub worst_excess: f64,
    /// Up to the first 20 violations.
    pub examples: Vec<Violation>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

const MAX_EXAMPLES: usize = 20;

enum Check {
    /// Expect `lhs ≥ rhs`.
    AtLeast {
        lhs: f64,
        rhs: f64,
    },
    /// Expect `lhs ≤ rhs`.
    AtMost {
        lhs: f64,
        rhs: f64,
    },
    Skip,
}

impl Check {
    fn excess(&self) -> Option<(f64, f64, f64)> {
        match *self {
            Check::AtLeast { lhs, rhs } => Some((lhs, rhs, (rhs - lhs) / rhs.abs().max(1.0))),
            Check::AtMost { lhs, rhs } => Some((lhs, rhs, (lhs - rhs) / rhs.abs().max(1.0))),
            Check::Skip => None,
        }
    }
}

pub fn run_suite(suite: Suite, cfg: &VerifyConfig, trunc: Truncator) -> Result<SuiteReport> {
    let checks: Vec<(usize, u64, Check)> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = derive_seed(cfg.seed, suite.stream(), trial as u64);
            let mut rng = seeded(seed);
            let check = match suite {
                Suite::VectorTruncation => vector_truncation(&mut rng, cfg.max_p, trunc),
                Suite::MatrixTruncation => matrix_truncation(&mut rng, cfg.max_p, trunc, false),
                Suite::SupportContainment => matrix_truncation(&mut rng, cfg.max_p, trunc, true),
                Suite::Thresholding => thresholding(&mut rng, cfg.max_p),
                Suite::ExactProgress => exact_progress(&mut rng, cfg.max_p),
                Suite::Perturbation => perturbation(&mut rng, cfg.exact_max_p)?,
                Suite::OneStepFrobenius => one_step(&mut rng, cfg.max_p, false)?,
                Suite::RtInverse => one_step(&mut rng, cfg.max_p, true)?,
            };
            Ok((trial, seed, check))
        })
        .collect::<Result<_>>()?;
    let mut report = SuiteReport {
        suite: suite.name(),
        trials: cfg.trials,
        violations: 0,
        skipped: 0,
        worst_excess: f64::NEG_INFINITY,
        examples: Vec::new(),
    };
    for (trial, seed, check) in checks {
        let Some((lhs, rhs, excess)) = check.excess() else {
            report.skipped += 1;
            continue;
        };
        report.worst_excess = report.worst_excess.max(excess);
        if excess > cfg.slack || !excess.is_finite() {
            report.violations += 1;
            if report.examples.len() < MAX_EXAMPLES {
                report.examples.push(Violation {
                    suite: suite.name(),
                    trial,
                    seed,
                    lhs,
                    rhs,
                    excess,
                });
            }
        }
    }
    Ok(report)
}

/// Runs every suite. `trunc` replaces the truncation operator in the suites
/// that use one, which is how the harness is tested against a known fault.
pub fn run_suites(cfg: &VerifyConfig, trunc: Truncator) -> Result<Vec<SuiteReport>> {
    Suite::ALL.iter().map(|&s| run_suite(s, cfg, trunc)).collect()
}

/// True when the suites that depend on truncation catch a broken operator.
pub fn harness_detects_faulty_truncation(cfg: &VerifyConfig) -> Result<bool> {
    let mut found = false;
    for s in Suite::ALL.into_iter().filter(|s| s.uses_truncation()) {
        let clean = run_suite(s, cfg, top_k)?;
        let broken = run_suite(s, cfg, top_k_minus_one)?;
        found |= broken.violations > clean.violations;
    }
    Ok(found)
}

fn uniform(rng: &mut SolverRng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let n = norm2(&v);
    v.iter_mut().for_each(|x| *x /= n);
    v
}

/// Unit vector with exactly `k` nonzero entries at random positions.
fn sparse_unit(rng: &mut SolverRng, p: usize, k: usize) -> (Vec<f64>, SupportSet) {
    let idx = random_subset(rng, p, k);
    let mut v = vec![0.0; p];
    loop {
        for &i in &idx {
            v[i] = gaussian_vec(rng, 1)[0];
        }
        if idx.iter().all(|&i| v[i] != 0.0) {
            break;
        }
    }
    (unit(v), SupportSet::new(idx, p).expect("subset of 0..p"))
}

/// `y = α·x̄ + β·g/‖g‖`, covering both independent and well-aligned inputs.
fn noisy_copy(rng: &mut SolverRng, x: &[f64]) -> Vec<f64> {
    let alpha = uniform(rng, 0.0, 2.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
    let beta = uniform(rng, 0.0, 1.0);
    let g = unit(gaussian_vec(rng, x.len()));
    x.iter().zip(g).map(|(xi, gi)| alpha * xi + beta * gi).collect()
}

fn cosine(a: &[f64], x: &[f64]) -> f64 {
    let n = norm2(a);
    if n == 0.0 {
        0.0
    } else {
        dot(a, x).abs() / n
    }
}

fn vector_truncation(rng: &mut SolverRng, max_p: usize, trunc: Truncator) -> Check {
    let p = rng.random_range(2..=max_p);
    let k_bar = rng.random_range(1..=p);
    let k = rng.random_range(1..=p);
    let (x, _) = sparse_unit(rng, p, k_bar);
    let y = noisy_copy(rng, &x);
    if norm2(&y) == 0.0 {
        return Check::Skip;
    }
    Check::AtLeast {
        lhs: cosine(&trunc(&y, k), &x),
        rhs: cosine(&y, &x) - vector_truncation_penalty(k_bar, k, p),
    }
}

/// Orthonormal `p×m` basis whose column `j` is supported on `supports[j]`,
/// or `None` when the draw leaves a column without room.
fn sparse_orthonormal(rng: &mut SolverRng, p: usize, supports: &[SupportSet]) -> Option<Matrix> {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(supports.len());
    for s in supports {
        let idx = s.indices();
        let mut x = gaussian_vec(rng, idx.len());
        for _ in 0..2 {
            for c in &cols {
                // Project off the previous columns restricted to this support,
                // keeping the orthogonal basis of those restrictions implicit
                // by orthogonalizing against the running result.
                let r: Vec<f64> = idx.iter().map(|&i| c[i]).collect();
                let rn = dot(&r, &r);
                if rn > 0.0 {
                    let d = dot(&r, &x) / rn;
                    x.iter_mut().zip(&r).for_each(|(xi, ri)| *xi -= d * ri);
                }
            }
        }
        let mut v = vec![0.0; p];
        for (&i, xi) in idx.iter().zip(&x) {
            v[i] = *xi;
        }
        if norm2(&v) < 1e-8 {
            return None;
        }
        cols.push(unit(v));
    }
    let m = Matrix::from_columns(&cols).ok()?;
    let g = m.tr_matmul(&m).ok()?;
    let off: f64 = (0..g.rows())
        .flat_map(|i| (0..g.cols()).map(move |j| (i, j)))
        .filter(|(i, j)| i != j)
        .map(|(i, j)| g[(i, j)].abs())
        .fold(0.0, f64::max);
    (off < 1e-12).then_some(m)
}

const MAX_REDRAWS: usize = 50;

/// Sparse orthonormal `P` with random column cardinalities.
fn sparse_basis(
    rng: &mut SolverRng,
    p: usize,
    m: usize,
    k_of: impl Fn(&mut SolverRng) -> usize,
) -> Option<(Matrix, Vec<SupportSet>)> {
    for _ in 0..MAX_REDRAWS {
        let supports: Vec<SupportSet> = (0..m)
            .map(|_| {
                let k = k_of(rng);
                SupportSet::new(random_subset(rng, p, k), p).expect("subset")
            })
            .collect();
        if let Some(b) = sparse_orthonormal(rng, p, &supports) {
            return Some((b, supports));
        }
    }
    None
}

fn matrix_truncation(rng: &mut SolverRng, max_p: usize, trunc: Truncator, contain: bool) -> Check {
    let p = rng.random_range(4..=max_p);
    let m = rng.random_range(1..=4.min(p / 2));
    let Some((pm, supports)) = sparse_basis(rng, p, m, |r| r.random_range(1..=p / 2)) else {
        return Check::Skip;
    };
    let k_bar_max = supports.iter().map(SupportSet::k).max().expect("m >= 1");
    let union: Vec<usize> = {
        let mut u: Vec<usize> = supports.iter().flat_map(|s| s.indices().to_vec()).collect();
        u.sort_unstable();
        u.dedup();
        u
    };
    let mut q = Matrix::zeros(p, m);
    let mut ks = Vec::with_capacity(m);
    for j in 0..m {
        let col: Vec<f64> = if contain {
            // Entries on the union of the true supports dominate every other
            // entry, so any k ≥ |union| keeps all of them.
            let mut c: Vec<f64> = (0..p).map(|_| uniform(rng, -0.5, 0.5)).collect();
            for &i in &union {
                let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
                c[i] = s * uniform(rng, 1.0, 2.0);
            }
            c
        } else {
            let mix = gaussian_vec(rng, m);
            let base: Vec<f64> = (0..p).map(|i| (0..m).map(|l| pm[(i, l)] * mix[l]).sum()).collect();
            noisy_copy(rng, &unit(base))
        };
        let k = if contain {
            rng.random_range(union.len()..=p)
        } else {
            rng.random_range(1..=p)
        };
        ks.push(k);
        q.set_col(j, &col);
    }
    let qf = q.frobenius_norm_sq();
    if qf == 0.0 {
        return Check::Skip;
    }
    let mut tq = Matrix::zeros(p, m);
    for (j, &k) in ks.iter().enumerate() {
        tq.set_col(j, &trunc(q.col(j), k));
    }
    let ratio = |x: &Matrix| -> f64 {
        let d = x.frobenius_norm_sq();
        if d == 0.0 {
            0.0
        } else {
            x.tr_matmul(&pm).expect("same rows").frobenius_norm_sq() / d
        }
    };
    let k_min = *ks.iter().min().expect("m >= 1");
    let penalty = if contain {
        0.0
    } else {
        2.0 * m as f64 * vector_truncation_penalty(k_bar_max, k_min, p)
    };
    Check::AtLeast {
        lhs: ratio(&tq),
        rhs: ratio(&q) - penalty,
    }
}

fn thresholding(rng: &mut SolverRng, max_p: usize) -> Check {
    let p = rng.random_range(2..=max_p);
    let k_bar = rng.random_range(1..=p);
    let (x, _) = sparse_unit(rng, p, k_bar);
    let y = noisy_copy(rng, &x);
    let ny = norm2(&y);
    if ny == 0.0 {
        return Check::Skip;
    }
    let ymax = y.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let t = uniform(rng, 0.0, 1.2 * ymax);
    let kind = if rng.random::<bool>() {
        ThresholdKind::Hard
    } else {
        ThresholdKind::Soft
    };
    let th = threshold(&y, ThresholdRule::new(kind, t).expect("t >= 0"));
    Check::AtLeast {
        lhs: cosine(&th, &x),
        rhs: (dot(&y, &x).abs() - t * (k_bar as f64).sqrt()) / ny,
    }
}

/// `W·diag(λ)·Wᵀ` for a random orthogonal `W`, with `λ` sorted by magnitude
/// and a strict gap after position `m`. Returns the matrix and `W`.
fn random_symmetric(rng: &mut SolverRng, p: usize, m: usize, signed: bool) -> (SymMatrix, Matrix, Vec<f64>) {
    loop {
        let mut lam: Vec<f64> = (0..p)
            .map(|_| {
                let v = uniform(rng, 0.05, 1.0);
                if signed && rng.random::<bool>() {
                    -v
                } else {
                    v
                }
            })
            .collect();
        lam.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
        if m < p && lam[m].abs() >= lam[m - 1].abs() * (1.0 - 1e-6) {
            continue;
        }
        let w = householder_qr(&gaussian_matrix(rng, p, p))
            .expect("Gaussian is full rank")
            .q;
        let a = SymMatrix::from_eigen(&w, &lam).expect("p eigenvalues");
        return (a, w, lam);
    }
}

/// Orthonormal start at a random distance from `span(P)`.
fn start_near(rng: &mut SolverRng, pm: &Matrix) -> Matrix {
    let (p, m) = pm.shape();
    let sigma = 10f64.powf(uniform(rng, -2.0, 1.0));
    let mix = gaussian_matrix(rng, m, m);
    let noisy = pm
        .matmul(&mix)
        .expect("m x m")
        .add(&gaussian_matrix(rng, p, m).scale(sigma))
        .expect("same shape");
    householder_qr(&noisy)
        .map(|f| f.q)
        .unwrap_or_else(|_| Matrix::eye(p, m))
}

fn exact_progress(rng: &mut SolverRng, max_p: usize) -> Check {
    let p = rng.random_range(3..=max_p.min(30));
    let m = rng.random_range(1..=4.min(p - 1));
    let signed = rng.random::<bool>();
    let (a, w, lam) = random_symmetric(rng, p, m, signed);
    let pm = w.leading_columns(m);
    let q0 = start_near(rng, &pm);
    let Ok(f) = householder_qr(&a.as_matrix().matmul(&q0).expect("p x m")) else {
        return Check::Skip;
    };
    let gamma = (lam[m] / lam[m - 1]).abs();
    let before = pm.tr_matmul(&q0).expect("p rows").frobenius_norm_sq();
    let after = svd_small(&pm.tr_matmul(&f.q).expect("p rows")).s[0].powi(2);
    Check::AtLeast {
        lhs: after,
        rhs: exact_progress_rhs(gamma, m, before),
    }
}

fn perturbation(rng: &mut SolverRng, max_p: usize) -> Result<Check> {
    let p = rng.random_range(3..=max_p.min(EXACT_MAX_P));
    let m = rng.random_range(1..=2.min(p - 1));
    // λ(Ā) ⊂ [0.2, 1] with λ₁ = 1 and ‖E‖₂ ≤ 0.2 keep both matrices PSD.
    let mut lam: Vec<f64> = (0..p).map(|_| uniform(rng, 0.2, 1.0)).collect();
    lam.sort_by(|a, b| b.total_cmp(a));
    lam[0] = 1.0;
    let w = householder_qr(&gaussian_matrix(rng, p, p)).expect("full rank").q;
    let a_bar = SymMatrix::from_eigen(&w, &lam)?;
    let g = SymMatrix::new(gaussian_matrix(rng, p, p))?;
    let e = g.scale(uniform(rng, 0.0, 0.2) / crate::linalg::sym_spectral_norm(&g));
    let a = a_bar.add(&e)?;
    let pm = w.leading_columns(m);
    let Some((q, supports)) = sparse_basis(rng, p, m, |r| r.random_range(1..=p)) else {
        return Ok(Check::Skip);
    };
    let k = CardinalityProfile::new(supports.iter().map(SupportSet::k).collect(), p)?;
    let rho = rho_sparse(&e, &k, RhoMode::ExactBruteforce)?;
    let ratio = |x: &Matrix| -> (f64, f64) {
        let xq = x.matmul(&q).expect("p x m");
        let d = xq.frobenius_norm_sq();
        (pm.tr_matmul(&xq).expect("p rows").frobenius_norm_sq() / d, d)
    };
    let (lhs, _) = ratio(a.as_matrix());
    let (clean, d) = ratio(a_bar.as_matrix());
    Ok(Check::AtLeast {
        lhs,
        rhs: clean - 4.0 * m as f64 * rho / d,
    })
}

fn one_step(rng: &mut SolverRng, max_p: usize, rt: bool) -> Result<Check> {
    let p = rng.random_range(3..=max_p.min(30));
    let m = rng.random_range(1..=4.min(p - 1));
    let (a, w, lam) = random_symmetric(rng, p, m, false);
    let pm = Basis::orthonormal(w.leading_columns(m))?;
    let q0 = start_near(rng, pm.matrix());
    let Ok(f) = householder_qr(&a.as_matrix().matmul(&q0)?) else {
        return Ok(Check::Skip);
    };
    let q0b = Basis::orthonormal(q0)?;
    let s2 = sin_theta_two(&pm, &q0b)?;
    if rt {
        let smin = *svd_small(&f.r).s.last().expect("m >= 1");
        return Ok(match rt_inverse_bound(lam[m - 1], s2) {
            Ok(bound) => Check::AtMost {
                lhs: 1.0 / smin,
                rhs: bound,
            },
            Err(Error::VacuousBound(_)) => Check::Skip,
            Err(e) => return Err(e),
        });
    }
    let gamma = lam[m] / lam[m - 1];
    let sf = sin_theta_fro(&pm, &q0b)?;
    let after = sin_theta_fro(&pm, &Basis::orthonormal(f.q)?)?;
    Ok(match one_step_fro_bound(gamma, sf, s2) {
        Ok(bound) => Check::AtMost { lhs: after, rhs: bound },
        Err(Error::VacuousBound(_)) => Check::Skip,
        Err(e) => return Err(e),
    })
}

/// One iteration of a solver trace checked against the block lower bound.
#[derive(Debug, Clone, Serialize)]
pub struct TraceStep {
    pub iter: usize,
    pub level: usize,
    pub k_min: usize,
    pub row_support_prev: usize,
    pub rho_ek: f64,
    pub rho_exact: bool,
    /// Measured `‖PᵀQ_t‖₂²`.
    pub measured: f64,
    /// Lower bound, `None` when vacuous.
    pub bound: Option<f64>,
    /// `‖PᵀQ_t‖_F² / ‖PᵀQ_t‖₂²`.
    pub c_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceCheck {
    pub steps: Vec<TraceStep>,
    pub violations: usize,
    pub vacuous: usize,
}

/// Runs TOrth on a planted instance with the planted basis as reference and
/// checks `‖PᵀQ_t‖₂² ≥ F/((1−γ²)F + mγ²) − δ_E − δ_T` at every iteration.
///
/// `ρ(E,K)` is evaluated over supports of the size of the row support of
/// `Q_{t−1}`, which bounds `‖E·Q_{t−1}‖₂` whatever the level. It is exact
/// when `p` allows enumeration and an upper bound otherwise, which only
/// loosens the check.
pub fn lower_bound_trace(
    inst: &PlantedInstance,
    q0: &Basis,
    k: &CardinalityProfile,
    cfg: &SolverConfig,
    slack: f64,
) -> Result<TraceCheck> {
    let p = inst.params.p;
    let m = inst.truth.m();
    let k_bar_max = inst.truth.column_nnz().into_iter().max().unwrap_or(0);
    let base = BoundInputs::from_spectrum(inst.spectrum(), m, 0.0, k_bar_max, k.min(), p)?;
    let cfg = cfg.clone().with_reference(inst.truth.clone());
    let report = torth(&inst.a, q0, k, &cfg)?;
    let mode = if p <= EXACT_MAX_P {
        RhoMode::ExactBruteforce
    } else {
        RhoMode::UpperBound
    };
    let mut rho_cache: HashMap<usize, f64> = HashMap::new();
    let mut steps = Vec::with_capacity(report.per_iter.len());
    let (mut violations, mut vacuous) = (0, 0);
    let missing = || Error::InvalidArgument("trace is missing reference statistics".into());
    for (i, rec) in report.per_iter.iter().enumerate() {
        let (prev, support): (&ReferenceStats, usize) = if i == 0 {
            (
                report.initial_reference.as_ref().ok_or_else(missing)?,
                report.initial_row_support,
            )
        } else {
            let r = &report.per_iter[i - 1];
            (r.reference.as_ref().ok_or_else(missing)?, r.row_support)
        };
        let cur = rec.reference.as_ref().ok_or_else(missing)?;
        let rho = match rho_cache.get(&support) {
            Some(r) => *r,
            None => {
                let r = rho_support_size(&inst.e, support, mode)?;
                rho_cache.insert(support, r);
                r
            }
        };
        let k_min = report.levels[rec.level].profile.min();
        let b = base.with_rho(rho).with_k_min(k_min);
        let bound = match block_lower_bound_rhs(&b, prev.pq_fro_sq, prev.sin_theta_two) {
            Ok(v) => Some(v),
            Err(Error::VacuousBound(_)) => None,
            Err(e) => return Err(e),
        };
        match bound {
            Some(v) if v - cur.pq_two_sq > slack => violations += 1,
            None => vacuous += 1,
            _ => {}
        }
        steps.push(TraceStep {
            iter: rec.iter,
            level: rec.level,
            k_min,
            row_support_prev: support,
            rho_ek: rho,
            rho_exact: mode == RhoMode::ExactBruteforce,
            measured: cur.pq_two_sq,
            bound,
            c_ratio: crate::evaluation::measured_c(cur),
        });
    }
    Ok(TraceCheck {
        steps,
        violations,
        vacuous,
    })
}

/// Outcome of one instance in [`lower_bound_family`].
#[derive(Debug, Clone, Serialize)]
pub struct TraceInstance {
    pub instance: usize,
    /// Seed of the planted instance; the start basis uses `derive_seed(seed, 1, instance)`.
    pub seed: u64,
    pub p: usize,
    pub case: u8,
    pub rho_e: f64,
    pub rho_exact: bool,
    pub steps: usize,
    pub violations: usize,
    pub vacuous: usize,
}

/// Runs [`lower_bound_trace`] on `instances` planted problems cycling through
/// `p ∈ {12, 50, 100, 200}`, the three overlap cases and `‖E‖₂ ∈ {.02, .05, .1}`.
/// The `p = 12` instances use `m = 2`, `k̄ = 4` so that `ρ(E,K)` is exact.
pub fn lower_bound_family(instances: usize, seed: u64, slack: f64) -> Result<Vec<TraceInstance>> {
    (0..instances)
        .into_par_iter()
        .map(|i| {
            let case = OverlapCase::from_number((i % 3) as u8 + 1)?;
            let p = [12, 50, 100, 200][i % 4];
            let rho = [0.02, 0.05, 0.1][i % 3];
            let inst_seed = derive_seed(seed, 0, i as u64);
            let mut params = PlantedParams::simulation(p, case, rho, inst_seed);
            if p == 12 {
                params.k_bar = 4;
                params.m = 2;
                params.spectrum = step_spectrum(&[1.0, 0.9], 0.1, p);
            }
            let inst = planted_instance(&params)?;
            let k = CardinalityProfile::uniform(params.k_bar, params.m, p)?;
            let q0 = random_start(&mut seeded(derive_seed(seed, 1, i as u64)), p, params.m)?;
            let tc = lower_bound_trace(&inst, &q0, &k, &SolverConfig::default(), slack)?;
            Ok(TraceInstance {
                instance: i,
                seed: inst_seed,
                p,
                case: case.number(),
                rho_e: rho,
                rho_exact: p <= EXACT_MAX_P,
                steps: tc.steps.len(),
                violations: tc.violations,
                vacuous: tc.vacuous,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct RateViolation {
    pub run: usize,
    pub seed: u64,
    pub iter: usize,
    pub sin_fro: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateCheck {
    pub runs: usize,
    pub steps: usize,
    pub vacuous: usize,
    pub violations: Vec<RateViolation>,
    /// Largest `‖sinΘ_t‖_F / bound` over non-vacuous steps with a bound above
    /// `1e-8`.
    pub worst_ratio: f64,
}

/// Plain orthogonal iteration on random PSD matrices, checking
/// `‖sinΘ_t‖_F ≤ γ‖sinΘ_{t−1}‖_F / √(1 − ‖sinΘ_{t−1}‖₂²)` at every step.
pub fn standard_rate_check(runs: usize, seed: u64, slack: f64) -> Result<RateCheck> {
    let results: Vec<(usize, u64, Vec<(usize, f64, Option<f64>)>)> = (0..runs)
        .into_par_iter()
        .map(|run| {
            let s = derive_seed(seed, 100, run as u64);
            let mut rng = seeded(s);
            let p = rng.random_range(10..=50);
            let m = rng.random_range(1..=4);
            let (a, w, lam) = random_symmetric(&mut rng, p, m, false);
            let pm = Basis::orthonormal(w.leading_columns(m))?;
            let gamma = lam[m] / lam[m - 1];
            let q0 = random_start(&mut rng, p, m)?;
            let cfg = SolverConfig::default().with_seed(s).with_reference(pm);
            let report = standard_orth_iter(&a, &q0, &cfg)?;
            let mut prev = report.initial_reference.clone().expect("reference set");
            let mut out = Vec::with_capacity(report.per_iter.len());
            for rec in &report.per_iter {
                let cur = rec.reference.clone().expect("reference set");
                let bound = one_step_fro_bound(gamma, prev.sin_theta_fro, prev.sin_theta_two).ok();
                out.push((rec.iter, cur.sin_theta_fro, bound));
                prev = cur;
            }
            Ok((run, s, out))
        })
        .collect::<Result<_>>()?;
    let mut check = RateCheck {
        runs,
        steps: 0,
        vacuous: 0,
        violations: Vec::new(),
        worst_ratio: 0.0,
    };
    for (run, s, steps) in results {
        for (iter, sin_fro, bound) in steps {
            check.steps += 1;
            let Some(bound) = bound else {
                check.vacuous += 1;
                continue;
            };
            if bound > 1e-8 {
                check.worst_ratio = check.worst_ratio.max(sin_fro / bound);
            }
            if sin_fro - bound > slack {
                check.violations.push(RateViolation {
                    run,
                    seed: s,
                    iter,
                    sin_fro,
                    bound,
                });
            }
        }
    }
    Ok(check)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(trials: usize) -> VerifyConfig {
        VerifyConfig {
            trials,
            seed: 11,
            ..Default::default()
        }
    }

    #[test]
    fn sound_suites_hold() {
        for s in [
            Suite::SupportContainment,
            Suite::Thresholding,
            Suite::ExactProgress,
            Suite::Perturbation,
            Suite::OneStepFrobenius,
            Suite::RtInverse,
        ] {
            let r = run_suite(s, &small(500), top_k).unwrap();
            assert!(r.passed(), "{:?}", r);
            assert!(r.skipped < r.trials / 2, "{:?}", r);
        }
    }

    #[test]
    fn vector_truncation_counterexample() {
        // The dropped entry of y lies on the support of x̄ but is not among
        // the smallest entries of y, so the penalty √(min{k̄, p−k}/p) is too
        // small.
        let p = 10;
        let mut y = vec![0.0; p];
        y[0] = 1.0;
        y[1] = 0.9;
        let mut x = vec![0.0; p];
        x[1] = 1.0;
        let lhs = cosine(&top_k(&y, 1), &x);
        let rhs = cosine(&y, &x) - vector_truncation_penalty(1, 1, p);
        assert_eq!(lhs, 0.0);
        assert!(rhs > 0.3);
    }

    #[test]
    fn broken_truncation_is_detected() {
        assert!(harness_detects_faulty_truncation(&small(300)).unwrap());
        let broken = run_suite(Suite::SupportContainment, &small(300), top_k_minus_one).unwrap();
        assert!(broken.violations > 0);
    }

    #[test]
    fn zero_trials_pass_vacuously() {
        let r = run_suite(Suite::Perturbation, &small(0), top_k).unwrap();
        assert!(r.passed());
        assert_eq!(r.trials, 0);
    }

    #[test]
    fn trials_replay_from_their_seed() {
        let cfg = small(50);
        let r1 = run_suite(Suite::VectorTruncation, &cfg, top_k).unwrap();
        let r2 = run_suite(Suite::VectorTruncation, &cfg, top_k).unwrap();
        assert_eq!(r1.violations, r2.violations);
        assert_eq!(r1.worst_excess, r2.worst_excess);
    }

    #[test]
    fn trace_family_small() {
        let r = lower_bound_family(4, 2, 1e-9).unwrap();
        assert_eq!(r.len(), 4);
        assert!(r[0].rho_exact && !r[1].rho_exact);
        assert!(r.iter().all(|t| t.violations == 0 && t.steps > 0), "{r:?}");
    }

    #[test]
    fn rate_check_small() {
        let r = standard_rate_check(5, 3, 1e-10).unwrap();
        assert!(r.violations.is_empty(), "{:?}", r.violations);
        assert!(r.steps > 0);
    }
}
