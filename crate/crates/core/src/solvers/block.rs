use rand::Rng;

use super::config::{CardinalityProfile, Method, Ortho, SolverConfig};
use super::report::{IterRecord, LevelSummary, ReferenceStats, RunReport, Termination};
use super::schedule::resolve_levels;
use crate::error::{Error, Result};
use crate::linalg::{householder_qr, norm2, spectral_norm, svd_small, Matrix, RANK_TOL};
use crate::operator::SymOperator;
use crate::rng::{gaussian_matrix, gaussian_vec, seeded};
use crate::subspace::{orthogonality_loss_of, sin_theta_fro, sin_theta_two, Basis, BasisKind};
use crate::truncation::truncate_columns;

/// Truncated Orthogonal Iteration: `Q_t = qr(Truncate(A·Q_{t−1}))`.
pub fn torth<O: SymOperator + ?Sized>(
    a: &O,
    q0: &Basis,
    k: &CardinalityProfile,
    cfg: &SolverConfig,
) -> Result<RunReport> {
    run_block(a, q0, k, cfg, Method::TOrth)
}

/// TOrth followed by per-column truncation and renormalization of the
/// orthonormal factor. The output columns are sparse but only approximately
/// orthogonal.
pub fn torth_t<O: SymOperator + ?Sized>(
    a: &O,
    q0: &Basis,
    k: &CardinalityProfile,
    cfg: &SolverConfig,
) -> Result<RunReport> {
    run_block(a, q0, k, cfg, Method::TOrthT)
}

/// Plain orthogonal iteration `Q_t = qr(A·Q_{t−1})`.
pub fn standard_orth_iter<O: SymOperator + ?Sized>(a: &O, q0: &Basis, cfg: &SolverConfig) -> Result<RunReport> {
    let full = CardinalityProfile::full(q0.p(), q0.m());
    run_block(a, q0, &full, cfg, Method::Standard)
}

/// Orthonormal `p×m` start from i.i.d. Gaussian entries.
pub fn random_start<R: Rng + ?Sized>(rng: &mut R, p: usize, m: usize) -> Result<Basis> {
    loop {
        match Basis::from_span(&gaussian_matrix(rng, p, m)) {
            Ok(b) => return Ok(b),
            Err(Error::RankDeficient { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
}

pub(crate) struct Orthonormalized {
    pub q: Matrix,
    pub r_sigma_min: f64,
}

pub(crate) fn orthonormalize(input: &Matrix, ortho: Ortho) -> Result<Orthonormalized> {
    match ortho {
        Ortho::Qr => {
            let f = householder_qr(input)?;
            let s = svd_small(&f.r).s;
            Ok(Orthonormalized {
                q: f.q,
                r_sigma_min: *s.last().expect("m >= 1"),
            })
        }
        Ortho::Polar => {
            let svd = svd_small(input);
            let smin = *svd.s.last().expect("m >= 1");
            if smin < RANK_TOL * input.frobenius_norm() || smin == 0.0 {
                let column = input
                    .columns()
                    .map(norm2)
                    .enumerate()
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .map(|(j, _)| j)
                    .unwrap_or(0);
                return Err(Error::RankDeficient { column });
            }
            Ok(Orthonormalized {
                q: svd.u.matmul_tr(&svd.v)?,
                r_sigma_min: smin,
            })
        }
    }
}

/// Replaces column `j` by a random vector orthogonal to the other columns,
/// scaled like them.
pub(crate) fn replace_column<R: Rng + ?Sized>(m: &mut Matrix, j: usize, rng: &mut R) {
    let (p, cols) = m.shape();
    let others: Vec<usize> = (0..cols).filter(|&c| c != j).collect();
    let norms: Vec<f64> = others.iter().map(|&c| norm2(m.col(c))).filter(|n| *n > 0.0).collect();
    let scale = if norms.is_empty() {
        1.0
    } else {
        norms.iter().sum::<f64>() / norms.len() as f64
    };
    let basis = if others.is_empty() {
        None
    } else {
        householder_qr(&m.select_columns(&others)).ok().map(|f| f.q)
    };
    loop {
        let mut v = gaussian_vec(rng, p);
        if let Some(b) = &basis {
            for _ in 0..2 {
                for c in b.columns() {
                    let d = crate::linalg::dot(c, &v);
                    crate::linalg::axpy(-d, c, &mut v);
                }
            }
        }
        let n = norm2(&v);
        if n > 1e-8 {
            v.iter_mut().for_each(|x| *x *= scale / n);
            m.set_col(j, &v);
            return;
        }
    }
}

pub(crate) fn reference_stats(reference: &Basis, q_orth: &Matrix, q_cols: &Matrix) -> Result<ReferenceStats> {
    let pq = reference.matrix().tr_matmul(q_orth)?;
    let pq_fro_sq = pq.frobenius_norm_sq();
    let s = svd_small(&pq).s;
    let qb = Basis::from_parts_unchecked(q_orth.clone(), BasisKind::Orthonormal);
    let column_cosines = reference
        .matrix()
        .columns()
        .zip(q_cols.columns())
        .map(|(p, q)| {
            let nq = norm2(q);
            if nq == 0.0 {
                0.0
            } else {
                crate::linalg::dot(p, q).abs() / nq
            }
        })
        .collect();
    Ok(ReferenceStats {
        sin_theta_fro: sin_theta_fro(reference, &qb)?,
        sin_theta_two: sin_theta_two(reference, &qb)?,
        pq_fro_sq,
        pq_two_sq: s[0] * s[0],
        column_cosines,
    })
}

/// Flips columns of `q` whose inner product with the matching column of
/// `prev` is negative.
pub(crate) fn align_signs(q: &mut Matrix, prev: &Matrix) {
    for j in 0..q.cols() {
        if crate::linalg::dot(q.col(j), prev.col(j)) < 0.0 {
            q.col_mut(j).iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Rows with at least one nonzero entry.
pub fn row_support(q: &Matrix) -> usize {
    (0..q.rows())
        .filter(|&i| (0..q.cols()).any(|j| q[(i, j)] != 0.0))
        .count()
}

fn step_distance_sq(prev: &Matrix, next: &Matrix) -> f64 {
    let g = prev.tr_matmul(next).expect("same shape");
    (prev.cols() as f64 - g.frobenius_norm_sq()).max(0.0)
}

pub(crate) fn run_block<O: SymOperator + ?Sized>(
    a: &O,
    q0: &Basis,
    k: &CardinalityProfile,
    cfg: &SolverConfig,
    method: Method,
) -> Result<RunReport> {
    cfg.validate()?;
    let (p, m) = (q0.p(), q0.m());
    if a.dim() != p {
        return Err(Error::mismatch("solver start basis", a.dim(), p));
    }
    if m > p {
        return Err(Error::mismatch("solver start basis", format!("m <= {p}"), m));
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
    let levels = match method {
        Method::Standard => vec![k.clone()],
        _ => resolve_levels(&cfg.schedule, k, p)?,
    };
    let truncating = method != Method::Standard;
    let mut rng = seeded(cfg.seed);

    let mut q = q0.matrix().clone();
    let mut q_orth = q0.orthonormalized()?.into_matrix();
    let initial_reference = match &cfg.reference {
        Some(r) => Some(reference_stats(r, &q_orth, &q)?),
        None => None,
    };

    let mut per_iter = Vec::new();
    let mut summaries = Vec::with_capacity(levels.len());
    let mut restarts = 0usize;
    let mut iter = 0usize;
    let mut exhausted = false;
    let n_levels = levels.len();

    'levels: for (li, level) in levels.iter().enumerate() {
        let is_final = li + 1 == n_levels;
        let budget = match cfg.level_iters {
            Some(n) if !is_final => n,
            _ => cfg.max_iter,
        };
        let fixed = cfg.level_iters.is_some() && !is_final;
        let mut level_iters = 0usize;
        let mut termination = Termination::MaxIter;

        while level_iters < budget {
            let p_mat = a.apply(&q)?;
            let mut restarts_this_step = 0usize;
            let mut qr_in = if truncating && !(method == Method::TOrthT && cfg.qr_on_untruncated) {
                let t = truncate_columns(&p_mat, level.as_slice())?;
                let mut mat = t.matrix;
                for &j in &t.zero_columns {
                    restarts += 1;
                    restarts_this_step += 1;
                    if restarts > cfg.max_restarts {
                        exhausted = true;
                        break;
                    }
                    replace_column(&mut mat, j, &mut rng);
                }
                mat
            } else {
                p_mat
            };
            if exhausted {
                summaries.push(LevelSummary {
                    profile: level.clone(),
                    iterations: level_iters,
                    termination: Termination::RankDeficientRecovered,
                });
                break 'levels;
            }
            let orth = loop {
                match orthonormalize(&qr_in, cfg.ortho) {
                    Ok(o) => break o,
                    Err(Error::RankDeficient { column }) => {
                        restarts += 1;
                        restarts_this_step += 1;
                        if restarts > cfg.max_restarts {
                            summaries.push(LevelSummary {
                                profile: level.clone(),
                                iterations: level_iters,
                                termination: Termination::RankDeficientRecovered,
                            });
                            exhausted = true;
                            break 'levels;
                        }
                        replace_column(&mut qr_in, column, &mut rng);
                    }
                    Err(e) => return Err(e),
                }
            };

            let (q_next, q_next_orth, gap) = if method == Method::TOrthT {
                let t = truncate_columns(&orth.q, level.as_slice())?;
                let mut sparse = t.matrix;
                for j in 0..m {
                    let n = norm2(sparse.col(j));
                    sparse.col_mut(j).iter_mut().for_each(|x| *x /= n);
                }
                let gap = sparse.sub(&orth.q)?.frobenius_norm_sq();
                align_signs(&mut sparse, &q);
                let span = householder_qr(&sparse).map(|f| f.q).unwrap_or_else(|_| orth.q.clone());
                (sparse, span, Some(gap))
            } else if method == Method::TPower {
                let mut v = orth.q;
                align_signs(&mut v, &q);
                (v.clone(), v, None)
            } else {
                (orth.q.clone(), orth.q, None)
            };

            let residual = spectral_norm(&q_next.sub(&q)?);
            let step = step_distance_sq(&q_orth, &q_next_orth);
            iter += 1;
            level_iters += 1;
            let reference = match &cfg.reference {
                Some(r) => Some(reference_stats(r, &q_next_orth, &q_next)?),
                None => None,
            };
            per_iter.push(IterRecord {
                iter,
                level: li,
                residual,
                step_sin_theta_fro_sq: step,
                orthogonality_loss: orthogonality_loss_of(&q_next),
                row_support: row_support(&q_next),
                post_truncation_gap: gap,
                r_sigma_min: Some(orth.r_sigma_min),
                restarts: restarts_this_step,
                reference,
            });
            q = q_next;
            q_orth = q_next_orth;

            if residual < cfg.tol {
                termination = Termination::Converged;
                if !fixed {
                    break;
                }
            } else if fixed {
                termination = Termination::MaxIter;
            }
        }
        summaries.push(LevelSummary {
            profile: level.clone(),
            iterations: level_iters,
            termination,
        });
    }

    let termination = if exhausted {
        Termination::RankDeficientRecovered
    } else {
        summaries.last().map(|s| s.termination).unwrap_or(Termination::MaxIter)
    };
    let kind = if method == Method::TOrthT {
        BasisKind::SparseUnit
    } else {
        BasisKind::Orthonormal
    };
    Ok(RunReport {
        method,
        final_basis: Basis::from_parts_unchecked(q, kind),
        iterations: iter,
        termination,
        restarts,
        levels: summaries,
        initial_row_support: row_support(q0.matrix()),
        initial_reference,
        per_iter,
    })
}
