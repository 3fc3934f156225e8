//! Calculators for the perturbation and convergence bounds checked at runtime.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sym_eigvals, sym_spectral_norm, SymMatrix};
use crate::solvers::{CardinalityProfile, ReferenceStats};
use crate::truncation::{truncation_error_bound, vector_truncation_penalty};

/// Largest `p` for exhaustive support enumeration.
pub const EXACT_MAX_P: usize = 12;
/// Largest `m` for exhaustive evaluation of `ρ(E, K)`.
pub const EXACT_MAX_M: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoMode {
    ExactBruteforce,
    UpperBound,
}

/// `ρ(E, K) = max ‖EQ‖₂` over orthonormal `Q` with `‖q_i‖₀ ≤ k_i`.
///
/// Any such `EQ` has `‖EQ‖₂ = ‖E x‖` for a unit `x` in the span of `Q`, whose
/// support has at most `Σk_i` entries. Conversely a unit `x` supported on
/// `s ≤ Σk_i` indices splits into disjointly supported columns. So the value
/// equals `ρ(E, s)` with `s = min(Σk_i, p)`.
pub fn rho_sparse(e: &SymMatrix, k: &CardinalityProfile, mode: RhoMode) -> Result<f64> {
    if mode == RhoMode::ExactBruteforce && k.m() > EXACT_MAX_M {
        return Err(Error::TooLarge(format!(
            "exact ρ(E,K) supports m <= {EXACT_MAX_M}, got {}",
            k.m()
        )));
    }
    let s = k.total().min(e.dim());
    rho_support_size(e, s, mode)
}

/// `ρ(E, s) = max ‖E[:, S]‖₂` over index sets with `|S| = s`.
pub fn rho_support_size(e: &SymMatrix, s: usize, mode: RhoMode) -> Result<f64> {
    let p = e.dim();
    if s == 0 {
        return Ok(0.0);
    }
    let s = s.min(p);
    if s == p {
        return Ok(sym_spectral_norm(e));
    }
    let g = SymMatrix::new(e.as_matrix().tr_matmul(e.as_matrix())?)?;
    match mode {
        RhoMode::ExactBruteforce => {
            if p > EXACT_MAX_P {
                return Err(Error::TooLarge(format!(
                    "exact ρ(E,s) supports p <= {EXACT_MAX_P}, got {p}"
                )));
            }
            let mut best = 0.0f64;
            for_each_subset(p, s, |idx| {
                let top = sym_eigvals(&g.principal(idx))[0];
                best = best.max(top);
            });
            Ok(best.max(0.0).sqrt())
        }
        RhoMode::UpperBound => {
            // ‖E[:,S]‖₂ ≤ ‖E[:,S]‖_F ≤ √(sum of the s largest squared column norms).
            let mut norms: Vec<f64> = (0..p).map(|j| g.get(j, j)).collect();
            norms.sort_by(|a, b| b.total_cmp(a));
            let fro = norms[..s].iter().sum::<f64>().sqrt();
            Ok(fro.min(sym_spectral_norm(e)))
        }
    }
}

fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Spectral quantities entering the bounds, normalized so `λ_1(Ā) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    /// `λ_{m+1}/λ_m`.
    pub gamma: f64,
    pub lambda_m: f64,
    pub rho_ek: f64,
    pub k_bar_max: usize,
    pub k_min: usize,
    pub p: usize,
    pub m: usize,
    /// Factor `λ_1` the raw spectrum and `ρ(E,K)` were divided by.
    pub scale: f64,
}

impl BoundInputs {
    /// Builds inputs from a descending spectrum of `Ā` and a raw `ρ(E, K)`.
    pub fn from_spectrum(
        spectrum: &[f64],
        m: usize,
        rho_ek: f64,
        k_bar_max: usize,
        k_min: usize,
        p: usize,
    ) -> Result<Self> {
        if m == 0 || spectrum.len() <= m {
            return Err(Error::InvalidArgument(format!(
                "need at least m + 1 = {} eigenvalues, got {}",
                m + 1,
                spectrum.len()
            )));
        }
        let scale = spectrum[0];
        if !(scale > 0.0) {
            return Err(Error::InvalidArgument("leading eigenvalue must be positive".into()));
        }
        let lambda_m = spectrum[m - 1] / scale;
        let gamma = (spectrum[m] / spectrum[m - 1]).abs();
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "spectral gap ratio γ = {gamma} must lie in (0, 1)"
            )));
        }
        Ok(Self {
            gamma,
            lambda_m,
            rho_ek: rho_ek / scale,
            k_bar_max,
            k_min,
            p,
            m,
            scale,
        })
    }

    pub fn with_rho(mut self, rho_ek_raw: f64) -> Self {
        self.rho_ek = rho_ek_raw / self.scale;
        self
    }

    pub fn with_k_min(mut self, k_min: usize) -> Self {
        self.k_min = k_min;
        self
    }
}

fn check_sin(s: f64, what: &str) -> Result<f64> {
    if !(0.0..1.0).contains(&s) {
        return Err(Error::VacuousBound(format!("{what}: ‖sinΘ‖₂ = {s} is not below 1")));
    }
    Ok(1.0 - s * s)
}

/// `δ_E = 4ρ(E,K) / (λ_m²(1 − ‖sinΘ(P,Q_{t−1})‖₂²))`.
pub fn delta_e(b: &BoundInputs, sin_theta_two_prev: f64) -> Result<f64> {
    let cos_sq = check_sin(sin_theta_two_prev, "delta_e")?;
    Ok(4.0 * b.rho_ek / (b.lambda_m * b.lambda_m * cos_sq))
}

pub fn delta_truncate(b: &BoundInputs) -> f64 {
    truncation_error_bound(b.k_bar_max, b.k_min, b.p, b.m)
}

/// `F / ((1 − γ²)F + mγ²)` with `F = ‖PᵀQ_{t−1}‖_F²`.
pub fn exact_progress_rhs(gamma: f64, m: usize, pq_prev_fro_sq: f64) -> f64 {
    let g2 = gamma * gamma;
    let denom = (1.0 - g2) * pq_prev_fro_sq + m as f64 * g2;
    if denom == 0.0 {
        0.0
    } else {
        pq_prev_fro_sq / denom
    }
}

/// Lower bound on `‖PᵀQ_t‖₂²` for one TOrth step.
pub fn block_lower_bound_rhs(b: &BoundInputs, pq_prev_fro_sq: f64, sin_theta_two_prev: f64) -> Result<f64> {
    Ok(exact_progress_rhs(b.gamma, b.m, pq_prev_fro_sq) - delta_e(b, sin_theta_two_prev)? - delta_truncate(b))
}

/// `γ·‖sinΘ_{t−1}‖_F / √(1 − ‖sinΘ_{t−1}‖₂²)`.
pub fn one_step_fro_bound(gamma: f64, sin_fro_prev: f64, sin_two_prev: f64) -> Result<f64> {
    let cos_sq = check_sin(sin_two_prev, "one-step bound")?;
    Ok(gamma * sin_fro_prev / cos_sq.sqrt())
}

/// `‖R_t⁻¹‖₂ ≤ 1 / (λ_m √(1 − ‖Y_{t−1}‖₂²))`, with `‖Y_{t−1}‖₂ = ‖sinΘ(P,Q_{t−1})‖₂`.
pub fn rt_inverse_bound(lambda_m: f64, sin_two_prev: f64) -> Result<f64> {
    let cos_sq = check_sin(sin_two_prev, "R_t inverse bound")?;
    Ok(1.0 / (lambda_m * cos_sq.sqrt()))
}

/// Uniform TPower bound on `|sin∠(p, q_t)|`.
///
/// `μ = γ/√(1 − (1−γ²)sin²θ_0)`, `δ_E = 4ρ(E,k)/(λ_1²(1 − sin²θ_0))` and
/// `δ_T = 2√(min{k̄, p−k}/p)`. With a single vector `λ_m = λ_1`.
pub fn tpower_uniform_bound(
    gamma: f64,
    lambda_1: f64,
    rho_ek: f64,
    k_bar: usize,
    k: usize,
    p: usize,
    sin0: f64,
    t: usize,
) -> Result<f64> {
    let cos_sq = check_sin(sin0, "TPower bound")?;
    let mu = gamma / (1.0 - (1.0 - gamma * gamma) * sin0 * sin0).sqrt();
    let de = 4.0 * rho_ek / (lambda_1 * lambda_1 * cos_sq);
    let dt = 2.0 * vector_truncation_penalty(k_bar, k, p);
    let mu_t = mu.powi(t as i32);
    let tail = if (1.0 - mu).abs() < 1e-15 {
        t as f64
    } else {
        (1.0 - mu_t) / (1.0 - mu)
    };
    Ok(mu_t * sin0 + (de + dt).sqrt() * tail)
}

/// `c = ‖PᵀQ‖_F² / ‖PᵀQ‖₂²`, measured instead of assumed.
pub fn measured_c(stats: &ReferenceStats) -> f64 {
    if stats.pq_two_sq == 0.0 {
        f64::NAN
    } else {
        stats.pq_fro_sq / stats.pq_two_sq
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{spectral_norm, Matrix};
    use crate::rng::{gaussian_matrix, seeded};
    use proptest::prelude::*;

    fn random_sym(seed: u64, p: usize) -> SymMatrix {
        SymMatrix::new(gaussian_matrix(&mut seeded(seed), p, p)).unwrap()
    }

    fn prof(k: &[usize], p: usize) -> CardinalityProfile {
        CardinalityProfile::new(k.to_vec(), p).unwrap()
    }

    #[test]
    fn rho_examples() {
        let e = SymMatrix::from_diag(&[3.0, 2.0, 1.0]);
        assert_eq!(rho_sparse(&e, &prof(&[1], 3), RhoMode::ExactBruteforce).unwrap(), 3.0);
        let z = SymMatrix::from_diag(&[0.0; 4]);
        assert_eq!(rho_sparse(&z, &prof(&[2], 4), RhoMode::ExactBruteforce).unwrap(), 0.0);
        assert_eq!(rho_sparse(&z, &prof(&[2], 4), RhoMode::UpperBound).unwrap(), 0.0);
    }

    #[test]
    fn rho_matches_pair_enumeration() {
        let e = random_sym(1, 8);
        let mut best = 0.0f64;
        for i in 0..8 {
            for j in i + 1..8 {
                let cols = e.as_matrix().select_columns(&[i, j]);
                best = best.max(spectral_norm(&cols));
            }
        }
        let got = rho_sparse(&e, &prof(&[2], 8), RhoMode::ExactBruteforce).unwrap();
        assert!((got - best).abs() <= 1e-12 * best);
    }

    #[test]
    fn rho_two_columns_matches_orthonormal_pair_search() {
        // m = 2, K = [1, 1]: any orthonormal pair of 1-sparse columns is a
        // pair of distinct signed unit vectors.
        let e = random_sym(2, 6);
        let mut best = 0.0f64;
        for i in 0..6 {
            for j in 0..6 {
                if i != j {
                    let q = Matrix::from_fn(6, 2, |r, c| {
                        f64::from(u8::from((c == 0 && r == i) || (c == 1 && r == j)))
                    });
                    best = best.max(spectral_norm(&e.as_matrix().matmul(&q).unwrap()));
                }
            }
        }
        let got = rho_sparse(&e, &prof(&[1, 1], 6), RhoMode::ExactBruteforce).unwrap();
        assert!((got - best).abs() <= 1e-12 * best);
    }

    #[test]
    fn exact_mode_limits() {
        let e = random_sym(3, 13);
        assert!(matches!(
            rho_sparse(&e, &prof(&[2], 13), RhoMode::ExactBruteforce),
            Err(Error::TooLarge(_))
        ));
        let e = random_sym(3, 6);
        assert!(rho_sparse(&e, &prof(&[1, 1, 1], 6), RhoMode::ExactBruteforce).is_err());
    }

    #[test]
    fn delta_e_examples() {
        let b = BoundInputs {
            gamma: 0.5,
            lambda_m: 1.0,
            rho_ek: 0.1,
            k_bar_max: 0,
            k_min: 1,
            p: 10,
            m: 1,
            scale: 1.0,
        };
        assert!((delta_e(&b, 0.0).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(delta_e(&BoundInputs { rho_ek: 0.0, ..b }, 0.3).unwrap(), 0.0);
        assert!(matches!(delta_e(&b, 1.0), Err(Error::VacuousBound(_))));
    }

    #[test]
    fn block_lower_bound_degenerate_cases() {
        let b = BoundInputs {
            gamma: 1.0 - 1e-12,
            lambda_m: 1.0,
            rho_ek: 0.0,
            k_bar_max: 0,
            k_min: 5,
            p: 5,
            m: 2,
            scale: 1.0,
        };
        assert!((block_lower_bound_rhs(&b, 1.2, 0.5).unwrap() - 0.6).abs() < 1e-9);
        let b = BoundInputs { gamma: 0.3, ..b };
        assert!((block_lower_bound_rhs(&b, 2.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn spectrum_normalization() {
        let b = BoundInputs::from_spectrum(&[2.0, 1.8, 0.2], 2, 0.4, 3, 5, 10).unwrap();
        assert!((b.lambda_m - 0.9).abs() < 1e-15);
        assert!((b.gamma - 0.2 / 1.8).abs() < 1e-15);
        assert!((b.rho_ek - 0.2).abs() < 1e-15);
        assert!(BoundInputs::from_spectrum(&[1.0, 1.0], 1, 0.0, 1, 1, 2).is_err());
    }

    #[test]
    fn tpower_bound_at_start_is_sin0_plus_penalty() {
        let b = tpower_uniform_bound(0.5, 1.0, 0.0, 0, 3, 10, 0.6, 0).unwrap();
        assert!((b - 0.6).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn upper_bound_dominates_exact(seed in any::<u64>(), p in 3usize..9, k in 1usize..4) {
            let e = random_sym(seed, p);
            let k = k.min(p);
            let ex = rho_support_size(&e, k, RhoMode::ExactBruteforce).unwrap();
            let ub = rho_support_size(&e, k, RhoMode::UpperBound).unwrap();
            prop_assert!(ub >= ex * (1.0 - 1e-12));
            prop_assert!(ex <= sym_spectral_norm(&e) * (1.0 + 1e-12));
        }
    }
}
