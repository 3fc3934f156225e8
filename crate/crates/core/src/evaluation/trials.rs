use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::subspace::column_inner_products;
use crate::truncation::{SupportSet, NUMERICAL_SUPPORT_TOL};

pub const SUCCESS_THRESHOLD: f64 = 0.99;

/// Success criterion for one trial: every `|v_iᵀu_i|` above `threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessRule {
    pub threshold: f64,
}

impl Default for SuccessRule {
    fn default() -> Self {
        Self {
            threshold: SUCCESS_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub inner_products: Vec<f64>,
    pub success: bool,
    pub recovered: bool,
}

impl TrialOutcome {
    /// Compares estimated components column-by-column with the planted ones.
    pub fn evaluate(truth: &Matrix, supports: &[SupportSet], estimate: &Matrix, rule: SuccessRule) -> Result<Self> {
        if supports.len() != truth.cols() {
            return Err(Error::mismatch("supports", truth.cols(), supports.len()));
        }
        let inner_products = column_inner_products(truth, estimate)?;
        let success = inner_products.iter().all(|c| *c > rule.threshold);
        let recovered = estimate
            .columns()
            .zip(supports)
            .all(|(col, s)| SupportSet::of_significant(col, NUMERICAL_SUPPORT_TOL) == *s);
        Ok(Self {
            inner_products,
            success,
            recovered,
        })
    }
}

/// Running totals; merging is associative and commutative.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrialAccumulator {
    trials: usize,
    successes: usize,
    recoveries: usize,
    sums: Vec<f64>,
}

impl TrialAccumulator {
    pub fn push(&mut self, o: &TrialOutcome) {
        if self.sums.len() < o.inner_products.len() {
            self.sums.resize(o.inner_products.len(), 0.0);
        }
        for (s, c) in self.sums.iter_mut().zip(&o.inner_products) {
            *s += c;
        }
        self.trials += 1;
        self.successes += usize::from(o.success);
        self.recoveries += usize::from(o.recovered);
    }

    pub fn merge(mut self, other: Self) -> Self {
        if self.sums.len() < other.sums.len() {
            self.sums.resize(other.sums.len(), 0.0);
        }
        for (s, o) in self.sums.iter_mut().zip(other.sums) {
            *s += o;
        }
        self.trials += other.trials;
        self.successes += other.successes;
        self.recoveries += other.recoveries;
        self
    }

    pub fn finish(&self) -> Result<TrialStats> {
        if self.trials == 0 {
            return Err(Error::Empty);
        }
        let n = self.trials as f64;
        Ok(TrialStats {
            trials: self.trials,
            success_rate: self.successes as f64 / n,
            recovery_rate: self.recoveries as f64 / n,
            mean_inner_products: self.sums.iter().map(|s| s / n).collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub trials: usize,
    pub success_rate: f64,
    pub recovery_rate: f64,
    /// Averaged over all trials, failures included.
    pub mean_inner_products: Vec<f64>,
}

pub fn trial_stats(outcomes: &[TrialOutcome]) -> Result<TrialStats> {
    let mut acc = TrialAccumulator::default();
    for o in outcomes {
        acc.push(o);
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn outcome(ip: &[f64], recovered: bool) -> TrialOutcome {
        TrialOutcome {
            inner_products: ip.to_vec(),
            success: ip.iter().all(|c| *c > SUCCESS_THRESHOLD),
            recovered,
        }
    }

    #[test]
    fn all_success_gives_unit_rates() {
        let s = trial_stats(&[outcome(&[1.0, 0.995], true), outcome(&[0.999, 1.0], true)]).unwrap();
        assert_eq!(s.success_rate, 1.0);
        assert_eq!(s.recovery_rate, 1.0);
        assert!((s.mean_inner_products[0] - 0.9995).abs() < 1e-15);
    }

    #[test]
    fn half_success() {
        let s = trial_stats(&[outcome(&[1.0], true), outcome(&[0.5], false)]).unwrap();
        assert_eq!(s.success_rate, 0.5);
        assert_eq!(s.recovery_rate, 0.5);
        assert_eq!(s.mean_inner_products, vec![0.75]);
    }

    #[test]
    fn empty_is_an_error() {
        assert!(matches!(trial_stats(&[]), Err(Error::Empty)));
    }

    #[test]
    fn evaluate_checks_threshold_and_supports() {
        let truth = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]).unwrap();
        let supports = [
            SupportSet::new(vec![0], 3).unwrap(),
            SupportSet::new(vec![1], 3).unwrap(),
        ];
        let exact = Matrix::from_rows(&[[-1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]).unwrap();
        let o = TrialOutcome::evaluate(&truth, &supports, &exact, SuccessRule::default()).unwrap();
        assert!(o.success && o.recovered);

        let c = 0.999f64;
        let leaky = Matrix::from_rows(&[[c, 0.0], [0.0, 1.0], [(1.0 - c * c).sqrt(), 0.0]]).unwrap();
        let o = TrialOutcome::evaluate(&truth, &supports, &leaky, SuccessRule::default()).unwrap();
        assert!(o.success && !o.recovered);
        let o = TrialOutcome::evaluate(&truth, &supports, &leaky, SuccessRule { threshold: 0.9995 }).unwrap();
        assert!(!o.success);
    }

    proptest! {
        #[test]
        fn aggregation_is_order_independent(
            ips in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0, any::<bool>()), 1..40),
            split in 0usize..40,
        ) {
            let outs: Vec<_> = ips.iter().map(|(a, b, r)| outcome(&[*a, *b], *r)).collect();
            let whole = trial_stats(&outs).unwrap();
            let k = split.min(outs.len());
            let mut left = TrialAccumulator::default();
            let mut right = TrialAccumulator::default();
            outs[..k].iter().for_each(|o| left.push(o));
            outs[k..].iter().for_each(|o| right.push(o));
            let merged = right.merge(left).finish().unwrap();
            prop_assert_eq!(whole.success_rate, merged.success_rate);
            prop_assert_eq!(whole.recovery_rate, merged.recovery_rate);
            for (a, b) in whole.mean_inner_products.iter().zip(&merged.mean_inner_products) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
            prop_assert!((0.0..=1.0).contains(&whole.success_rate));
        }
    }
}
