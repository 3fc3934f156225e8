//! Repeated randomly initialized solver runs on a fixed instance.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evaluation::{SuccessRule, TrialAccumulator, TrialOutcome, TrialStats};
use crate::operator::SymOperator;
use crate::rng::{derive_seed, seeded};
use crate::solvers::{random_start, solve, CardinalityProfile, Method, SolverConfig, Termination};
use crate::subspace::Basis;
use crate::truncation::SupportSet;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "SPARSE_SUBSPACE_THREADS";

/// Worker pool sized by [`THREADS_ENV`], or rayon's default when unset.
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(Error::InvalidArgument(format!("{THREADS_ENV} must be positive")));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::InvalidArgument(e.to_string()))
}

#[derive(Debug, Clone)]
pub struct CampaignConfig {
    pub methods: Vec<Method>,
    pub trials: usize,
    pub seed: u64,
    pub k: CardinalityProfile,
    pub solver: SolverConfig,
    pub rule: SuccessRule,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub method: Method,
    pub trial: usize,
    /// Seed of the random start and of the solver's own randomness.
    pub seed: u64,
    pub iterations: usize,
    pub termination: Termination,
    pub outcome: TrialOutcome,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    pub stats: TrialStats,
    pub mean_iterations: f64,
    pub converged: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CampaignResult {
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<MethodSummary>,
}

impl CampaignResult {
    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }
}

/// Trial `i` starts every method from the same random basis, drawn from
/// `derive_seed(seed, 0, i)`, so results do not depend on scheduling.
pub fn run_campaign<O: SymOperator>(
    a: &O,
    truth: &Basis,
    supports: &[SupportSet],
    cfg: &CampaignConfig,
) -> Result<CampaignResult> {
    let (p, m) = (truth.p(), truth.m());
    if a.dim() != p {
        return Err(Error::mismatch("campaign operator", p, a.dim()));
    }
    let jobs: Vec<(usize, Method)> = (0..cfg.trials)
        .flat_map(|t| cfg.methods.iter().map(move |&me| (t, me)))
        .collect();
    let records: Vec<TrialRecord> = jobs
        .into_par_iter()
        .map(|(trial, method)| {
            let seed = derive_seed(cfg.seed, 0, trial as u64);
            let q0 = random_start(&mut seeded(seed), p, m)?;
            let solver = cfg.solver.clone().with_seed(seed);
            let run = solve(method, a, &q0, &cfg.k, &solver)?;
            let outcome = TrialOutcome::evaluate(truth.matrix(), supports, run.components.matrix(), cfg.rule)?;
            Ok(TrialRecord {
                method,
                trial,
                seed,
                iterations: run.iterations,
                termination: run.termination,
                outcome,
            })
        })
        .collect::<Result<_>>()?;
    let summaries = cfg
        .methods
        .iter()
        .map(|&method| {
            let mut acc = TrialAccumulator::default();
            let (mut iters, mut converged, mut n) = (0usize, 0usize, 0usize);
            for r in records.iter().filter(|r| r.method == method) {
                acc.push(&r.outcome);
                iters += r.iterations;
                converged += usize::from(r.termination == Termination::Converged);
                n += 1;
            }
            Ok(MethodSummary {
                method,
                stats: acc.finish()?,
                mean_iterations: iters as f64 / n as f64,
                converged,
            })
        })
        .collect::<Result<_>>()?;
    Ok(CampaignResult { records, summaries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{planted_instance, OverlapCase, PlantedParams};

    fn setup(trials: usize) -> (crate::datagen::PlantedInstance, CampaignConfig) {
        let inst = planted_instance(&PlantedParams::simulation(60, OverlapCase::Disjoint, 0.05, 1)).unwrap();
        let cfg = CampaignConfig {
            methods: vec![Method::TOrth, Method::TPower],
            trials,
            seed: 4,
            k: CardinalityProfile::uniform(10, 3, 60).unwrap(),
            solver: SolverConfig::default(),
            rule: SuccessRule::default(),
        };
        (inst, cfg)
    }

    #[test]
    fn results_do_not_depend_on_worker_count() {
        let (inst, cfg) = setup(6);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one
            .install(|| run_campaign(&inst.a, &inst.truth, &inst.supports, &cfg))
            .unwrap();
        let b = three
            .install(|| run_campaign(&inst.a, &inst.truth, &inst.supports, &cfg))
            .unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn single_trial_summary_equals_outcome() {
        let (inst, cfg) = setup(1);
        let r = run_campaign(&inst.a, &inst.truth, &inst.supports, &cfg).unwrap();
        for s in &r.summaries {
            let rec = r.records.iter().find(|x| x.method == s.method).unwrap();
            assert_eq!(s.stats.mean_inner_products, rec.outcome.inner_products);
            assert_eq!(s.stats.success_rate, f64::from(u8::from(rec.outcome.success)));
        }
    }

    #[test]
    fn easy_instance_is_solved() {
        let (inst, cfg) = setup(4);
        let r = run_campaign(&inst.a, &inst.truth, &inst.supports, &cfg).unwrap();
        assert_eq!(r.summary(Method::TOrth).unwrap().stats.success_rate, 1.0);
        assert_eq!(r.summary(Method::TOrth).unwrap().stats.recovery_rate, 1.0);
    }
}
