use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;
use torth_core::campaign::worker_pool;
use torth_core::evaluation::EXACT_MAX_P;
use torth_core::verify::{
    lower_bound_family, run_suite, standard_rate_check, top_k, top_k_minus_one, RateCheck, Suite, SuiteReport,
    TraceInstance, VerifyConfig,
};

use crate::output::{ensure_dir, num, write_report, write_rows};

/// Exit code when any check reports a violation.
pub const VIOLATIONS_FOUND: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    VectorTruncation,
    MatrixTruncation,
    SupportContainment,
    Thresholding,
    ExactProgress,
    Perturbation,
    OneStepFrobenius,
    RtInverse,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::VectorTruncation => Suite::VectorTruncation,
            SuiteArg::MatrixTruncation => Suite::MatrixTruncation,
            SuiteArg::SupportContainment => Suite::SupportContainment,
            SuiteArg::Thresholding => Suite::Thresholding,
            SuiteArg::ExactProgress => Suite::ExactProgress,
            SuiteArg::Perturbation => Suite::Perturbation,
            SuiteArg::OneStepFrobenius => Suite::OneStepFrobenius,
            SuiteArg::RtInverse => Suite::RtInverse,
        }
    }
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Randomized trials per suite.
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Suites to run; all of them by default.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub suite: Vec<SuiteArg>,
    /// Largest dimension drawn by the suites.
    #[arg(long, default_value_t = 40)]
    pub max_p: usize,
    /// Largest dimension for the suite that enumerates supports exactly.
    #[arg(long, default_value_t = 10)]
    pub exact_max_p: usize,
    /// Allowed excess relative to max(1, |bound|).
    #[arg(long, default_value_t = 1e-10)]
    pub slack: f64,
    /// Planted instances for the per-iteration TOrth lower-bound trace.
    #[arg(long, default_value_t = 50)]
    pub trace_instances: usize,
    /// Runs of plain orthogonal iteration for the rate check.
    #[arg(long, default_value_t = 100)]
    pub rate_runs: usize,
    /// Replace top-k truncation by a deliberately broken top-(k−1) to test the harness.
    #[arg(long)]
    pub inject_fault: bool,
    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,
}

#[derive(Serialize)]
struct Parameters {
    trials: usize,
    seed: u64,
    max_p: usize,
    exact_max_p: usize,
    slack: f64,
    trace_instances: usize,
    rate_runs: usize,
    inject_fault: bool,
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    parameters: Parameters,
    suites: &'a [SuiteReport],
    trace: &'a [TraceInstance],
    rate: &'a RateCheck,
    total_violations: usize,
}

pub fn run(args: &VerifyArgs) -> Result<u8> {
    if args.exact_max_p > EXACT_MAX_P {
        bail!(
            "--exact-max-p {} exceeds the enumeration limit {EXACT_MAX_P}",
            args.exact_max_p
        );
    }
    if args.max_p < 2 || args.exact_max_p < 2 {
        bail!("--max-p and --exact-max-p must be at least 2");
    }
    if !(args.slack >= 0.0) {
        bail!("--slack must be non-negative");
    }
    if args.trials == 0 {
        eprintln!("warning: --trials 0 runs no randomized trials; the suites pass vacuously");
    }
    let cfg = VerifyConfig {
        trials: args.trials,
        seed: args.seed,
        slack: args.slack,
        max_p: args.max_p,
        exact_max_p: args.exact_max_p,
    };
    let suites: Vec<Suite> = if args.suite.is_empty() {
        Suite::ALL.to_vec()
    } else {
        args.suite.iter().map(|&s| s.into()).collect()
    };
    let trunc = if args.inject_fault { top_k_minus_one } else { top_k };
    ensure_dir(&args.output_dir)?;
    let pool = worker_pool()?;
    let (reports, trace, rate) = pool.install(|| -> Result<_> {
        let reports: Vec<SuiteReport> = suites
            .iter()
            .map(|&s| run_suite(s, &cfg, trunc))
            .collect::<Result<_, _>>()?;
        let trace = lower_bound_family(args.trace_instances, args.seed, args.slack.max(1e-9))?;
        let rate = standard_rate_check(args.rate_runs, args.seed, args.slack)?;
        Ok((reports, trace, rate))
    })?;

    let header = ["check", "trials", "skipped", "violations", "worst_excess"].map(String::from);
    let mut rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.suite.to_string(),
                r.trials.to_string(),
                r.skipped.to_string(),
                r.violations.to_string(),
                num(r.worst_excess),
            ]
        })
        .collect();
    let trace_violations: usize = trace.iter().map(|t| t.violations).sum();
    let trace_vacuous: usize = trace.iter().map(|t| t.vacuous).sum();
    rows.push(vec![
        "torth_lower_bound_trace".into(),
        trace.iter().map(|t| t.steps).sum::<usize>().to_string(),
        trace_vacuous.to_string(),
        trace_violations.to_string(),
        String::new(),
    ]);
    rows.push(vec![
        "orthogonal_iteration_rate".into(),
        rate.steps.to_string(),
        rate.vacuous.to_string(),
        rate.violations.len().to_string(),
        String::new(),
    ]);
    write_rows(&args.output_dir.join("checks.csv"), &header, &rows)?;

    // Every violation with what is needed to replay it.
    let header = ["check", "trial", "seed", "iter", "lhs", "rhs", "excess"].map(String::from);
    let mut vrows: Vec<Vec<String>> = Vec::new();
    for r in &reports {
        for v in &r.examples {
            vrows.push(vec![
                v.suite.to_string(),
                v.trial.to_string(),
                v.seed.to_string(),
                String::new(),
                num(v.lhs),
                num(v.rhs),
                num(v.excess),
            ]);
        }
    }
    for t in trace.iter().filter(|t| t.violations > 0) {
        vrows.push(vec![
            "torth_lower_bound_trace".into(),
            t.instance.to_string(),
            t.seed.to_string(),
            String::new(),
            String::new(),
            String::new(),
            t.violations.to_string(),
        ]);
    }
    for v in &rate.violations {
        vrows.push(vec![
            "orthogonal_iteration_rate".into(),
            v.run.to_string(),
            v.seed.to_string(),
            v.iter.to_string(),
            num(v.sin_fro),
            num(v.bound),
            num(v.sin_fro - v.bound),
        ]);
    }
    write_rows(&args.output_dir.join("violations.csv"), &header, &vrows)?;

    let total = reports.iter().map(|r| r.violations).sum::<usize>() + trace_violations + rate.violations.len();
    write_report(
        &args.output_dir.join("verify_report.json"),
        "verify-bounds",
        &VerifyReport {
            parameters: Parameters {
                trials: args.trials,
                seed: args.seed,
                max_p: args.max_p,
                exact_max_p: args.exact_max_p,
                slack: args.slack,
                trace_instances: args.trace_instances,
                rate_runs: args.rate_runs,
                inject_fault: args.inject_fault,
            },
            suites: &reports,
            trace: &trace,
            rate: &rate,
            total_violations: total,
        },
    )?;

    for r in &reports {
        let tag = if r.passed() { "ok" } else { "VIOLATED" };
        println!(
            "{:<22} {tag:<9} {} violations in {} trials ({} skipped)",
            r.suite, r.violations, r.trials, r.skipped
        );
    }
    println!(
        "{:<22} {:<9} {trace_violations} violations in {} iterations",
        "torth_lower_bound",
        if trace_violations == 0 { "ok" } else { "VIOLATED" },
        trace.iter().map(|t| t.steps).sum::<usize>()
    );
    println!(
        "{:<22} {:<9} {} violations in {} steps",
        "orthogonal_iteration",
        if rate.violations.is_empty() { "ok" } else { "VIOLATED" },
        rate.violations.len(),
        rate.steps
    );
    Ok(if total == 0 { 0 } else { VIOLATIONS_FOUND })
}
