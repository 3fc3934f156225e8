use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;
use torth_core::campaign::{run_campaign, worker_pool, CampaignConfig, MethodSummary};
use torth_core::datagen::{
    denoising_signals, pitprops, planted_instance, to_grid, OverlapCase, PlantedParams, DEFAULT_K_BAR,
    PITPROPS_VARIABLES, SIGNAL_DIM,
};
use torth_core::evaluation::{column_supports, cpev, matched_jaccard, prop_adjusted_variance, DataOrCov, SuccessRule};
use torth_core::linalg::sym_eig;
use torth_core::rng::{derive_seed, seeded};
use torth_core::solvers::{random_start, solve, torth_t, CardinalityProfile, Method, Schedule, SolverConfig};
use torth_core::truncation::{supp, truncate};
use torth_core::{Basis, GramOperator, Matrix};

use crate::output::{ensure_dir, num, numbered, opt, write_report, write_rows};
use crate::solve::{loadings_rows, trace_rows, Init};
use crate::{parse_method, SolverArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    /// Planted sparse eigenvectors with randomly initialized trials.
    Simulated,
    /// Sparse loadings of the pit-prop correlations.
    Pitprops,
    /// Structured dictionary recovery on a 20×20 grid.
    Denoising,
    /// TOrthT on small planted problems under a fixed cardinality schedule.
    #[value(name = "toy_overlap", alias = "toy-overlap")]
    ToyOverlap,
}

impl Experiment {
    fn name(self) -> &'static str {
        match self {
            Experiment::Simulated => "simulated",
            Experiment::Pitprops => "pitprops",
            Experiment::Denoising => "denoising",
            Experiment::ToyOverlap => "toy_overlap",
        }
    }

    /// Accepted `--param` keys with their defaults.
    fn schema(self) -> &'static [(&'static str, &'static str)] {
        match self {
            Experiment::Simulated => &[("p", "1000"), ("rho", "0.22"), ("instance_seed", "0")],
            Experiment::Pitprops => &[],
            Experiment::Denoising => &[("n", "250"), ("sigma", "0.1")],
            Experiment::ToyOverlap => &[("p", "100"), ("rho", "0.21"), ("level_iters", "20")],
        }
    }
}

#[derive(Args, Debug)]
pub struct CampaignArgs {
    #[arg(long, value_enum)]
    pub experiment: Experiment,
    /// Randomly initialized trials per method.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Overlap case; the toy study runs all three when omitted.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub case: Option<u8>,
    /// Comma-separated subset of torth, torth_t, tpower, standard.
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    pub methods: Vec<Method>,
    /// Cardinality for every component, or one value per component.
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<usize>,
    /// Experiment parameter as `key=value`; repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
}

/// A named experiment with its validated parameters.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSpec {
    pub name: &'static str,
    pub parameters: BTreeMap<String, String>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub trials: usize,
}

impl ExperimentSpec {
    /// Fills defaults and rejects unknown keys or unparsable values.
    pub fn new(exp: Experiment, raw: &[String], output_dir: &Path, seed: u64, trials: usize) -> Result<Self> {
        let schema = exp.schema();
        let mut parameters: BTreeMap<String, String> =
            schema.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        for kv in raw {
            let Some((k, v)) = kv.split_once('=') else {
                bail!("--param expects key=value, got '{kv}'");
            };
            if !schema.iter().any(|(name, _)| *name == k) {
                let known: Vec<&str> = schema.iter().map(|(n, _)| *n).collect();
                bail!("unknown parameter '{k}' for {}; accepted: {known:?}", exp.name());
            }
            parameters.insert(k.to_string(), v.to_string());
        }
        let spec = Self {
            name: exp.name(),
            parameters,
            output_dir: output_dir.to_path_buf(),
            seed,
            trials,
        };
        for (k, _) in schema {
            match *k {
                "p" | "n" | "level_iters" => {
                    let v: usize = spec.get(k)?;
                    if v == 0 {
                        bail!("parameter {k} must be positive");
                    }
                }
                "instance_seed" => {
                    spec.get::<u64>(k)?;
                }
                _ => {
                    let v: f64 = spec.get(k)?;
                    if !(v.is_finite() && v >= 0.0) {
                        bail!("parameter {k} must be a finite non-negative number");
                    }
                }
            }
        }
        Ok(spec)
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self
            .parameters
            .get(key)
            .with_context(|| format!("missing parameter {key}"))?;
        raw.parse()
            .map_err(|_| anyhow::anyhow!("parameter {key} has invalid value '{raw}'"))
    }
}

fn uniform_or_list(k: &[usize], default: usize, m: usize, p: usize) -> Result<CardinalityProfile> {
    let ks = match k {
        [] => vec![default; m],
        [single] => vec![*single; m],
        ks if ks.len() == m => ks.to_vec(),
        ks => bail!("--k lists {} values but the experiment has {m} components", ks.len()),
    };
    Ok(CardinalityProfile::new(ks, p)?)
}

pub fn run(args: &CampaignArgs) -> Result<u8> {
    let spec = ExperimentSpec::new(
        args.experiment,
        &args.params,
        &args.output_dir,
        args.solver.seed,
        args.trials,
    )?;
    let cfg = args.solver.config()?;
    ensure_dir(&args.output_dir)?;
    let pool = worker_pool()?;
    pool.install(|| match args.experiment {
        Experiment::Simulated => simulated(args, &spec, &cfg),
        Experiment::Pitprops => pitprops_study(args, &spec, &cfg),
        Experiment::Denoising => denoising(args, &spec, &cfg),
        Experiment::ToyOverlap => toy(args, &spec, &cfg),
    })
}

fn methods_or(args: &CampaignArgs, default: &[Method]) -> Vec<Method> {
    if args.methods.is_empty() {
        default.to_vec()
    } else {
        args.methods.clone()
    }
}

#[derive(Serialize)]
struct SimulatedReport<'a> {
    spec: &'a ExperimentSpec,
    case: u8,
    k: &'a [usize],
    summaries: &'a [MethodSummary],
}

fn simulated(args: &CampaignArgs, spec: &ExperimentSpec, solver: &SolverConfig) -> Result<u8> {
    let case = OverlapCase::from_number(args.case.unwrap_or(1))?;
    let p: usize = spec.get("p")?;
    let params = PlantedParams::simulation(p, case, spec.get("rho")?, spec.get("instance_seed")?);
    let inst = planted_instance(&params)?;
    let m = inst.truth.m();
    let k = uniform_or_list(&args.k, DEFAULT_K_BAR, m, p)?;
    let cfg = CampaignConfig {
        methods: methods_or(args, &[Method::TPower, Method::TOrth, Method::TOrthT, Method::Standard]),
        trials: args.trials,
        seed: spec.seed,
        k: k.clone(),
        solver: solver.clone(),
        rule: SuccessRule::default(),
    };
    if cfg.trials == 0 {
        bail!("--trials must be positive");
    }
    let result = run_campaign(&inst.a, &inst.truth, &inst.supports, &cfg)?;

    let header: Vec<String> = [
        "method",
        "trial",
        "seed",
        "iterations",
        "termination",
        "success",
        "recovered",
    ]
    .map(String::from)
    .into_iter()
    .chain(numbered("inner_product_", m))
    .collect();
    let rows: Vec<Vec<String>> = result
        .records
        .iter()
        .map(|r| {
            let mut row = vec![
                r.method.name().to_string(),
                r.trial.to_string(),
                r.seed.to_string(),
                r.iterations.to_string(),
                serde_json::to_value(r.termination)?
                    .as_str()
                    .unwrap_or_default()
                    .to_string(),
                r.outcome.success.to_string(),
                r.outcome.recovered.to_string(),
            ];
            row.extend(r.outcome.inner_products.iter().map(|&x| num(x)));
            Ok(row)
        })
        .collect::<Result<_>>()?;
    write_rows(&args.output_dir.join("trials.csv"), &header, &rows)?;
    write_summary(&args.output_dir.join("summary.csv"), &result.summaries, m)?;
    write_report(
        &args.output_dir.join("summary.json"),
        "campaign",
        &SimulatedReport {
            spec,
            case: case.number(),
            k: k.as_slice(),
            summaries: &result.summaries,
        },
    )?;

    // Residual traces of the first trial, one file per method.
    let q0 = random_start(&mut seeded(derive_seed(spec.seed, 0, 0)), p, m)?;
    for &method in &cfg.methods {
        let run_cfg = solver
            .clone()
            .with_seed(derive_seed(spec.seed, 0, 0))
            .with_reference(inst.truth.clone());
        let run = solve(method, &inst.a, &q0, &k, &run_cfg)?;
        let (h, rows) = trace_rows(&run);
        write_rows(
            &args.output_dir.join(format!("trace_trial0_{}.csv", method.name())),
            &h,
            &rows,
        )?;
    }

    println!("case {} p={p} k={k} trials={}", case.number(), args.trials);
    println!(
        "{:<10} {:>8} {:>9} {:>10}  mean inner products",
        "method", "success", "recovery", "iterations"
    );
    for s in &result.summaries {
        println!(
            "{:<10} {:>7.1}% {:>8.1}% {:>10.1}  {:.4?}",
            s.method.name(),
            100.0 * s.stats.success_rate,
            100.0 * s.stats.recovery_rate,
            s.mean_iterations,
            s.stats.mean_inner_products
        );
    }
    Ok(0)
}

fn write_summary(path: &Path, summaries: &[MethodSummary], m: usize) -> Result<()> {
    let header: Vec<String> = [
        "method",
        "trials",
        "success_rate",
        "recovery_rate",
        "mean_iterations",
        "converged",
    ]
    .map(String::from)
    .into_iter()
    .chain(numbered("mean_inner_product_", m))
    .collect();
    let rows: Vec<Vec<String>> = summaries
        .iter()
        .map(|s| {
            let mut row = vec![
                s.method.name().to_string(),
                s.stats.trials.to_string(),
                num(s.stats.success_rate),
                num(s.stats.recovery_rate),
                num(s.mean_iterations),
                s.converged.to_string(),
            ];
            row.extend(s.stats.mean_inner_products.iter().map(|&x| num(x)));
            row
        })
        .collect();
    write_rows(path, &header, &rows)
}

const PITPROPS_PROFILES: [[usize; 6]; 2] = [[7, 2, 4, 3, 5, 4], [6, 2, 1, 2, 1, 1]];

#[derive(Serialize)]
struct PitpropsRow {
    method: Method,
    k: Vec<usize>,
    nnz: usize,
    prop_adjusted_variance: f64,
    cpev: f64,
    iterations: usize,
    termination: torth_core::solvers::Termination,
}

#[derive(Serialize)]
struct PitpropsReport<'a> {
    spec: &'a ExperimentSpec,
    init: Init,
    results: &'a [PitpropsRow],
}

/// Deterministic: every method starts from the six leading eigenvectors.
fn pitprops_study(args: &CampaignArgs, spec: &ExperimentSpec, solver: &SolverConfig) -> Result<u8> {
    let cov = pitprops();
    let m = 6;
    let pca = Basis::orthonormal(sym_eig(&cov).vectors.leading_columns(m))?;
    let profiles: Vec<CardinalityProfile> = if args.k.is_empty() {
        PITPROPS_PROFILES
            .iter()
            .map(|k| CardinalityProfile::new(k.to_vec(), cov.dim()))
            .collect::<Result<_, _>>()?
    } else {
        vec![uniform_or_list(&args.k, 1, m, cov.dim())?]
    };
    let labels: Vec<String> = PITPROPS_VARIABLES.iter().map(|s| s.to_string()).collect();
    let mut results = Vec::new();
    for method in methods_or(args, &[Method::TOrthT, Method::TOrth]) {
        for (i, k) in profiles.iter().enumerate() {
            let run = solve(method, &cov, &pca, k, solver)?;
            let v = run.components.matrix();
            let (h, rows) = loadings_rows(&labels, &run.components);
            write_rows(
                &args
                    .output_dir
                    .join(format!("loadings_{}_{}.csv", method.name(), i + 1)),
                &h,
                &rows,
            )?;
            results.push(PitpropsRow {
                method,
                k: k.as_slice().to_vec(),
                nnz: column_supports(v).iter().map(|s| s.k()).sum(),
                prop_adjusted_variance: prop_adjusted_variance(DataOrCov::Cov(&cov), v)?,
                cpev: cpev(DataOrCov::Cov(&cov), v)?,
                iterations: run.iterations,
                termination: run.termination,
            });
        }
    }
    let header = ["method", "k", "nnz", "prop_adjusted_variance", "cpev", "iterations"].map(String::from);
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| {
            vec![
                r.method.name().to_string(),
                format!("{:?}", r.k),
                r.nnz.to_string(),
                num(r.prop_adjusted_variance),
                num(r.cpev),
                r.iterations.to_string(),
            ]
        })
        .collect();
    write_rows(&args.output_dir.join("summary.csv"), &header, &rows)?;
    write_report(
        &args.output_dir.join("summary.json"),
        "campaign",
        &PitpropsReport {
            spec,
            init: Init::Pca,
            results: &results,
        },
    )?;
    for r in &results {
        println!(
            "{:<8} K={:?} nnz {:>2} adjusted variance {:.4} cpev {:.4}",
            r.method.name(),
            r.k,
            r.nnz,
            r.prop_adjusted_variance,
            r.cpev
        );
    }
    Ok(0)
}

#[derive(Serialize)]
struct DenoisingRow {
    estimator: String,
    trial: Option<usize>,
    jaccard: Vec<f64>,
}

#[derive(Serialize)]
struct DenoisingReport<'a> {
    spec: &'a ExperimentSpec,
    k: &'a [usize],
    results: &'a [DenoisingRow],
}

fn write_grids(dir: &Path, name: &str, v: &Matrix) -> Result<()> {
    for j in 0..v.cols() {
        let rows: Vec<Vec<String>> = to_grid(v.col(j))
            .into_iter()
            .map(|r| r.iter().map(|&x| num(x)).collect())
            .collect();
        let mut w = crate::output::csv_writer(&dir.join(format!("grid_{name}_{}.csv", j + 1)))?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    Ok(())
}

fn denoising(args: &CampaignArgs, spec: &ExperimentSpec, solver: &SolverConfig) -> Result<u8> {
    let n: usize = spec.get("n")?;
    let sigma: f64 = spec.get("sigma")?;
    if args.trials == 0 {
        bail!("--trials must be positive");
    }
    let d = denoising_signals(n, sigma, spec.seed)?;
    let m = d.truth.m();
    let op = GramOperator::covariance(d.data.clone());
    let cov = op.materialize();
    let k = uniform_or_list(&args.k, 100, m, SIGNAL_DIM)?;
    let dir = &args.output_dir;

    write_grids(dir, "truth", d.truth.matrix())?;
    let pca = sym_eig(&cov).vectors.leading_columns(m);
    write_grids(dir, "pca", &pca)?;
    let post_supports: Vec<_> = pca
        .columns()
        .zip(k.as_slice())
        .map(|(c, &kj)| supp(c, kj))
        .collect::<Result<_, _>>()?;
    let post_cols: Vec<Vec<f64>> = pca.columns().zip(&post_supports).map(|(c, s)| truncate(c, s)).collect();
    write_grids(dir, "pca_truncated", &Matrix::from_columns(&post_cols)?)?;

    let mut results = vec![DenoisingRow {
        estimator: "pca_truncated".into(),
        trial: None,
        jaccard: matched_jaccard(&post_supports, &d.supports)?,
    }];
    for method in methods_or(args, &[Method::TOrth]) {
        for trial in 0..args.trials {
            let seed = derive_seed(spec.seed, 0, trial as u64);
            let q0 = random_start(&mut seeded(seed), SIGNAL_DIM, m)?;
            let run = solve(method, &op, &q0, &k, &solver.clone().with_seed(seed))?;
            if trial == 0 {
                write_grids(dir, method.name(), run.components.matrix())?;
            }
            results.push(DenoisingRow {
                estimator: method.name().into(),
                trial: Some(trial),
                jaccard: matched_jaccard(&column_supports(run.components.matrix()), &d.supports)?,
            });
        }
    }
    let header: Vec<String> = ["estimator", "trial"]
        .map(String::from)
        .into_iter()
        .chain(numbered("jaccard_", m))
        .collect();
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| {
            [r.estimator.clone(), r.trial.map(|t| t.to_string()).unwrap_or_default()]
                .into_iter()
                .chain(r.jaccard.iter().map(|&x| num(x)))
                .collect()
        })
        .collect();
    write_rows(&dir.join("jaccard.csv"), &header, &rows)?;
    write_report(
        &dir.join("summary.json"),
        "campaign",
        &DenoisingReport {
            spec,
            k: k.as_slice(),
            results: &results,
        },
    )?;
    for r in results.iter().filter(|r| r.trial.is_none_or(|t| t == 0)) {
        println!("{:<14} matched Jaccard {:.3?}", r.estimator, r.jaccard);
    }
    Ok(0)
}

#[derive(Serialize)]
struct ToyRow {
    case: u8,
    iterations: usize,
    termination: torth_core::solvers::Termination,
    orthogonality_loss: f64,
    post_truncation_gap: Option<f64>,
    sin_theta_fro: Option<f64>,
}

#[derive(Serialize)]
struct ToyReport<'a> {
    spec: &'a ExperimentSpec,
    levels: Vec<usize>,
    results: &'a [ToyRow],
}

/// TOrthT under the schedule `[p, 50, 25, 10]`, each level but the last run
/// for a fixed number of iterations.
fn toy(args: &CampaignArgs, spec: &ExperimentSpec, solver: &SolverConfig) -> Result<u8> {
    let p: usize = spec.get("p")?;
    let rho: f64 = spec.get("rho")?;
    let cases: Vec<u8> = args.case.map(|c| vec![c]).unwrap_or_else(|| vec![1, 2, 3]);
    let mut level_ks: Vec<usize> = [p, 50, 25, 10].into_iter().filter(|&k| k <= p).collect();
    level_ks.dedup();
    let mut results = Vec::new();
    for c in cases {
        let case = OverlapCase::from_number(c)?;
        let inst = planted_instance(&PlantedParams::simulation(p, case, rho, spec.seed))?;
        let m = inst.truth.m();
        let levels: Vec<CardinalityProfile> = level_ks
            .iter()
            .map(|&k| CardinalityProfile::uniform(k, m, p))
            .collect::<Result<_, _>>()?;
        let target = levels.last().expect("p is always a level").clone();
        let mut cfg = solver
            .clone()
            .with_schedule(Schedule::Explicit(levels))
            .with_reference(inst.truth.clone());
        cfg.level_iters = Some(spec.get("level_iters")?);
        let q0 = random_start(&mut seeded(spec.seed), p, m)?;
        let report = torth_t(&inst.a, &q0, &target, &cfg)?;
        let header = [
            "iter",
            "level",
            "k",
            "orthogonality_loss",
            "post_truncation_gap",
            "residual",
            "sin_theta_fro",
        ]
        .map(String::from);
        let rows: Vec<Vec<String>> = report
            .per_iter
            .iter()
            .map(|r| {
                vec![
                    r.iter.to_string(),
                    r.level.to_string(),
                    level_ks[r.level].to_string(),
                    num(r.orthogonality_loss),
                    opt(r.post_truncation_gap),
                    num(r.residual),
                    opt(r.reference.as_ref().map(|s| s.sin_theta_fro)),
                ]
            })
            .collect();
        write_rows(&args.output_dir.join(format!("toy_trace_case{c}.csv")), &header, &rows)?;
        let last = report.per_iter.last();
        results.push(ToyRow {
            case: c,
            iterations: report.iterations,
            termination: report.termination,
            orthogonality_loss: last.map_or(0.0, |r| r.orthogonality_loss),
            post_truncation_gap: last.and_then(|r| r.post_truncation_gap),
            sin_theta_fro: last.and_then(|r| r.reference.as_ref().map(|s| s.sin_theta_fro)),
        });
    }
    let header = [
        "case",
        "iterations",
        "orthogonality_loss",
        "post_truncation_gap",
        "sin_theta_fro",
    ]
    .map(String::from);
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| {
            vec![
                r.case.to_string(),
                r.iterations.to_string(),
                num(r.orthogonality_loss),
                opt(r.post_truncation_gap),
                opt(r.sin_theta_fro),
            ]
        })
        .collect();
    write_rows(&args.output_dir.join("summary.csv"), &header, &rows)?;
    write_report(
        &args.output_dir.join("summary.json"),
        "campaign",
        &ToyReport {
            spec,
            levels: level_ks.clone(),
            results: &results,
        },
    )?;
    for r in &results {
        println!(
            "case {} {:?} after {} iterations: orthogonality loss {:.2e}, gap {}",
            r.case,
            r.termination,
            r.iterations,
            r.orthogonality_loss,
            r.post_truncation_gap.map_or("-".into(), |g| format!("{g:.2e}"))
        );
    }
    Ok(0)
}
