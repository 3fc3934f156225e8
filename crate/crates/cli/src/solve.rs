use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{ArgGroup, Args, ValueEnum};
use serde::Serialize;
use torth_core::datagen::{
    load_matrix, pitprops, planted_instance, LoadOptions, MatrixFormat, OverlapCase, PlantedParams, PITPROPS_VARIABLES,
};
use torth_core::evaluation::{column_supports, cpev, prop_adjusted_variance, DataOrCov};
use torth_core::linalg::sym_eig;
use torth_core::rng::{derive_seed, seeded};
use torth_core::solvers::{random_start, solve, CardinalityProfile, Method, MethodRun, Termination};
use torth_core::{Basis, SymMatrix};

use crate::output::{ensure_dir, num, numbered, opt, write_report, write_rows};
use crate::{parse_method, SolverArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Orthonormalized Gaussian matrix drawn from the seed.
    Random,
    /// Leading eigenvectors of the input.
    Pca,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("source").required(true).args(["input", "pitprops", "identity", "planted"])))]
pub struct SolveArgs {
    /// CSV file holding a symmetric matrix, or observations with `--data`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Use the embedded pit-prop correlation matrix.
    #[arg(long)]
    pub pitprops: bool,
    /// Use the N×N identity.
    #[arg(long, value_name = "N")]
    pub identity: Option<usize>,
    /// Generate a planted instance with overlap case 1, 2 or 3.
    #[arg(long, value_name = "CASE", value_parser = clap::value_parser!(u8).range(1..=3))]
    pub planted: Option<u8>,
    /// Dimension of the planted instance.
    #[arg(long, default_value_t = 100, requires = "planted")]
    pub p: usize,
    /// Spectral norm of the planted perturbation.
    #[arg(long, default_value_t = 0.21, requires = "planted")]
    pub rho: f64,

    /// The input rows are observations; solve on their covariance.
    #[arg(long, requires = "input")]
    pub data: bool,
    /// Subtract column means of the observations.
    #[arg(long, requires = "data")]
    pub center: bool,
    /// Skip a header row.
    #[arg(long, requires = "input")]
    pub header: bool,
    /// Drop a header row and a leading label column.
    #[arg(long, requires = "input")]
    pub labeled: bool,

    #[arg(long, default_value = "torth", value_parser = parse_method)]
    pub method: Method,
    /// Cardinalities, one per component; a single value is repeated `--m` times.
    #[arg(long, value_delimiter = ',', required = true)]
    pub k: Vec<usize>,
    /// Number of components; defaults to the length of `--k`.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, value_enum, default_value_t = Init::Random)]
    pub init: Init,
    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
}

struct Problem {
    a: SymMatrix,
    labels: Vec<String>,
    truth: Option<Basis>,
    source: String,
}

fn load_problem(args: &SolveArgs) -> Result<Problem> {
    let numbered_labels = |p: usize| (0..p).map(|i| i.to_string()).collect();
    if let Some(path) = &args.input {
        let opts = LoadOptions {
            format: if args.labeled {
                MatrixFormat::LabeledCsv
            } else {
                MatrixFormat::Csv
            },
            header: args.header,
            center: args.center,
            covariance: args.data,
        };
        let m = load_matrix(path, &opts).with_context(|| format!("cannot load {}", path.display()))?;
        let a = SymMatrix::new(m).context("input matrix must be square and symmetric (use --data for observations)")?;
        let p = a.dim();
        return Ok(Problem {
            a,
            labels: numbered_labels(p),
            truth: None,
            source: path.display().to_string(),
        });
    }
    if args.pitprops {
        return Ok(Problem {
            a: pitprops(),
            labels: PITPROPS_VARIABLES.iter().map(|s| s.to_string()).collect(),
            truth: None,
            source: "pitprops".into(),
        });
    }
    if let Some(n) = args.identity {
        if n == 0 {
            bail!("--identity needs a positive size");
        }
        return Ok(Problem {
            a: SymMatrix::identity(n),
            labels: numbered_labels(n),
            truth: None,
            source: format!("identity({n})"),
        });
    }
    let case = OverlapCase::from_number(args.planted.expect("source group is required"))?;
    let params = PlantedParams::simulation(args.p, case, args.rho, derive_seed(args.solver.seed, 2, 0));
    let inst = planted_instance(&params)?;
    Ok(Problem {
        a: inst.a,
        labels: numbered_labels(args.p),
        truth: Some(inst.truth),
        source: format!("planted(case={}, p={}, rho={})", case.number(), args.p, args.rho),
    })
}

pub fn profile(k: &[usize], m: Option<usize>, p: usize) -> Result<CardinalityProfile> {
    let ks = match (m, k) {
        (Some(m), [single]) => vec![*single; m],
        (Some(m), ks) if ks.len() != m => bail!("--k lists {} values but --m is {m}", ks.len()),
        (_, ks) => ks.to_vec(),
    };
    if ks.is_empty() {
        bail!("--k needs at least one value");
    }
    Ok(CardinalityProfile::new(ks, p)?)
}

pub fn start_basis(init: Init, a: &SymMatrix, m: usize, seed: u64) -> Result<Basis> {
    Ok(match init {
        Init::Random => random_start(&mut seeded(seed), a.dim(), m)?,
        Init::Pca => Basis::orthonormal(sym_eig(a).vectors.leading_columns(m))?,
    })
}

#[derive(Serialize)]
struct Parameters<'a> {
    source: &'a str,
    method: Method,
    k: &'a [usize],
    init: Init,
    tol: f64,
    max_iter: usize,
    seed: u64,
    warm_start: bool,
    ortho: &'a str,
    qr_on_untruncated: bool,
}

#[derive(Serialize)]
struct Quality {
    nnz: Vec<usize>,
    prop_adjusted_variance: Option<f64>,
    cpev: Option<f64>,
}

#[derive(Serialize)]
struct SolveReport<'a> {
    parameters: Parameters<'a>,
    p: usize,
    m: usize,
    converged: bool,
    quality: Quality,
    run: &'a MethodRun,
}

pub fn exit_code(t: Termination) -> u8 {
    match t {
        Termination::Converged => 0,
        Termination::MaxIter | Termination::RankDeficientRecovered => 2,
    }
}

/// One row per iteration; TPower rounds are numbered from 1, block methods
/// use round 1 throughout.
pub fn trace_rows(run: &MethodRun) -> (Vec<String>, Vec<Vec<String>>) {
    let header = [
        "round",
        "iter",
        "level",
        "residual",
        "step_sin_theta_fro_sq",
        "orthogonality_loss",
        "row_support",
        "post_truncation_gap",
        "r_sigma_min",
        "restarts",
        "sin_theta_fro",
        "sin_theta_two",
    ]
    .map(String::from)
    .to_vec();
    let mut rows = Vec::new();
    for (round, rep) in run.reports.iter().enumerate() {
        for r in &rep.per_iter {
            rows.push(vec![
                (round + 1).to_string(),
                r.iter.to_string(),
                r.level.to_string(),
                num(r.residual),
                num(r.step_sin_theta_fro_sq),
                num(r.orthogonality_loss),
                r.row_support.to_string(),
                opt(r.post_truncation_gap),
                opt(r.r_sigma_min),
                r.restarts.to_string(),
                opt(r.reference.as_ref().map(|s| s.sin_theta_fro)),
                opt(r.reference.as_ref().map(|s| s.sin_theta_two)),
            ]);
        }
    }
    (header, rows)
}

pub fn loadings_rows(labels: &[String], v: &Basis) -> (Vec<String>, Vec<Vec<String>>) {
    let header = std::iter::once("variable".to_string())
        .chain(numbered("q", v.m()))
        .collect();
    let rows = labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            std::iter::once(l.clone())
                .chain((0..v.m()).map(|j| num(v.matrix()[(i, j)])))
                .collect()
        })
        .collect();
    (header, rows)
}

pub fn run(args: &SolveArgs) -> Result<u8> {
    let problem = load_problem(args)?;
    let p = problem.a.dim();
    let k = profile(&args.k, args.m, p)?;
    let mut cfg = args.solver.config()?;
    if let Some(t) = &problem.truth {
        if t.m() == k.m() {
            cfg = cfg.with_reference(t.clone());
        }
    }
    let q0 = start_basis(args.init, &problem.a, k.m(), args.solver.seed)?;
    let run = solve(args.method, &problem.a, &q0, &k, &cfg)?;

    // Quality measures need linearly independent loadings.
    let v = run.components.matrix();
    let src = DataOrCov::Cov(&problem.a);
    let quality = Quality {
        nnz: column_supports(v).iter().map(|s| s.k()).collect(),
        prop_adjusted_variance: prop_adjusted_variance(src, v).ok(),
        cpev: cpev(src, v).ok(),
    };

    ensure_dir(&args.output_dir)?;
    let report = SolveReport {
        parameters: Parameters {
            source: &problem.source,
            method: args.method,
            k: k.as_slice(),
            init: args.init,
            tol: cfg.tol,
            max_iter: cfg.max_iter,
            seed: args.solver.seed,
            warm_start: !args.solver.no_warm_start,
            ortho: match args.solver.ortho {
                crate::OrthoArg::Qr => "qr",
                crate::OrthoArg::Polar => "polar",
            },
            qr_on_untruncated: cfg.qr_on_untruncated,
        },
        p,
        m: k.m(),
        converged: run.converged(),
        quality,
        run: &run,
    };
    write_report(&args.output_dir.join("run_report.json"), "solve", &report)?;
    let (h, rows) = loadings_rows(&problem.labels, &run.components);
    write_rows(&args.output_dir.join("loadings.csv"), &h, &rows)?;
    let (h, rows) = trace_rows(&run);
    write_rows(&args.output_dir.join("trace.csv"), &h, &rows)?;

    let total: usize = report.quality.nnz.iter().sum();
    println!(
        "{} {:?} after {} iterations; nonzeros {:?} (total {total})",
        args.method.name(),
        run.termination,
        run.iterations,
        report.quality.nnz
    );
    if let (Some(a), Some(c)) = (report.quality.prop_adjusted_variance, report.quality.cpev) {
        println!("proportion of adjusted variance {a:.4}, cpev {c:.4}");
    }
    Ok(exit_code(run.termination))
}
