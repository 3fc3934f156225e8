mod campaign;
mod output;
mod solve;
mod verify;

use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use torth_core::solvers::{Method, Ortho, Schedule, SolverConfig};

/// Sparse eigenvectors by truncated orthogonal iteration.
#[derive(Parser, Debug)]
#[command(name = "torth", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one solver on a matrix file or a generated problem.
    Solve(solve::SolveArgs),
    /// Run a named experiment and write per-trial and summary tables.
    Campaign(campaign::CampaignArgs),
    /// Run the randomized inequality suites and the trace checks.
    VerifyBounds(verify::VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrthoArg {
    Qr,
    Polar,
}

/// Options shared by every command that runs a solver.
#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Iteration cap per cardinality level.
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Walk the cardinalities {8k, 4k, 2k, k} (the default).
    #[arg(long, overrides_with = "no_warm_start")]
    pub warm_start: bool,
    /// Run only at the target cardinality.
    #[arg(long, overrides_with = "warm_start")]
    pub no_warm_start: bool,
    #[arg(long, value_enum, default_value_t = OrthoArg::Qr)]
    pub ortho: OrthoArg,
    /// In TOrthT, orthogonalize the untruncated product before truncating.
    #[arg(long, action = ArgAction::SetTrue)]
    pub qr_on_untruncated: bool,
}

impl SolverArgs {
    pub fn config(&self) -> anyhow::Result<SolverConfig> {
        let cfg = SolverConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            seed: self.seed,
            schedule: if self.no_warm_start {
                Schedule::Single
            } else {
                Schedule::WarmStart
            },
            ortho: match self.ortho {
                OrthoArg::Qr => Ortho::Qr,
                OrthoArg::Polar => Ortho::Polar,
            },
            qr_on_untruncated: self.qr_on_untruncated,
            ..SolverConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: torth_core::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Solve(a) => solve::run(&a),
        Command::Campaign(a) => campaign::run(&a),
        Command::VerifyBounds(a) => verify::run(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
