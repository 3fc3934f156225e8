//! Quality metrics, trial aggregation and bound calculators.

mod bounds;
mod metrics;
mod support;
mod trials;

pub use bounds::{
    block_lower_bound_rhs, delta_e, delta_truncate, exact_progress_rhs, measured_c, one_step_fro_bound, rho_sparse,
    rho_support_size, rt_inverse_bound, tpower_uniform_bound, BoundInputs, RhoMode, EXACT_MAX_M, EXACT_MAX_P,
};
pub use metrics::{adjusted_variance, cpev, prop_adjusted_variance, DataOrCov};
pub use support::{column_supports, matched_jaccard, MATCH_MAX_M};
pub use trials::{trial_stats, SuccessRule, TrialAccumulator, TrialOutcome, TrialStats, SUCCESS_THRESHOLD};
