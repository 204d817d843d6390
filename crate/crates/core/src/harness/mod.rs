//! Reference solutions, per-epoch metrics, inequality checks and multi-seed aggregation.

mod aggregate;
mod gradcheck;
pub mod hexfloat;
mod metrics;
mod reference;
mod theorems;
mod tuning;

pub use aggregate::{average_runs, Aggregate};
pub use gradcheck::{finite_difference_check, GradCheckReport};
pub use metrics::{measure, EpochRecord, MetricsSeries};
pub use reference::{solve_problem_reference, solve_reference, ReferenceOptions, ReferenceSolution};
pub use theorems::{
    check_monotonicity, check_step_hypothesis, check_theorem1, check_theorem_rr, contraction, epochs_to_reach,
    predicted_epochs, recursion_gap, running_average_error, InequalityCheck, MonotonicityReport, ABS_TOL,
    MONOTONICITY_TOL, RATIO_FLOOR, REL_TOL,
};
pub use tuning::{tune_step_size, TuningResult, DEFAULT_MULTIPLIERS};

use crate::objective::ObjectiveError;
use crate::optim::OptimError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("step size {eta:e} exceeds the theorem bound {bound:e}; the convergence guarantee does not apply")]
    StepTooLarge { eta: f64, bound: f64 },
    #[error("reference solver stopped after {iterations} iterations with gradient norm {residual:e}")]
    ReferenceNotConverged { iterations: u64, residual: f64 },
    #[error("cannot aggregate: {0}")]
    Mismatch(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Optim(#[from] OptimError),
}
