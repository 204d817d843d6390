//! Command implementations behind the `ssarah` binary.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or configuration
//! error (including a refused theorem check), 3 divergence.

mod commands;
mod config;
pub mod csv_io;
mod fetch;
pub mod svg;
mod verify;

pub use commands::{
    cmd_estimate, cmd_plot, cmd_run, cmd_traj, prepare, resolve_eta, EstimateReport, PlotRequest, Prepared, RunOutcome,
    TrajOutcome,
};
pub use config::{
    AlgorithmKind, AlgorithmSpec, EtaChoice, EtaSpec, ExperimentConfig, InnerSpec, Overrides, ProblemSource, Seeds,
    SimilaritySettings,
};
pub use fetch::{cmd_fetch, data_dir, sha256_file, FetchEntry, DATA_DIR_ENV};
pub use verify::{
    cmd_verify, logistic_toy, verification_suite, Suite, VerifyReport, GRADCHECK_POINTS, GRAD_TOL, HESS_VEC_TOL,
    SUITE_EPOCHS, SUITE_SEEDS,
};

use crate::harness::HarnessError;
use crate::objective::ObjectiveError;
use crate::optim::OptimError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("data: {0}")]
    Data(String),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("refused: {0}")]
    Refused(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("diverged: {0}")]
    Divergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Divergence(_) => 3,
            _ => 2,
        }
    }
}

impl From<ObjectiveError> for CliError {
    fn from(e: ObjectiveError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<OptimError> for CliError {
    fn from(e: OptimError) -> Self {
        match e {
            OptimError::Divergence { .. } => CliError::Divergence(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::StepTooLarge { .. } => CliError::Refused(e.to_string()),
            HarnessError::ReferenceNotConverged { .. } => CliError::Verification(e.to_string()),
            HarnessError::Optim(o) => o.into(),
            other => CliError::Config(other.to_string()),
        }
    }
}
