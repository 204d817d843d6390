//! Shuffled-SARAH, RR-SARAH and classical SARAH, with per-step traces.

mod epoch;
mod state;
mod step;

pub use epoch::{classic_sarah_outer, rr_sarah_epoch, shuffled_sarah_epoch};
pub use state::{EpochTrace, OptimizerState};
pub use step::{theoretical_step_size, Provenance, StepSize};

use crate::harness::{measure, MetricsSeries, ReferenceSolution};
use crate::objective::{FiniteSumObjective, ObjectiveError};
use crate::shuffle::{PermutationRule, RuleKind, SeededRng};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimError {
    #[error("iterate became non-finite in epoch {epoch}, inner step {step}")]
    Divergence { epoch: usize, step: usize },
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Algorithm {
    ShuffledSarah,
    RrSarah,
    /// `inner_steps` sampled with replacement per outer loop.
    ClassicSarah {
        inner_steps: usize,
    },
}

impl Algorithm {
    /// Component gradients per epoch (outer loop for classical SARAH).
    pub fn evals_per_epoch(self, n: usize) -> u64 {
        match self {
            Algorithm::ShuffledSarah => 2 * n as u64,
            Algorithm::RrSarah => 3 * n as u64,
            Algorithm::ClassicSarah { inner_steps } => (n + 2 * inner_steps) as u64,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::ShuffledSarah => f.write_str("shuffled_sarah"),
            Algorithm::RrSarah => f.write_str("rr_sarah"),
            Algorithm::ClassicSarah { inner_steps } => write!(f, "sarah_m{inner_steps}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub eta: f64,
    /// Epochs `S` (outer loops for classical SARAH).
    pub epochs: usize,
    pub rule: RuleKind,
    pub seed: u64,
    /// Starting point; zero when absent.
    #[serde(default)]
    pub w0: Option<Vec<f64>>,
    /// Stop once `‖∇P(w_s)‖² ≤ epsilon`, checked at epoch ends at a cost of `n` evaluations.
    #[serde(default)]
    pub epsilon: Option<f64>,
}

impl RunConfig {
    pub fn new(algorithm: Algorithm, eta: f64, epochs: usize, rule: RuleKind, seed: u64) -> Self {
        Self {
            algorithm,
            eta,
            epochs,
            rule,
            seed,
            w0: None,
            epsilon: None,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<(), OptimError> {
        if self.epochs == 0 {
            return Err(OptimError::Config("epochs must be at least 1".into()));
        }
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(OptimError::Config(format!(
                "eta must be finite and >= 0, got {}",
                self.eta
            )));
        }
        if let Some(w0) = &self.w0 {
            if w0.len() != dim {
                return Err(OptimError::Config(format!(
                    "w0 has length {}, objective has d = {dim}",
                    w0.len()
                )));
            }
        }
        if let Some(eps) = self.epsilon {
            if !(eps >= 0.0) {
                return Err(OptimError::Config(format!("epsilon must be >= 0, got {eps}")));
            }
        }
        Ok(())
    }

    /// Label used for output directories, e.g. `shuffled_sarah_rr`.
    pub fn label(&self) -> String {
        match self.algorithm {
            Algorithm::ShuffledSarah | Algorithm::RrSarah => format!("{}_{}", self.algorithm, self.rule),
            Algorithm::ClassicSarah { .. } => self.algorithm.to_string(),
        }
    }
}

/// Runs `config` on `obj`, recording metrics at every epoch boundary.
pub fn run<O>(config: &RunConfig, obj: &O, reference: &ReferenceSolution) -> Result<MetricsSeries, OptimError>
where
    O: FiniteSumObjective + ?Sized,
{
    run_observed(config, obj, reference, false, |_, _| {})
}

/// As [`run`], handing every epoch's trace and resulting state to `observer`.
/// Traces carry per-step vectors only when `record_traces` is set.
pub fn run_observed<O, F>(
    config: &RunConfig,
    obj: &O,
    reference: &ReferenceSolution,
    record_traces: bool,
    mut observer: F,
) -> Result<MetricsSeries, OptimError>
where
    O: FiniteSumObjective + ?Sized,
    F: FnMut(&EpochTrace, &OptimizerState),
{
    let d = obj.dim();
    let n = obj.num_components();
    config.validate(d)?;
    if reference.w_star.len() != d {
        return Err(OptimError::Config(format!(
            "reference solution has dimension {}, objective has d = {d}",
            reference.w_star.len()
        )));
    }
    let w0 = config.w0.clone().unwrap_or_else(|| vec![0.0; d]);
    let mut state = OptimizerState::new(w0);
    if config.algorithm != Algorithm::ShuffledSarah {
        state.aliased = false;
    }
    let mut rule = PermutationRule::new(config.rule, n, config.seed);
    let mut sampler = SeededRng::new(config.seed);
    let mut grad_evals: u64 = 0;
    let mut records = Vec::with_capacity(config.epochs + 1);

    let anchor_of = |state: &OptimizerState| -> Result<Vec<f64>, OptimError> {
        match config.algorithm {
            Algorithm::ShuffledSarah => Ok(state.anchor().to_vec()),
            _ => Ok(obj.full_grad(&state.w)?),
        }
    };
    records.push(measure(obj, reference, 0, &state.w, &anchor_of(&state)?, grad_evals)?);

    for s in 0..config.epochs {
        let trace = match config.algorithm {
            Algorithm::ShuffledSarah => {
                let p = rule.next_permutation(s);
                shuffled_sarah_epoch(&mut state, obj, &p, config.eta, record_traces)?
            }
            Algorithm::RrSarah => {
                let p = rule.next_permutation(s);
                rr_sarah_epoch(&mut state, obj, &p, config.eta, record_traces)?
            }
            Algorithm::ClassicSarah { inner_steps } => {
                let idx: Vec<usize> = (0..inner_steps).map(|_| sampler.below(n as u64) as usize).collect();
                classic_sarah_outer(&mut state, obj, &idx, config.eta, record_traces)?
            }
        };
        grad_evals += trace.grad_evals;
        observer(&trace, &state);
        let mut stop = false;
        if let Some(eps) = config.epsilon {
            grad_evals += n as u64;
            stop = crate::linalg::norm_sq(&obj.full_grad(&state.w)?) <= eps;
        }
        records.push(measure(
            obj,
            reference,
            s + 1,
            &state.w,
            &anchor_of(&state)?,
            grad_evals,
        )?);
        if stop {
            break;
        }
    }
    Ok(MetricsSeries {
        records,
        config: config.clone(),
    })
}
