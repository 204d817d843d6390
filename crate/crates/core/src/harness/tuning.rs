use super::{HarnessError, MetricsSeries, ReferenceSolution};
use crate::objective::FiniteSumObjective;
use crate::optim::{run, OptimError, RunConfig};
use serde::Serialize;

/// Multiples of `1/L` tried by [`tune_step_size`].
pub const DEFAULT_MULTIPLIERS: [f64; 8] = [0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TuningResult {
    pub eta: f64,
    pub multiplier: f64,
    /// Component gradients to first reach the target, `None` when never reached.
    pub evals_to_target: Option<u64>,
}

/// Grid search over `c / L`: picks the step that reaches suboptimality `target`
/// with the fewest component gradients. Diverging steps are skipped. Ties go
/// to the smaller step.
pub fn tune_step_size<O>(
    obj: &O,
    reference: &ReferenceSolution,
    template: &RunConfig,
    smoothness: f64,
    multipliers: &[f64],
    target: f64,
) -> Result<(TuningResult, Vec<TuningResult>), HarnessError>
where
    O: FiniteSumObjective + ?Sized,
{
    let mut results = Vec::with_capacity(multipliers.len());
    for &c in multipliers {
        let eta = c / smoothness;
        let cfg = RunConfig {
            eta,
            ..template.clone()
        };
        let evals = match run(&cfg, obj, reference) {
            Ok(series) => evals_to(&series, target),
            Err(OptimError::Divergence { .. }) => None,
            Err(e) => return Err(e.into()),
        };
        results.push(TuningResult {
            eta,
            multiplier: c,
            evals_to_target: evals,
        });
    }
    let best = results
        .iter()
        .filter(|r| r.evals_to_target.is_some())
        .min_by(|a, b| a.evals_to_target.cmp(&b.evals_to_target).then(a.eta.total_cmp(&b.eta)))
        .cloned()
        .ok_or_else(|| HarnessError::Invalid(format!("no step size in the grid reached {target:e}")))?;
    Ok((best, results))
}

fn evals_to(series: &MetricsSeries, target: f64) -> Option<u64> {
    series.first_below(target).map(|r| r.grad_evals)
}
