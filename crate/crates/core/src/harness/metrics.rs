use super::ReferenceSolution;
use crate::linalg;
use crate::objective::{FiniteSumObjective, ObjectiveError};
use crate::optim::RunConfig;
use serde::{Deserialize, Serialize};

/// Quantities measured at the start of epoch `s`, i.e. at `w_s` with anchor `v_s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// `P(w_s) − P*`, clamped at zero.
    pub suboptimality: f64,
    /// `‖w_s − w*‖²`.
    pub dist_sq: f64,
    /// `‖∇P(w_s)‖²`.
    pub grad_norm_sq: f64,
    /// `‖v_s − ∇P(w_s)‖²`.
    pub estimator_err_sq: f64,
    /// Component gradients spent to reach `w_s`.
    pub grad_evals: u64,
    /// `‖v_s‖²`.
    pub anchor_norm_sq: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsSeries {
    pub records: Vec<EpochRecord>,
    pub config: RunConfig,
}

impl MetricsSeries {
    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    /// First record with suboptimality at most `eps`.
    pub fn first_below(&self, eps: f64) -> Option<&EpochRecord> {
        self.records.iter().find(|r| r.suboptimality <= eps)
    }
}

/// Measures one record. Costs are not charged to the run.
pub fn measure<O>(
    obj: &O,
    reference: &ReferenceSolution,
    epoch: usize,
    w: &[f64],
    anchor: &[f64],
    grad_evals: u64,
) -> Result<EpochRecord, ObjectiveError>
where
    O: FiniteSumObjective + ?Sized,
{
    obj.check_dim(anchor)?;
    let grad = obj.full_grad(w)?;
    Ok(EpochRecord {
        epoch,
        suboptimality: (obj.value(w)? - reference.p_star).max(0.0),
        dist_sq: linalg::dist_sq(w, &reference.w_star),
        grad_norm_sq: linalg::norm_sq(&grad),
        estimator_err_sq: linalg::dist_sq(anchor, &grad),
        grad_evals,
        anchor_norm_sq: linalg::norm_sq(anchor),
    })
}
