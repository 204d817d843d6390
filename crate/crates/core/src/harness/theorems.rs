use super::{HarnessError, MetricsSeries};
use crate::linalg;
use crate::objective::ProblemConstants;
use crate::optim::{theoretical_step_size, EpochTrace};
use serde::Serialize;

/// Relative slack on the right-hand side of every inequality check.
pub const REL_TOL: f64 = 1e-10;
/// Absolute slack on the right-hand side of every inequality check.
pub const ABS_TOL: f64 = 1e-14;
/// Absolute slack for `‖vⁱ‖ ≤ ‖vⁱ⁻¹‖`.
pub const MONOTONICITY_TOL: f64 = 1e-12;
/// Norms at or below this are rounding noise and excluded from reported ratios.
pub const RATIO_FLOOR: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub epoch: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl InequalityCheck {
    fn new(epoch: usize, lhs: f64, rhs: f64) -> Self {
        Self {
            epoch,
            lhs,
            rhs,
            holds: lhs <= rhs * (1.0 + REL_TOL) + ABS_TOL,
        }
    }
}

/// Per-epoch contraction factor `1 − ημ(n+1)/2`.
pub fn contraction(eta: f64, mu: f64, n: usize) -> f64 {
    1.0 - eta * mu * (n as f64 + 1.0) / 2.0
}

/// Refuses step sizes above `min(1/(8nL), 1/(8n²δ))`.
pub fn check_step_hypothesis(eta: f64, n: usize, constants: &ProblemConstants) -> Result<(), HarnessError> {
    let bound = theoretical_step_size(n, constants.smoothness, constants.similarity)?.eta;
    if eta > bound {
        return Err(HarnessError::StepTooLarge { eta, bound });
    }
    Ok(())
}

/// `P(w_{s+1}) − P* + c‖v_s‖² ≤ ρ (P(w_s) − P* + c‖v_{s−1}‖²)` with
/// `c = η(n+1)/16`, for every `s ≥ 2` with a successor record.
pub fn check_theorem1(
    series: &MetricsSeries,
    eta: f64,
    constants: &ProblemConstants,
    n: usize,
) -> Result<Vec<InequalityCheck>, HarnessError> {
    check_step_hypothesis(eta, n, constants)?;
    let rho = contraction(eta, constants.strong_convexity, n);
    let c = eta * (n as f64 + 1.0) / 16.0;
    let r = &series.records;
    Ok((2..r.len().saturating_sub(1))
        .map(|s| {
            let lhs = r[s + 1].suboptimality + c * r[s].anchor_norm_sq;
            let rhs = rho * (r[s].suboptimality + c * r[s - 1].anchor_norm_sq);
            InequalityCheck::new(s, lhs, rhs)
        })
        .collect())
}

/// `P(w_{s+1}) − P* ≤ ρ (P(w_s) − P*)` for every `s ≥ 0` with a successor record.
pub fn check_theorem_rr(
    series: &MetricsSeries,
    eta: f64,
    constants: &ProblemConstants,
    n: usize,
) -> Result<Vec<InequalityCheck>, HarnessError> {
    check_step_hypothesis(eta, n, constants)?;
    let rho = contraction(eta, constants.strong_convexity, n);
    let r = &series.records;
    Ok((0..r.len().saturating_sub(1))
        .map(|s| InequalityCheck::new(s, r[s + 1].suboptimality, rho * r[s].suboptimality))
        .collect())
}

/// Epochs after which the contraction guarantees `initial · ρ^S ≤ eps`,
/// using `ln(1/ρ) ≥ ημ(n+1)/2`: `⌈2/(ημ(n+1)) · ln(initial/eps)⌉`.
pub fn predicted_epochs(eta: f64, mu: f64, n: usize, initial: f64, eps: f64) -> u64 {
    if initial <= eps {
        return 0;
    }
    (2.0 / (eta * mu * (n as f64 + 1.0)) * (initial / eps).ln()).ceil() as u64
}

/// First epoch whose suboptimality is at most `eps`.
pub fn epochs_to_reach(series: &MetricsSeries, eps: f64) -> Option<usize> {
    series.first_below(eps).map(|r| r.epoch)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MonotonicityReport {
    /// Largest `‖vⁱ‖ / ‖vⁱ⁻¹‖` with `‖vⁱ⁻¹‖ > RATIO_FLOOR`.
    pub max_ratio: f64,
    /// Largest `‖vⁱ‖ − ‖vⁱ⁻¹‖`.
    pub max_increase: f64,
    pub holds: bool,
}

/// `‖vⁱ‖ ≤ ‖vⁱ⁻¹‖ + 1e-12` along the recursion of one recorded epoch.
pub fn check_monotonicity(trace: &EpochTrace) -> MonotonicityReport {
    let mut max_increase = f64::NEG_INFINITY;
    for pair in trace.recursion_v.windows(2) {
        max_increase = max_increase.max(linalg::norm(&pair[1]) - linalg::norm(&pair[0]));
    }
    MonotonicityReport {
        max_ratio: trace.max_norm_ratio(RATIO_FLOOR).unwrap_or(0.0),
        max_increase,
        holds: max_increase <= MONOTONICITY_TOL,
    }
}

/// Relative gap between the anchor the epoch produced and the direct average
/// `(1/n) Σ ∇f_{πⁱ}(wⁱ)` of the recorded gradients, normalised by the mean
/// gradient norm.
pub fn running_average_error(trace: &EpochTrace, anchor: &[f64]) -> f64 {
    let n = trace.gradients.len();
    if n == 0 {
        return 0.0;
    }
    let d = anchor.len();
    let direct = linalg::pairwise_vec_sum(n, d, &|i, out: &mut [f64]| out.copy_from_slice(&trace.gradients[i]));
    let direct: Vec<f64> = direct.iter().map(|x| x / n as f64).collect();
    let scale = trace.gradients.iter().map(|g| linalg::norm(g)).sum::<f64>() / n as f64;
    let err = linalg::dist_sq(&direct, anchor).sqrt();
    if scale == 0.0 {
        err
    } else {
        err / scale
    }
}

/// Largest `‖directions[i] − recursion_v[i]‖`, relative to the largest
/// direction norm in the epoch.
pub fn recursion_gap(trace: &EpochTrace) -> f64 {
    let scale = trace
        .directions
        .iter()
        .chain(&trace.recursion_v)
        .map(|v| linalg::norm(v))
        .fold(0.0, f64::max);
    let gap = trace
        .directions
        .iter()
        .zip(&trace.recursion_v)
        .map(|(a, b)| linalg::dist_sq(a, b).sqrt())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        gap
    } else {
        gap / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::EpochRecord;
    use crate::optim::{Algorithm, RunConfig};
    use crate::shuffle::RuleKind;

    fn series(gaps: &[f64], anchors: &[f64]) -> MetricsSeries {
        MetricsSeries {
            records: gaps
                .iter()
                .zip(anchors)
                .enumerate()
                .map(|(s, (&g, &a))| EpochRecord {
                    epoch: s,
                    suboptimality: g,
                    dist_sq: 0.0,
                    grad_norm_sq: 0.0,
                    estimator_err_sq: 0.0,
                    grad_evals: s as u64,
                    anchor_norm_sq: a,
                })
                .collect(),
            config: RunConfig::new(Algorithm::ShuffledSarah, 0.0, 1, RuleKind::Rr, 0),
        }
    }

    #[test]
    fn contraction_arithmetic() {
        assert!((contraction(1.0 / 128.0, 1.0, 4) - (1.0 - 5.0 / 256.0)).abs() < 1e-16);
        assert!((contraction(1.0 / 128.0, 1.0, 4) - 0.98047).abs() < 1e-5);
    }

    #[test]
    fn refusal_exactly_above_bound() {
        let k = ProblemConstants::new(1.0, 0.5, 1.0).unwrap();
        let s = series(&[1.0; 5], &[1.0; 5]);
        assert!(check_theorem1(&s, 1.0 / 128.0, &k, 4).is_ok());
        let above = f64::from_bits((1.0f64 / 128.0).to_bits() + 1);
        assert!(matches!(
            check_theorem1(&s, above, &k, 4),
            Err(HarnessError::StepTooLarge { .. })
        ));
        assert!(check_theorem_rr(&s, above, &k, 4).is_err());
    }

    #[test]
    fn stationary_series_holds() {
        let k = ProblemConstants::new(1.0, 0.5, 1.0).unwrap();
        let s = series(&[0.0; 6], &[2.0; 6]);
        let checks = check_theorem1(&s, 0.0, &k, 4).unwrap();
        assert_eq!(checks.iter().map(|c| c.epoch).collect::<Vec<_>>(), vec![2, 3, 4]);
        assert!(checks.iter().all(|c| c.holds && c.lhs == c.rhs));
        let rr = check_theorem_rr(&series(&[0.0; 3], &[0.0; 3]), 0.0, &k, 4).unwrap();
        assert_eq!(rr.len(), 2);
        assert!(rr.iter().all(|c| c.holds));
    }

    #[test]
    fn detects_violation() {
        let k = ProblemConstants::new(1.0, 0.5, 0.0).unwrap();
        let s = series(&[1.0, 1.0, 1.0], &[0.0; 3]);
        let checks = check_theorem_rr(&s, 1.0 / 32.0, &k, 4).unwrap();
        assert!(checks.iter().all(|c| !c.holds));
    }

    #[test]
    fn prediction_formula() {
        assert_eq!(predicted_epochs(0.1, 1.0, 1, 1.0, 1.0), 0);
        // 2/(0.1·2) · ln 20 = 29.96
        assert_eq!(predicted_epochs(0.1, 1.0, 1, 20.0, 1.0), 30);
    }
}
