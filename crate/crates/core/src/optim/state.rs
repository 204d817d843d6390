use serde::{Deserialize, Serialize};

/// Every variable of the epoch loops.
///
/// In epoch 0 of Shuffled-SARAH the anchor and the running average are the
/// same quantity; `aliased` redirects reads of the anchor to `v_tilde` until
/// the first epoch ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub w: Vec<f64>,
    pub w_minus: Vec<f64>,
    pub v: Vec<f64>,
    pub v_tilde: Vec<f64>,
    pub delta: Vec<f64>,
    pub epoch: usize,
    pub aliased: bool,
}

impl OptimizerState {
    /// Fresh state at `w0` with zero anchor, aliased.
    pub fn new(w0: Vec<f64>) -> Self {
        let d = w0.len();
        Self {
            w_minus: w0.clone(),
            w: w0,
            v: vec![0.0; d],
            v_tilde: vec![0.0; d],
            delta: vec![0.0; d],
            epoch: 0,
            aliased: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    /// The anchor `v_s` as the algorithm reads it.
    pub fn anchor(&self) -> &[f64] {
        if self.aliased {
            &self.v_tilde
        } else {
            &self.v
        }
    }
}

/// Per-step record of one epoch (or one outer loop of classical SARAH).
///
/// `inner_points[i]` is `wⁱ`, the point where the `i`-th component gradient
/// is taken, with `w⁰ = w_s`. `directions[i]` is the vector actually used to
/// step from `wⁱ`, and `recursion_v[i]` is the recursion
/// `vⁱ = vⁱ⁻¹ + ∇f(wⁱ) − ∇f(wⁱ⁻¹)` accumulated separately from `v⁰ = directions[0]`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EpochTrace {
    pub epoch: usize,
    /// Component visited at inner step `i` (zero-based), `indices[i - 1]`.
    pub indices: Vec<usize>,
    pub inner_points: Vec<Vec<f64>>,
    pub directions: Vec<Vec<f64>>,
    pub recursion_v: Vec<Vec<f64>>,
    /// Component gradients `∇f_{πⁱ}(wⁱ)` for `i = 1..n`.
    pub gradients: Vec<Vec<f64>>,
    pub grad_evals: u64,
}

impl EpochTrace {
    pub(crate) fn start(epoch: usize, indices: &[usize], record: bool) -> Self {
        Self {
            epoch,
            indices: if record { indices.to_vec() } else { Vec::new() },
            ..Self::default()
        }
    }

    pub fn is_recorded(&self) -> bool {
        !self.inner_points.is_empty()
    }

    /// Largest `‖vⁱ‖ / ‖vⁱ⁻¹‖` over consecutive recursion values with
    /// `‖vⁱ⁻¹‖ > floor`.
    pub fn max_norm_ratio(&self, floor: f64) -> Option<f64> {
        self.recursion_v
            .windows(2)
            .filter_map(|p| {
                let prev = crate::linalg::norm(&p[0]);
                (prev > floor).then(|| crate::linalg::norm(&p[1]) / prev)
            })
            .reduce(f64::max)
    }
}
