//! Finite-sum objectives `P(w) = (1/n) Σ f_i(w)` and estimators for the
//! curvature constants the step-size rule and convergence checks rely on.

mod logistic;
mod quadratic;

pub use logistic::LogisticObjective;
pub use quadratic::{QuadraticObjective, QuadraticSpec};

use crate::linalg::{self, dominant_eigenvalue, DenseMatrix, LinalgError, PowerIteration};
use crate::shuffle::SeededRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicU64, Ordering};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("component index {index} out of range (n = {n})")]
    Component { index: usize, n: usize },
    #[error(
        "objective is not strongly convex (mu = {mu:e}); set lambda > 0 or use a positive definite average Hessian"
    )]
    NotStronglyConvex { mu: f64 },
    #[error("invalid objective: {0}")]
    Invalid(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A finite sum of `n` smooth convex components over `R^d`.
///
/// Implementors provide the per-component kernels; the checked and averaged
/// operations are derived from them. Kernels may assume `i < n` and slices of
/// length `d`.
pub trait FiniteSumObjective: Send + Sync {
    fn num_components(&self) -> usize;
    fn dim(&self) -> usize;

    fn eval_component(&self, i: usize, w: &[f64]) -> f64;
    fn grad_component_into(&self, i: usize, w: &[f64], out: &mut [f64]);
    fn hess_vec_component_into(&self, i: usize, w: &[f64], v: &[f64], out: &mut [f64]);

    /// Rows per component, for sample-based objectives.
    fn batch_size(&self) -> Option<usize> {
        None
    }

    /// Dense `∇²P(w)`, when small enough to materialise.
    fn full_hessian(&self, _w: &[f64]) -> Option<DenseMatrix> {
        None
    }

    fn check_dim(&self, v: &[f64]) -> Result<(), ObjectiveError> {
        if v.len() != self.dim() {
            return Err(ObjectiveError::Dimension {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(())
    }

    fn check_component(&self, i: usize) -> Result<(), ObjectiveError> {
        if i >= self.num_components() {
            return Err(ObjectiveError::Component {
                index: i,
                n: self.num_components(),
            });
        }
        Ok(())
    }

    /// `P(w)`, pairwise-summed over components in index order.
    fn value(&self, w: &[f64]) -> Result<f64, ObjectiveError> {
        self.check_dim(w)?;
        let n = self.num_components();
        Ok(linalg::pairwise_sum(n, &|i| self.eval_component(i, w)) / n as f64)
    }

    /// `∇P(w)`, the pairwise sum of component gradients divided by `n`.
    fn full_grad(&self, w: &[f64]) -> Result<Vec<f64>, ObjectiveError> {
        self.check_dim(w)?;
        let n = self.num_components();
        let mut g = linalg::pairwise_vec_sum(n, self.dim(), &|i, out: &mut [f64]| self.grad_component_into(i, w, out));
        let inv = 1.0 / n as f64;
        g.iter_mut().for_each(|x| *x *= inv);
        Ok(g)
    }

    fn full_hess_vec(&self, w: &[f64], v: &[f64]) -> Result<Vec<f64>, ObjectiveError> {
        self.check_dim(w)?;
        self.check_dim(v)?;
        let n = self.num_components();
        let mut hv = linalg::pairwise_vec_sum(n, self.dim(), &|i, out: &mut [f64]| {
            self.hess_vec_component_into(i, w, v, out)
        });
        let inv = 1.0 / n as f64;
        hv.iter_mut().for_each(|x| *x *= inv);
        Ok(hv)
    }

    fn component_value(&self, i: usize, w: &[f64]) -> Result<f64, ObjectiveError> {
        self.check_component(i)?;
        self.check_dim(w)?;
        Ok(self.eval_component(i, w))
    }

    fn component_grad(&self, i: usize, w: &[f64]) -> Result<Vec<f64>, ObjectiveError> {
        self.check_component(i)?;
        self.check_dim(w)?;
        let mut out = vec![0.0; self.dim()];
        self.grad_component_into(i, w, &mut out);
        Ok(out)
    }

    fn component_hess_vec(&self, i: usize, w: &[f64], v: &[f64]) -> Result<Vec<f64>, ObjectiveError> {
        self.check_component(i)?;
        self.check_dim(w)?;
        self.check_dim(v)?;
        let mut out = vec![0.0; self.dim()];
        self.hess_vec_component_into(i, w, v, &mut out);
        Ok(out)
    }
}

/// Curvature estimates specific to an objective family.
pub trait Curvature: FiniteSumObjective {
    /// `L` with every component `L`-smooth.
    fn estimate_smoothness(&self, opts: &PowerIteration) -> Result<f64, ObjectiveError>;
    /// A certified strong-convexity constant of `P`.
    fn estimate_strong_convexity(&self, opts: &PowerIteration) -> Result<f64, ObjectiveError>;
    /// Smoothness of `P` itself (at most the component constant).
    fn estimate_full_smoothness(&self, opts: &PowerIteration) -> Result<f64, ObjectiveError>;
}

/// `L`, `μ`, `δ` and `κ = L/μ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemConstants {
    pub smoothness: f64,
    pub strong_convexity: f64,
    pub similarity: f64,
    pub condition: f64,
}

impl ProblemConstants {
    pub fn new(smoothness: f64, strong_convexity: f64, similarity: f64) -> Result<Self, ObjectiveError> {
        if !(strong_convexity > 0.0) {
            return Err(ObjectiveError::NotStronglyConvex { mu: strong_convexity });
        }
        // Estimates of L and μ can cross by rounding when P is a multiple of I.
        if !(smoothness >= strong_convexity * (1.0 - 1e-9)) || !smoothness.is_finite() {
            return Err(ObjectiveError::Invalid(format!(
                "smoothness {smoothness:e} below strong convexity {strong_convexity:e}"
            )));
        }
        if !(similarity >= 0.0) || !similarity.is_finite() {
            return Err(ObjectiveError::Invalid(format!(
                "similarity {similarity:e} must be >= 0"
            )));
        }
        Ok(Self {
            smoothness,
            strong_convexity,
            similarity,
            condition: smoothness / strong_convexity,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityOptions {
    /// Number of probe points.
    pub probes: usize,
    /// Probe points are uniform in the ball of this radius around `center`.
    pub radius: f64,
    /// Defaults to the origin.
    pub center: Option<Vec<f64>>,
    pub seed: u64,
    pub power: PowerIteration,
}

impl Default for SimilarityOptions {
    fn default() -> Self {
        Self {
            probes: 4,
            radius: 1.0,
            center: None,
            seed: 17,
            power: PowerIteration::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityEstimate {
    /// `2 · max_{w, i} ‖∇²f_i(w) − ∇²P(w)‖₂` over the probe points.
    pub delta: f64,
    /// `L / √b` when the objective has a batch size.
    pub heuristic: Option<f64>,
    pub worst_component: usize,
}

/// Difference norms below this fraction of `L` are rounding noise.
const NOISE_FLOOR: f64 = 1e-10;

fn sample_ball(rng: &mut SeededRng, center: &[f64], radius: f64) -> Vec<f64> {
    let d = center.len();
    let mut dir: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
    let nrm = linalg::norm(&dir);
    let r = radius * rng.next_f64().powf(1.0 / d.max(1) as f64);
    if nrm > 0.0 {
        dir.iter_mut().for_each(|x| *x *= r / nrm);
    }
    dir.iter().zip(center).map(|(x, c)| x + c).collect()
}

/// Estimates the similarity constant by maximising, over probe points and
/// components, the spectral norm of `∇²f_i(w) − ∇²P(w)`.
///
/// Each norm is the square root of the top eigenvalue of the squared
/// difference operator, found by power iteration. Component Hessians are only
/// touched through Hessian-vector products.
pub fn estimate_similarity<O>(
    obj: &O,
    smoothness: f64,
    opts: &SimilarityOptions,
) -> Result<SimilarityEstimate, ObjectiveError>
where
    O: FiniteSumObjective + ?Sized,
{
    let d = obj.dim();
    let n = obj.num_components();
    let center = match &opts.center {
        Some(c) => {
            obj.check_dim(c)?;
            c.clone()
        }
        None => vec![0.0; d],
    };
    let mut rng = SeededRng::new(opts.seed);
    let mut best = (0.0f64, 0usize);
    for _ in 0..opts.probes.max(1) {
        let w = sample_ball(&mut rng, &center, opts.radius);
        let dense = obj.full_hessian(&w);
        let avg_hv = |v: &[f64], out: &mut [f64]| match &dense {
            Some(h) => h.matvec_into(v, out),
            None => out.copy_from_slice(&obj.full_hess_vec(&w, v).expect("dimension checked")),
        };
        let norms: Result<Vec<f64>, LinalgError> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut a = vec![0.0; d];
                let mut b = vec![0.0; d];
                let mut diff = |x: &[f64], out: &mut [f64]| {
                    obj.hess_vec_component_into(i, &w, x, out);
                    avg_hv(x, &mut b);
                    for (o, bb) in out.iter_mut().zip(&b) {
                        *o -= bb;
                    }
                };
                let e = dominant_eigenvalue(d, &opts.power, |x, out| {
                    diff(x, &mut a);
                    diff(&a, out);
                });
                match e {
                    Ok(e) => Ok(e.value.max(0.0).sqrt()),
                    // Identical Hessians leave only rounding noise, on which the iteration cannot settle.
                    Err(LinalgError::NoConvergence { estimate, .. })
                        if estimate.max(0.0).sqrt() <= NOISE_FLOOR * smoothness =>
                    {
                        Ok(estimate.max(0.0).sqrt())
                    }
                    Err(e) => Err(e),
                }
            })
            .collect();
        for (i, nrm) in norms?.into_iter().enumerate() {
            if nrm > best.0 {
                best = (nrm, i);
            }
        }
    }
    Ok(SimilarityEstimate {
        delta: 2.0 * best.0,
        heuristic: obj.batch_size().map(|b| smoothness / (b as f64).sqrt()),
        worst_component: best.1,
    })
}

/// Estimates all constants with the given power-iteration settings.
pub fn estimate_constants<O>(
    obj: &O,
    power: &PowerIteration,
    similarity: &SimilarityOptions,
) -> Result<(ProblemConstants, SimilarityEstimate), ObjectiveError>
where
    O: Curvature + ?Sized,
{
    let l = obj.estimate_smoothness(power)?;
    let mu = obj.estimate_strong_convexity(power)?;
    let sim = estimate_similarity(obj, l, similarity)?;
    Ok((ProblemConstants::new(l, mu, sim.delta)?, sim))
}

/// Wraps an objective and counts component-gradient evaluations.
pub struct Counted<'a, O: ?Sized> {
    inner: &'a O,
    grads: AtomicU64,
}

impl<'a, O: FiniteSumObjective + ?Sized> Counted<'a, O> {
    pub fn new(inner: &'a O) -> Self {
        Self {
            inner,
            grads: AtomicU64::new(0),
        }
    }

    pub fn grad_evals(&self) -> u64 {
        self.grads.load(Ordering::Relaxed)
    }
}

impl<O: FiniteSumObjective + ?Sized> FiniteSumObjective for Counted<'_, O> {
    fn num_components(&self) -> usize {
        self.inner.num_components()
    }
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eval_component(&self, i: usize, w: &[f64]) -> f64 {
        self.inner.eval_component(i, w)
    }
    fn grad_component_into(&self, i: usize, w: &[f64], out: &mut [f64]) {
        self.grads.fetch_add(1, Ordering::Relaxed);
        self.inner.grad_component_into(i, w, out)
    }
    fn hess_vec_component_into(&self, i: usize, w: &[f64], v: &[f64], out: &mut [f64]) {
        self.inner.hess_vec_component_into(i, w, v, out)
    }
    fn batch_size(&self) -> Option<usize> {
        self.inner.batch_size()
    }
    fn full_hessian(&self, w: &[f64]) -> Option<DenseMatrix> {
        self.inner.full_hessian(w)
    }
}

/// The two objective families behind one type, for drivers that pick at runtime.
pub enum Problem {
    Logistic(LogisticObjective),
    Quadratic(QuadraticObjective),
}

impl Problem {
    /// Power-iteration settings suited to the family: precise for small dense
    /// quadratics, the default budget otherwise.
    pub fn power_settings(&self) -> PowerIteration {
        match self {
            Problem::Logistic(_) => PowerIteration::default(),
            Problem::Quadratic(_) => PowerIteration::precise(),
        }
    }

    fn inner(&self) -> &dyn Curvature {
        match self {
            Problem::Logistic(o) => o,
            Problem::Quadratic(o) => o,
        }
    }
}

impl FiniteSumObjective for Problem {
    fn num_components(&self) -> usize {
        self.inner().num_components()
    }
    fn dim(&self) -> usize {
        self.inner().dim()
    }
    fn eval_component(&self, i: usize, w: &[f64]) -> f64 {
        self.inner().eval_component(i, w)
    }
    fn grad_component_into(&self, i: usize, w: &[f64], out: &mut [f64]) {
        self.inner().grad_component_into(i, w, out)
    }
    fn hess_vec_component_into(&self, i: usize, w: &[f64], v: &[f64], out: &mut [f64]) {
        self.inner().hess_vec_component_into(i, w, v, out)
    }
    fn batch_size(&self) -> Option<usize> {
        self.inner().batch_size()
    }
    fn full_hessian(&self, w: &[f64]) -> Option<DenseMatrix> {
        self.inner().full_hessian(w)
    }
    fn full_grad(&self, w: &[f64]) -> Result<Vec<f64>, ObjectiveError> {
        self.inner().full_grad(w)
    }
    fn value(&self, w: &[f64]) -> Result<f64, ObjectiveError> {
        self.inner().value(w)
    }
}

impl Curvature for Problem {
    fn estimate_smoothness(&self, opts: &PowerIteration) -> Result<f64, ObjectiveError> {
        self.inner().estimate_smoothness(opts)
    }
    fn estimate_strong_convexity(&self, opts: &PowerIteration) -> Result<f64, ObjectiveError> {
        self.inner().estimate_strong_convexity(opts)
    }
    fn estimate_full_smoothness(&self, opts: &PowerIteration) -> Result<f64, ObjectiveError> {
        self.inner().estimate_full_smoothness(opts)
    }
}
