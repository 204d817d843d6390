use super::{Curvature, FiniteSumObjective, ObjectiveError};
use crate::data::ComponentSet;
use crate::linalg::{dominant_eigenvalue, DenseMatrix, PowerIteration};
use rayon::prelude::*;

/// Dense average Hessians are only materialised up to this dimension.
const DENSE_HESSIAN_MAX_DIM: usize = 1024;

/// ℓ2-regularised logistic loss, one component per batch:
/// `f_i(w) = (1/b) Σ_k log(1 + exp(−y_k x_kᵀw)) + (λ/2)‖w‖²`.
pub struct LogisticObjective {
    components: ComponentSet,
    lambda: f64,
}

/// `1 / (1 + e^{-t})` without overflow.
#[inline]
fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^{-t})` as `log1p(e^{-|t|}) + max(0, -t)`.
#[inline]
fn logistic_loss(t: f64) -> f64 {
    (-t.abs()).exp().ln_1p() + (-t).max(0.0)
}

impl LogisticObjective {
    pub fn new(components: ComponentSet, lambda: f64) -> Result<Self, ObjectiveError> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(ObjectiveError::Invalid(format!("lambda must be >= 0, got {lambda}")));
        }
        Ok(Self { components, lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn components(&self) -> &ComponentSet {
        &self.components
    }

    /// Largest eigenvalue of `XᵀX` restricted to `rows`.
    fn gram_top_eigenvalue(&self, rows: std::ops::Range<usize>, opts: &PowerIteration) -> Result<f64, ObjectiveError> {
        let x = self.components.matrix();
        let e = dominant_eigenvalue(self.dim(), opts, |v, out| {
            out.fill(0.0);
            for r in rows.clone() {
                let z = x.row_dot(r, v);
                x.row_axpy(r, z, out);
            }
        })?;
        Ok(e.value)
    }
}

impl FiniteSumObjective for LogisticObjective {
    fn num_components(&self) -> usize {
        self.components.len()
    }

    fn dim(&self) -> usize {
        self.components.dimension()
    }

    fn batch_size(&self) -> Option<usize> {
        Some(self.components.batch_size())
    }

    fn eval_component(&self, i: usize, w: &[f64]) -> f64 {
        let c = self.components.component(i);
        let x = c.matrix();
        let mut loss = 0.0;
        for (r, y) in c.rows().zip(c.labels()) {
            loss += logistic_loss(y * x.row_dot(r, w));
        }
        let b = self.components.batch_size() as f64;
        loss / b + 0.5 * self.lambda * crate::linalg::norm_sq(w)
    }

    fn grad_component_into(&self, i: usize, w: &[f64], out: &mut [f64]) {
        let c = self.components.component(i);
        let x = c.matrix();
        let inv_b = 1.0 / self.components.batch_size() as f64;
        for (o, wi) in out.iter_mut().zip(w) {
            *o = self.lambda * wi;
        }
        for (r, y) in c.rows().zip(c.labels()) {
            let t = y * x.row_dot(r, w);
            // d/dz log(1 + e^{-yz}) = -y σ(-yz)
            x.row_axpy(r, -y * sigmoid(-t) * inv_b, out);
        }
    }

    fn hess_vec_component_into(&self, i: usize, w: &[f64], v: &[f64], out: &mut [f64]) {
        let c = self.components.component(i);
        let x = c.matrix();
        let inv_b = 1.0 / self.components.batch_size() as f64;
        for (o, vi) in out.iter_mut().zip(v) {
            *o = self.lambda * vi;
        }
        for (r, y) in c.rows().zip(c.labels()) {
            let s = sigmoid(-y * x.row_dot(r, w));
            let weight = s * (1.0 - s) * x.row_dot(r, v) * inv_b;
            x.row_axpy(r, weight, out);
        }
    }

    fn full_hessian(&self, w: &[f64]) -> Option<DenseMatrix> {
        let d = self.dim();
        if d > DENSE_HESSIAN_MAX_DIM {
            return None;
        }
        let x = self.components.matrix();
        let rows = x.rows();
        let mut h = DenseMatrix::zeros(d);
        for (r, y) in (0..rows).zip(self.components.labels()) {
            let s = sigmoid(-y * x.row_dot(r, w));
            let weight = s * (1.0 - s) / rows as f64;
            let (idx, val) = x.row(r);
            for (&a, va) in idx.iter().zip(val) {
                for (&b, vb) in idx.iter().zip(val) {
                    let (a, b) = (a as usize, b as usize);
                    h.set(a, b, h.get(a, b) + weight * va * vb);
                }
            }
        }
        for k in 0..d {
            h.set(k, k, h.get(k, k) + self.lambda);
        }
        Some(h)
    }
}

impl Curvature for LogisticObjective {
    /// `max_i σ_max(X_i)² / (4b) + λ`, since the loss curvature is at most 1/4.
    fn estimate_smoothness(&self, opts: &PowerIteration) -> Result<f64, ObjectiveError> {
        let n = self.num_components();
        let tops: Result<Vec<f64>, ObjectiveError> = (0..n)
            .into_par_iter()
            .map(|i| self.gram_top_eigenvalue(self.components.component(i).rows(), opts))
            .collect();
        let top = tops?.into_iter().fold(0.0, f64::max);
        Ok(top / (4.0 * self.components.batch_size() as f64) + self.lambda)
    }

    /// The regulariser is the only certified curvature: `μ = λ`.
    fn estimate_strong_convexity(&self, _opts: &PowerIteration) -> Result<f64, ObjectiveError> {
        if self.lambda > 0.0 {
            Ok(self.lambda)
        } else {
            Err(ObjectiveError::NotStronglyConvex { mu: self.lambda })
        }
    }

    fn estimate_full_smoothness(&self, opts: &PowerIteration) -> Result<f64, ObjectiveError> {
        let rows = self.components.matrix().rows();
        let top = self.gram_top_eigenvalue(0..rows, opts)?;
        Ok(top / (4.0 * rows as f64) + self.lambda)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{parse_libsvm_str, partition, ParseOptions};

    fn objective(text: &str, b: usize, lambda: f64) -> LogisticObjective {
        let d = parse_libsvm_str(text, ParseOptions::default()).unwrap();
        LogisticObjective::new(partition(&d, b).unwrap(), lambda).unwrap()
    }

    #[test]
    fn value_at_origin_is_log2() {
        let obj = objective("1 1:1 2:3\n-1 2:1\n1 1:-2\n-1 1:0.5 2:0.5\n", 2, 0.0);
        let v = obj.value(&[0.0, 0.0]).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn gradient_at_origin() {
        // -(1/(2nb)) Σ y_k x_k
        let text = "1 1:1 2:3\n-1 2:1\n1 1:-2\n-1 1:0.5 2:0.5\n";
        let obj = objective(text, 2, 0.0);
        let g = obj.full_grad(&[0.0, 0.0]).unwrap();
        let expected = [-(1.0 - 2.0 - 0.5) / 8.0, -(3.0 - 1.0 - 0.5) / 8.0];
        assert!((g[0] - expected[0]).abs() < 1e-15);
        assert!((g[1] - expected[1]).abs() < 1e-15);
    }

    #[test]
    fn single_sample_gradient() {
        let obj = objective("1 1:1\n", 1, 0.0);
        assert_eq!(obj.component_grad(0, &[0.0]).unwrap(), vec![-0.5]);
    }

    #[test]
    fn single_row_smoothness() {
        let obj = objective("1 1:1\n", 1, 0.0);
        let l = obj.estimate_smoothness(&PowerIteration::default()).unwrap();
        assert!((l - 0.25).abs() < 1e-12);
    }

    #[test]
    fn strong_convexity_is_lambda() {
        let obj = objective("1 1:1\n-1 1:2\n", 1, 1e-3);
        assert_eq!(obj.estimate_strong_convexity(&PowerIteration::default()).unwrap(), 1e-3);
        let obj = objective("1 1:1\n-1 1:2\n", 1, 0.0);
        assert!(matches!(
            obj.estimate_strong_convexity(&PowerIteration::default()),
            Err(ObjectiveError::NotStronglyConvex { .. })
        ));
    }

    #[test]
    fn stable_at_large_margins() {
        let obj = objective("1 1:1\n-1 1:1\n", 1, 0.0);
        for w in [1e4, -1e4, 800.0, -800.0] {
            let v = obj.value(&[w]).unwrap();
            assert!(v.is_finite());
            let g = obj.full_grad(&[w]).unwrap();
            assert!(g[0].is_finite());
        }
        assert!((logistic_loss(-1000.0) - 1000.0).abs() < 1e-12);
        assert_eq!(logistic_loss(1000.0), 0.0);
    }

    #[test]
    fn errors_on_bad_input() {
        let obj = objective("1 1:1\n-1 1:2\n", 1, 0.0);
        assert!(matches!(
            obj.component_grad(2, &[0.0]),
            Err(ObjectiveError::Component { .. })
        ));
        assert!(matches!(
            obj.full_grad(&[0.0, 1.0]),
            Err(ObjectiveError::Dimension { .. })
        ));
        assert_eq!(obj.component_hess_vec(0, &[0.3], &[0.0]).unwrap(), vec![0.0]);
        assert!(LogisticObjective::new(obj.components().clone(), -1.0).is_err());
    }

    #[test]
    fn dense_hessian_matches_hess_vec() {
        let text = "1 1:1 2:3\n-1 2:1\n1 1:-2 3:1\n-1 1:0.5 2:0.5\n1 3:2\n-1 1:1\n";
        let obj = objective(text, 2, 0.1);
        let w = [0.3, -0.2, 0.7];
        let h = obj.full_hessian(&w).unwrap();
        for k in 0..3 {
            let mut e = [0.0; 3];
            e[k] = 1.0;
            let hv = obj.full_hess_vec(&w, &e).unwrap();
            for j in 0..3 {
                assert!((hv[j] - h.get(j, k)).abs() < 1e-14);
            }
        }
    }
}
