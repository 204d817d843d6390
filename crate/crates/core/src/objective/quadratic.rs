use super::{Curvature, FiniteSumObjective, ObjectiveError};
use crate::linalg::{self, dominant_eigenvalue, DenseMatrix, PowerIteration};
use crate::shuffle::SeededRng;
use serde::{Deserialize, Serialize};

/// `f_i(w) = ½ (w − c_i)ᵀ A_i (w − c_i)` with symmetric PSD `A_i` and a
/// positive definite average `Ā`.
#[derive(Clone, Debug)]
pub struct QuadraticObjective {
    matrices: Vec<DenseMatrix>,
    centers: Vec<Vec<f64>>,
    mean_matrix: DenseMatrix,
    minimizer: Vec<f64>,
}

impl QuadraticObjective {
    pub fn new(matrices: Vec<DenseMatrix>, centers: Vec<Vec<f64>>) -> Result<Self, ObjectiveError> {
        let n = matrices.len();
        if n == 0 || centers.len() != n {
            return Err(ObjectiveError::Invalid(format!(
                "need the same positive number of matrices and centers, got {n} and {}",
                centers.len()
            )));
        }
        let d = matrices[0].dim();
        for (a, c) in matrices.iter().zip(&centers) {
            if a.dim() != d || c.len() != d {
                return Err(ObjectiveError::Dimension {
                    expected: d,
                    got: if a.dim() != d { a.dim() } else { c.len() },
                });
            }
            let scale = (0..d).map(|k| a.get(k, k).abs()).fold(1.0, f64::max);
            if a.asymmetry() > 1e-12 * scale {
                return Err(ObjectiveError::Invalid("component matrix is not symmetric".into()));
            }
            // PSD up to rounding: A + tiny·I must factor.
            let mut shifted = a.clone();
            shifted.scaled_add(1e-12 * scale, &DenseMatrix::identity(d));
            if shifted.cholesky().is_err() {
                return Err(ObjectiveError::Invalid(
                    "component matrix is not positive semidefinite".into(),
                ));
            }
        }
        let mut mean_matrix = DenseMatrix::zeros(d);
        let mut rhs = vec![0.0; d];
        for (a, c) in matrices.iter().zip(&centers) {
            mean_matrix.scaled_add(1.0 / n as f64, a);
            linalg::axpy(1.0 / n as f64, &a.matvec(c), &mut rhs);
        }
        let chol = mean_matrix
            .cholesky()
            .map_err(|_| ObjectiveError::NotStronglyConvex { mu: 0.0 })?;
        let minimizer = chol.solve(&rhs);
        Ok(Self {
            matrices,
            centers,
            mean_matrix,
            minimizer,
        })
    }

    /// The same matrix `a` for every component, centers `cs`.
    pub fn shared(a: DenseMatrix, centers: Vec<Vec<f64>>) -> Result<Self, ObjectiveError> {
        let matrices = vec![a; centers.len()];
        Self::new(matrices, centers)
    }

    pub fn matrices(&self) -> &[DenseMatrix] {
        &self.matrices
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn mean_matrix(&self) -> &DenseMatrix {
        &self.mean_matrix
    }

    /// Closed-form `w* = Ā⁻¹ (1/n) Σ A_i c_i`.
    pub fn minimizer(&self) -> &[f64] {
        &self.minimizer
    }
}

impl FiniteSumObjective for QuadraticObjective {
    fn num_components(&self) -> usize {
        self.matrices.len()
    }

    fn dim(&self) -> usize {
        self.mean_matrix.dim()
    }

    fn eval_component(&self, i: usize, w: &[f64]) -> f64 {
        let r = linalg::sub(w, &self.centers[i]);
        0.5 * linalg::dot(&r, &self.matrices[i].matvec(&r))
    }

    fn grad_component_into(&self, i: usize, w: &[f64], out: &mut [f64]) {
        let a = &self.matrices[i];
        let c = &self.centers[i];
        for (k, o) in out.iter_mut().enumerate() {
            *o = a
                .row(k)
                .iter()
                .zip(w.iter().zip(c))
                .map(|(akj, (wj, cj))| akj * (wj - cj))
                .sum();
        }
    }

    fn hess_vec_component_into(&self, i: usize, _w: &[f64], v: &[f64], out: &mut [f64]) {
        self.matrices[i].matvec_into(v, out);
    }

    fn full_hessian(&self, _w: &[f64]) -> Option<DenseMatrix> {
        Some(self.mean_matrix.clone())
    }
}

impl Curvature for QuadraticObjective {
    fn estimate_smoothness(&self, opts: &PowerIteration) -> Result<f64, ObjectiveError> {
        let d = self.dim();
        let mut best: f64 = 0.0;
        for a in &self.matrices {
            let e = dominant_eigenvalue(d, opts, |x, y| a.matvec_into(x, y))?;
            best = best.max(e.value);
        }
        Ok(best)
    }

    /// `λ_min(Ā)` by inverse iteration on a Cholesky factor of `Ā`.
    fn estimate_strong_convexity(&self, opts: &PowerIteration) -> Result<f64, ObjectiveError> {
        let chol = self
            .mean_matrix
            .cholesky()
            .map_err(|_| ObjectiveError::NotStronglyConvex { mu: 0.0 })?;
        let e = dominant_eigenvalue(self.dim(), opts, |x, y| chol.solve_into(x, y))?;
        if !(e.value > 0.0) || !e.value.is_finite() {
            return Err(ObjectiveError::NotStronglyConvex { mu: 0.0 });
        }
        Ok(1.0 / e.value)
    }

    fn estimate_full_smoothness(&self, opts: &PowerIteration) -> Result<f64, ObjectiveError> {
        let a = &self.mean_matrix;
        Ok(dominant_eigenvalue(self.dim(), opts, |x, y| a.matvec_into(x, y))?.value)
    }
}

/// Seeded family of strongly convex quadratics with a controllable condition
/// number and similarity level.
///
/// In a random orthonormal basis `q_1..q_d`, every `A_i` has `q_1` as an
/// eigenvector with eigenvalue `1/condition`. On the complement the average
/// has eigenvalues log-spaced in `[floor, 1]` and component `i` adds a
/// zero-mean symmetric perturbation `F_i` with `max_i ‖F_i‖ = similarity · floor`.
/// So `μ = min(1/condition, floor)` and `δ = 2 · similarity · floor`.
/// Changing `condition` leaves `L` and `δ` untouched, and every `A_i` stays
/// positive definite for `similarity < 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticSpec {
    pub dim: usize,
    pub components: usize,
    pub condition: f64,
    pub similarity: f64,
    pub seed: u64,
    #[serde(default = "default_floor")]
    pub floor: f64,
    /// Standard deviation of the component centers.
    #[serde(default = "default_center_scale")]
    pub center_scale: f64,
}

fn default_floor() -> f64 {
    0.1
}

fn default_center_scale() -> f64 {
    1.0
}

impl QuadraticSpec {
    pub fn new(dim: usize, components: usize, condition: f64, similarity: f64, seed: u64) -> Self {
        Self {
            dim,
            components,
            condition,
            similarity,
            seed,
            floor: default_floor(),
            center_scale: default_center_scale(),
        }
    }

    pub fn validate(&self) -> Result<(), ObjectiveError> {
        if self.dim == 0 || self.components == 0 {
            return Err(ObjectiveError::Invalid(
                "quadratic spec needs dim >= 1 and components >= 1".into(),
            ));
        }
        if !(self.condition >= 1.0) || !self.condition.is_finite() {
            return Err(ObjectiveError::Invalid(format!(
                "condition must be >= 1, got {}",
                self.condition
            )));
        }
        if !(0.0..1.0).contains(&self.similarity) {
            return Err(ObjectiveError::Invalid(format!(
                "similarity must lie in [0, 1), got {}",
                self.similarity
            )));
        }
        if !(self.floor > 0.0 && self.floor <= 1.0) {
            return Err(ObjectiveError::Invalid(format!(
                "floor must lie in (0, 1], got {}",
                self.floor
            )));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<QuadraticObjective, ObjectiveError> {
        self.validate()?;
        let d = self.dim;
        let n = self.components;
        let mut rng = SeededRng::new(self.seed);
        let basis = random_orthonormal(d, &mut rng);

        // Spectrum of Ā on the complement of q_1.
        let m = d - 1;
        let tail: Vec<f64> = (0..m)
            .map(|k| {
                if m == 1 {
                    1.0
                } else {
                    self.floor.powf(1.0 - k as f64 / (m - 1) as f64)
                }
            })
            .collect();

        let mut perturbations: Vec<DenseMatrix> = (0..n)
            .map(|_| {
                let mut g = DenseMatrix::zeros(m);
                for r in 0..m {
                    for c in 0..=r {
                        let x = rng.normal();
                        g.set(r, c, x);
                        g.set(c, r, x);
                    }
                }
                g
            })
            .collect();
        let mut mean = DenseMatrix::zeros(m);
        for p in &perturbations {
            mean.scaled_add(1.0 / n as f64, p);
        }
        for p in &mut perturbations {
            p.scaled_add(-1.0, &mean);
        }
        let biggest = perturbations
            .iter()
            .map(spectral_norm_sym)
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .fold(0.0, f64::max);
        let target = self.similarity * self.floor;
        let scale = if biggest > 0.0 { target / biggest } else { 0.0 };

        let mut matrices = Vec::with_capacity(n);
        for p in &perturbations {
            // Block matrix in the rotated basis: [1/condition] ⊕ (diag(tail) + scale·F_i).
            let mut block = DenseMatrix::zeros(d);
            block.set(0, 0, 1.0 / self.condition);
            for r in 0..m {
                for c in 0..m {
                    let mut v = scale * p.get(r, c);
                    if r == c {
                        v += tail[r];
                    }
                    block.set(r + 1, c + 1, v);
                }
            }
            matrices.push(rotate(&basis, &block));
        }
        let centers = (0..n)
            .map(|_| (0..d).map(|_| self.center_scale * rng.normal()).collect())
            .collect();
        QuadraticObjective::new(matrices, centers)
    }
}

fn spectral_norm_sym(a: &DenseMatrix) -> Result<f64, ObjectiveError> {
    let d = a.dim();
    let mut tmp = vec![0.0; d];
    let e = dominant_eigenvalue(d, &PowerIteration::precise(), |x, y| {
        a.matvec_into(x, &mut tmp);
        a.matvec_into(&tmp, y);
    })?;
    Ok(e.value.max(0.0).sqrt())
}

/// Columns of the returned rows-matrix form an orthonormal basis (modified Gram-Schmidt).
fn random_orthonormal(d: usize, rng: &mut SeededRng) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d);
    while basis.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        for b in &basis {
            let p = linalg::dot(&v, b);
            linalg::axpy(-p, b, &mut v);
        }
        let nv = linalg::norm(&v);
        if nv > 1e-8 {
            v.iter_mut().for_each(|x| *x /= nv);
            basis.push(v);
        }
    }
    basis
}

/// `Q B Qᵀ` where `Q` has the basis vectors as columns, symmetrised.
fn rotate(basis: &[Vec<f64>], block: &DenseMatrix) -> DenseMatrix {
    let d = block.dim();
    let mut out = DenseMatrix::zeros(d);
    for r in 0..d {
        for c in 0..=r {
            let mut s = 0.0;
            for a in 0..d {
                for b in 0..d {
                    s += basis[a][r] * block.get(a, b) * basis[b][c];
                }
            }
            out.set(r, c, s);
            out.set(c, r, s);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_objective() -> QuadraticObjective {
        QuadraticObjective::shared(
            DenseMatrix::from_diag(&[1.0, 4.0]),
            vec![vec![1.0, 0.0], vec![-1.0, 2.0]],
        )
        .unwrap()
    }

    #[test]
    fn known_spectrum_constants() {
        let q = diag_objective();
        let p = PowerIteration::precise();
        assert!((q.estimate_smoothness(&p).unwrap() - 4.0).abs() < 1e-12);
        assert!((q.estimate_strong_convexity(&p).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_gradient() {
        let q = QuadraticObjective::shared(DenseMatrix::identity(2), vec![vec![0.0, 0.0]]).unwrap();
        assert_eq!(q.component_grad(0, &[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn gradient_vanishes_at_minimizer() {
        let q = diag_objective();
        let g = q.full_grad(q.minimizer()).unwrap();
        assert!(linalg::norm(&g) < 1e-15);
        assert_eq!(q.minimizer(), &[0.0, 1.0]);
    }

    #[test]
    fn hess_vec_ignores_point() {
        let q = diag_objective();
        let v = [0.5, -1.0];
        assert_eq!(
            q.component_hess_vec(1, &[3.0, 3.0], &v).unwrap(),
            q.component_hess_vec(1, &[-7.0, 0.1], &v).unwrap()
        );
        assert_eq!(
            q.component_hess_vec(0, &[1.0, 1.0], &[0.0, 0.0]).unwrap(),
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn rejects_bad_matrices() {
        let asym = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(QuadraticObjective::shared(asym, vec![vec![0.0; 2]]).is_err());
        let indefinite = DenseMatrix::from_diag(&[1.0, -1.0]);
        assert!(QuadraticObjective::shared(indefinite, vec![vec![0.0; 2]]).is_err());
        let singular = DenseMatrix::from_diag(&[1.0, 0.0]);
        assert!(matches!(
            QuadraticObjective::shared(singular, vec![vec![0.0; 2]]),
            Err(ObjectiveError::NotStronglyConvex { .. })
        ));
    }

    #[test]
    fn spec_controls_condition_only_through_mu() {
        let a = QuadraticSpec::new(6, 4, 20.0, 0.5, 3).build().unwrap();
        let b = QuadraticSpec::new(6, 4, 40.0, 0.5, 3).build().unwrap();
        let p = PowerIteration::precise();
        let (la, lb) = (a.estimate_smoothness(&p).unwrap(), b.estimate_smoothness(&p).unwrap());
        assert!((la - lb).abs() < 1e-10 * la);
        let (ma, mb) = (
            a.estimate_strong_convexity(&p).unwrap(),
            b.estimate_strong_convexity(&p).unwrap(),
        );
        assert!((ma - 1.0 / 20.0).abs() < 1e-10);
        assert!((mb - 1.0 / 40.0).abs() < 1e-10);
    }

    #[test]
    fn spec_validation() {
        assert!(QuadraticSpec::new(0, 1, 2.0, 0.1, 0).build().is_err());
        assert!(QuadraticSpec::new(3, 2, 0.5, 0.1, 0).build().is_err());
        assert!(QuadraticSpec::new(3, 2, 2.0, 1.0, 0).build().is_err());
        assert!(QuadraticSpec::new(1, 3, 2.0, 0.3, 0).build().is_ok());
    }
}
