//! Small dense vector/matrix kernels, deterministic pairwise reductions and
//! power iteration for symmetric positive semidefinite operators.

use crate::shuffle::SeededRng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error(
        "power iteration did not converge after {iterations} iterations (residual {residual:e}, estimate {estimate:e})"
    )]
    NoConvergence {
        iterations: usize,
        residual: f64,
        estimate: f64,
    },
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// Leaf size of the pairwise reductions below.
pub const PAIRWISE_BLOCK: usize = 8;
const PARALLEL_SPLIT: usize = 64;

/// Sum of `term(i)` for `i` in `0..n`, reduced in a fixed pairwise tree.
///
/// The range is halved (`mid = lo + len / 2`) until at most
/// [`PAIRWISE_BLOCK`] terms remain, which are then added left to right.
/// Wide ranges are split across rayon workers, which does not change the
/// tree and therefore not the result.
pub fn pairwise_sum<F>(n: usize, term: &F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    fn go<F: Fn(usize) -> f64 + Sync>(lo: usize, hi: usize, term: &F) -> f64 {
        let len = hi - lo;
        if len <= PAIRWISE_BLOCK {
            let mut acc = 0.0;
            for i in lo..hi {
                acc += term(i);
            }
            return acc;
        }
        let mid = lo + len / 2;
        if len >= PARALLEL_SPLIT {
            let (a, b) = rayon::join(|| go(lo, mid, term), || go(mid, hi, term));
            a + b
        } else {
            go(lo, mid, term) + go(mid, hi, term)
        }
    }
    go(0, n, term)
}

/// Vector analogue of [`pairwise_sum`]: `term(i, out)` overwrites `out` with
/// the `i`-th summand. Same tree, coordinate-wise.
pub fn pairwise_vec_sum<F>(n: usize, dim: usize, term: &F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    fn go<F: Fn(usize, &mut [f64]) + Sync>(lo: usize, hi: usize, dim: usize, term: &F) -> Vec<f64> {
        let len = hi - lo;
        if len <= PAIRWISE_BLOCK {
            let mut acc = vec![0.0; dim];
            let mut buf = vec![0.0; dim];
            for i in lo..hi {
                term(i, &mut buf);
                for (a, b) in acc.iter_mut().zip(&buf) {
                    *a += b;
                }
            }
            return acc;
        }
        let mid = lo + len / 2;
        let (mut a, b) = if len >= PARALLEL_SPLIT {
            rayon::join(|| go(lo, mid, dim, term), || go(mid, hi, dim, term))
        } else {
            (go(lo, mid, dim, term), go(mid, hi, dim, term))
        };
        for (x, y) in a.iter_mut().zip(&b) {
            *x += y;
        }
        a
    }
    go(0, n, dim, term)
}

/// Square dense matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(LinalgError::Dimension {
                    expected: n,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self { n, data })
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, d) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = *d;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), x);
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.matvec_into(x, &mut out);
        out
    }

    pub fn scaled_add(&mut self, alpha: f64, other: &DenseMatrix) {
        axpy(alpha, &other.data, &mut self.data);
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|x| *x *= alpha);
    }

    /// Largest absolute asymmetry `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn cholesky(&self) -> Result<Cholesky, LinalgError> {
        let n = self.n;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = self.get(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0) {
                return Err(LinalgError::NotPositiveDefinite { pivot: j, value: d });
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        Ok(Cholesky { n, l })
    }
}

/// Lower-triangular factor `L` with `A = L Lᵀ`.
#[derive(Clone, Debug)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn solve_into(&self, b: &[f64], x: &mut [f64]) {
        let n = self.n;
        x.copy_from_slice(b);
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.l[i * n + k] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        self.solve_into(b, &mut x);
        x
    }
}

/// Budget and stopping rule for [`dominant_eigenvalue`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerIteration {
    pub max_iter: usize,
    /// Stop once the Rayleigh quotient changes by at most `tol` relative to
    /// its value, or the residual `‖Ax − θx‖` drops to `√tol · |θ|`.
    pub tol: f64,
    /// Seed of the start vector.
    pub seed: u64,
}

impl Default for PowerIteration {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            tol: 1e-6,
            seed: 0x5e_ed0f_9013,
        }
    }
}

impl PowerIteration {
    /// Tight settings for small dense problems where iterations are cheap.
    pub fn precise() -> Self {
        Self {
            max_iter: 200_000,
            tol: 1e-15,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
}

/// Largest eigenvalue of a symmetric PSD operator given as `apply(x, out)`.
///
/// Returns 0 if the operator annihilates the iterate.
pub fn dominant_eigenvalue<F>(dim: usize, opts: &PowerIteration, mut apply: F) -> Result<Eigenpair, LinalgError>
where
    F: FnMut(&[f64], &mut [f64]),
{
    if dim == 0 {
        return Ok(Eigenpair {
            value: 0.0,
            vector: Vec::new(),
            iterations: 0,
        });
    }
    let mut rng = SeededRng::new(opts.seed);
    let mut x: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
    let nx = norm(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut y = vec![0.0; dim];
    let mut prev = f64::NAN;
    for it in 1..=opts.max_iter {
        apply(&x, &mut y);
        let theta = dot(&x, &y);
        let ny = norm(&y);
        if ny == 0.0 {
            return Ok(Eigenpair {
                value: 0.0,
                vector: x,
                iterations: it,
            });
        }
        let residual = y
            .iter()
            .zip(&x)
            .map(|(yi, xi)| (yi - theta * xi).powi(2))
            .sum::<f64>()
            .sqrt();
        // The residual test covers eigenvalues far below the operator's rounding scale,
        // where the quotient jitters by more than `tol` relative.
        if (theta - prev).abs() <= opts.tol * theta.abs() || residual <= opts.tol.sqrt() * theta.abs() {
            return Ok(Eigenpair {
                value: theta,
                vector: x,
                iterations: it,
            });
        }
        if it == opts.max_iter {
            return Err(LinalgError::NoConvergence {
                iterations: it,
                residual,
                estimate: theta,
            });
        }
        prev = theta;
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / ny;
        }
    }
    unreachable!("loop returns on its last iteration")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_exact_integers() {
        let s = pairwise_sum(1000, &|i| i as f64);
        assert_eq!(s, 499_500.0);
        let v = pairwise_vec_sum(129, 2, &|i, out: &mut [f64]| {
            out[0] = 1.0;
            out[1] = i as f64;
        });
        assert_eq!(v, vec![129.0, (128 * 129 / 2) as f64]);
        assert_eq!(pairwise_sum(0, &|_| 1.0), 0.0);
    }

    #[test]
    fn pairwise_tree_is_fixed() {
        // Same inputs reduced twice, across thread boundaries, give the same bits.
        let f = |i: usize| ((i as f64) * 0.1).sin() * 1e-3 + 1.0 / (i as f64 + 1.0);
        let a = pairwise_sum(10_000, &f);
        let b = pairwise_sum(10_000, &f);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn cholesky_solves() {
        let a = DenseMatrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]).unwrap();
        let x = a.cholesky().unwrap().solve(&[2.0, 1.0]);
        let r = a.matvec(&x);
        assert!((r[0] - 2.0).abs() < 1e-14 && (r[1] - 1.0).abs() < 1e-14);
        let singular = DenseMatrix::from_diag(&[1.0, 0.0]);
        assert!(matches!(
            singular.cholesky(),
            Err(LinalgError::NotPositiveDefinite { pivot: 1, .. })
        ));
    }

    #[test]
    fn power_iteration_known_spectrum() {
        let a = DenseMatrix::from_diag(&[1.0, 4.0, 2.0]);
        let e = dominant_eigenvalue(3, &PowerIteration::precise(), |x, y| a.matvec_into(x, y)).unwrap();
        assert!((e.value - 4.0).abs() < 1e-12);
    }

    #[test]
    fn power_iteration_zero_operator() {
        let e = dominant_eigenvalue(4, &PowerIteration::default(), |_, y| y.fill(0.0)).unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn power_iteration_reports_budget_exhaustion() {
        // Two nearly equal eigenvalues converge too slowly for a tiny budget.
        let a = DenseMatrix::from_diag(&[1.0, 0.999_999, 0.5]);
        let opts = PowerIteration {
            max_iter: 3,
            tol: 1e-16,
            seed: 1,
        };
        match dominant_eigenvalue(3, &opts, |x, y| a.matvec_into(x, y)) {
            Err(LinalgError::NoConvergence { iterations, .. }) => assert_eq!(iterations, 3),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
