//! Dense symmetric eigensolves used as the oracle for curvature constants.

use nalgebra::DMatrix;
use shuffled_sarah::linalg::DenseMatrix;

pub fn to_na(m: &DenseMatrix) -> DMatrix<f64> {
    let d = m.dim();
    DMatrix::from_fn(d, d, |i, j| m.get(i, j))
}

pub fn eigen_range(m: &DMatrix<f64>) -> (f64, f64) {
    let e = m.clone().symmetric_eigen().eigenvalues;
    (e.min(), e.max())
}

pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    let (lo, hi) = eigen_range(m);
    lo.abs().max(hi.abs())
}

/// `(L, μ, δ)` of component Hessians `hs` from dense eigendecompositions.
pub fn dense_constants(hs: &[DMatrix<f64>]) -> (f64, f64, f64) {
    let n = hs.len() as f64;
    let mean = hs
        .iter()
        .fold(DMatrix::zeros(hs[0].nrows(), hs[0].ncols()), |acc, h| acc + h)
        / n;
    let l = hs.iter().map(|h| eigen_range(h).1).fold(0.0, f64::max);
    let mu = eigen_range(&mean).0;
    let delta = 2.0 * hs.iter().map(|h| spectral_norm(&(h - &mean))).fold(0.0, f64::max);
    (l, mu, delta)
}
