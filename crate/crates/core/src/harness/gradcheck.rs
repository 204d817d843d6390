use crate::linalg;
use crate::objective::{FiniteSumObjective, ObjectiveError};
use crate::shuffle::SeededRng;
use serde::Serialize;

/// Largest relative errors of analytic derivatives against central differences.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub points: usize,
    pub component_grad: f64,
    pub full_grad: f64,
    pub hess_vec: f64,
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let scale = linalg::norm(a).max(linalg::norm(b)).max(1e-12);
    linalg::dist_sq(a, b).sqrt() / scale
}

fn fd_gradient(f: impl Fn(&[f64]) -> f64, w: &[f64], h: f64) -> Vec<f64> {
    let mut x = w.to_vec();
    (0..w.len())
        .map(|j| {
            x[j] = w[j] + h;
            let up = f(&x);
            x[j] = w[j] - h;
            let down = f(&x);
            x[j] = w[j];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Compares gradients and Hessian-vector products with central differences
/// at `points` Gaussian points of standard deviation `scale`.
pub fn finite_difference_check<O>(
    obj: &O,
    points: usize,
    scale: f64,
    seed: u64,
) -> Result<GradCheckReport, ObjectiveError>
where
    O: FiniteSumObjective + ?Sized,
{
    let d = obj.dim();
    let n = obj.num_components();
    let h = 1e-5;
    let mut rng = SeededRng::new(seed);
    let mut report = GradCheckReport {
        points,
        component_grad: 0.0,
        full_grad: 0.0,
        hess_vec: 0.0,
    };
    for _ in 0..points {
        let w: Vec<f64> = (0..d).map(|_| scale * rng.normal()).collect();
        let v: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        let i = rng.below(n as u64) as usize;

        let analytic = obj.component_grad(i, &w)?;
        let fd = fd_gradient(|x| obj.eval_component(i, x), &w, h);
        report.component_grad = report.component_grad.max(rel_err(&analytic, &fd));

        let analytic = obj.full_grad(&w)?;
        let fd = fd_gradient(|x| obj.value(x).expect("dimension checked"), &w, h);
        report.full_grad = report.full_grad.max(rel_err(&analytic, &fd));

        let analytic = obj.component_hess_vec(i, &w, &v)?;
        let mut up = w.clone();
        let mut down = w.clone();
        linalg::axpy(h, &v, &mut up);
        linalg::axpy(-h, &v, &mut down);
        let gu = obj.component_grad(i, &up)?;
        let gd = obj.component_grad(i, &down)?;
        let fd: Vec<f64> = gu.iter().zip(&gd).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        report.hess_vec = report.hess_vec.max(rel_err(&analytic, &fd));
    }
    Ok(report)
}
