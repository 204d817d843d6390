use super::hexfloat::{format_hex, parse_hex};
use super::HarnessError;
use crate::linalg::{self, PowerIteration};
use crate::objective::{Curvature, Problem};
use serde_json::{json, Value};

/// Minimiser and optimal value of `P`, certified by the gradient residual.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceSolution {
    pub w_star: Vec<f64>,
    pub p_star: f64,
    /// `‖∇P(w_star)‖`.
    pub grad_norm_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceOptions {
    /// Target `‖∇P(w)‖`.
    pub tol: f64,
    pub max_iter: u64,
    /// Step `1/L_P`; estimated by power iteration when absent.
    pub step: Option<f64>,
    pub start: Option<Vec<f64>>,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 10_000_000,
            step: None,
            start: None,
        }
    }
}

/// Plain full-batch gradient descent with step `1/L_P` until `‖∇P(w)‖ ≤ tol`.
pub fn solve_reference<O>(obj: &O, opts: &ReferenceOptions) -> Result<ReferenceSolution, HarnessError>
where
    O: Curvature + ?Sized,
{
    let step = match opts.step {
        Some(s) => s,
        None => 1.0 / obj.estimate_full_smoothness(&PowerIteration::default())?,
    };
    if !(step > 0.0) || !step.is_finite() {
        return Err(HarnessError::Invalid(format!(
            "reference step must be positive, got {step}"
        )));
    }
    let mut w = match &opts.start {
        Some(w0) => {
            obj.check_dim(w0)?;
            w0.clone()
        }
        None => vec![0.0; obj.dim()],
    };
    let mut g = obj.full_grad(&w)?;
    let mut residual = linalg::norm(&g);
    let mut iterations = 0u64;
    while residual > opts.tol {
        if iterations >= opts.max_iter {
            return Err(HarnessError::ReferenceNotConverged { iterations, residual });
        }
        linalg::axpy(-step, &g, &mut w);
        g = obj.full_grad(&w)?;
        residual = linalg::norm(&g);
        if !residual.is_finite() {
            return Err(HarnessError::ReferenceNotConverged { iterations, residual });
        }
        iterations += 1;
    }
    log::debug!("reference solution after {iterations} gradient steps, residual {residual:e}");
    Ok(ReferenceSolution {
        p_star: obj.value(&w)?,
        w_star: w,
        grad_norm_residual: residual,
    })
}

/// As [`solve_reference`], warm-started from the closed form for quadratics.
pub fn solve_problem_reference(problem: &Problem, opts: &ReferenceOptions) -> Result<ReferenceSolution, HarnessError> {
    match problem {
        Problem::Quadratic(q) if opts.start.is_none() => {
            let opts = ReferenceOptions {
                start: Some(q.minimizer().to_vec()),
                ..opts.clone()
            };
            solve_reference(problem, &opts)
        }
        _ => solve_reference(problem, opts),
    }
}

impl ReferenceSolution {
    /// JSON with every float as an exact hex literal.
    pub fn to_json(&self) -> String {
        let doc = json!({
            "w_star": self.w_star.iter().map(|x| format_hex(*x)).collect::<Vec<_>>(),
            "p_star": format_hex(self.p_star),
            "grad_norm_residual": format_hex(self.grad_norm_residual),
        });
        serde_json::to_string_pretty(&doc).expect("plain JSON value") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let doc: Value = serde_json::from_str(text).map_err(|e| HarnessError::Invalid(e.to_string()))?;
        let field = |name: &str| -> Result<f64, HarnessError> {
            let s = doc[name]
                .as_str()
                .ok_or_else(|| HarnessError::Invalid(format!("missing hex field `{name}`")))?;
            parse_hex(s).map_err(|e| HarnessError::Invalid(e.to_string()))
        };
        let w_star = doc["w_star"]
            .as_array()
            .ok_or_else(|| HarnessError::Invalid("missing array `w_star`".into()))?
            .iter()
            .map(|v| {
                v.as_str()
                    .ok_or_else(|| HarnessError::Invalid("w_star entries must be hex strings".into()))
                    .and_then(|s| parse_hex(s).map_err(|e| HarnessError::Invalid(e.to_string())))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            w_star,
            p_star: field("p_star")?,
            grad_norm_residual: field("grad_norm_residual")?,
        })
    }
}
