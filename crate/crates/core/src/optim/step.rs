use super::OptimError;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Theoretical,
    Manual,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepSize {
    pub eta: f64,
    pub provenance: Provenance,
}

impl StepSize {
    pub fn manual(eta: f64) -> Result<Self, OptimError> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(OptimError::Config(format!(
                "step size must be positive and finite, got {eta}"
            )));
        }
        Ok(Self {
            eta,
            provenance: Provenance::Manual,
        })
    }
}

/// `min(1/(8nL), 1/(8n²δ))`; the second term is dropped when `δ = 0`.
pub fn theoretical_step_size(n: usize, smoothness: f64, similarity: f64) -> Result<StepSize, OptimError> {
    if n == 0 {
        return Err(OptimError::Config("n must be at least 1".into()));
    }
    if !(smoothness > 0.0) || !smoothness.is_finite() {
        return Err(OptimError::Config(format!(
            "smoothness must be positive, got {smoothness}"
        )));
    }
    if !(similarity >= 0.0) || !similarity.is_finite() {
        return Err(OptimError::Config(format!("similarity must be >= 0, got {similarity}")));
    }
    let n = n as f64;
    let by_l = 1.0 / (8.0 * n * smoothness);
    let by_delta = if similarity == 0.0 {
        f64::INFINITY
    } else {
        1.0 / (8.0 * n * n * similarity)
    };
    Ok(StepSize {
        eta: by_l.min(by_delta),
        provenance: Provenance::Theoretical,
    })
}
