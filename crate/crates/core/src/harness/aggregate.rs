use super::{EpochRecord, HarnessError, MetricsSeries};
use crate::optim::RunConfig;

/// Coordinate-wise mean and envelopes of repeated runs.
#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    pub mean: MetricsSeries,
    pub min: MetricsSeries,
    pub max: MetricsSeries,
    pub runs: usize,
}

fn without_seed(c: &RunConfig) -> RunConfig {
    RunConfig { seed: 0, ..c.clone() }
}

fn fields(r: &EpochRecord) -> [f64; 5] {
    [
        r.suboptimality,
        r.dist_sq,
        r.grad_norm_sq,
        r.estimator_err_sq,
        r.anchor_norm_sq,
    ]
}

fn with_fields(template: &EpochRecord, f: [f64; 5]) -> EpochRecord {
    EpochRecord {
        suboptimality: f[0],
        dist_sq: f[1],
        grad_norm_sq: f[2],
        estimator_err_sq: f[3],
        anchor_norm_sq: f[4],
        ..template.clone()
    }
}

/// Averages series whose configs differ only by seed. Epoch indices and
/// evaluation counts must agree record by record.
pub fn average_runs(series: &[MetricsSeries]) -> Result<Aggregate, HarnessError> {
    let first = series
        .first()
        .ok_or_else(|| HarnessError::Mismatch("no series to average".into()))?;
    let base = without_seed(&first.config);
    for s in series {
        if without_seed(&s.config) != base {
            return Err(HarnessError::Mismatch(format!(
                "configs differ beyond the seed: {} vs {}",
                first.config.label(),
                s.config.label()
            )));
        }
        if s.records.len() != first.records.len() {
            return Err(HarnessError::Mismatch(format!(
                "series lengths differ: {} vs {}",
                first.records.len(),
                s.records.len()
            )));
        }
        for (a, b) in first.records.iter().zip(&s.records) {
            if a.epoch != b.epoch || a.grad_evals != b.grad_evals {
                return Err(HarnessError::Mismatch(format!(
                    "record mismatch at epoch {}: grad_evals {} vs {}",
                    a.epoch, a.grad_evals, b.grad_evals
                )));
            }
        }
    }
    let k = series.len() as f64;
    let mut mean = Vec::with_capacity(first.records.len());
    let mut lo = Vec::with_capacity(first.records.len());
    let mut hi = Vec::with_capacity(first.records.len());
    for (idx, template) in first.records.iter().enumerate() {
        let mut sum = [0.0; 5];
        let mut min = [f64::INFINITY; 5];
        let mut max = [f64::NEG_INFINITY; 5];
        for s in series {
            let f = fields(&s.records[idx]);
            for j in 0..5 {
                sum[j] += f[j];
                min[j] = min[j].min(f[j]);
                max[j] = max[j].max(f[j]);
            }
        }
        mean.push(with_fields(template, sum.map(|x| x / k)));
        lo.push(with_fields(template, min));
        hi.push(with_fields(template, max));
    }
    let wrap = |records| MetricsSeries {
        records,
        config: first.config.clone(),
    };
    Ok(Aggregate {
        mean: wrap(mean),
        min: wrap(lo),
        max: wrap(hi),
        runs: series.len(),
    })
}
