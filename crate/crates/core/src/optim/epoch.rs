use super::{EpochTrace, OptimError, OptimizerState};
use crate::objective::FiniteSumObjective;

fn check_inputs<O>(state: &OptimizerState, obj: &O, indices: &[usize]) -> Result<(), OptimError>
where
    O: FiniteSumObjective + ?Sized,
{
    let d = obj.dim();
    let n = obj.num_components();
    for (name, len) in [
        ("w", state.w.len()),
        ("w_minus", state.w_minus.len()),
        ("v", state.v.len()),
        ("v_tilde", state.v_tilde.len()),
        ("delta", state.delta.len()),
    ] {
        if len != d {
            return Err(OptimError::Config(format!(
                "state vector {name} has length {len}, objective has d = {d}"
            )));
        }
    }
    if let Some(&bad) = indices.iter().find(|&&k| k >= n) {
        return Err(OptimError::Config(format!(
            "component index {bad} out of range (n = {n})"
        )));
    }
    Ok(())
}

fn step(w: &mut [f64], eta: f64, dir: &[f64], epoch: usize, step: usize) -> Result<(), OptimError> {
    for (wi, di) in w.iter_mut().zip(dir) {
        *wi -= eta * di;
    }
    if crate::linalg::all_finite(w) {
        Ok(())
    } else {
        Err(OptimError::Divergence { epoch, step })
    }
}

fn is_permutation(p: &[usize], n: usize) -> bool {
    if p.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    p.iter().all(|&k| k < n && !std::mem::replace(&mut seen[k], true))
}

/// One epoch of Shuffled-SARAH over `permutation` (zero-based).
///
/// Costs `2n` component gradients: `∇f_{πⁱ}(wⁱ)` is evaluated once and feeds
/// both the running average and the correction `Δ`. With `record = false`
/// the trace only carries the evaluation count.
pub fn shuffled_sarah_epoch<O>(
    state: &mut OptimizerState,
    obj: &O,
    permutation: &[usize],
    eta: f64,
    record: bool,
) -> Result<EpochTrace, OptimError>
where
    O: FiniteSumObjective + ?Sized,
{
    check_inputs(state, obj, permutation)?;
    let n = obj.num_components();
    if !is_permutation(permutation, n) {
        return Err(OptimError::Config(format!("not a permutation of 0..{n}")));
    }
    let d = obj.dim();
    let s = state.epoch;
    let mut trace = EpochTrace::start(s, permutation, record);
    let OptimizerState {
        w,
        w_minus,
        v,
        v_tilde,
        delta,
        aliased,
        ..
    } = state;

    w_minus.copy_from_slice(w);
    let mut dir = if *aliased { v_tilde.clone() } else { v.clone() };
    step(w, eta, &dir, s, 0)?;
    let mut recursion = dir.clone();
    if record {
        trace.inner_points.push(w_minus.clone());
        trace.directions.push(dir.clone());
        trace.recursion_v.push(recursion.clone());
    }

    let mut g = vec![0.0; d];
    let mut h = vec![0.0; d];
    for i in 1..=n {
        let k = permutation[i - 1];
        obj.grad_component_into(k, w, &mut g);
        let keep = (i - 1) as f64 / i as f64;
        let add = 1.0 / i as f64;
        for (t, gj) in v_tilde.iter_mut().zip(&g) {
            *t = keep * *t + add * gj;
        }
        obj.grad_component_into(k, w_minus, &mut h);
        for j in 0..d {
            delta[j] += g[j] - h[j];
        }
        if record {
            for j in 0..d {
                recursion[j] += g[j] - h[j];
            }
        }
        w_minus.copy_from_slice(w);
        let anchor: &[f64] = if *aliased { &v_tilde[..] } else { &v[..] };
        for j in 0..d {
            dir[j] = anchor[j] + delta[j];
        }
        step(w, eta, &dir, s, i)?;
        if record {
            trace.inner_points.push(w_minus.clone());
            trace.directions.push(dir.clone());
            trace.recursion_v.push(recursion.clone());
            trace.gradients.push(g.clone());
        }
    }

    v.copy_from_slice(v_tilde);
    v_tilde.fill(0.0);
    delta.fill(0.0);
    *aliased = false;
    state.epoch += 1;
    trace.grad_evals = 2 * n as u64;
    Ok(trace)
}

/// `v = ∇P(w)`, one step, then the SARAH recursion over `indices`.
fn sarah_loop<O>(
    state: &mut OptimizerState,
    obj: &O,
    indices: &[usize],
    eta: f64,
    record: bool,
) -> Result<EpochTrace, OptimError>
where
    O: FiniteSumObjective + ?Sized,
{
    check_inputs(state, obj, indices)?;
    let d = obj.dim();
    let n = obj.num_components();
    let s = state.epoch;
    let mut trace = EpochTrace::start(s, indices, record);
    let OptimizerState { w, w_minus, v, .. } = state;

    let full = obj.full_grad(w)?;
    v.copy_from_slice(&full);
    w_minus.copy_from_slice(w);
    step(w, eta, v, s, 0)?;
    if record {
        trace.inner_points.push(w_minus.clone());
        trace.directions.push(v.clone());
        trace.recursion_v.push(v.clone());
    }

    let mut g = vec![0.0; d];
    let mut h = vec![0.0; d];
    for (i, &k) in indices.iter().enumerate() {
        obj.grad_component_into(k, w, &mut g);
        obj.grad_component_into(k, w_minus, &mut h);
        for j in 0..d {
            v[j] += g[j] - h[j];
        }
        w_minus.copy_from_slice(w);
        step(w, eta, v, s, i + 1)?;
        if record {
            trace.inner_points.push(w_minus.clone());
            trace.directions.push(v.clone());
            trace.recursion_v.push(v.clone());
            trace.gradients.push(g.clone());
        }
    }
    state.aliased = false;
    state.epoch += 1;
    trace.grad_evals = (n + 2 * indices.len()) as u64;
    Ok(trace)
}

/// One epoch of RR-SARAH: a full gradient, then one recursion step per
/// component in `permutation` order. Costs `3n` component gradients.
pub fn rr_sarah_epoch<O>(
    state: &mut OptimizerState,
    obj: &O,
    permutation: &[usize],
    eta: f64,
    record: bool,
) -> Result<EpochTrace, OptimError>
where
    O: FiniteSumObjective + ?Sized,
{
    let n = obj.num_components();
    if !is_permutation(permutation, n) {
        return Err(OptimError::Config(format!("not a permutation of 0..{n}")));
    }
    sarah_loop(state, obj, permutation, eta, record)
}

/// One outer loop of classical SARAH with the sampled inner `indices`
/// (with replacement, any length `m`). Costs `n + 2m` component gradients.
/// The next outer loop restarts from the last inner iterate.
pub fn classic_sarah_outer<O>(
    state: &mut OptimizerState,
    obj: &O,
    indices: &[usize],
    eta: f64,
    record: bool,
) -> Result<EpochTrace, OptimError>
where
    O: FiniteSumObjective + ?Sized,
{
    sarah_loop(state, obj, indices, eta, record)
}
