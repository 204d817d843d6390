//! The qualitative dataset-reproduction check: tuned Shuffled-SARAH against
//! classical SARAH with its textbook parameters, on averaged curves.

use shuffled_sarah::harness::{
    average_runs, solve_problem_reference, tune_step_size, MetricsSeries, ReferenceOptions, DEFAULT_MULTIPLIERS,
};
use shuffled_sarah::objective::{estimate_constants, FiniteSumObjective, Problem, SimilarityOptions};
use shuffled_sarah::optim::{run, Algorithm, RunConfig};
use shuffled_sarah::shuffle::RuleKind;

pub const TARGET: f64 = 1e-9;
pub const COMPARE_AT: f64 = 1e-6;
pub const PASS_BUDGET: f64 = 500.0;
pub const ESTIMATOR_DROP: f64 = 1e-4;
/// Window of the linear-rate check, in suboptimality.
pub const LINEAR_FROM: f64 = 1e-3;
/// Allowed ratio between the mean log-decrease per epoch of the two halves of the window.
pub const RATE_RATIO: (f64, f64) = (0.5, 2.0);
/// Classical SARAH: `m = 4.5κ`, `η = 1/(2L)`, with a budget of this many epochs-equivalent.
pub const SARAH_BUDGET: f64 = 1000.0;

pub struct Verdict {
    pub ok: bool,
    pub detail: String,
}

pub struct Repro {
    pub reaches_target: Verdict,
    pub estimator_shrinks: Verdict,
    pub beats_sarah: Verdict,
}

fn passes(series: &MetricsSeries, n: usize, eps: f64) -> Option<f64> {
    series.first_below(eps).map(|r| r.grad_evals as f64 / n as f64)
}

/// Mean `log10` decrease per epoch over the two halves of the window from
/// `LINEAR_FROM` to `TARGET`.
fn rate_halves(series: &MetricsSeries) -> Option<(f64, f64)> {
    let r = &series.records;
    let start = r.iter().position(|x| x.suboptimality <= LINEAR_FROM)?;
    let end = r.iter().position(|x| x.suboptimality <= TARGET)?;
    if end < start + 4 || r[end].suboptimality <= 0.0 {
        return None;
    }
    let mid = (start + end) / 2;
    let rate = |a: usize, b: usize| (r[a].suboptimality.log10() - r[b].suboptimality.log10()) / (b - a) as f64;
    Some((rate(start, mid), rate(mid, end)))
}

fn averaged(
    problem: &Problem,
    cfg: &RunConfig,
    seeds: &[u64],
    reference: &shuffled_sarah::harness::ReferenceSolution,
) -> Result<MetricsSeries, String> {
    let runs: Vec<MetricsSeries> = seeds
        .iter()
        .map(|&seed| run(&RunConfig { seed, ..cfg.clone() }, problem, reference).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    Ok(average_runs(&runs).map_err(|e| e.to_string())?.mean)
}

pub fn evaluate(problem: &Problem, seed_count: u64, epochs: usize) -> Result<Repro, String> {
    let n = problem.num_components();
    let power = problem.power_settings();
    let (k, _) = estimate_constants(problem, &power, &SimilarityOptions::default()).map_err(|e| e.to_string())?;
    let reference = solve_problem_reference(problem, &ReferenceOptions::default()).map_err(|e| e.to_string())?;
    let seeds: Vec<u64> = (0..seed_count).collect();

    let mut curves = Vec::new();
    for rule in [RuleKind::Rr, RuleKind::So, RuleKind::Ig] {
        let template = RunConfig::new(Algorithm::ShuffledSarah, 0.0, epochs, rule, 0);
        let (best, _) = tune_step_size(
            problem,
            &reference,
            &template,
            k.smoothness,
            &DEFAULT_MULTIPLIERS,
            TARGET,
        )
        .map_err(|e| e.to_string())?;
        let cfg = RunConfig {
            eta: best.eta,
            ..template
        };
        let rule_seeds = if rule == RuleKind::Ig { &seeds[..1] } else { &seeds[..] };
        curves.push((rule, best.eta, averaged(problem, &cfg, rule_seeds, &reference)?));
    }

    let m = (4.5 * k.condition).round() as usize;
    let outer = (SARAH_BUDGET * n as f64 / (n + 2 * m) as f64).ceil() as usize;
    let sarah_cfg = RunConfig::new(
        Algorithm::ClassicSarah { inner_steps: m },
        0.5 / k.smoothness,
        outer.max(1),
        RuleKind::Rr,
        0,
    );
    let sarah = averaged(problem, &sarah_cfg, &seeds, &reference)?;

    let (_, eta_rr, rr) = &curves[0];
    let reach = passes(rr, n, TARGET);
    let halves = rate_halves(rr);
    let linear =
        matches!(halves, Some((a, b)) if a > 0.0 && b > 0.0 && (RATE_RATIO.0..=RATE_RATIO.1).contains(&(b / a)));
    let reaches_target = Verdict {
        ok: reach.is_some_and(|p| p <= PASS_BUDGET) && linear,
        detail: format!(
            "eta={eta_rr:.4e}, epochs-equivalent to {TARGET:e}: {}, log10 decrease per epoch (first, second half) {:?}",
            reach.map_or("not reached".into(), |p| format!("{p}")),
            halves
        ),
    };

    let first = rr.records.get(1).map(|r| r.estimator_err_sq).unwrap_or(f64::NAN);
    let last = rr.records.last().map(|r| r.estimator_err_sq).unwrap_or(f64::NAN);
    let estimator_shrinks = Verdict {
        ok: last <= ESTIMATOR_DROP * first,
        detail: format!("||v_s - grad P(w_s)||^2 at s=1: {first:e}, final: {last:e}"),
    };

    let sarah_passes = passes(&sarah, n, COMPARE_AT);
    let mut ok = true;
    let mut parts = vec![format!(
        "sarah(m={m}, eta=1/(2L)): {}",
        sarah_passes.map_or("not reached".into(), |p| format!("{p:.1}"))
    )];
    for (rule, _, c) in &curves {
        let p = passes(c, n, COMPARE_AT);
        ok &= match (p, sarah_passes) {
            (Some(p), Some(s)) => p <= s,
            (Some(_), None) => true,
            (None, _) => false,
        };
        parts.push(format!(
            "shuffled_sarah_{rule}: {}",
            p.map_or("not reached".into(), |p| format!("{p:.1}"))
        ));
    }
    let beats_sarah = Verdict {
        ok,
        detail: format!("epochs-equivalent to {COMPARE_AT:e}: {}", parts.join(", ")),
    };
    Ok(Repro {
        reaches_target,
        estimator_shrinks,
        beats_sarah,
    })
}
