use super::CliError;
use crate::data::{partition, SyntheticSpec};
use crate::harness::{
    check_monotonicity, check_theorem1, check_theorem_rr, finite_difference_check, solve_problem_reference,
    GradCheckReport, InequalityCheck, ReferenceOptions, ReferenceSolution,
};
use crate::objective::{
    estimate_constants, FiniteSumObjective, LogisticObjective, Problem, ProblemConstants, QuadraticSpec,
    SimilarityOptions,
};
use crate::optim::{run, run_observed, theoretical_step_size, Algorithm, RunConfig};
use crate::shuffle::RuleKind;
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;

pub const SUITE_EPOCHS: usize = 200;
pub const SUITE_SEEDS: u64 = 10;
pub const GRAD_TOL: f64 = 1e-6;
pub const HESS_VEC_TOL: f64 = 1e-5;
pub const GRADCHECK_POINTS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Theorem1,
    TheoremRr,
    Monotonicity,
    Gradcheck,
    All,
}

impl FromStr for Suite {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "theorem1" => Suite::Theorem1,
            "theorem_rr" => Suite::TheoremRr,
            "monotonicity" => Suite::Monotonicity,
            "gradcheck" => Suite::Gradcheck,
            "all" => Suite::All,
            other => {
                return Err(CliError::Usage(format!(
                    "unknown suite `{other}`; expected theorem1, theorem_rr, monotonicity, gradcheck or all"
                )))
            }
        })
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Theorem1 => "theorem1",
            Suite::TheoremRr => "theorem_rr",
            Suite::Monotonicity => "monotonicity",
            Suite::Gradcheck => "gradcheck",
            Suite::All => "all",
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerifyReport {
    pub lines: Vec<String>,
    pub passed: bool,
}

impl VerifyReport {
    fn push(&mut self, ok: bool, line: String) {
        self.lines.push(format!("{} {line}", if ok { "PASS" } else { "FAIL" }));
        self.passed &= ok;
    }
}

/// The seeded quadratic family behind the theorem suites: `d = 10`, `n = 8`.
pub fn verification_suite() -> QuadraticSpec {
    QuadraticSpec::new(10, 8, 20.0, 0.5, 2024)
}

struct Fixture {
    problem: Problem,
    constants: ProblemConstants,
    reference: ReferenceSolution,
}

fn fixture() -> Result<Fixture, CliError> {
    let problem = Problem::Quadratic(verification_suite().build()?);
    let power = problem.power_settings();
    let opts = SimilarityOptions {
        power: power.clone(),
        ..SimilarityOptions::default()
    };
    let (constants, _) = estimate_constants(&problem, &power, &opts)?;
    let reference = solve_problem_reference(&problem, &ReferenceOptions::default())?;
    Ok(Fixture {
        problem,
        constants,
        reference,
    })
}

const RULES: [RuleKind; 3] = [RuleKind::Rr, RuleKind::So, RuleKind::Ig];

fn cases() -> Vec<(RuleKind, u64)> {
    RULES
        .iter()
        .flat_map(|&r| (0..SUITE_SEEDS).map(move |s| (r, s)))
        .collect()
}

fn worst(checks: &[InequalityCheck]) -> Option<&InequalityCheck> {
    checks.iter().max_by(|a, b| {
        (a.lhs - a.rhs)
            .partial_cmp(&(b.lhs - b.rhs))
            .unwrap_or(std::cmp::Ordering::Equal)
    })
}

fn inequality_suite(
    fx: &Fixture,
    algorithm: Algorithm,
    eta: f64,
    name: &str,
    report: &mut VerifyReport,
) -> Result<(), CliError> {
    let n = fx.problem.num_components();
    let results: Vec<(RuleKind, u64, Vec<InequalityCheck>)> = cases()
        .into_par_iter()
        .map(|(rule, seed)| {
            let cfg = RunConfig::new(algorithm, eta, SUITE_EPOCHS, rule, seed);
            let series = run(&cfg, &fx.problem, &fx.reference)?;
            let checks = match algorithm {
                Algorithm::ShuffledSarah => check_theorem1(&series, eta, &fx.constants, n)?,
                _ => check_theorem_rr(&series, eta, &fx.constants, n)?,
            };
            Ok((rule, seed, checks))
        })
        .collect::<Result<_, CliError>>()?;
    for (rule, seed, checks) in &results {
        let failed = checks.iter().filter(|c| !c.holds).count();
        let detail = match worst(checks) {
            Some(w) => format!("tightest at s={} lhs={:e} rhs={:e}", w.epoch, w.lhs, w.rhs),
            None => "no epochs checked".into(),
        };
        report.push(
            failed == 0,
            format!(
                "{name} rule={rule} seed={seed}: {} epochs, {failed} violations, {detail}",
                checks.len()
            ),
        );
    }
    Ok(())
}

fn monotonicity_suite(fx: &Fixture, eta: f64, tag: &str, report: &mut VerifyReport) -> Result<(), CliError> {
    for algorithm in [Algorithm::RrSarah, Algorithm::ShuffledSarah] {
        let results: Vec<(f64, f64, bool)> = cases()
            .into_par_iter()
            .map(|(rule, seed)| {
                let cfg = RunConfig::new(algorithm, eta, SUITE_EPOCHS, rule, seed);
                let mut acc = (0.0f64, f64::NEG_INFINITY, true);
                run_observed(&cfg, &fx.problem, &fx.reference, true, |trace, _| {
                    // The first Shuffled-SARAH epoch steps along a partial average, not the recursion.
                    if algorithm == Algorithm::ShuffledSarah && trace.epoch == 0 {
                        return;
                    }
                    let m = check_monotonicity(trace);
                    acc.0 = acc.0.max(m.max_ratio);
                    acc.1 = acc.1.max(m.max_increase);
                    acc.2 &= m.holds;
                })?;
                Ok(acc)
            })
            .collect::<Result<_, CliError>>()?;
        let max_ratio = results.iter().map(|r| r.0).fold(0.0, f64::max);
        let max_increase = results.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
        let ok = results.iter().all(|r| r.2);
        report.push(
            ok,
            format!(
                "monotonicity {algorithm} eta={eta:e} ({tag}): max ||v^i||/||v^(i-1)|| = {max_ratio:.12}, max increase {max_increase:e}"
            ),
        );
    }
    Ok(())
}

fn gradcheck_line(name: &str, r: &GradCheckReport, report: &mut VerifyReport) {
    let ok = r.component_grad <= GRAD_TOL && r.full_grad <= GRAD_TOL && r.hess_vec <= HESS_VEC_TOL;
    report.push(
        ok,
        format!(
            "gradcheck {name}: {} points, component {:e}, full {:e}, hess-vec {:e}",
            r.points, r.component_grad, r.full_grad, r.hess_vec
        ),
    );
}

/// Small logistic problem used by the derivative checks: `d = 5`, `n = 3`.
pub fn logistic_toy() -> Result<LogisticObjective, CliError> {
    let data = SyntheticSpec {
        samples: 30,
        dimension: 5,
        density: 0.6,
        label_noise: 0.1,
        seed: 5,
    }
    .generate();
    let set = partition(&data, 10).map_err(|e| CliError::Data(e.to_string()))?;
    Ok(LogisticObjective::new(set, 1e-3)?)
}

/// Runs a verification suite. `eta` replaces the theoretical step in the
/// theorem suites; a step above the theorem bound is refused.
pub fn cmd_verify(suite: Suite, eta: Option<f64>) -> Result<VerifyReport, CliError> {
    let mut report = VerifyReport {
        lines: Vec::new(),
        passed: true,
    };
    let needs_fixture = suite != Suite::Gradcheck;
    let fx = if needs_fixture { Some(fixture()?) } else { None };
    let theoretical = match &fx {
        Some(fx) => Some(
            theoretical_step_size(
                fx.problem.num_components(),
                fx.constants.smoothness,
                fx.constants.similarity,
            )?
            .eta,
        ),
        None => None,
    };
    if let (Some(fx), Some(t)) = (&fx, theoretical) {
        let k = &fx.constants;
        report.lines.push(format!(
            "suite quadratic d=10 n=8: L={:e} mu={:e} delta={:e} eta_theoretical={t:e}",
            k.smoothness, k.strong_convexity, k.similarity
        ));
    }
    let eta_thm = eta.or(theoretical);
    if matches!(suite, Suite::Theorem1 | Suite::All) {
        let fx = fx.as_ref().expect("fixture built");
        inequality_suite(
            fx,
            Algorithm::ShuffledSarah,
            eta_thm.expect("set"),
            "theorem1",
            &mut report,
        )?;
    }
    if matches!(suite, Suite::TheoremRr | Suite::All) {
        let fx = fx.as_ref().expect("fixture built");
        inequality_suite(fx, Algorithm::RrSarah, eta_thm.expect("set"), "theorem_rr", &mut report)?;
    }
    if matches!(suite, Suite::Monotonicity | Suite::All) {
        let fx = fx.as_ref().expect("fixture built");
        let one_over_l = 1.0 / fx.constants.smoothness;
        match eta {
            Some(e) => monotonicity_suite(fx, e, "given", &mut report)?,
            None => {
                monotonicity_suite(fx, theoretical.expect("set"), "theoretical", &mut report)?;
                monotonicity_suite(fx, one_over_l, "1/L", &mut report)?;
            }
        }
    }
    if matches!(suite, Suite::Gradcheck | Suite::All) {
        let toy = logistic_toy()?;
        gradcheck_line(
            "logistic d=5 n=3",
            &finite_difference_check(&toy, GRADCHECK_POINTS, 1.0, 1)?,
            &mut report,
        );
        let q = verification_suite().build()?;
        gradcheck_line(
            "quadratic d=10 n=8",
            &finite_difference_check(&q, GRADCHECK_POINTS, 1.0, 2)?,
            &mut report,
        );
    }
    Ok(report)
}
