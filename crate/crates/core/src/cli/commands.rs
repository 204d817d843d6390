use super::config::{EtaChoice, EtaSpec, ExperimentConfig, ProblemSource};
use super::csv_io;
use super::svg::{render_svg, Line, PlotSpec};
use super::CliError;
use crate::harness::{
    average_runs, solve_problem_reference, tune_step_size, Aggregate, MetricsSeries, ReferenceOptions,
    ReferenceSolution, TuningResult, DEFAULT_MULTIPLIERS,
};
use crate::objective::{
    estimate_constants, FiniteSumObjective, Problem, ProblemConstants, SimilarityEstimate, SimilarityOptions,
};
use crate::optim::{run, run_observed, theoretical_step_size, Algorithm, Provenance, RunConfig};
use crate::shuffle::RuleKind;
use rayon::prelude::*;
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

/// A built problem with its constants and reference solution.
pub struct Prepared {
    pub problem: Problem,
    pub constants: ProblemConstants,
    pub similarity: SimilarityEstimate,
    pub reference: ReferenceSolution,
    /// `(N, dropped)` for data-backed problems.
    pub samples: Option<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateReport {
    #[serde(rename = "N")]
    pub samples: Option<usize>,
    pub d: usize,
    pub n: usize,
    pub batch_size: Option<usize>,
    pub dropped: Option<usize>,
    pub lambda: Option<f64>,
    #[serde(rename = "L")]
    pub smoothness: f64,
    pub mu: f64,
    pub kappa: f64,
    pub delta: f64,
    pub delta_heuristic: Option<f64>,
    pub eta_theoretical: f64,
}

fn similarity_options(cfg: &ExperimentConfig, problem: &Problem) -> SimilarityOptions {
    SimilarityOptions {
        probes: cfg.similarity.probes,
        radius: cfg.similarity.radius,
        center: None,
        seed: cfg.similarity.seed,
        power: problem.power_settings(),
    }
}

fn estimate_only(
    cfg: &ExperimentConfig,
) -> Result<(Problem, ProblemConstants, SimilarityEstimate, Option<(usize, usize)>), CliError> {
    cfg.validate()?;
    let (problem, samples) = cfg.build_problem()?;
    let power = problem.power_settings();
    let (constants, similarity) = estimate_constants(&problem, &power, &similarity_options(cfg, &problem))?;
    Ok((problem, constants, similarity, samples))
}

fn report(
    cfg: &ExperimentConfig,
    p: &Problem,
    k: &ProblemConstants,
    s: &SimilarityEstimate,
    samples: Option<(usize, usize)>,
) -> Result<EstimateReport, CliError> {
    let logistic = !matches!(cfg.problem, ProblemSource::Quadratic(_));
    Ok(EstimateReport {
        samples: samples.map(|x| x.0),
        d: p.dim(),
        n: p.num_components(),
        batch_size: p.batch_size(),
        dropped: samples.map(|x| x.1),
        lambda: logistic.then_some(cfg.lambda),
        smoothness: k.smoothness,
        mu: k.strong_convexity,
        kappa: k.condition,
        delta: k.similarity,
        delta_heuristic: s.heuristic,
        eta_theoretical: theoretical_step_size(p.num_components(), k.smoothness, k.similarity)?.eta,
    })
}

/// `estimate`: sizes, curvature constants and the theoretical step.
pub fn cmd_estimate(cfg: &ExperimentConfig) -> Result<EstimateReport, CliError> {
    let (problem, constants, similarity, samples) = estimate_only(cfg)?;
    report(cfg, &problem, &constants, &similarity, samples)
}

/// Builds the problem, estimates its constants and loads or solves the reference.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared, CliError> {
    let (problem, constants, similarity, samples) = estimate_only(cfg)?;
    let reference = match &cfg.reference {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read reference {}: {e}", path.display())))?;
            let r = ReferenceSolution::from_json(&text)?;
            if r.w_star.len() != problem.dim() {
                return Err(CliError::Config(format!(
                    "reference has dimension {}, problem has {}",
                    r.w_star.len(),
                    problem.dim()
                )));
            }
            r
        }
        None => solve_problem_reference(&problem, &ReferenceOptions::default())?,
    };
    Ok(Prepared {
        problem,
        constants,
        similarity,
        reference,
        samples,
    })
}

/// Resolves a step specification against the problem constants. Tuning runs
/// the grid on `template`.
pub fn resolve_eta(
    spec: &EtaSpec,
    prepared: &Prepared,
    template: &RunConfig,
    tune_target: f64,
) -> Result<(f64, Provenance, Option<Vec<TuningResult>>), CliError> {
    let k = &prepared.constants;
    match spec {
        EtaSpec::Fixed(x) => Ok((*x, Provenance::Manual, None)),
        EtaSpec::OverL { over_l } => Ok((over_l / k.smoothness, Provenance::Manual, None)),
        EtaSpec::Named(EtaChoice::Theoretical) => {
            let s = theoretical_step_size(prepared.problem.num_components(), k.smoothness, k.similarity)?;
            Ok((s.eta, s.provenance, None))
        }
        EtaSpec::Named(EtaChoice::Tune) => {
            let (best, all) = tune_step_size(
                &prepared.problem,
                &prepared.reference,
                template,
                k.smoothness,
                &DEFAULT_MULTIPLIERS,
                tune_target,
            )?;
            Ok((best.eta, Provenance::Manual, Some(all)))
        }
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {jobs} worker threads: {e}")))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Data(e.to_string()))? + "\n";
    fs::write(path, text)?;
    Ok(())
}

fn write_csv(path: &Path, series: &MetricsSeries, n: usize) -> Result<(), CliError> {
    let file = fs::File::create(path)?;
    csv_io::write_records(std::io::BufWriter::new(file), &series.records, n)
}

#[derive(Serialize)]
struct RunMeta<'a> {
    label: &'a str,
    algorithm: Algorithm,
    /// Absent for classical SARAH, which samples with replacement.
    rule: Option<RuleKind>,
    eta: f64,
    eta_provenance: Provenance,
    epochs: usize,
    epsilon: Option<f64>,
    seeds: &'a [u64],
    tuning: Option<Vec<TuningResult>>,
}

/// Aggregated results of one algorithm entry.
pub struct RunOutcome {
    pub label: String,
    pub config: RunConfig,
    pub seeds: Vec<u64>,
    pub runs: Vec<MetricsSeries>,
    pub aggregate: Aggregate,
}

/// `run`: every algorithm entry over its seeds, with per-seed, mean and
/// envelope CSVs, a metadata JSON per entry, the constants report, the
/// reference solution and comparison charts.
pub fn cmd_run(cfg: &ExperimentConfig, jobs: usize) -> Result<Vec<RunOutcome>, CliError> {
    let prepared = prepare(cfg)?;
    let n = prepared.problem.num_components();
    let kappa = prepared.constants.condition;
    fs::create_dir_all(&cfg.out)?;
    fs::write(cfg.out.join("reference.json"), prepared.reference.to_json())?;
    write_json(
        &cfg.out.join("constants.json"),
        &report(
            cfg,
            &prepared.problem,
            &prepared.constants,
            &prepared.similarity,
            prepared.samples,
        )?,
    )?;
    let workers = pool(jobs)?;
    let mut outcomes = Vec::new();
    for spec in &cfg.algorithms {
        let label = cfg.label_of(spec);
        let seeds = cfg.seeds_of(spec);
        let mut template = RunConfig::new(
            spec.to_algorithm(kappa),
            0.0,
            spec.epochs.unwrap_or(cfg.epochs),
            cfg.rule_of(spec),
            seeds[0],
        );
        template.epsilon = cfg.epsilon;
        let (eta, provenance, tuning) = resolve_eta(&spec.eta, &prepared, &template, cfg.tune_target)?;
        template.eta = eta;
        log::info!(
            "{label}: eta = {eta:e}, {} epochs, {} seed(s)",
            template.epochs,
            seeds.len()
        );
        let runs: Vec<MetricsSeries> = workers.install(|| {
            seeds
                .par_iter()
                .map(|&seed| {
                    let c = RunConfig {
                        seed,
                        ..template.clone()
                    };
                    run(&c, &prepared.problem, &prepared.reference)
                })
                .collect::<Result<Vec<_>, _>>()
        })?;
        let aggregate = average_runs(&runs)?;
        let dir = cfg.out.join(&label);
        fs::create_dir_all(&dir)?;
        for s in &runs {
            write_csv(&dir.join(format!("seed_{}.csv", s.seed())), s, n)?;
        }
        write_csv(&dir.join("mean.csv"), &aggregate.mean, n)?;
        write_csv(&dir.join("min.csv"), &aggregate.min, n)?;
        write_csv(&dir.join("max.csv"), &aggregate.max, n)?;
        write_json(
            &dir.join("meta.json"),
            &RunMeta {
                label: &label,
                algorithm: template.algorithm,
                rule: (!matches!(template.algorithm, Algorithm::ClassicSarah { .. })).then_some(template.rule),
                eta,
                eta_provenance: provenance,
                epochs: template.epochs,
                epsilon: template.epsilon,
                seeds: &seeds,
                tuning,
            },
        )?;
        outcomes.push(RunOutcome {
            label,
            config: template,
            seeds,
            runs,
            aggregate,
        });
    }
    for (column, title) in [
        ("suboptimality", "P(w_s) - P*"),
        ("dist_sq", "||w_s - w*||^2"),
        ("grad_norm_sq", "||grad P(w_s)||^2"),
        ("estimator_err_sq", "||v_s - grad P(w_s)||^2"),
    ] {
        let lines: Vec<Line> = outcomes
            .iter()
            .map(|o| Line {
                label: o.label.clone(),
                points: o
                    .aggregate
                    .mean
                    .records
                    .iter()
                    .map(|r| (r.grad_evals as f64 / n as f64, column_value(r, column)))
                    .collect(),
            })
            // RR-SARAH and SARAH anchor on the exact gradient; their estimator error is identically zero.
            .filter(|l: &Line| l.points.iter().any(|p| p.1 > 0.0))
            .collect();
        if lines.is_empty() {
            continue;
        }
        let spec = PlotSpec {
            title: title.into(),
            x_label: "epochs (gradient evaluations / n)".into(),
            y_label: column.into(),
            log_y: true,
        };
        fs::write(cfg.out.join(format!("{column}.svg")), render_svg(&lines, &spec)?)?;
    }
    Ok(outcomes)
}

fn column_value(r: &crate::harness::EpochRecord, column: &str) -> f64 {
    match column {
        "suboptimality" => r.suboptimality,
        "dist_sq" => r.dist_sq,
        "grad_norm_sq" => r.grad_norm_sq,
        "estimator_err_sq" => r.estimator_err_sq,
        "anchor_norm_sq" => r.anchor_norm_sq,
        _ => f64::NAN,
    }
}

/// Inner-step paths of the two-dimensional trajectory experiment.
pub struct TrajOutcome {
    pub eta: f64,
    pub paths: Vec<(String, Vec<[f64; 2]>)>,
}

fn path_of(problem: &Problem, reference: &ReferenceSolution, cfg: &RunConfig) -> Result<Vec<[f64; 2]>, CliError> {
    let mut points = Vec::new();
    let mut last = [0.0; 2];
    run_observed(cfg, problem, reference, true, |trace, state| {
        points.extend(trace.inner_points.iter().map(|p| [p[0], p[1]]));
        last = [state.w[0], state.w[1]];
    })?;
    points.push(last);
    Ok(points)
}

fn average_paths(paths: &[Vec<[f64; 2]>]) -> Vec<[f64; 2]> {
    let k = paths.len() as f64;
    (0..paths[0].len())
        .map(|i| {
            let (a, b) = paths
                .iter()
                .fold((0.0, 0.0), |acc, p| (acc.0 + p[i][0], acc.1 + p[i][1]));
            [a / k, b / k]
        })
        .collect()
}

/// `traj`: classical SARAH (two seeds and their average), the RR-SARAH
/// average and one Shuffled-SARAH(RR) path on a two-dimensional quadratic.
///
/// All paths use the step of the first algorithm entry and `m = n`, so every
/// path has `epochs · (n + 1) + 1` points. Writes `traj.csv` and `traj.svg`.
pub fn cmd_traj(cfg: &ExperimentConfig, jobs: usize) -> Result<TrajOutcome, CliError> {
    let ProblemSource::Quadratic(spec) = &cfg.problem else {
        return Err(CliError::Config("traj needs a quadratic problem".into()));
    };
    if spec.dim != 2 {
        return Err(CliError::Config(format!("traj needs dim = 2, got {}", spec.dim)));
    }
    let prepared = prepare(cfg)?;
    let n = prepared.problem.num_components();
    let base = cfg.seeds.base;
    let template = RunConfig::new(Algorithm::ShuffledSarah, 0.0, cfg.epochs, RuleKind::Rr, base);
    let (eta, _, _) = resolve_eta(&cfg.algorithms[0].eta, &prepared, &template, cfg.tune_target)?;
    let with = |algorithm, seed| RunConfig {
        algorithm,
        eta,
        seed,
        ..template.clone()
    };
    let avg_seeds: Vec<u64> = (0..cfg.seeds.count.max(2) as u64).map(|k| base + k).collect();
    let workers = pool(jobs)?;
    let (sarah, rr) = workers.install(|| {
        let sarah = [base, base + 1]
            .par_iter()
            .map(|&s| {
                path_of(
                    &prepared.problem,
                    &prepared.reference,
                    &with(Algorithm::ClassicSarah { inner_steps: n }, s),
                )
            })
            .collect::<Result<Vec<_>, _>>();
        let rr = avg_seeds
            .par_iter()
            .map(|&s| path_of(&prepared.problem, &prepared.reference, &with(Algorithm::RrSarah, s)))
            .collect::<Result<Vec<_>, _>>();
        (sarah, rr)
    });
    let (sarah, rr) = (sarah?, rr?);
    let shuffled = path_of(
        &prepared.problem,
        &prepared.reference,
        &with(Algorithm::ShuffledSarah, base),
    )?;
    let paths = vec![
        (format!("sarah_seed{base}"), sarah[0].clone()),
        (format!("sarah_seed{}", base + 1), sarah[1].clone()),
        ("sarah_avg".to_string(), average_paths(&sarah)),
        ("rr_sarah_avg".to_string(), average_paths(&rr)),
        ("shuffled_sarah_rr".to_string(), shuffled),
    ];

    fs::create_dir_all(&cfg.out)?;
    let mut w = csv::Writer::from_path(cfg.out.join("traj.csv"))?;
    let mut header = vec!["step".to_string()];
    for (name, _) in &paths {
        header.push(format!("{name}_w1"));
        header.push(format!("{name}_w2"));
    }
    w.write_record(&header)?;
    for i in 0..paths[0].1.len() {
        let mut row = vec![i.to_string()];
        for (_, p) in &paths {
            row.push(format!("{:e}", p[i][0]));
            row.push(format!("{:e}", p[i][1]));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    let lines: Vec<Line> = paths
        .iter()
        .map(|(name, p)| Line {
            label: name.clone(),
            points: p.iter().map(|q| (q[0], q[1])).collect(),
        })
        .collect();
    let spec = PlotSpec {
        title: "Trajectories on a quadratic".into(),
        x_label: "w1".into(),
        y_label: "w2".into(),
        log_y: false,
    };
    fs::write(cfg.out.join("traj.svg"), render_svg(&lines, &spec)?)?;
    Ok(TrajOutcome { eta, paths })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlotRequest {
    pub inputs: Vec<PathBuf>,
    pub columns: Vec<String>,
    pub x: String,
    pub log_y: bool,
    pub title: String,
    pub out: PathBuf,
}

/// `plot`: one line per (input CSV, column), against column `x`.
pub fn cmd_plot(req: &PlotRequest) -> Result<(), CliError> {
    if req.inputs.is_empty() || req.columns.is_empty() {
        return Err(CliError::Usage("plot needs at least one --csv and one --column".into()));
    }
    let mut lines = Vec::new();
    for path in &req.inputs {
        let file = fs::File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let cols = csv_io::read_columns(file)?;
        let find = |name: &str| {
            cols.iter()
                .find(|c| c.0 == name)
                .map(|c| &c.1)
                .ok_or_else(|| CliError::Data(format!("{}: no column `{name}`", path.display())))
        };
        let xs = find(&req.x)?;
        for column in &req.columns {
            let ys = find(column)?;
            let label = if req.inputs.len() == 1 {
                column.clone()
            } else {
                let parent = path
                    .parent()
                    .and_then(|p| p.file_name())
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                if req.columns.len() == 1 {
                    parent
                } else {
                    format!("{parent}/{column}")
                }
            };
            lines.push(Line {
                label,
                points: xs.iter().copied().zip(ys.iter().copied()).collect(),
            });
        }
    }
    let spec = PlotSpec {
        title: req.title.clone(),
        x_label: req.x.clone(),
        y_label: req.columns.join(", "),
        log_y: req.log_y,
    };
    if let Some(dir) = req.out.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(&req.out, render_svg(&lines, &spec)?)?;
    Ok(())
}
