use clap::{Args, Parser, Subcommand};
use shuffled_sarah::cli::{
    cmd_estimate, cmd_fetch, cmd_plot, cmd_run, cmd_traj, cmd_verify, data_dir, CliError, ExperimentConfig, Overrides,
    PlotRequest, Suite,
};
use shuffled_sarah::shuffle::RuleKind;
use std::path::PathBuf;
use std::process::ExitCode;

/// Shuffled-SARAH experiments: runs, trajectories, constants, checks and charts.
///
/// Flags override the matching fields of the JSON config.
/// Exit codes: 0 ok, 1 verification failed, 2 usage or config error, 3 divergence.
#[derive(Parser)]
#[command(name = "ssarah", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for seed-parallel runs.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fixed step size for every algorithm.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Permutation rule.
    #[arg(long, value_parser = parse_rule)]
    rule: Option<RuleKind>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured algorithm over its seeds and write CSV, JSON and SVG output.
    Run(Common),
    /// Inner-step paths on a two-dimensional quadratic.
    Traj(Common),
    /// Print sizes, L, mu, delta and the theoretical step as JSON.
    Estimate(Common),
    /// Check the convergence inequalities, norm monotonicity and derivatives.
    Verify {
        /// theorem1, theorem_rr, monotonicity, gradcheck or all.
        #[arg(default_value = "all")]
        suite: String,
        /// Step size in place of the theoretical one; refused above the theorem bound.
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// List dataset URLs; with --verify, hash and parse the local copies.
    Fetch {
        /// Data directory; defaults to $SSARAH_DATA_DIR, then ./data.
        #[arg(long)]
        dir: Option<PathBuf>,
        #[arg(long)]
        verify: bool,
    },
    /// Chart columns of metrics CSV files.
    Plot {
        #[arg(long = "csv", required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long = "column", default_value = "suboptimality")]
        columns: Vec<String>,
        #[arg(long, default_value = "effective_passes")]
        x: String,
        #[arg(long)]
        log: bool,
        #[arg(long, default_value = "")]
        title: String,
        #[arg(long, default_value = "plot.svg")]
        out: PathBuf,
    },
}

fn parse_rule(s: &str) -> Result<RuleKind, String> {
    match s {
        "rr" => Ok(RuleKind::Rr),
        "so" => Ok(RuleKind::So),
        "ig" => Ok(RuleKind::Ig),
        _ => Err(format!("expected rr, so or ig, got `{s}`")),
    }
}

fn load(c: &Common) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(&c.config)?;
    cfg.apply(&Overrides {
        seed: c.seed,
        out: c.out.clone(),
        eta: c.eta,
        epochs: c.epochs,
        rule: c.rule,
    });
    Ok(cfg)
}

fn json(value: &impl serde::Serialize) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Data(e.to_string()))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(c) => {
            let cfg = load(&c)?;
            for o in cmd_run(&cfg, c.jobs)? {
                let last = o.aggregate.mean.records.last().expect("epoch 0 is always recorded");
                println!(
                    "{}: {} seed(s), eta {:e}, final mean suboptimality {:e}",
                    o.label,
                    o.seeds.len(),
                    o.config.eta,
                    last.suboptimality
                );
            }
            println!("wrote {}", cfg.out.display());
        }
        Command::Traj(c) => {
            let cfg = load(&c)?;
            let t = cmd_traj(&cfg, c.jobs)?;
            println!(
                "eta {:e}, {} paths; wrote {}",
                t.eta,
                t.paths.len(),
                cfg.out.join("traj.csv").display()
            );
        }
        Command::Estimate(c) => {
            let cfg = load(&c)?;
            println!("{}", json(&cmd_estimate(&cfg)?)?);
        }
        Command::Verify { suite, eta, jobs } => {
            let suite: Suite = suite.parse()?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.max(1))
                .build()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let report = pool.install(|| cmd_verify(suite, eta))?;
            for line in &report.lines {
                println!("{line}");
            }
            if !report.passed {
                let failed = report.lines.iter().filter(|l| l.starts_with("FAIL")).count();
                return Err(CliError::Verification(format!(
                    "{failed} check(s) failed in suite {suite}"
                )));
            }
            println!("suite {suite}: all checks passed");
        }
        Command::Fetch { dir, verify } => {
            let dir = dir.unwrap_or_else(data_dir);
            let entries = cmd_fetch(&dir, verify)?;
            for e in &entries {
                println!("{:<10} {}", e.dataset.name(), e.url);
                println!("{:<10} -> {}", "", e.path.display());
            }
            if verify {
                println!("{}", json(&entries)?);
                if !entries.iter().all(|e| e.ok) {
                    return Err(CliError::Verification(
                        "some datasets are missing or do not match".into(),
                    ));
                }
            }
        }
        Command::Plot {
            inputs,
            columns,
            x,
            log,
            title,
            out,
        } => {
            cmd_plot(&PlotRequest {
                inputs,
                columns,
                x,
                log_y: log,
                title,
                out: out.clone(),
            })?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
