use super::CliError;
use crate::data::{self, ParseOptions, SyntheticSpec};
use crate::objective::{LogisticObjective, Problem, QuadraticSpec};
use crate::optim::Algorithm;
use crate::shuffle::RuleKind;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Where the objective comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSource {
    Libsvm {
        path: PathBuf,
        #[serde(default)]
        dimension: Option<usize>,
    },
    Synthetic(SyntheticSpec),
    Quadratic(QuadraticSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaChoice {
    /// `min(1/(8nL), 1/(8n²δ))`.
    Theoretical,
    /// Grid search over multiples of `1/L` on the base seed.
    Tune,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EtaSpec {
    Fixed(f64),
    Named(EtaChoice),
    OverL { over_l: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InnerSpec {
    Fixed(usize),
    TimesKappa { times_kappa: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmKind {
    ShuffledSarah,
    RrSarah,
    Sarah,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSpec {
    pub algorithm: AlgorithmKind,
    /// Falls back to the experiment-wide rule.
    #[serde(default)]
    pub rule: Option<RuleKind>,
    #[serde(default = "default_eta")]
    pub eta: EtaSpec,
    /// Inner loop length, classical SARAH only.
    #[serde(default)]
    pub m: Option<InnerSpec>,
    /// Falls back to the experiment-wide epoch count.
    #[serde(default)]
    pub epochs: Option<usize>,
    /// Output directory name; derived from the algorithm and rule when absent.
    #[serde(default)]
    pub label: Option<String>,
}

fn default_eta() -> EtaSpec {
    EtaSpec::Named(EtaChoice::Theoretical)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub count: usize,
    #[serde(default)]
    pub base: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Self { count: 1, base: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimilaritySettings {
    #[serde(default = "default_probes")]
    pub probes: usize,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_similarity_seed")]
    pub seed: u64,
}

fn default_probes() -> usize {
    4
}
fn default_radius() -> f64 {
    1.0
}
fn default_similarity_seed() -> u64 {
    17
}

impl Default for SimilaritySettings {
    fn default() -> Self {
        Self {
            probes: default_probes(),
            radius: default_radius(),
            seed: default_similarity_seed(),
        }
    }
}

/// One JSON document describing a whole experiment.
///
/// Command-line flags override the matching fields after loading.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSource,
    /// Rows per component; ignored for quadratic problems.
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    pub algorithms: Vec<AlgorithmSpec>,
    #[serde(default = "default_rule")]
    pub rule: RuleKind,
    #[serde(default)]
    pub seeds: Seeds,
    pub epochs: usize,
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Suboptimality targeted by `"eta": "tune"`.
    #[serde(default = "default_tune_target")]
    pub tune_target: f64,
    #[serde(default)]
    pub similarity: SimilaritySettings,
    /// Hex-float JSON with `w_star` and `p_star`; solved and written to the output directory when absent.
    #[serde(default)]
    pub reference: Option<PathBuf>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn default_lambda() -> f64 {
    1e-3
}
fn default_rule() -> RuleKind {
    RuleKind::Rr
}
fn default_tune_target() -> f64 {
    1e-9
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Flag values that take precedence over the config file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub eta: Option<f64>,
    pub epochs: Option<usize>,
    pub rule: Option<RuleKind>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads a config; relative data and reference paths resolve against the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        if let ProblemSource::Libsvm { path: p, .. } = &mut cfg.problem {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(r) = &mut cfg.reference {
            if r.is_relative() {
                *r = base.join(&*r);
            }
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seeds.base = seed;
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if let Some(eta) = o.eta {
            for a in &mut self.algorithms {
                a.eta = EtaSpec::Fixed(eta);
            }
        }
        if let Some(epochs) = o.epochs {
            self.epochs = epochs;
            for a in &mut self.algorithms {
                a.epochs = None;
            }
        }
        if let Some(rule) = o.rule {
            self.rule = rule;
            for a in &mut self.algorithms {
                a.rule = None;
            }
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.algorithms.is_empty() {
            return bad("at least one algorithm is required".into());
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if self.seeds.count == 0 {
            return bad("seeds.count must be at least 1".into());
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return bad(format!("lambda must be >= 0, got {}", self.lambda));
        }
        if !(self.tune_target > 0.0) {
            return bad(format!("tune_target must be positive, got {}", self.tune_target));
        }
        if !matches!(self.problem, ProblemSource::Quadratic(_)) && self.batch_size.is_none() {
            return bad("batch_size is required for data-backed problems".into());
        }
        let mut labels = std::collections::BTreeSet::new();
        for a in &self.algorithms {
            match (&a.algorithm, &a.m) {
                (AlgorithmKind::Sarah, None) => return bad("classical SARAH needs an inner length `m`".into()),
                (AlgorithmKind::ShuffledSarah | AlgorithmKind::RrSarah, Some(_)) => {
                    return bad("`m` only applies to classical SARAH".into())
                }
                _ => {}
            }
            match &a.eta {
                EtaSpec::Fixed(x) | EtaSpec::OverL { over_l: x } if !(*x >= 0.0) || !x.is_finite() => {
                    return bad(format!("step size must be finite and >= 0, got {x}"))
                }
                _ => {}
            }
            if let Some(InnerSpec::TimesKappa { times_kappa }) = &a.m {
                if !(*times_kappa >= 0.0) {
                    return bad(format!("times_kappa must be >= 0, got {times_kappa}"));
                }
            }
            if a.epochs == Some(0) {
                return bad("epochs must be at least 1".into());
            }
            if !labels.insert(self.label_of(a)) {
                return bad(format!("duplicate output label `{}`; set `label`", self.label_of(a)));
            }
        }
        Ok(())
    }

    pub fn rule_of(&self, a: &AlgorithmSpec) -> RuleKind {
        a.rule.unwrap_or(self.rule)
    }

    pub fn label_of(&self, a: &AlgorithmSpec) -> String {
        if let Some(l) = &a.label {
            return l.clone();
        }
        match a.algorithm {
            AlgorithmKind::ShuffledSarah => format!("shuffled_sarah_{}", self.rule_of(a)),
            AlgorithmKind::RrSarah => format!("rr_sarah_{}", self.rule_of(a)),
            AlgorithmKind::Sarah => "sarah".into(),
        }
    }

    /// Seeds to run: one for IG (deterministic), `count` otherwise. SO draws
    /// a distinct one-time shuffle per seed.
    pub fn seeds_of(&self, a: &AlgorithmSpec) -> Vec<u64> {
        let deterministic = a.algorithm != AlgorithmKind::Sarah && self.rule_of(a) == RuleKind::Ig;
        let count = if deterministic { 1 } else { self.seeds.count };
        (0..count as u64).map(|k| self.seeds.base + k).collect()
    }

    /// Builds the objective. Also returns `(N, dropped rows)` for data-backed problems.
    pub fn build_problem(&self) -> Result<(Problem, Option<(usize, usize)>), CliError> {
        match &self.problem {
            ProblemSource::Quadratic(spec) => Ok((Problem::Quadratic(spec.build()?), None)),
            ProblemSource::Libsvm { path, dimension } => {
                let ds = data::read_libsvm_file(path, ParseOptions { dimension: *dimension })
                    .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
                self.logistic(ds)
            }
            ProblemSource::Synthetic(spec) => self.logistic(spec.generate()),
        }
    }

    fn logistic(&self, ds: data::Dataset) -> Result<(Problem, Option<(usize, usize)>), CliError> {
        let b = self.batch_size.expect("validated");
        let set = data::partition(&ds, b).map_err(|e| CliError::Config(e.to_string()))?;
        let dropped = set.dropped();
        if dropped > 0 {
            log::warn!(
                "dropping the last {dropped} of {} samples (batch size {b})",
                ds.num_samples()
            );
        }
        let obj = LogisticObjective::new(set, self.lambda)?;
        Ok((Problem::Logistic(obj), Some((ds.num_samples(), dropped))))
    }
}

impl AlgorithmSpec {
    pub fn to_algorithm(&self, kappa: f64) -> Algorithm {
        match self.algorithm {
            AlgorithmKind::ShuffledSarah => Algorithm::ShuffledSarah,
            AlgorithmKind::RrSarah => Algorithm::RrSarah,
            AlgorithmKind::Sarah => {
                let m = match self.m.as_ref().expect("validated") {
                    InnerSpec::Fixed(m) => *m,
                    InnerSpec::TimesKappa { times_kappa } => (times_kappa * kappa).round() as usize,
                };
                Algorithm::ClassicSarah { inner_steps: m }
            }
        }
    }
}
