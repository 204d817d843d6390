//! Full-gradient-free variance reduction for finite sums.
//!
//! Shuffled-SARAH replaces SARAH's periodic full gradient with a running
//! average of the stochastic gradients seen during the previous pass over a
//! permutation of the components. The crate also ships RR-SARAH and classical
//! SARAH baselines, logistic and quadratic objectives with curvature
//! estimators, deterministic checks of the linear-rate inequalities, and a
//! small CLI that produces CSV and SVG outputs.
//!
//! ```
//! use shuffled_sarah::harness::{solve_problem_reference, ReferenceOptions};
//! use shuffled_sarah::objective::{Problem, QuadraticSpec};
//! use shuffled_sarah::optim::{run, Algorithm, RunConfig};
//! use shuffled_sarah::shuffle::RuleKind;
//!
//! let problem = Problem::Quadratic(QuadraticSpec::new(4, 3, 5.0, 0.3, 7).build().unwrap());
//! let reference = solve_problem_reference(&problem, &ReferenceOptions::default()).unwrap();
//! let config = RunConfig::new(Algorithm::ShuffledSarah, 0.05, 30, RuleKind::Rr, 1);
//! let series = run(&config, &problem, &reference).unwrap();
//! assert!(series.records.last().unwrap().suboptimality < series.records[0].suboptimality);
//! ```

pub mod cli;
pub mod data;
pub mod harness;
pub mod linalg;
pub mod objective;
pub mod optim;
pub mod shuffle;
