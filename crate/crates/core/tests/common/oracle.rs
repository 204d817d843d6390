//! One-dimensional two-component quadratic and straight-line transcriptions
//! of Shuffled-SARAH and RR-SARAH on it.

use shuffled_sarah::harness::{solve_problem_reference, ReferenceOptions};
use shuffled_sarah::linalg::DenseMatrix;
use shuffled_sarah::objective::{FiniteSumObjective, Problem, QuadraticObjective};
use shuffled_sarah::optim::{run_observed, Algorithm, RunConfig};
use shuffled_sarah::shuffle::{PermutationRule, RuleKind};

pub const A: [f64; 2] = [1.0, 3.0];
pub const C: [f64; 2] = [1.0, -0.5];
pub const W0: f64 = 0.5;
pub const ETA: f64 = 0.1;
pub const EPOCHS: usize = 3;

pub fn grad(i: usize, w: f64) -> f64 {
    A[i] * (w - C[i])
}

pub fn fixture() -> Problem {
    let mats = A.iter().map(|&a| DenseMatrix::from_diag(&[a])).collect();
    let centers = C.iter().map(|&c| vec![c]).collect();
    Problem::Quadratic(QuadraticObjective::new(mats, centers).unwrap())
}

/// Points visited per epoch: `w_s`, then the iterate after every update
/// (`n + 2` values, the last being `w_{s+1}`), and the anchor after the epoch.
#[derive(Debug)]
pub struct Transcript {
    pub points: Vec<Vec<f64>>,
    pub anchors: Vec<f64>,
}

/// Shuffled-SARAH with `ṽ` pointing at `v_0` during the first pass.
pub fn shuffled_sarah_transcript(rule: RuleKind, seed: u64, aliased: bool) -> Transcript {
    let n = 2;
    // Memory cells; `vs` and `vt` are addresses, so `vt = &(v_0)` is `vt = vs`.
    let mut mem = vec![0.0, 0.0];
    let mut vs = 0usize;
    let mut vt = if aliased { 0 } else { 1 };
    let mut w_minus = W0;
    let mut w = w_minus;
    let mut delta = 0.0;
    let mut rules = PermutationRule::new(rule, n, seed);
    let mut out = Transcript {
        points: vec![],
        anchors: vec![],
    };
    for s in 0..EPOCHS {
        let mut pts = vec![w];
        w_minus = w;
        w -= ETA * mem[vs];
        pts.push(w);
        let pi = rules.next_permutation(s);
        for i in 1..=n {
            let k = pi[i - 1];
            let fi = i as f64;
            mem[vt] = (fi - 1.0) / fi * mem[vt] + 1.0 / fi * grad(k, w);
            delta = delta + grad(k, w) - grad(k, w_minus);
            w_minus = w;
            w -= ETA * (mem[vs] + delta);
            pts.push(w);
        }
        // v_{s+1} = ṽ as a value; ṽ becomes a fresh zero vector.
        let value = mem[vt];
        mem = vec![value, 0.0];
        vs = 0;
        vt = 1;
        delta = 0.0;
        out.points.push(pts);
        out.anchors.push(mem[vs]);
    }
    out
}

pub fn rr_sarah_transcript(rule: RuleKind, seed: u64) -> Transcript {
    let n = 2;
    let mut w_minus = W0;
    let mut w = w_minus;
    let mut rules = PermutationRule::new(rule, n, seed);
    let mut out = Transcript {
        points: vec![],
        anchors: vec![],
    };
    for s in 0..EPOCHS {
        let mut pts = vec![w];
        let mut v = (grad(0, w) + grad(1, w)) / 2.0;
        w_minus = w;
        w -= ETA * v;
        pts.push(w);
        let pi = rules.next_permutation(s);
        for i in 1..=n {
            let k = pi[i - 1];
            v = v + grad(k, w) - grad(k, w_minus);
            w_minus = w;
            w -= ETA * v;
            pts.push(w);
        }
        out.points.push(pts);
        out.anchors.push((grad(0, w) + grad(1, w)) / 2.0);
    }
    out
}

pub fn implementation(algorithm: Algorithm, rule: RuleKind, seed: u64) -> Transcript {
    let p = fixture();
    let reference = solve_problem_reference(&p, &ReferenceOptions::default()).unwrap();
    let mut cfg = RunConfig::new(algorithm, ETA, EPOCHS, rule, seed);
    cfg.w0 = Some(vec![W0]);
    let mut out = Transcript {
        points: vec![],
        anchors: vec![],
    };
    run_observed(&cfg, &p, &reference, true, |trace, state| {
        let mut pts: Vec<f64> = trace.inner_points.iter().map(|x| x[0]).collect();
        pts.push(state.w[0]);
        out.points.push(pts);
        out.anchors.push(match algorithm {
            Algorithm::ShuffledSarah => state.anchor()[0],
            _ => p.full_grad(&state.w).unwrap()[0],
        });
    })
    .unwrap();
    out
}

/// Largest relative error over all epochs' points and the anchors.
pub fn max_error(a: &Transcript, b: &Transcript) -> f64 {
    assert_eq!(a.points.len(), b.points.len());
    let mut worst = super::rel_err(&a.anchors, &b.anchors);
    for (pa, pb) in a.points.iter().zip(&b.points) {
        assert_eq!(pa.len(), pb.len());
        worst = worst.max(super::rel_err(pa, pb));
    }
    worst
}
