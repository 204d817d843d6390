//! Curvature estimates against dense symmetric eigensolves.

mod common;

use common::dense::*;
use nalgebra::DMatrix;
use shuffled_sarah::data::{partition, SyntheticSpec};
use shuffled_sarah::linalg::PowerIteration;
use shuffled_sarah::objective::{
    estimate_constants, estimate_similarity, Curvature, FiniteSumObjective, LogisticObjective, QuadraticSpec,
    SimilarityOptions,
};

fn precise_options() -> SimilarityOptions {
    SimilarityOptions {
        power: PowerIteration::precise(),
        ..SimilarityOptions::default()
    }
}

#[test]
fn quadratic_constants_match_dense_oracle() {
    for (seed, condition, similarity) in [(1, 10.0, 0.3), (2, 50.0, 0.8), (3, 4.0, 0.0)] {
        let q = QuadraticSpec::new(8, 6, condition, similarity, seed).build().unwrap();
        let hs: Vec<DMatrix<f64>> = q.matrices().iter().map(to_na).collect();
        let (l, mu, delta) = dense_constants(&hs);
        let (k, _) = estimate_constants(&q, &PowerIteration::precise(), &precise_options()).unwrap();
        assert!((k.smoothness - l).abs() <= 1e-8 * l, "L {} vs {l}", k.smoothness);
        assert!(
            (k.strong_convexity - mu).abs() <= 1e-8 * mu,
            "mu {} vs {mu}",
            k.strong_convexity
        );
        assert!(
            (k.similarity - delta).abs() <= 1e-6 * l,
            "delta {} vs {delta}",
            k.similarity
        );
        // The generator targets these values by construction.
        assert!((mu - (1.0 / condition).min(0.1)).abs() <= 1e-10);
        assert!((delta - 2.0 * similarity * 0.1).abs() <= 1e-10);
    }
}

fn logistic() -> LogisticObjective {
    let data = SyntheticSpec {
        samples: 96,
        dimension: 6,
        density: 0.5,
        label_noise: 0.1,
        seed: 21,
    }
    .generate();
    LogisticObjective::new(partition(&data, 16).unwrap(), 1e-2).unwrap()
}

/// Dense component Hessian at `w`, built column by column from Hessian-vector products
/// of the unit vectors.
fn dense_component_hessian(obj: &LogisticObjective, i: usize, w: &[f64]) -> DMatrix<f64> {
    let d = obj.dim();
    DMatrix::from_fn(d, d, |r, c| {
        let mut e = vec![0.0; d];
        e[c] = 1.0;
        obj.component_hess_vec(i, w, &e).unwrap()[r]
    })
}

#[test]
fn logistic_similarity_at_a_point_matches_dense_oracle() {
    let obj = logistic();
    let w = vec![0.2, -0.4, 0.1, 0.0, 0.3, -0.2];
    let hs: Vec<DMatrix<f64>> = (0..obj.num_components())
        .map(|i| dense_component_hessian(&obj, i, &w))
        .collect();
    let (_, _, delta) = dense_constants(&hs);
    let opts = SimilarityOptions {
        probes: 1,
        radius: 0.0,
        center: Some(w),
        seed: 1,
        power: PowerIteration::precise(),
    };
    let est = estimate_similarity(&obj, 1.0, &opts).unwrap();
    assert!((est.delta - delta).abs() <= 1e-6 * delta, "{} vs {delta}", est.delta);
    assert_eq!(est.heuristic, Some(1.0 / 4.0));
}

#[test]
fn logistic_smoothness_matches_dense_oracle() {
    let obj = logistic();
    let set = obj.components();
    let x = set.matrix();
    let d = obj.dim();
    let b = set.batch_size() as f64;
    let mut l = 0.0f64;
    for i in 0..set.len() {
        let comp = set.component(i);
        let mut g = DMatrix::<f64>::zeros(d, d);
        for r in comp.rows() {
            let (idx, val) = x.row(r);
            for (&p, vp) in idx.iter().zip(val) {
                for (&q, vq) in idx.iter().zip(val) {
                    g[(p as usize, q as usize)] += vp * vq;
                }
            }
        }
        l = l.max(eigen_range(&g).1 / (4.0 * b) + obj.lambda());
    }
    let est = obj.estimate_smoothness(&PowerIteration::precise()).unwrap();
    assert!((est - l).abs() <= 1e-8 * l, "{est} vs {l}");
    assert_eq!(
        obj.estimate_strong_convexity(&PowerIteration::default()).unwrap(),
        obj.lambda()
    );
}
