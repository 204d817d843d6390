//! The dataset-reproduction check on a synthetic stand-in shaped like
//! mushrooms (8124 x 112, b = 64, 126 components), with fewer seeds.

mod common;

use shuffled_sarah::data::{partition, SyntheticSpec};
use shuffled_sarah::objective::{LogisticObjective, Problem};

#[test]
fn mushrooms_shaped_proxy_reproduces_the_qualitative_picture() {
    let data = SyntheticSpec {
        samples: 8124,
        dimension: 112,
        density: 0.196,
        label_noise: 0.05,
        seed: 1,
    }
    .generate();
    let problem = Problem::Logistic(LogisticObjective::new(partition(&data, 64).unwrap(), 1e-3).unwrap());
    let r = common::repro::evaluate(&problem, 3, 500).unwrap();
    for v in [&r.reaches_target, &r.estimator_shrinks, &r.beats_sarah] {
        println!("{}", v.detail);
    }
    assert!(r.reaches_target.ok, "{}", r.reaches_target.detail);
    assert!(r.estimator_shrinks.ok, "{}", r.estimator_shrinks.detail);
    assert!(r.beats_sarah.ok, "{}", r.beats_sarah.detail);
}
