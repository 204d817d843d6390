//! Property tests for every text format and for the permutation rules.

use proptest::prelude::*;
use shuffled_sarah::cli::csv_io::{read_records, records_to_string};
use shuffled_sarah::data::{parse_libsvm_str, serialize_libsvm, Dataset, ParseOptions, SparseRow};
use shuffled_sarah::harness::hexfloat::{format_hex, parse_hex};
use shuffled_sarah::harness::EpochRecord;
use shuffled_sarah::shuffle::{PermutationRule, RuleKind};

fn finite_or_special() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>(),
        Just(0.0),
        Just(-0.0),
        Just(f64::MIN_POSITIVE),
        Just(5e-324),
        Just(f64::MAX),
        Just(f64::INFINITY),
        Just(f64::NEG_INFINITY),
    ]
}

fn record() -> impl Strategy<Value = EpochRecord> {
    (
        0usize..10_000,
        finite_or_special(),
        finite_or_special(),
        finite_or_special(),
        finite_or_special(),
        any::<u64>(),
        finite_or_special(),
    )
        .prop_map(|(epoch, a, b, c, d, grad_evals, e)| EpochRecord {
            epoch,
            suboptimality: a,
            dist_sq: b,
            grad_norm_sq: c,
            estimator_err_sq: d,
            grad_evals,
            anchor_norm_sq: e,
        })
}

fn row() -> impl Strategy<Value = SparseRow> {
    (
        prop::collection::btree_map(
            1u32..500,
            any::<f64>().prop_filter("finite nonzero", |v| v.is_finite() && *v != 0.0),
            0..12,
        ),
        any::<bool>(),
    )
        .prop_map(|(m, pos)| SparseRow {
            indices: m.keys().copied().collect(),
            values: m.values().copied().collect(),
            label: if pos { 1.0 } else { -1.0 },
        })
}

fn same_bits(a: f64, b: f64) -> bool {
    a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan())
}

proptest! {
    #[test]
    fn hexfloat_round_trips(x in any::<f64>()) {
        let y = parse_hex(&format_hex(x)).unwrap();
        prop_assert!(same_bits(x, y), "{x:e} -> {} -> {y:e}", format_hex(x));
    }

    #[test]
    fn csv_round_trips(records in prop::collection::vec(record(), 1..20), n in 1usize..1000) {
        let text = records_to_string(&records, n);
        let back = read_records(text.as_bytes()).unwrap();
        prop_assert_eq!(back.len(), records.len());
        for (a, b) in records.iter().zip(&back) {
            prop_assert_eq!(a.epoch, b.epoch);
            prop_assert_eq!(a.grad_evals, b.grad_evals);
            for (x, y) in [
                (a.suboptimality, b.suboptimality),
                (a.dist_sq, b.dist_sq),
                (a.grad_norm_sq, b.grad_norm_sq),
                (a.estimator_err_sq, b.estimator_err_sq),
                (a.anchor_norm_sq, b.anchor_norm_sq),
            ] {
                prop_assert!(same_bits(x, y));
            }
        }
    }

    #[test]
    fn libsvm_round_trips(rows in prop::collection::vec(row(), 1..30)) {
        let dimension = rows.iter().filter_map(|r| r.indices.last()).copied().max().unwrap_or(0) as usize;
        let ds = Dataset { rows, dimension };
        let text = serialize_libsvm(&ds);
        let back = parse_libsvm_str(&text, ParseOptions { dimension: Some(dimension) }).unwrap();
        prop_assert_eq!(back, ds);
    }

    #[test]
    fn rules_yield_bijections(n in 1usize..200, seed in any::<u64>(), epochs in 1usize..6) {
        for kind in [RuleKind::Rr, RuleKind::So, RuleKind::Ig] {
            let mut rule = PermutationRule::new(kind, n, seed);
            let first = rule.next_permutation(0);
            for s in 0..epochs {
                let p = if s == 0 { first.clone() } else { rule.next_permutation(s) };
                let mut sorted = p.clone();
                sorted.sort_unstable();
                prop_assert!(sorted.iter().copied().eq(0..n));
                match kind {
                    RuleKind::So => prop_assert_eq!(&p, &first),
                    RuleKind::Ig => prop_assert!(p.iter().copied().eq(0..n)),
                    RuleKind::Rr => {}
                }
            }
        }
    }
}
