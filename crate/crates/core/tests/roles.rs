use std::collections::BTreeMap;

use onboard_core::corpus::{read_jsonl, Dataset};
use onboard_core::roles::{label_rq1, label_rq2, NewcomerThreshold};
use onboard_core::synthetic::random_event_log;
use onboard_core::Label;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn resolutions_per_contributor(d: &Dataset) -> BTreeMap<&str, usize> {
    let mut m = BTreeMap::new();
    for i in d.resolved() {
        *m.entry(i.resolver_id.as_deref().unwrap()).or_insert(0) += 1;
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rq1_positive_count_is_sum_of_capped_histories(seed in 0u64..10_000, cap in 1usize..400, t in 1u32..12) {
        let d = random_event_log(seed, cap).unwrap();
        let labeling = label_rq1(&d, NewcomerThreshold::new(t).unwrap());
        let expected: usize = resolutions_per_contributor(&d).values().map(|&n| n.min(t as usize)).sum();
        prop_assert_eq!(labeling.labels.len(), d.resolved().count());
        prop_assert_eq!(labeling.count(Label::Positive), expected);
    }

    #[test]
    fn newcomer_sets_grow_with_threshold(seed in 0u64..10_000, t in 1u32..10) {
        let d = random_event_log(seed, 500).unwrap();
        let small = label_rq1(&d, NewcomerThreshold::new(t).unwrap());
        let large = label_rq1(&d, NewcomerThreshold::new(t + 1).unwrap());
        prop_assert!(small.positives().is_subset(&large.positives()));
        prop_assert_eq!(&small.active_developers, &large.active_developers);
    }

    #[test]
    fn rq2_labels_one_issue_per_contributor(seed in 0u64..10_000) {
        let d = random_event_log(seed, 1000).unwrap();
        let labeling = label_rq2(&d);
        prop_assert_eq!(labeling.labels.len(), resolutions_per_contributor(&d).len());
        prop_assert_eq!(labeling.count(Label::Positive), labeling.active_developers.len());
        // Every rq2 issue is its resolver's first, hence an rq1 newcomer issue at t = 1.
        let first = label_rq1(&d, NewcomerThreshold::new(1).unwrap());
        for id in labeling.labels.keys() {
            prop_assert_eq!(first.labels[id], Label::Positive);
        }
    }

    #[test]
    fn labels_ignore_input_order(seed in 0u64..10_000) {
        let d = random_event_log(seed, 300).unwrap();
        let mut issues = d.issues().to_vec();
        issues.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let shuffled = Dataset::new(d.project(), issues).unwrap();
        let t = NewcomerThreshold::new(5).unwrap();
        prop_assert_eq!(label_rq1(&d, t), label_rq1(&shuffled, t));
        prop_assert_eq!(label_rq2(&d), label_rq2(&shuffled));
    }

    #[test]
    fn jsonl_round_trip(seed in 0u64..10_000) {
        let d = random_event_log(seed, 200).unwrap();
        let mut buf = Vec::new();
        d.write_jsonl(&mut buf).unwrap();
        let back = read_jsonl(buf.as_slice()).unwrap();
        prop_assert_eq!(back.issues(), d.issues());
    }
}
