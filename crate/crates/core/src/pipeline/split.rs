//! Held-out split, class balancing and stratified k-fold.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::roles::RoleLabeling;
use crate::{seed, Error, Label, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub test_fraction: f64,
    pub seed: u64,
}

impl SplitPlan {
    pub const DEFAULT_TEST_FRACTION: f64 = 0.15;

    pub fn new(seed: u64) -> Self {
        SplitPlan {
            test_fraction: Self::DEFAULT_TEST_FRACTION,
            seed,
        }
    }
}

/// Issue ids on each side of the held-out split, both ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

fn class_ids(labeling: &RoleLabeling, class: Label) -> Vec<&str> {
    labeling
        .labels
        .iter()
        .filter(|(_, &l)| l == class)
        .map(|(id, _)| id.as_str())
        .collect()
}

fn require_both(pos: usize, neg: usize, required: usize) -> Result<()> {
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass(pos + neg));
    }
    for (class, count) in [(Label::Positive, pos), (Label::Negative, neg)] {
        if count < required {
            return Err(Error::InsufficientClass {
                class,
                count,
                required,
            });
        }
    }
    Ok(())
}

/// Test-set size per class: `round(n * f)` in total, split proportionally,
/// leftover slots going to the largest fractional parts (positive first on
/// ties).
pub fn test_quota(counts: [usize; 2], fraction: f64) -> [usize; 2] {
    let total = counts[0] + counts[1];
    let target = (total as f64 * fraction).round() as usize;
    let exact = counts.map(|c| c as f64 * fraction);
    let mut quota = exact.map(|e| e.floor() as usize);
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut left = target.saturating_sub(quota[0] + quota[1]);
    for &c in order.iter().cycle().take(2) {
        if left == 0 {
            break;
        }
        if quota[c] < counts[c] {
            quota[c] += 1;
            left -= 1;
        }
    }
    quota
}

pub fn stratified_split(labeling: &RoleLabeling, plan: &SplitPlan) -> Result<Split> {
    if !(plan.test_fraction > 0.0 && plan.test_fraction < 1.0) {
        return Err(Error::InvalidInput(format!(
            "test fraction {} outside (0, 1)",
            plan.test_fraction
        )));
    }
    let mut pos = class_ids(labeling, Label::Positive);
    let mut neg = class_ids(labeling, Label::Negative);
    require_both(pos.len(), neg.len(), 2)?;
    let quota = test_quota([pos.len(), neg.len()], plan.test_fraction);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (k, ids) in [&mut pos, &mut neg].into_iter().enumerate() {
        ids.shuffle(&mut seed::rng(seed::derive(plan.seed, &[k as u64])));
        test.extend(ids[..quota[k]].iter().map(|s| s.to_string()));
        train.extend(ids[quota[k]..].iter().map(|s| s.to_string()));
    }
    train.sort();
    test.sort();
    Ok(Split { train, test })
}

/// Training sample after over- and under-sampling. `ids[k]` has label
/// `labels[k]`; minority ids may repeat.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalancedSample {
    pub ids: Vec<String>,
    pub labels: Vec<Label>,
    pub minority: Label,
    /// Size of each class after balancing.
    pub target_size: usize,
    pub seed: u64,
}

impl BalancedSample {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Distinct ids, ascending.
    pub fn unique_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.ids.iter().map(String::as_str).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn count(&self, class: Label) -> usize {
        self.labels.iter().filter(|&&l| l == class).count()
    }
}

/// Both classes end with `min(2 * minority, majority)` samples: the
/// minority is cycled through a shuffled order (each id at most twice), the
/// majority is drawn without replacement. Positives come first in the
/// result.
pub fn balance(train: &[String], labeling: &RoleLabeling, seed_value: u64) -> Result<BalancedSample> {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for id in train {
        match labeling.labels.get(id) {
            Some(Label::Positive) => pos.push(id.as_str()),
            Some(Label::Negative) => neg.push(id.as_str()),
            None => return Err(Error::InvalidInput(format!("issue {id} has no label"))),
        }
    }
    require_both(pos.len(), neg.len(), 1)?;
    let minority = if pos.len() <= neg.len() {
        Label::Positive
    } else {
        Label::Negative
    };
    let (small, large) = if minority.is_positive() {
        (pos.len(), neg.len())
    } else {
        (neg.len(), pos.len())
    };
    let target = (2 * small).min(large);
    let mut ids = Vec::with_capacity(2 * target);
    let mut labels = Vec::with_capacity(2 * target);
    for (k, (class, mut members)) in [(Label::Positive, pos), (Label::Negative, neg)].into_iter().enumerate() {
        members.shuffle(&mut seed::rng(seed::derive(seed_value, &[k as u64])));
        let picked: Vec<&str> = if class == minority {
            members.iter().cycle().take(target).copied().collect()
        } else {
            members[..target].to_vec()
        };
        labels.extend(std::iter::repeat_n(class, picked.len()));
        ids.extend(picked.into_iter().map(str::to_string));
    }
    Ok(BalancedSample {
        ids,
        labels,
        minority,
        target_size: target,
        seed: seed_value,
    })
}

/// Positions into the sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Stratified k-fold: each class is shuffled and dealt round-robin, the
/// dealing position carrying over from positives to negatives, so fold
/// sizes differ by at most one overall and per class.
pub fn kfold(labels: &[Label], k: usize, seed_value: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("k = {k}, at least 2 folds required")));
    }
    let pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i].is_positive()).collect();
    let neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i].is_positive()).collect();
    require_both(pos.len(), neg.len(), k)?;
    let mut assignment = vec![0usize; labels.len()];
    let mut next = 0usize;
    for (c, mut members) in [pos, neg].into_iter().enumerate() {
        members.shuffle(&mut seed::rng(seed::derive(seed_value, &[c as u64])));
        for i in members {
            assignment[i] = next % k;
            next += 1;
        }
    }
    Ok((0..k)
        .map(|f| {
            let (validation, train) = (0..labels.len()).partition(|&i| assignment[i] == f);
            Fold { train, validation }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roles::{NewcomerThreshold, Question};
    use proptest::prelude::*;
    use std::collections::{BTreeMap, BTreeSet};

    fn labeling(pos: usize, neg: usize) -> RoleLabeling {
        let mut labels = BTreeMap::new();
        for i in 0..pos {
            labels.insert(format!("p{i:04}"), Label::Positive);
        }
        for i in 0..neg {
            labels.insert(format!("n{i:04}"), Label::Negative);
        }
        RoleLabeling {
            question: Question::Rq1(NewcomerThreshold::new(1).unwrap()),
            labels,
            active_developers: BTreeSet::new(),
        }
    }

    #[test]
    fn split_is_exactly_proportional() {
        let l = labeling(100, 100);
        let s = stratified_split(&l, &SplitPlan::new(3)).unwrap();
        let test_pos = s.test.iter().filter(|id| id.starts_with('p')).count();
        assert_eq!(test_pos, 15);
        assert_eq!(s.test.len(), 30);
        let all: BTreeSet<_> = s.train.iter().chain(&s.test).collect();
        assert_eq!(all.len(), 200);
        assert!(s.train.iter().all(|id| !s.test.contains(id)));
    }

    #[test]
    fn split_needs_two_per_class() {
        assert!(matches!(
            stratified_split(&labeling(1, 50), &SplitPlan::new(0)),
            Err(Error::InsufficientClass { count: 1, .. })
        ));
        assert!(matches!(
            stratified_split(&labeling(0, 50), &SplitPlan::new(0)),
            Err(Error::SingleClass(50))
        ));
    }

    #[test]
    fn quota_largest_remainder() {
        // 0.15 * 7 = 1.05, 0.15 * 13 = 1.95, total round(3.0) = 3.
        assert_eq!(test_quota([7, 13], 0.15), [1, 2]);
        // Equal fractional parts favour the positive class.
        assert_eq!(test_quota([10, 10], 0.25), [3, 2]);
        assert_eq!(test_quota([200, 1800], 0.15), [30, 270]);
    }

    #[test]
    fn balance_examples() {
        let l = labeling(10, 100);
        let train: Vec<String> = l.labels.keys().cloned().collect();
        let b = balance(&train, &l, 1).unwrap();
        assert_eq!((b.count(Label::Positive), b.count(Label::Negative)), (20, 20));
        assert_eq!(b.target_size, 20);

        let l = labeling(40, 60);
        let train: Vec<String> = l.labels.keys().cloned().collect();
        let b = balance(&train, &l, 1).unwrap();
        assert_eq!((b.count(Label::Positive), b.count(Label::Negative)), (60, 60));
        let negatives: BTreeSet<_> = b.ids.iter().filter(|id| id.starts_with('n')).collect();
        assert_eq!(negatives.len(), 60);
    }

    #[test]
    fn balance_rejects_single_class() {
        let l = labeling(0, 10);
        let train: Vec<String> = l.labels.keys().cloned().collect();
        assert!(matches!(balance(&train, &l, 0), Err(Error::SingleClass(10))));
    }

    #[test]
    fn kfold_twenty_twenty() {
        let labels: Vec<Label> = (0..40)
            .map(|i| if i < 20 { Label::Positive } else { Label::Negative })
            .collect();
        let folds = kfold(&labels, 10, 9).unwrap();
        assert_eq!(folds.len(), 10);
        let mut seen = [0; 40];
        for f in &folds {
            let pos = f.validation.iter().filter(|&&i| labels[i].is_positive()).count();
            assert_eq!((pos, f.validation.len() - pos), (2, 2));
            assert_eq!(f.train.len() + f.validation.len(), 40);
            for &i in &f.validation {
                seen[i] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn kfold_needs_k_per_class() {
        let labels = [vec![Label::Positive; 9], vec![Label::Negative; 30]].concat();
        assert!(matches!(
            kfold(&labels, 10, 0),
            Err(Error::InsufficientClass { count: 9, required: 10, .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn split_ratio_within_one(pos in 2usize..300, neg in 2usize..300, seed in any::<u64>()) {
            let l = labeling(pos, neg);
            let s = stratified_split(&l, &SplitPlan::new(seed)).unwrap();
            let test_pos = s.test.iter().filter(|id| l.labels[*id].is_positive()).count();
            let test_neg = s.test.len() - test_pos;
            prop_assert!((test_pos as f64 - pos as f64 * 0.15).abs() <= 1.0);
            prop_assert!((test_neg as f64 - neg as f64 * 0.15).abs() <= 1.0);
            prop_assert_eq!(s.train.len() + s.test.len(), pos + neg);
        }

        #[test]
        fn balance_invariants(pos in 1usize..200, neg in 1usize..200, seed in any::<u64>()) {
            let l = labeling(pos, neg);
            let train: Vec<String> = l.labels.keys().cloned().collect();
            let b = balance(&train, &l, seed).unwrap();
            prop_assert_eq!(b.count(Label::Positive), b.count(Label::Negative));
            prop_assert_eq!(b.target_size, (2 * pos.min(neg)).min(pos.max(neg)));
            let mut seen = BTreeMap::new();
            for (id, label) in b.ids.iter().zip(&b.labels) {
                prop_assert_eq!(l.labels[id], *label);
                *seen.entry(id).or_insert(0) += 1;
            }
            for (id, n) in seen {
                if n > 1 {
                    prop_assert_eq!(l.labels[id], b.minority);
                    prop_assert!(n <= 2);
                }
            }
        }

        #[test]
        fn kfold_balanced(pos in 10usize..60, neg in 10usize..60, k in 2usize..=10, seed in any::<u64>()) {
            let labels = [vec![Label::Positive; pos], vec![Label::Negative; neg]].concat();
            let folds = kfold(&labels, k, seed).unwrap();
            let sizes: Vec<usize> = folds.iter().map(|f| f.validation.len()).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            let pos_sizes: Vec<usize> = folds
                .iter()
                .map(|f| f.validation.iter().filter(|&&i| labels[i].is_positive()).count())
                .collect();
            prop_assert!(pos_sizes.iter().max().unwrap() - pos_sizes.iter().min().unwrap() <= 1);
            let mut all: Vec<usize> = folds.iter().flat_map(|f| f.validation.clone()).collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..pos + neg).collect::<Vec<_>>());
        }
    }
}
