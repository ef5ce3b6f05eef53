use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow, GrowParams, Tree, TreeData};
use super::{Criterion, ForestParams, Splitter};
use crate::matrix::SparseRow;
use crate::seed;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
}

/// `(bootstrap seed, growth seed)` of tree `index` in a forest seeded with
/// `seed`. Trees are independent of each other and of evaluation order.
pub fn tree_seeds(seed: u64, index: usize) -> (u64, u64) {
    (
        seed::derive(seed, &[index as u64, 0]),
        seed::derive(seed, &[index as u64, 1]),
    )
}

/// Positions into the training sample drawn for tree `index` (n draws with
/// replacement, n = sample size).
pub fn bootstrap_positions(seed: u64, index: usize, n: usize) -> Vec<usize> {
    let mut rng = seed::rng(tree_seeds(seed, index).0);
    (0..n).map(|_| rng.gen_range(0..n)).collect()
}

pub(crate) fn tree_params(p: &ForestParams) -> GrowParams {
    GrowParams {
        criterion: Criterion::Gini,
        splitter: Splitter::Best,
        min_samples_split: 2,
        min_samples_leaf: 1,
        max_features: p.max_features,
        max_depth: None,
    }
}

pub(crate) fn fit(data: &TreeData, params: &ForestParams, seed: u64) -> Result<Forest> {
    let n = data.local_of.len();
    let grow_params = tree_params(params);
    let trees = (0..params.n_estimators)
        .into_par_iter()
        .map(|i| {
            let mut weights = vec![0.0; data.n_local()];
            for p in bootstrap_positions(seed, i, n) {
                weights[data.local_of[p] as usize] += 1.0;
            }
            let mut rng = seed::rng(tree_seeds(seed, i).1);
            grow(data, &weights, grow_params, &mut rng)
        })
        .collect();
    Ok(Forest { trees })
}

impl Forest {
    /// Fraction of trees voting positive.
    pub fn score(&self, row: SparseRow<'_>) -> f64 {
        if self.trees.is_empty() {
            return 0.0;
        }
        let votes = self.trees.iter().filter(|t| t.vote(row).is_positive()).count();
        votes as f64 / self.trees.len() as f64
    }
}
