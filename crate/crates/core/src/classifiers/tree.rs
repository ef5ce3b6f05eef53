//! CART decision trees over sparse rows with integer sample weights.
//!
//! Rows that occur several times in a training sample (bootstrap draws,
//! over-sampled minority rows) are stored once with a weight equal to their
//! multiplicity, so impurity sums match the duplicated sample exactly.

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Criterion, MaxFeatures, Splitter};
use crate::matrix::{CsrMatrix, SparseRow};
use crate::{Error, Label, Result};

/// Gains must beat the incumbent by more than this to replace it.
pub(crate) const GAIN_EPS: f64 = 1e-12;

const NO_SLOT: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowParams {
    pub criterion: Criterion,
    pub splitter: Splitter,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub max_depth: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        positive: f64,
        negative: f64,
    },
    Split {
        feature: u32,
        threshold: f64,
        /// Impurity decrease achieved by this split.
        gain: f64,
        left: u32,
        right: u32,
    },
}

/// Samples with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_for(&self, row: SparseRow<'_>) -> (f64, f64) {
        let mut i = 0usize;
        loop {
            match &self.nodes[i] {
                Node::Leaf { positive, negative } => return (*positive, *negative),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    i = if row.get(*feature as usize) <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    /// Majority label of the reached leaf; ties go to negative.
    pub fn vote(&self, row: SparseRow<'_>) -> Label {
        let (p, n) = self.leaf_for(row);
        if p > n {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    /// Positive fraction of the reached leaf.
    pub fn positive_fraction(&self, row: SparseRow<'_>) -> f64 {
        let (p, n) = self.leaf_for(row);
        if p + n > 0.0 {
            p / (p + n)
        } else {
            0.0
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => {
                    1 + go(nodes, *left as usize).max(go(nodes, *right as usize))
                }
            }
        }
        go(&self.nodes, 0)
    }
}

pub fn impurity(criterion: Criterion, positive: f64, negative: f64) -> f64 {
    let total = positive + negative;
    if total <= 0.0 {
        return 0.0;
    }
    let (p, q) = (positive / total, negative / total);
    match criterion {
        Criterion::Gini => 1.0 - p * p - q * q,
        Criterion::Entropy => {
            let h = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
            h(p) + h(q)
        }
    }
}

/// Training rows deduplicated into local ids, stored both row- and
/// column-wise.
pub(crate) struct TreeData {
    n_features: usize,
    row_ptr: Vec<usize>,
    row_idx: Vec<u32>,
    row_val: Vec<f64>,
    columns: Vec<Vec<(u32, f64)>>,
    positive: Vec<bool>,
    /// Local id of each entry of the `rows` slice passed to `new`.
    pub(crate) local_of: Vec<u32>,
}

impl TreeData {
    pub(crate) fn new(x: &CsrMatrix, rows: &[usize], labels: &[Label]) -> Result<TreeData> {
        if rows.len() != labels.len() {
            return Err(Error::InvalidInput(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        if rows.is_empty() {
            return Err(Error::Training("empty training set".into()));
        }
        let mut local = vec![NO_SLOT; x.n_rows()];
        let mut positive = Vec::new();
        let mut global = Vec::new();
        let mut local_of = Vec::with_capacity(rows.len());
        for (&r, &label) in rows.iter().zip(labels) {
            if r >= x.n_rows() {
                return Err(Error::InvalidInput(format!("row {r} out of range")));
            }
            if local[r] == NO_SLOT {
                local[r] = global.len() as u32;
                global.push(r);
                positive.push(label.is_positive());
            } else if positive[local[r] as usize] != label.is_positive() {
                return Err(Error::InvalidInput(format!("row {r} carries both labels")));
            }
            local_of.push(local[r]);
        }
        let n_features = x.n_cols();
        let mut row_ptr = vec![0];
        let mut row_idx = Vec::new();
        let mut row_val = Vec::new();
        let mut columns: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n_features];
        for (l, &g) in global.iter().enumerate() {
            for (j, v) in x.row(g).iter() {
                row_idx.push(j as u32);
                row_val.push(v);
                columns[j].push((l as u32, v));
            }
            row_ptr.push(row_idx.len());
        }
        Ok(TreeData {
            n_features,
            row_ptr,
            row_idx,
            row_val,
            columns,
            positive,
            local_of,
        })
    }

    pub(crate) fn n_local(&self) -> usize {
        self.positive.len()
    }

    /// Weight of each local row for the `rows` slice given to `new`.
    pub(crate) fn multiplicities(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.n_local()];
        for &l in &self.local_of {
            w[l as usize] += 1.0;
        }
        w
    }

    fn row(&self, l: u32) -> SparseRow<'_> {
        let (a, b) = (self.row_ptr[l as usize], self.row_ptr[l as usize + 1]);
        SparseRow {
            indices: &self.row_idx[a..b],
            values: &self.row_val[a..b],
        }
    }
}

pub fn n_candidate_features(max_features: MaxFeatures, d: usize) -> usize {
    let m = match max_features {
        MaxFeatures::All => d,
        MaxFeatures::Auto | MaxFeatures::Sqrt => (d as f64).sqrt().ceil() as usize,
        MaxFeatures::Log2 => (d as f64).log2().ceil() as usize,
    };
    m.clamp(1, d.max(1))
}

struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
    entries: Vec<(f64, u32)>,
}

struct Grower<'a> {
    data: &'a TreeData,
    weights: &'a [f64],
    params: GrowParams,
    rng: &'a mut ChaCha8Rng,
    stamp: Vec<u32>,
    generation: u32,
    slot_of: Vec<u32>,
    buckets: Vec<Vec<(f64, u32)>>,
    goes_left: Vec<bool>,
    groups: Vec<(f64, f64, f64)>,
    nodes: Vec<Node>,
}

pub(crate) fn grow(
    data: &TreeData,
    weights: &[f64],
    params: GrowParams,
    rng: &mut ChaCha8Rng,
) -> Tree {
    let n = data.n_local();
    let mut g = Grower {
        data,
        weights,
        params,
        rng,
        stamp: vec![0; n],
        generation: 0,
        slot_of: vec![NO_SLOT; data.n_features],
        buckets: Vec::new(),
        goes_left: vec![false; n],
        groups: Vec::new(),
        nodes: Vec::new(),
    };
    let root: Vec<u32> = (0..n as u32).filter(|&l| weights[l as usize] > 0.0).collect();
    g.build(root);
    Tree { nodes: g.nodes }
}

impl Grower<'_> {
    fn build(&mut self, root: Vec<u32>) {
        // (node index, samples, depth); left children are popped first so the
        // node order (and RNG consumption) is a pre-order traversal.
        self.nodes.push(Node::Leaf {
            positive: 0.0,
            negative: 0.0,
        });
        let mut stack = vec![(0usize, root, 0usize)];
        while let Some((id, samples, depth)) = stack.pop() {
            let (pos, neg) = self.class_weights(&samples);
            let split = if self.may_split(pos, neg, depth) {
                self.best_split(&samples, pos, neg)
            } else {
                None
            };
            match split {
                None => {
                    self.nodes[id] = Node::Leaf {
                        positive: pos,
                        negative: neg,
                    }
                }
                Some(c) => {
                    let (left, right) = self.partition(&samples, &c);
                    let l = self.nodes.len();
                    self.nodes.push(Node::Leaf {
                        positive: 0.0,
                        negative: 0.0,
                    });
                    self.nodes.push(Node::Leaf {
                        positive: 0.0,
                        negative: 0.0,
                    });
                    self.nodes[id] = Node::Split {
                        feature: c.feature as u32,
                        threshold: c.threshold,
                        gain: c.gain,
                        left: l as u32,
                        right: l as u32 + 1,
                    };
                    stack.push((l + 1, right, depth + 1));
                    stack.push((l, left, depth + 1));
                }
            }
        }
    }

    fn class_weights(&self, samples: &[u32]) -> (f64, f64) {
        let mut pos = 0.0;
        let mut neg = 0.0;
        for &s in samples {
            let w = self.weights[s as usize];
            if self.data.positive[s as usize] {
                pos += w;
            } else {
                neg += w;
            }
        }
        (pos, neg)
    }

    fn may_split(&self, pos: f64, neg: f64, depth: usize) -> bool {
        let total = pos + neg;
        pos > 0.0
            && neg > 0.0
            && total >= self.params.min_samples_split as f64
            && total >= 2.0 * self.params.min_samples_leaf as f64
            && self.params.max_depth.is_none_or(|d| depth < d)
    }

    fn candidates(&mut self) -> Vec<usize> {
        let d = self.data.n_features;
        let m = n_candidate_features(self.params.max_features, d);
        if m >= d {
            (0..d).collect()
        } else {
            let mut f = index::sample(self.rng, d, m).into_vec();
            f.sort_unstable();
            f
        }
    }

    /// Fills `buckets[k]` with the nonzero `(value, local id)` pairs of
    /// feature `features[k]` among `samples`.
    fn gather(&mut self, samples: &[u32], features: &[usize]) {
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.generation = 1;
        }
        for &s in samples {
            self.stamp[s as usize] = self.generation;
        }
        if self.buckets.len() < features.len() {
            self.buckets.resize_with(features.len(), Vec::new);
        }
        for b in &mut self.buckets[..features.len()] {
            b.clear();
        }
        let row_cost: usize = samples.iter().map(|&s| self.data.row(s).nnz()).sum();
        let col_cost: usize = features.iter().map(|&f| self.data.columns[f].len()).sum();
        if row_cost <= col_cost {
            for (k, &f) in features.iter().enumerate() {
                self.slot_of[f] = k as u32;
            }
            for &s in samples {
                let row = self.data.row(s);
                for (j, v) in row.iter() {
                    let slot = self.slot_of[j];
                    if slot != NO_SLOT {
                        self.buckets[slot as usize].push((v, s));
                    }
                }
            }
            for &f in features {
                self.slot_of[f] = NO_SLOT;
            }
        } else {
            for (k, &f) in features.iter().enumerate() {
                let gen = self.generation;
                let stamp = &self.stamp;
                self.buckets[k].extend(
                    self.data.columns[f]
                        .iter()
                        .filter(|(l, _)| stamp[*l as usize] == gen)
                        .map(|&(l, v)| (v, l)),
                );
            }
        }
    }

    fn best_split(&mut self, samples: &[u32], pos: f64, neg: f64) -> Option<Candidate> {
        let features = self.candidates();
        self.gather(samples, &features);
        let parent = impurity(self.params.criterion, pos, neg);
        let mut best: Option<Candidate> = None;
        for (k, &f) in features.iter().enumerate() {
            let mut entries = std::mem::take(&mut self.buckets[k]);
            let found = match self.params.splitter {
                Splitter::Best => self.best_threshold(&mut entries, pos, neg, parent),
                Splitter::Random => self.random_threshold(&entries, pos, neg, parent),
            };
            if let Some((gain, threshold)) = found {
                if gain > best.as_ref().map_or(GAIN_EPS, |b| b.gain + GAIN_EPS) {
                    let previous = best.replace(Candidate {
                        gain,
                        feature: f,
                        threshold,
                        entries,
                    });
                    self.buckets[k] = previous.map(|p| p.entries).unwrap_or_default();
                    continue;
                }
            }
            self.buckets[k] = entries;
        }
        best
    }

    fn split_gain(&self, parent: f64, left: (f64, f64), right: (f64, f64)) -> Option<f64> {
        let min_leaf = self.params.min_samples_leaf as f64;
        let (wl, wr) = (left.0 + left.1, right.0 + right.1);
        if wl < min_leaf || wr < min_leaf || wl <= 0.0 || wr <= 0.0 {
            return None;
        }
        let w = wl + wr;
        let c = self.params.criterion;
        Some(parent - (wl / w) * impurity(c, left.0, left.1) - (wr / w) * impurity(c, right.0, right.1))
    }

    /// Fills `out` with the distinct-value groups `(value, pos weight, neg
    /// weight)` in ascending order, including the implicit zero group.
    fn fill_groups(&self, entries: &mut [(f64, u32)], pos: f64, neg: f64, out: &mut Vec<(f64, f64, f64)>) {
        entries.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        out.clear();
        let (mut nz_pos, mut nz_neg) = (0.0, 0.0);
        for &(v, l) in entries.iter() {
            let w = self.weights[l as usize];
            let (p, n) = if self.data.positive[l as usize] { (w, 0.0) } else { (0.0, w) };
            nz_pos += p;
            nz_neg += n;
            match out.last_mut() {
                Some(g) if g.0 == v => {
                    g.1 += p;
                    g.2 += n;
                }
                _ => out.push((v, p, n)),
            }
        }
        let zero = ((pos - nz_pos).max(0.0), (neg - nz_neg).max(0.0));
        if zero.0 + zero.1 > 0.0 {
            let at = out.partition_point(|g| g.0 < 0.0);
            out.insert(at, (0.0, zero.0, zero.1));
        }
    }

    fn best_threshold(
        &mut self,
        entries: &mut [(f64, u32)],
        pos: f64,
        neg: f64,
        parent: f64,
    ) -> Option<(f64, f64)> {
        let mut groups = std::mem::take(&mut self.groups);
        self.fill_groups(entries, pos, neg, &mut groups);
        let mut best: Option<(f64, f64)> = None;
        let (mut lp, mut ln) = (0.0, 0.0);
        for w in groups.windows(2) {
            lp += w[0].1;
            ln += w[0].2;
            if let Some(gain) = self.split_gain(parent, (lp, ln), (pos - lp, neg - ln)) {
                if gain > best.map_or(f64::NEG_INFINITY, |b| b.0 + GAIN_EPS) {
                    best = Some((gain, midpoint(w[0].0, w[1].0)));
                }
            }
        }
        self.groups = groups;
        best
    }

    fn random_threshold(
        &mut self,
        entries: &[(f64, u32)],
        pos: f64,
        neg: f64,
        parent: f64,
    ) -> Option<(f64, f64)> {
        let nz_weight: f64 = entries.iter().map(|&(_, l)| self.weights[l as usize]).sum();
        let has_zero = pos + neg - nz_weight > 0.0;
        let init = if has_zero { (0.0, 0.0) } else { (f64::INFINITY, f64::NEG_INFINITY) };
        let (lo, hi) = entries
            .iter()
            .fold(init, |(lo, hi), &(v, _)| (lo.min(v), hi.max(v)));
        if hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) {
            return None;
        }
        let threshold = self.rng.gen_range(lo..hi);
        let (mut lp, mut ln) = (0.0, 0.0);
        for &(v, l) in entries {
            if v <= threshold {
                let w = self.weights[l as usize];
                if self.data.positive[l as usize] {
                    lp += w;
                } else {
                    ln += w;
                }
            }
        }
        if has_zero && 0.0 <= threshold {
            let (nz_pos, nz_neg) = entries.iter().fold((0.0, 0.0), |(p, n), &(_, l)| {
                let w = self.weights[l as usize];
                if self.data.positive[l as usize] { (p + w, n) } else { (p, n + w) }
            });
            lp += pos - nz_pos;
            ln += neg - nz_neg;
        }
        self.split_gain(parent, (lp, ln), (pos - lp, neg - ln))
            .map(|gain| (gain, threshold))
    }

    fn partition(&mut self, samples: &[u32], c: &Candidate) -> (Vec<u32>, Vec<u32>) {
        let zero_left = 0.0 <= c.threshold;
        for &s in samples {
            self.goes_left[s as usize] = zero_left;
        }
        for &(v, l) in &c.entries {
            self.goes_left[l as usize] = v <= c.threshold;
        }
        samples.iter().partition(|&&s| self.goes_left[s as usize])
    }
}

/// Midpoint of two consecutive distinct values, never equal to the upper one.
fn midpoint(a: f64, b: f64) -> f64 {
    let m = (a + b) / 2.0;
    if m >= b {
        a
    } else {
        m
    }
}
