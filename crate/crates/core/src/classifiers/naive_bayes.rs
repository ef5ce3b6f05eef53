//! Gaussian naive Bayes over sparse rows.
//!
//! Absent entries are zeros, so the per-class log-likelihood of a row is a
//! precomputed all-zero baseline plus a correction for each stored entry.

use serde::{Deserialize, Serialize};

use super::NbParams;
use crate::matrix::{CsrMatrix, SparseRow};
use crate::{Error, Label, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    /// Index 0 is the positive class, 1 the negative class.
    pub priors: [f64; 2],
    pub means: [Vec<f64>; 2],
    pub variances: [Vec<f64>; 2],
    /// Added to every variance: `var_smoothing` times the largest
    /// per-feature variance of the training data.
    pub epsilon: f64,
}

fn class_slot(label: Label) -> usize {
    if label.is_positive() {
        0
    } else {
        1
    }
}

/// Population mean and variance of each column over `rows` (repeats count).
fn moments<'a, I>(x: &CsrMatrix, rows: I, n: f64) -> (Vec<f64>, Vec<f64>)
where
    I: Iterator<Item = &'a usize> + Clone,
{
    let d = x.n_cols();
    let mut sum = vec![0.0; d];
    let mut count = vec![0.0; d];
    for &r in rows.clone() {
        for (j, v) in x.row(r).iter() {
            sum[j] += v;
            count[j] += 1.0;
        }
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    // zeros contribute mean^2 each
    let mut ss: Vec<f64> = (0..d).map(|j| (n - count[j]) * mean[j] * mean[j]).collect();
    for &r in rows {
        for (j, v) in x.row(r).iter() {
            ss[j] += (v - mean[j]).powi(2);
        }
    }
    let var = ss.iter().map(|s| s / n).collect();
    (mean, var)
}

pub(crate) fn fit(x: &CsrMatrix, rows: &[usize], labels: &[Label], params: &NbParams) -> Result<GaussianNb> {
    let mut per_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (&r, &l) in rows.iter().zip(labels) {
        per_class[class_slot(l)].push(r);
    }
    for (slot, class) in [(0, Label::Positive), (1, Label::Negative)] {
        if per_class[slot].is_empty() {
            return Err(Error::InsufficientClass {
                class,
                count: 0,
                required: 1,
            });
        }
    }
    let n = rows.len() as f64;
    let (_, all_var) = moments(x, rows.iter(), n);
    let max_var = all_var.iter().copied().fold(0.0, f64::max);
    // constant data would leave every variance at zero
    let epsilon = params.var_smoothing * if max_var > 0.0 { max_var } else { 1.0 };

    let (mp, mut vp) = moments(x, per_class[0].iter(), per_class[0].len() as f64);
    let (mn, mut vn) = moments(x, per_class[1].iter(), per_class[1].len() as f64);
    vp.iter_mut().chain(vn.iter_mut()).for_each(|v| *v += epsilon);
    Ok(GaussianNb {
        priors: [per_class[0].len() as f64 / n, per_class[1].len() as f64 / n],
        means: [mp, mn],
        variances: [vp, vn],
        epsilon,
    })
}

impl GaussianNb {
    /// Per-class log-likelihood of the all-zero row, including the prior.
    pub(crate) fn baseline(&self) -> [f64; 2] {
        let two_pi = 2.0 * std::f64::consts::PI;
        [0, 1].map(|c| {
            self.priors[c].ln()
                + self.means[c]
                    .iter()
                    .zip(&self.variances[c])
                    .map(|(m, v)| -0.5 * (two_pi * v).ln() - m * m / (2.0 * v))
                    .sum::<f64>()
        })
    }

    pub(crate) fn joint_log_likelihood(&self, row: SparseRow<'_>, baseline: &[f64; 2]) -> [f64; 2] {
        [0, 1].map(|c| {
            let mut jll = baseline[c];
            for (j, x) in row.iter() {
                let (m, v) = (self.means[c][j], self.variances[c][j]);
                jll -= ((x - m).powi(2) - m * m) / (2.0 * v);
            }
            jll
        })
    }

    /// Posterior probability of the positive class.
    pub(crate) fn positive_posterior(&self, row: SparseRow<'_>, baseline: &[f64; 2]) -> f64 {
        let [pos, neg] = self.joint_log_likelihood(row, baseline);
        1.0 / (1.0 + (neg - pos).exp())
    }

    pub fn n_features(&self) -> usize {
        self.means[0].len()
    }
}
