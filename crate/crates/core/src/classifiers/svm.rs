//! Linear soft-margin SVM trained by stochastic sub-gradient descent.
//!
//! The primal `0.5 * ||w||^2 + C * sum(hinge)` is rescaled to
//! `lambda/2 * ||w||^2 + mean(hinge)` with `lambda = 1 / (C * n)`, and step
//! `t` uses learning rate `1 / (lambda * t)`. The bias is not regularised,
//! but `(w, b)` is projected onto the ball of radius `1 / sqrt(lambda)`;
//! otherwise the first steps (of size `C * n`) throw the bias far off.
//! Sub-gradient iterates do not decrease monotonically, so the iterate with
//! the lowest primal objective at an epoch boundary is returned.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::SvmParams;
use crate::matrix::{CsrMatrix, SparseRow};
use crate::{seed, Error, Label, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearSvm {
    pub fn decision(&self, row: SparseRow<'_>) -> f64 {
        row.dot(&self.weights) + self.bias
    }

    pub fn objective(&self, x: &CsrMatrix, rows: &[usize], labels: &[Label], c: f64) -> f64 {
        primal_objective(&self.weights, self.bias, x, rows, labels, c)
    }
}

pub fn primal_objective(
    w: &[f64],
    b: f64,
    x: &CsrMatrix,
    rows: &[usize],
    labels: &[Label],
    c: f64,
) -> f64 {
    let reg = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
    let hinge: f64 = rows
        .iter()
        .zip(labels)
        .map(|(&r, l)| (1.0 - l.sign() * (x.row(r).dot(w) + b)).max(0.0))
        .sum();
    reg + c * hinge
}

/// `w = scale * v`, so the shrink step is O(1). `sq` tracks `|v|^2`.
struct ScaledVector {
    v: Vec<f64>,
    scale: f64,
    sq: f64,
}

impl ScaledVector {
    fn dot(&self, row: SparseRow<'_>) -> f64 {
        self.scale * row.dot(&self.v)
    }

    fn shrink(&mut self, factor: f64) {
        if factor <= 0.0 {
            self.v.iter_mut().for_each(|x| *x = 0.0);
            self.scale = 1.0;
            self.sq = 0.0;
        } else {
            self.scale *= factor;
            if self.scale < 1e-9 {
                self.materialize();
            }
        }
    }

    fn add(&mut self, row: SparseRow<'_>, coef: f64) {
        let c = coef / self.scale;
        for (j, x) in row.iter() {
            let old = self.v[j];
            let new = old + c * x;
            self.v[j] = new;
            self.sq += new * new - old * old;
        }
    }

    fn materialize(&mut self) {
        let s = self.scale;
        self.v.iter_mut().for_each(|x| *x *= s);
        self.scale = 1.0;
        self.resync();
    }

    fn resync(&mut self) {
        self.sq = self.v.iter().map(|x| x * x).sum();
    }

    fn norm_sq(&self) -> f64 {
        self.scale * self.scale * self.sq.max(0.0)
    }

    fn to_vec(&self) -> Vec<f64> {
        self.v.iter().map(|x| x * self.scale).collect()
    }
}

pub(crate) fn fit(
    x: &CsrMatrix,
    rows: &[usize],
    labels: &[Label],
    params: &SvmParams,
    seed_value: u64,
) -> Result<LinearSvm> {
    if rows.is_empty() {
        return Err(Error::Training("empty training set".into()));
    }
    for class in [Label::Positive, Label::Negative] {
        if !labels.contains(&class) {
            return Err(Error::InsufficientClass {
                class,
                count: 0,
                required: 1,
            });
        }
    }
    if rows.iter().any(|&r| x.row(r).values.iter().any(|v| !v.is_finite())) {
        return Err(Error::Training("non-finite feature value".into()));
    }
    let n = rows.len();
    let lambda = 1.0 / (params.c * n as f64);
    let radius = 1.0 / lambda.sqrt();
    let mut w = ScaledVector {
        v: vec![0.0; x.n_cols()],
        scale: 1.0,
        sq: 0.0,
    };
    let mut b = 0.0;
    let mut best = (primal_objective(&w.to_vec(), b, x, rows, labels, params.c), w.to_vec(), b);
    let mut rng = seed::rng(seed_value);
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0u64;
    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for &k in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let row = x.row(rows[k]);
            let y = labels[k].sign();
            let margin = y * (w.dot(row) + b);
            w.shrink(1.0 - eta * lambda);
            if margin < 1.0 {
                w.add(row, eta * y);
                b += eta * y;
            }
            let norm = (w.norm_sq() + b * b).sqrt();
            if norm > radius {
                w.shrink(radius / norm);
                b *= radius / norm;
            }
        }
        w.resync();
        let current = w.to_vec();
        let obj = primal_objective(&current, b, x, rows, labels, params.c);
        if obj < best.0 {
            best = (obj, current, b);
        }
    }
    Ok(LinearSvm {
        weights: best.1,
        bias: best.2,
    })
}
