use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifiers::TrainedModel;
use crate::matrix::CsrMatrix;
use crate::{Error, Label, Result};

/// Positive-class confusion counts and the scores derived from them.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Metrics {
    /// Precision and recall are 0 when their denominator is 0; F1 is 0
    /// when both are.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Metrics {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Metrics {
            precision,
            recall,
            f1,
            tp,
            fp,
            fn_,
            tn,
        }
    }

    pub fn from_labels(predicted: &[Label], truth: &[Label]) -> Result<Metrics> {
        if predicted.len() != truth.len() {
            return Err(Error::InvalidInput(format!(
                "{} predictions for {} labels",
                predicted.len(),
                truth.len()
            )));
        }
        let mut counts = [[0usize; 2]; 2];
        for (p, t) in predicted.iter().zip(truth) {
            counts[usize::from(!p.is_positive())][usize::from(!t.is_positive())] += 1;
        }
        Ok(Metrics::from_counts(counts[0][0], counts[0][1], counts[1][0], counts[1][1]))
    }
}

/// Scores `model` on the given rows of `x`.
pub fn evaluate(model: &TrainedModel, x: &CsrMatrix, rows: &[usize], labels: &[Label]) -> Result<Metrics> {
    if rows.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} rows but {} labels",
            rows.len(),
            labels.len()
        )));
    }
    let predicted: Vec<Label> = model.predict_rows(x, rows)?.into_iter().map(|p| p.label).collect();
    Metrics::from_labels(&predicted, labels)
}

/// Score that grid search maximises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Precision,
    Recall,
    F1,
}

impl Metric {
    pub fn of(self, m: &Metrics) -> f64 {
        match self {
            Metric::Precision => m.precision,
            Metric::Recall => m.recall,
            Metric::F1 => m.f1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Precision => "precision",
            Metric::Recall => "recall",
            Metric::F1 => "f1",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Metric> {
        match s {
            "precision" => Ok(Metric::Precision),
            "recall" => Ok(Metric::Recall),
            "f1" => Ok(Metric::F1),
            other => Err(Error::InvalidInput(format!("unknown metric `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn closed_form() {
        let m = Metrics::from_counts(3, 1, 3, 10);
        assert_eq!(m.precision, 0.75);
        assert_eq!(m.recall, 0.5);
        assert!((m.f1 - 0.6).abs() < 1e-12);
    }

    #[test]
    fn all_negative_predictions() {
        let truth = [Label::Positive, Label::Negative, Label::Positive];
        let m = Metrics::from_labels(&[Label::Negative; 3], &truth).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
        assert_eq!((m.fn_, m.tn), (2, 1));
    }

    #[test]
    fn length_mismatch() {
        assert!(Metrics::from_labels(&[Label::Negative], &[]).is_err());
    }

    fn label(b: bool) -> Label {
        if b {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    proptest! {
        #[test]
        fn matches_recount(pairs in proptest::collection::vec((any::<bool>(), any::<bool>()), 0..60)) {
            let predicted: Vec<Label> = pairs.iter().map(|p| label(p.0)).collect();
            let truth: Vec<Label> = pairs.iter().map(|p| label(p.1)).collect();
            let m = Metrics::from_labels(&predicted, &truth).unwrap();
            let tp = pairs.iter().filter(|p| p.0 && p.1).count() as f64;
            let pp = pairs.iter().filter(|p| p.0).count() as f64;
            let ap = pairs.iter().filter(|p| p.1).count() as f64;
            let precision = if pp > 0.0 { tp / pp } else { 0.0 };
            let recall = if ap > 0.0 { tp / ap } else { 0.0 };
            // F1 as 2TP / (2TP + FP + FN), zero when TP is zero.
            let f1 = if tp > 0.0 { 2.0 * tp / (pp + ap) } else { 0.0 };
            prop_assert!((m.precision - precision).abs() < 1e-12);
            prop_assert!((m.recall - recall).abs() < 1e-12);
            prop_assert!((m.f1 - f1).abs() < 1e-12);
            prop_assert!(m.f1 <= 2.0 * m.precision.min(m.recall) + 1e-12);
            for v in [m.precision, m.recall, m.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
