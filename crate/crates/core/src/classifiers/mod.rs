//! Binary classifiers behind one fit / predict interface.
//!
//! Score semantics per kind:
//!
//! | kind          | score                     | positive when |
//! |---------------|---------------------------|---------------|
//! | random forest | share of trees voting pos | score > 0.5   |
//! | decision tree | positive share of leaf    | score > 0.5   |
//! | gaussian NB   | positive posterior        | score > 0.5   |
//! | linear SVM    | margin `w.x + b`          | score >= 0    |
//!
//! Exact ties on the probability-like scores go to the negative class.

mod forest;
mod naive_bayes;
mod svm;
pub mod tree;

use std::fmt;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use forest::{bootstrap_positions, tree_seeds, Forest};
pub use naive_bayes::GaussianNb;
pub use svm::{primal_objective, LinearSvm};
pub use tree::{impurity, Node, Tree};

use crate::matrix::CsrMatrix;
use crate::nlp::Vocabulary;
use crate::{seed, Error, Label, Result};

/// Identifies a persisted model document.
pub const MODEL_FORMAT: &str = "onboard-model/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    RandomForest,
    DecisionTree,
    GaussianNb,
    Svm,
}

impl Kind {
    pub const ALL: [Kind; 4] = [Kind::RandomForest, Kind::DecisionTree, Kind::GaussianNb, Kind::Svm];

    /// Display name used in reports.
    pub fn name(self) -> &'static str {
        match self {
            Kind::RandomForest => "RandomForest",
            Kind::DecisionTree => "DecisionTree",
            Kind::GaussianNb => "GaussianNB",
            Kind::Svm => "SVM",
        }
    }

    /// Short command-line name.
    pub fn short(self) -> &'static str {
        match self {
            Kind::RandomForest => "rf",
            Kind::DecisionTree => "dt",
            Kind::GaussianNb => "gnb",
            Kind::Svm => "svm",
        }
    }

    pub fn from_short(s: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.short() == s)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Gini,
    Entropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Splitter {
    Best,
    Random,
}

/// Candidate features per split: `sqrt` is `ceil(sqrt(d))`, `log2` is
/// `ceil(log2(d))`, `auto` is the same as `sqrt`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeatures {
    All,
    Auto,
    Sqrt,
    Log2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeParams {
    pub criterion: Criterion,
    pub splitter: Splitter,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    #[serde(default)]
    pub max_depth: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            criterion: Criterion::Gini,
            splitter: Splitter::Best,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: MaxFeatures::All,
            max_depth: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestParams {
    pub n_estimators: usize,
    pub max_features: MaxFeatures,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NbParams {
    pub var_smoothing: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvmParams {
    #[serde(rename = "C")]
    pub c: f64,
    pub epochs: usize,
}

/// One classifier kind with a full hyperparameter assignment (a grid cell).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "hyperparameters", rename_all = "snake_case")]
pub enum Hyperparameters {
    RandomForest(ForestParams),
    DecisionTree(TreeParams),
    GaussianNb(NbParams),
    Svm(SvmParams),
}

impl Hyperparameters {
    pub fn kind(&self) -> Kind {
        match self {
            Hyperparameters::RandomForest(_) => Kind::RandomForest,
            Hyperparameters::DecisionTree(_) => Kind::DecisionTree,
            Hyperparameters::GaussianNb(_) => Kind::GaussianNb,
            Hyperparameters::Svm(_) => Kind::Svm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.to_string()));
        match self {
            Hyperparameters::RandomForest(p) if p.n_estimators == 0 => bad("n_estimators must be >= 1"),
            Hyperparameters::DecisionTree(p) if p.min_samples_split < 2 => bad("min_samples_split must be >= 2"),
            Hyperparameters::DecisionTree(p) if p.min_samples_leaf < 1 => bad("min_samples_leaf must be >= 1"),
            Hyperparameters::GaussianNb(p) if !(p.var_smoothing >= 0.0 && p.var_smoothing.is_finite()) => {
                bad("var_smoothing must be finite and >= 0")
            }
            Hyperparameters::Svm(p) if !(p.c > 0.0 && p.c.is_finite()) => bad("C must be finite and > 0"),
            Hyperparameters::Svm(p) if p.epochs == 0 => bad("epochs must be >= 1"),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Hyperparameters {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lower = |v: &dyn fmt::Debug| format!("{v:?}").to_lowercase();
        match self {
            Hyperparameters::RandomForest(p) => write!(
                f,
                "n_estimators={} max_features={}",
                p.n_estimators,
                lower(&p.max_features)
            ),
            Hyperparameters::DecisionTree(p) => {
                write!(
                    f,
                    "criterion={} splitter={} min_samples_split={} min_samples_leaf={} max_features={}",
                    lower(&p.criterion),
                    lower(&p.splitter),
                    p.min_samples_split,
                    p.min_samples_leaf,
                    lower(&p.max_features)
                )?;
                if let Some(d) = p.max_depth {
                    write!(f, " max_depth={d}")?;
                }
                Ok(())
            }
            Hyperparameters::GaussianNb(p) => write!(f, "var_smoothing={:e}", p.var_smoothing),
            Hyperparameters::Svm(p) => write!(f, "C={} epochs={}", p.c, p.epochs),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub hyperparameters: Hyperparameters,
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(hyperparameters: Hyperparameters, seed: u64) -> Self {
        ModelSpec {
            hyperparameters,
            seed,
        }
    }

    pub fn kind(&self) -> Kind {
        self.hyperparameters.kind()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: Label,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FittedParameters {
    RandomForest(Forest),
    DecisionTree(Tree),
    GaussianNb(GaussianNb),
    Svm(LinearSvm),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub samples: usize,
    pub positives: usize,
    pub negatives: usize,
    #[serde(default)]
    pub question: Option<String>,
    #[serde(default)]
    pub threshold: Option<u32>,
    /// Latest resolution time among the training issues.
    #[serde(default)]
    pub data_cutoff: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format: String,
    #[serde(flatten)]
    pub spec: ModelSpec,
    pub n_features: usize,
    pub vocabulary_hash: Option<String>,
    pub metadata: TrainingMetadata,
    pub parameters: FittedParameters,
}

/// Fits on every row of `x`.
pub fn fit(spec: &ModelSpec, x: &CsrMatrix, labels: &[Label]) -> Result<TrainedModel> {
    let rows: Vec<usize> = (0..x.n_rows()).collect();
    fit_rows(spec, x, &rows, labels)
}

/// Fits on the given rows of `x` (repeats allowed); `labels[k]` belongs to
/// `rows[k]`.
pub fn fit_rows(spec: &ModelSpec, x: &CsrMatrix, rows: &[usize], labels: &[Label]) -> Result<TrainedModel> {
    spec.hyperparameters.validate()?;
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
    if let Some(&r) = rows.iter().find(|&&r| r >= x.n_rows()) {
        return Err(Error::InvalidInput(format!("row {r} out of range")));
    }
    let parameters = match &spec.hyperparameters {
        Hyperparameters::RandomForest(p) => {
            let data = tree::TreeData::new(x, rows, labels)?;
            FittedParameters::RandomForest(forest::fit(&data, p, spec.seed)?)
        }
        Hyperparameters::DecisionTree(p) => {
            let data = tree::TreeData::new(x, rows, labels)?;
            let weights = data.multiplicities();
            let grow_params = tree::GrowParams {
                criterion: p.criterion,
                splitter: p.splitter,
                min_samples_split: p.min_samples_split,
                min_samples_leaf: p.min_samples_leaf,
                max_features: p.max_features,
                max_depth: p.max_depth,
            };
            let mut rng = seed::rng(spec.seed);
            FittedParameters::DecisionTree(tree::grow(&data, &weights, grow_params, &mut rng))
        }
        Hyperparameters::GaussianNb(p) => FittedParameters::GaussianNb(naive_bayes::fit(x, rows, labels, p)?),
        Hyperparameters::Svm(p) => FittedParameters::Svm(svm::fit(x, rows, labels, p, spec.seed)?),
    };
    let positives = labels.iter().filter(|l| l.is_positive()).count();
    Ok(TrainedModel {
        format: MODEL_FORMAT.to_string(),
        spec: *spec,
        n_features: x.n_cols(),
        vocabulary_hash: None,
        metadata: TrainingMetadata {
            samples: rows.len(),
            positives,
            negatives: rows.len() - positives,
            ..Default::default()
        },
        parameters,
    })
}

fn probability_label(score: f64) -> Label {
    if score > 0.5 {
        Label::Positive
    } else {
        Label::Negative
    }
}

impl TrainedModel {
    pub fn kind(&self) -> Kind {
        self.spec.kind()
    }

    pub fn with_vocabulary(mut self, vocab: &Vocabulary) -> Self {
        self.vocabulary_hash = Some(vocab.hash());
        self
    }

    /// One prediction per row of `x`.
    pub fn predict(&self, x: &CsrMatrix) -> Result<Vec<Prediction>> {
        let rows: Vec<usize> = (0..x.n_rows()).collect();
        self.predict_rows(x, &rows)
    }

    pub fn predict_rows(&self, x: &CsrMatrix, rows: &[usize]) -> Result<Vec<Prediction>> {
        if x.n_cols() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: x.n_cols(),
            });
        }
        let out = match &self.parameters {
            FittedParameters::RandomForest(f) => rows
                .iter()
                .map(|&r| {
                    let score = f.score(x.row(r));
                    Prediction {
                        label: probability_label(score),
                        score,
                    }
                })
                .collect(),
            FittedParameters::DecisionTree(t) => rows
                .iter()
                .map(|&r| {
                    let row = x.row(r);
                    Prediction {
                        label: t.vote(row),
                        score: t.positive_fraction(row),
                    }
                })
                .collect(),
            FittedParameters::GaussianNb(nb) => {
                let baseline = nb.baseline();
                rows.iter()
                    .map(|&r| {
                        let score = nb.positive_posterior(x.row(r), &baseline);
                        Prediction {
                            label: probability_label(score),
                            score,
                        }
                    })
                    .collect()
            }
            FittedParameters::Svm(svm) => rows
                .iter()
                .map(|&r| {
                    let score = svm.decision(x.row(r));
                    Prediction {
                        label: if score >= 0.0 { Label::Positive } else { Label::Negative },
                        score,
                    }
                })
                .collect(),
        };
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses a model document without checking its vocabulary.
    pub fn from_json(text: &str) -> Result<TrainedModel> {
        let model: TrainedModel = serde_json::from_str(text)?;
        if model.format != MODEL_FORMAT {
            return Err(Error::InvalidInput(format!("unknown model format `{}`", model.format)));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    /// Loads a model and checks that it was trained against `vocab`.
    pub fn load(path: &Path, vocab: &Vocabulary) -> Result<TrainedModel> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model = TrainedModel::from_json(&text)?;
        model.check_vocabulary(vocab)?;
        Ok(model)
    }

    pub fn check_vocabulary(&self, vocab: &Vocabulary) -> Result<()> {
        let actual = vocab.hash();
        match &self.vocabulary_hash {
            Some(expected) if *expected == actual => Ok(()),
            expected => Err(Error::VocabularyMismatch {
                expected: expected.clone().unwrap_or_else(|| "<none>".into()),
                actual,
            }),
        }
    }
}
