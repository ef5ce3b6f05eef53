//! Hyperparameter grids and cross-validated grid search.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{Metric, Metrics};
use super::split::Fold;
use crate::classifiers::tree::n_candidate_features;
use crate::classifiers::{
    fit_rows, Criterion, FittedParameters, ForestParams, Hyperparameters, Kind, MaxFeatures, ModelSpec, NbParams,
    Splitter, SvmParams, TreeParams,
};
use crate::matrix::CsrMatrix;
use crate::{seed, Error, Label, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestGrid {
    pub n_estimators: Vec<usize>,
    pub max_features: Vec<MaxFeatures>,
}

impl Default for ForestGrid {
    fn default() -> Self {
        ForestGrid {
            n_estimators: vec![100, 1000, 3000],
            max_features: vec![MaxFeatures::Auto, MaxFeatures::Sqrt, MaxFeatures::Log2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeGrid {
    pub criterion: Vec<Criterion>,
    pub splitter: Vec<Splitter>,
    pub min_samples_split: Vec<usize>,
    pub min_samples_leaf: Vec<usize>,
    pub max_features: Vec<MaxFeatures>,
    pub max_depth: Vec<Option<usize>>,
}

impl Default for TreeGrid {
    fn default() -> Self {
        TreeGrid {
            criterion: vec![Criterion::Gini, Criterion::Entropy],
            splitter: vec![Splitter::Best, Splitter::Random],
            min_samples_split: vec![2, 5, 10],
            min_samples_leaf: vec![1, 2, 4],
            max_features: vec![MaxFeatures::All],
            max_depth: vec![None],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NbGrid {
    pub var_smoothing: Vec<f64>,
}

impl Default for NbGrid {
    fn default() -> Self {
        NbGrid {
            var_smoothing: vec![1e-9, 1e-7, 1e-5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmGrid {
    #[serde(rename = "C")]
    pub c: Vec<f64>,
    pub epochs: Vec<usize>,
}

impl Default for SvmGrid {
    fn default() -> Self {
        SvmGrid {
            c: vec![0.1, 1.0, 10.0],
            epochs: vec![100],
        }
    }
}

/// Grid per classifier kind. Kinds or keys missing from a config file keep
/// their defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub rf: ForestGrid,
    pub dt: TreeGrid,
    pub gnb: NbGrid,
    pub svm: SvmGrid,
}

impl GridConfig {
    pub fn from_json(text: &str) -> Result<GridConfig> {
        let grid: GridConfig = serde_json::from_str(text)?;
        grid.validate()?;
        Ok(grid)
    }

    pub fn load(path: &Path) -> Result<GridConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        GridConfig::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        for kind in Kind::ALL {
            let cells = self.cells(kind);
            if cells.is_empty() {
                return Err(Error::InvalidInput(format!("empty grid for {kind}")));
            }
            for cell in &cells {
                cell.validate()?;
            }
        }
        Ok(())
    }

    /// Cartesian product in declaration order, the first key varying
    /// slowest.
    pub fn cells(&self, kind: Kind) -> Vec<Hyperparameters> {
        let mut out = Vec::new();
        match kind {
            Kind::RandomForest => {
                for &n_estimators in &self.rf.n_estimators {
                    for &max_features in &self.rf.max_features {
                        out.push(Hyperparameters::RandomForest(ForestParams {
                            n_estimators,
                            max_features,
                        }));
                    }
                }
            }
            Kind::DecisionTree => {
                let g = &self.dt;
                for &criterion in &g.criterion {
                    for &splitter in &g.splitter {
                        for &min_samples_split in &g.min_samples_split {
                            for &min_samples_leaf in &g.min_samples_leaf {
                                for &max_features in &g.max_features {
                                    for &max_depth in &g.max_depth {
                                        out.push(Hyperparameters::DecisionTree(TreeParams {
                                            criterion,
                                            splitter,
                                            min_samples_split,
                                            min_samples_leaf,
                                            max_features,
                                            max_depth,
                                        }));
                                    }
                                }
                            }
                        }
                    }
                }
            }
            Kind::GaussianNb => {
                for &var_smoothing in &self.gnb.var_smoothing {
                    out.push(Hyperparameters::GaussianNb(NbParams { var_smoothing }));
                }
            }
            Kind::Svm => {
                for &c in &self.svm.c {
                    for &epochs in &self.svm.epochs {
                        out.push(Hyperparameters::Svm(SvmParams { c, epochs }));
                    }
                }
            }
        }
        out
    }
}

/// Cross-validation outcome of one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub cell: Hyperparameters,
    /// Per-fold validation metrics; empty when the cell failed.
    pub folds: Vec<Metrics>,
    pub mean_precision: f64,
    pub mean_recall: f64,
    pub mean_f1: f64,
    /// Mean of the selected metric; 0 for failed cells.
    pub score: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearch {
    pub best: usize,
    pub metric: Metric,
    pub results: Vec<CvResult>,
}

impl GridSearch {
    pub fn best_result(&self) -> &CvResult {
        &self.results[self.best]
    }
}

/// Seed of the model fitted on fold `fold`. It does not depend on the cell,
/// so forests differing only in size share their leading trees.
pub fn fold_seed(seed_value: u64, fold: usize) -> u64 {
    seed::derive(seed_value, &[fold as u64])
}

enum Task {
    Single { cell: usize, fold: usize },
    /// Random-forest cells with the same candidate-feature count: one forest
    /// of the largest size is grown and every cell reads a prefix of it.
    Forests { cells: Vec<(usize, usize)>, fold: usize },
}

type Outcome = (usize, usize, std::result::Result<Metrics, String>);

/// Runs k-fold cross-validation for every cell. `rows[k]` is the row of `x`
/// holding sample `k`, fold positions index into `rows` and `labels`. The
/// best cell maximises the mean of `metric`; ties go to the earlier cell.
pub fn grid_search(
    x: &CsrMatrix,
    rows: &[usize],
    labels: &[Label],
    folds: &[Fold],
    cells: &[Hyperparameters],
    seed_value: u64,
    metric: Metric,
) -> Result<GridSearch> {
    if cells.is_empty() {
        return Err(Error::InvalidInput("empty grid".into()));
    }
    if folds.is_empty() {
        return Err(Error::InvalidInput("no folds".into()));
    }
    if rows.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} rows but {} labels",
            rows.len(),
            labels.len()
        )));
    }
    let mut forest_groups: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    let mut tasks = Vec::new();
    for (c, cell) in cells.iter().enumerate() {
        match cell {
            Hyperparameters::RandomForest(p) if cell.validate().is_ok() => {
                let key = n_candidate_features(p.max_features, x.n_cols());
                forest_groups.entry(key).or_default().push((c, p.n_estimators));
            }
            _ => tasks.extend((0..folds.len()).map(|fold| Task::Single { cell: c, fold })),
        }
    }
    for group in forest_groups.into_values() {
        for fold in 0..folds.len() {
            tasks.push(Task::Forests {
                cells: group.clone(),
                fold,
            });
        }
    }
    let outcomes: Vec<Vec<Outcome>> = tasks
        .par_iter()
        .map(|task| run_task(task, x, rows, labels, folds, cells, seed_value))
        .collect();

    let mut table: Vec<Vec<Option<std::result::Result<Metrics, String>>>> = vec![vec![None; folds.len()]; cells.len()];
    for (cell, fold, outcome) in outcomes.into_iter().flatten() {
        table[cell][fold] = Some(outcome);
    }
    let k = folds.len() as f64;
    let results: Vec<CvResult> = cells
        .iter()
        .zip(table)
        .map(|(cell, per_fold)| {
            let per_fold: std::result::Result<Vec<Metrics>, String> =
                per_fold.into_iter().map(|o| o.expect("every fold evaluated")).collect();
            match per_fold {
                Ok(fold_metrics) => {
                    let mean = |f: fn(&Metrics) -> f64| fold_metrics.iter().map(f).sum::<f64>() / k;
                    let score = fold_metrics.iter().map(|m| metric.of(m)).sum::<f64>() / k;
                    CvResult {
                        cell: *cell,
                        mean_precision: mean(|m| m.precision),
                        mean_recall: mean(|m| m.recall),
                        mean_f1: mean(|m| m.f1),
                        folds: fold_metrics,
                        score,
                        error: None,
                    }
                }
                Err(e) => CvResult {
                    cell: *cell,
                    folds: Vec::new(),
                    mean_precision: 0.0,
                    mean_recall: 0.0,
                    mean_f1: 0.0,
                    score: 0.0,
                    error: Some(e),
                },
            }
        })
        .collect();
    let mut best = 0;
    for (i, r) in results.iter().enumerate() {
        if r.score > results[best].score {
            best = i;
        }
    }
    Ok(GridSearch { best, metric, results })
}

fn fold_data(rows: &[usize], labels: &[Label], positions: &[usize]) -> (Vec<usize>, Vec<Label>) {
    positions.iter().map(|&p| (rows[p], labels[p])).unzip()
}

fn run_task(
    task: &Task,
    x: &CsrMatrix,
    rows: &[usize],
    labels: &[Label],
    folds: &[Fold],
    cells: &[Hyperparameters],
    seed_value: u64,
) -> Vec<Outcome> {
    match task {
        Task::Single { cell, fold } => {
            let f = &folds[*fold];
            let (train_rows, train_labels) = fold_data(rows, labels, &f.train);
            let (val_rows, val_labels) = fold_data(rows, labels, &f.validation);
            let spec = ModelSpec::new(cells[*cell], fold_seed(seed_value, *fold));
            let outcome = fit_rows(&spec, x, &train_rows, &train_labels)
                .and_then(|m| super::evaluate(&m, x, &val_rows, &val_labels))
                .map_err(|e| e.to_string());
            vec![(*cell, *fold, outcome)]
        }
        Task::Forests { cells: group, fold } => {
            let f = &folds[*fold];
            let (train_rows, train_labels) = fold_data(rows, labels, &f.train);
            let (val_rows, val_labels) = fold_data(rows, labels, &f.validation);
            let &(first, _) = &group[0];
            let largest = group.iter().map(|g| g.1).max().unwrap_or(1);
            let Hyperparameters::RandomForest(p) = cells[first] else {
                unreachable!("forest group holds forest cells")
            };
            let spec = ModelSpec::new(
                Hyperparameters::RandomForest(ForestParams {
                    n_estimators: largest,
                    ..p
                }),
                fold_seed(seed_value, *fold),
            );
            let forest = match fit_rows(&spec, x, &train_rows, &train_labels) {
                Ok(m) => match m.parameters {
                    FittedParameters::RandomForest(forest) => forest,
                    _ => unreachable!("forest spec yields a forest"),
                },
                Err(e) => return group.iter().map(|&(c, _)| (c, *fold, Err(e.to_string()))).collect(),
            };
            // Running count of positive votes after each tree.
            let cumulative: Vec<Vec<u32>> = val_rows
                .iter()
                .map(|&r| {
                    let row = x.row(r);
                    let mut acc = 0u32;
                    forest
                        .trees
                        .iter()
                        .map(|t| {
                            acc += u32::from(t.vote(row).is_positive());
                            acc
                        })
                        .collect()
                })
                .collect();
            group
                .iter()
                .map(|&(c, n)| {
                    let predicted: Vec<Label> = cumulative
                        .iter()
                        .map(|votes| {
                            let share = votes[n - 1] as f64 / n as f64;
                            if share > 0.5 {
                                Label::Positive
                            } else {
                                Label::Negative
                            }
                        })
                        .collect();
                    (c, *fold, Metrics::from_labels(&predicted, &val_labels).map_err(|e| e.to_string()))
                })
                .collect()
        }
    }
}
