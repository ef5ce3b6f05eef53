//! End-to-end benchmark: label, split, balance five times, grid-search each
//! classifier, refit, and score on the held-out issues.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::grid::{grid_search, CvResult, GridConfig};
use super::metrics::{evaluate, Metric, Metrics};
use super::split::{balance, kfold, stratified_split, SplitPlan};
use crate::classifiers::{fit_rows, Hyperparameters, Kind, ModelSpec};
use crate::corpus::Dataset;
use crate::nlp::{assemble_prepared, FeatureExtractor, PreparedDoc, Vocabulary};
use crate::roles::{label, NewcomerThreshold, Question, RoleLabeling};
use crate::{seed, Error, Label, Result};

pub const REPORT_FORMAT: &str = "onboard-benchmark/1";

/// Which labeling to benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuestionKind {
    Rq1,
    Rq2,
}

impl QuestionKind {
    pub fn name(self) -> &'static str {
        match self {
            QuestionKind::Rq1 => "rq1",
            QuestionKind::Rq2 => "rq2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub question: QuestionKind,
    /// Newcomer thresholds; ignored for RQ2.
    pub thresholds: Vec<u32>,
    pub classifiers: Vec<Kind>,
    pub grid: GridConfig,
    pub seed: u64,
    pub runs: usize,
    pub folds: usize,
    pub test_fraction: f64,
    pub metric: Metric,
}

impl BenchmarkConfig {
    pub fn new(question: QuestionKind, seed: u64) -> Self {
        BenchmarkConfig {
            question,
            thresholds: NewcomerThreshold::DEFAULTS.to_vec(),
            classifiers: Kind::ALL.to_vec(),
            grid: GridConfig::default(),
            seed,
            runs: 5,
            folds: 10,
            test_fraction: SplitPlan::DEFAULT_TEST_FRACTION,
            metric: Metric::Precision,
        }
    }

    fn questions(&self) -> Result<Vec<Question>> {
        match self.question {
            QuestionKind::Rq2 => Ok(vec![Question::Rq2]),
            QuestionKind::Rq1 => {
                if self.thresholds.is_empty() {
                    return Err(Error::InvalidInput("no thresholds given".into()));
                }
                self.thresholds
                    .iter()
                    .map(|&t| NewcomerThreshold::new(t).map(Question::Rq1))
                    .collect()
            }
        }
    }
}

/// One sampling run of one classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub run: usize,
    pub balance_seed: u64,
    pub fold_seed: u64,
    pub search_seed: u64,
    pub refit_seed: u64,
    pub target_size: usize,
    pub vocabulary_size: usize,
    pub vocabulary_hash: String,
    pub best_cell: usize,
    pub best: Hyperparameters,
    pub cv_score: f64,
    pub test: Option<Metrics>,
    pub error: Option<String>,
    pub grid: Vec<CvResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierRow {
    pub classifier: Kind,
    /// Means over the sampling runs.
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    /// Winning cell chosen most often across runs (earliest in grid order on
    /// ties).
    pub modal_cell: Hyperparameters,
    pub runs: Vec<RunResult>,
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub question: String,
    pub threshold: Option<u32>,
    pub positives: usize,
    pub negatives: usize,
    pub split_seed: u64,
    pub train_size: usize,
    pub test_size: usize,
    pub test_positives: usize,
    pub rows: Vec<ClassifierRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub format: String,
    pub project: String,
    pub issues: usize,
    pub resolved: usize,
    /// SHA-256 of the dataset in canonical JSON Lines form.
    pub dataset_digest: String,
    pub config: BenchmarkConfig,
    pub complete: bool,
    pub sections: Vec<Section>,
}

/// Which issue ids a stage of the benchmark touched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Held-out issues.
    Test,
    Vocabulary,
    Balance,
    CrossValidation,
    Refit,
}

#[derive(Debug, Clone)]
pub struct TraceEvent<'a> {
    pub threshold: Option<u32>,
    pub run: Option<usize>,
    pub classifier: Option<Kind>,
    pub stage: Stage,
    pub ids: &'a [&'a str],
}

pub fn dataset_digest(d: &Dataset) -> String {
    let mut buf = Vec::new();
    d.write_jsonl(&mut buf).expect("writing to memory");
    format!("{:x}", Sha256::digest(&buf))
}

fn section_seed(base: u64, q: Question) -> u64 {
    match q {
        Question::Rq1(t) => seed::derive(base, &[1, t.get() as u64]),
        Question::Rq2 => seed::derive(base, &[2, 0]),
    }
}

fn kind_index(kind: Kind) -> u64 {
    Kind::ALL.iter().position(|&k| k == kind).unwrap() as u64
}

pub fn run_benchmark(d: &Dataset, config: &BenchmarkConfig) -> Result<BenchmarkReport> {
    run_benchmark_traced(d, config, &mut |_| {})
}

/// Like [`run_benchmark`], reporting every id set used for fitting or
/// testing to `trace`.
pub fn run_benchmark_traced(
    d: &Dataset,
    config: &BenchmarkConfig,
    trace: &mut dyn FnMut(&TraceEvent<'_>),
) -> Result<BenchmarkReport> {
    config.grid.validate()?;
    if config.runs == 0 {
        return Err(Error::InvalidInput("runs must be >= 1".into()));
    }
    if config.classifiers.is_empty() {
        return Err(Error::InvalidInput("no classifiers selected".into()));
    }
    let questions = config.questions()?;
    let extractor = FeatureExtractor::default();
    let resolved: Vec<_> = d.resolved().collect();
    let prepared: HashMap<&str, PreparedDoc> = resolved
        .iter()
        .map(|i| i.id.as_str())
        .zip(extractor.prepare_all(&resolved))
        .collect();

    let mut sections = Vec::new();
    for q in questions {
        let labeling = label(d, q);
        sections.push(run_section(&labeling, &prepared, config, q, trace)?);
    }
    let complete = sections.iter().all(|s| s.rows.iter().all(|r| r.complete));
    Ok(BenchmarkReport {
        format: REPORT_FORMAT.to_string(),
        project: d.project().to_string(),
        issues: d.len(),
        resolved: resolved.len(),
        dataset_digest: dataset_digest(d),
        config: config.clone(),
        complete,
        sections,
    })
}

fn run_section(
    labeling: &RoleLabeling,
    prepared: &HashMap<&str, PreparedDoc>,
    config: &BenchmarkConfig,
    q: Question,
    trace: &mut dyn FnMut(&TraceEvent<'_>),
) -> Result<Section> {
    let positives = labeling.count(Label::Positive);
    let negatives = labeling.count(Label::Negative);
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass(labeling.labels.len()));
    }
    let base = section_seed(config.seed, q);
    let plan = SplitPlan {
        test_fraction: config.test_fraction,
        seed: seed::derive(base, &[0]),
    };
    let split = stratified_split(labeling, &plan)?;
    let test_ids: Vec<&str> = split.test.iter().map(String::as_str).collect();
    let test_set: BTreeSet<&str> = test_ids.iter().copied().collect();
    let threshold = q.threshold();
    trace(&TraceEvent {
        threshold,
        run: None,
        classifier: None,
        stage: Stage::Test,
        ids: &test_ids,
    });
    let test_labels: Vec<Label> = test_ids.iter().map(|id| labeling.labels[*id]).collect();

    let mut per_kind: BTreeMap<Kind, Vec<RunResult>> = BTreeMap::new();
    for run in 0..config.runs {
        let run_seed = seed::derive(base, &[1, run as u64]);
        let balance_seed = seed::derive(run_seed, &[0]);
        let fold_seed = seed::derive(run_seed, &[1]);
        let sample = balance(&split.train, labeling, balance_seed)?;
        let unique = sample.unique_ids();
        if let Some(id) = unique.iter().find(|id| test_set.contains(*id)) {
            return Err(Error::Leakage(format!("held-out issue {id} in training sample")));
        }
        let sample_ids: Vec<&str> = sample.ids.iter().map(String::as_str).collect();
        let event = |stage, classifier, ids| TraceEvent {
            threshold,
            run: Some(run),
            classifier,
            stage,
            ids,
        };
        trace(&event(Stage::Balance, None, &sample_ids));
        trace(&event(Stage::Vocabulary, None, &unique));

        let vocab = Vocabulary::build(unique.iter().map(|id| &prepared[id].doc))?;
        let docs: Vec<&PreparedDoc> = unique.iter().chain(&test_ids).map(|id| &prepared[id]).collect();
        let features = assemble_prepared(&docs, &vocab)?;
        let row_of: HashMap<&str, usize> = unique.iter().enumerate().map(|(i, id)| (*id, i)).collect();
        let rows: Vec<usize> = sample_ids.iter().map(|id| row_of[id]).collect();
        let test_rows: Vec<usize> = (unique.len()..unique.len() + test_ids.len()).collect();
        let folds = kfold(&sample.labels, config.folds, fold_seed)?;

        for &kind in &config.classifiers {
            let kind_seed = seed::derive(run_seed, &[2, kind_index(kind)]);
            let search_seed = seed::derive(kind_seed, &[0]);
            let refit_seed = seed::derive(kind_seed, &[1]);
            let cells = config.grid.cells(kind);
            trace(&event(Stage::CrossValidation, Some(kind), &sample_ids));
            let search = grid_search(
                &features.matrix,
                &rows,
                &sample.labels,
                &folds,
                &cells,
                search_seed,
                config.metric,
            )?;
            let best = cells[search.best];
            trace(&event(Stage::Refit, Some(kind), &sample_ids));
            let outcome = fit_rows(&ModelSpec::new(best, refit_seed), &features.matrix, &rows, &sample.labels)
                .and_then(|m| evaluate(&m, &features.matrix, &test_rows, &test_labels));
            let (test, error) = match outcome {
                Ok(m) => (Some(m), None),
                Err(e) => (None, Some(e.to_string())),
            };
            per_kind.entry(kind).or_default().push(RunResult {
                run,
                balance_seed,
                fold_seed,
                search_seed,
                refit_seed,
                target_size: sample.target_size,
                vocabulary_size: vocab.len(),
                vocabulary_hash: features.vocabulary_hash.clone(),
                best_cell: search.best,
                best,
                cv_score: search.best_result().score,
                test,
                error,
                grid: search.results,
            });
        }
    }

    let rows = config
        .classifiers
        .iter()
        .map(|kind| summarize(*kind, per_kind.remove(kind).unwrap_or_default(), config))
        .collect();
    Ok(Section {
        question: q.name().to_string(),
        threshold,
        positives,
        negatives,
        split_seed: plan.seed,
        train_size: split.train.len(),
        test_size: split.test.len(),
        test_positives: test_labels.iter().filter(|l| l.is_positive()).count(),
        rows,
    })
}

fn summarize(kind: Kind, runs: Vec<RunResult>, config: &BenchmarkConfig) -> ClassifierRow {
    let cells = config.grid.cells(kind);
    let mut votes = vec![0usize; cells.len()];
    for r in &runs {
        votes[r.best_cell] += 1;
    }
    let mut modal = 0;
    for (i, &v) in votes.iter().enumerate() {
        if v > votes[modal] {
            modal = i;
        }
    }
    let complete = runs.iter().all(|r| r.test.is_some());
    let mean = |f: fn(&Metrics) -> f64| {
        complete.then(|| runs.iter().map(|r| f(r.test.as_ref().unwrap())).sum::<f64>() / runs.len() as f64)
    };
    ClassifierRow {
        classifier: kind,
        precision: mean(|m| m.precision),
        recall: mean(|m| m.recall),
        f1: mean(|m| m.f1),
        modal_cell: cells[modal],
        runs,
        complete,
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_default()
}

impl BenchmarkReport {
    pub const CSV_HEADER: [&'static str; 8] =
        ["project", "question", "threshold", "classifier", "precision", "recall", "f1", "best"];

    /// One row per threshold and classifier. `best` marks the classifier
    /// with the highest mean test precision of its threshold.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::CSV_HEADER)?;
        for s in &self.sections {
            let mut best: Option<usize> = None;
            for (i, r) in s.rows.iter().enumerate() {
                let better = match (r.precision, best.and_then(|b| s.rows[b].precision)) {
                    (Some(p), Some(q)) => p > q,
                    (Some(_), None) => true,
                    _ => false,
                };
                if better {
                    best = Some(i);
                }
            }
            let threshold = s.threshold.map(|t| t.to_string()).unwrap_or_default();
            for (i, r) in s.rows.iter().enumerate() {
                w.write_record([
                    self.project.as_str(),
                    s.question.as_str(),
                    threshold.as_str(),
                    r.classifier.name(),
                    &cell(r.precision),
                    &cell(r.recall),
                    &cell(r.f1),
                    if best == Some(i) { "true" } else { "false" },
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes `benchmark.csv` and `benchmark.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        let csv_path = dir.join("benchmark.csv");
        let file = std::fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
        self.write_csv(std::io::BufWriter::new(file))?;
        let json_path = dir.join("benchmark.json");
        std::fs::write(&json_path, self.to_json()?).map_err(|e| Error::io(&json_path, e))
    }

    pub fn row(&self, threshold: Option<u32>, kind: Kind) -> Option<&ClassifierRow> {
        self.sections
            .iter()
            .find(|s| s.threshold == threshold)?
            .rows
            .iter()
            .find(|r| r.classifier == kind)
    }
}
