use std::collections::BTreeSet;

use onboard_core::classifiers::{
    Criterion, ForestParams, Hyperparameters, Kind, MaxFeatures, Splitter, TrainedModel, TreeParams,
};
use onboard_core::corpus::{Dataset, Issue};
use onboard_core::nlp::Vocabulary;
use onboard_core::pipeline::{
    run_benchmark, run_benchmark_traced, tag_issues, train_model, BenchmarkConfig, BenchmarkReport, GridConfig,
    QuestionKind, Stage,
};
use onboard_core::roles::{NewcomerThreshold, Question};
use onboard_core::synthetic::{planted_corpus, PlantedConfig};
use onboard_core::{Error, Label};

fn corpus(seed: u64, unresolved: usize) -> Dataset {
    planted_corpus(&PlantedConfig {
        contributors: 60,
        issues_per_contributor: 12,
        unresolved,
        seed,
        ..PlantedConfig::default()
    })
    .unwrap()
}

fn quick_grid() -> GridConfig {
    let mut g = GridConfig::default();
    g.rf.n_estimators = vec![15];
    g.rf.max_features = vec![MaxFeatures::Sqrt];
    g.dt.criterion = vec![Criterion::Gini];
    g.dt.splitter = vec![Splitter::Best, Splitter::Random];
    g.dt.min_samples_split = vec![2];
    g.dt.min_samples_leaf = vec![1];
    g.gnb.var_smoothing = vec![1e-9];
    g.svm.c = vec![1.0];
    g
}

fn config(question: QuestionKind, seed: u64) -> BenchmarkConfig {
    BenchmarkConfig {
        grid: quick_grid(),
        runs: 2,
        folds: 5,
        ..BenchmarkConfig::new(question, seed)
    }
}

fn csv(report: &BenchmarkReport) -> String {
    let mut buf = Vec::new();
    report.write_csv(&mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn held_out_issues_never_reach_fitting() {
    let d = corpus(3, 0);
    for question in [QuestionKind::Rq1, QuestionKind::Rq2] {
        let mut test: BTreeSet<(Option<u32>, String)> = BTreeSet::new();
        let mut fitted: Vec<(Option<u32>, Stage, String)> = Vec::new();
        run_benchmark_traced(&d, &config(question, 3), &mut |e| {
            for id in e.ids {
                match e.stage {
                    Stage::Test => {
                        test.insert((e.threshold, id.to_string()));
                    }
                    stage => fitted.push((e.threshold, stage, id.to_string())),
                }
            }
        })
        .unwrap();
        assert!(!test.is_empty() && !fitted.is_empty());
        for (threshold, stage, id) in fitted {
            assert!(!test.contains(&(threshold, id.clone())), "{id} leaked into {stage:?}");
        }
    }
}

#[test]
fn report_has_one_row_per_threshold_and_classifier() {
    let d = corpus(4, 0);
    let report = run_benchmark(&d, &config(QuestionKind::Rq1, 4)).unwrap();
    assert_eq!(report.sections.len(), 3);
    let text = csv(&report);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "project,question,threshold,classifier,precision,recall,f1,best");
    assert_eq!(lines.len(), 1 + 3 * 4);
    for (section, t) in report.sections.iter().zip(NewcomerThreshold::DEFAULTS) {
        assert_eq!(section.threshold, Some(t));
        let kinds: Vec<Kind> = section.rows.iter().map(|r| r.classifier).collect();
        assert_eq!(kinds, Kind::ALL);
        assert!(section.rows.iter().all(|r| r.runs.len() == 2));
        assert_eq!(section.train_size + section.test_size, section.positives + section.negatives);
    }
    for chunk in lines[1..].chunks(4) {
        assert_eq!(chunk.iter().filter(|l| l.ends_with(",true")).count(), 1);
    }
}

#[test]
fn rq2_report_leaves_threshold_empty() {
    let d = corpus(5, 0);
    let report = run_benchmark(&d, &config(QuestionKind::Rq2, 5)).unwrap();
    assert_eq!(report.sections.len(), 1);
    let text = csv(&report);
    for line in text.lines().skip(1) {
        assert!(line.starts_with("planted,rq2,,"), "{line}");
    }
}

#[test]
fn same_seed_same_json_and_different_seed_different_split() {
    let d = corpus(6, 0);
    let a = run_benchmark(&d, &config(QuestionKind::Rq1, 6)).unwrap();
    let b = run_benchmark(&d, &config(QuestionKind::Rq1, 6)).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    let c = run_benchmark(&d, &config(QuestionKind::Rq1, 7)).unwrap();
    assert_ne!(a.sections[0].split_seed, c.sections[0].split_seed);
}

#[test]
fn single_class_labeling_is_an_error() {
    // Every contributor resolves exactly one issue, so every issue is a
    // newcomer issue at t = 1.
    let d = planted_corpus(&PlantedConfig {
        contributors: 30,
        issues_per_contributor: 1,
        ..PlantedConfig::default()
    })
    .unwrap();
    let mut c = config(QuestionKind::Rq1, 1);
    c.thresholds = vec![1];
    assert!(matches!(run_benchmark(&d, &c), Err(Error::SingleClass(30))));
}

#[test]
fn invalid_configuration_is_rejected_before_work() {
    let d = corpus(1, 0);
    let mut c = config(QuestionKind::Rq1, 1);
    c.runs = 0;
    assert!(matches!(run_benchmark(&d, &c), Err(Error::InvalidInput(_))));
    let mut c = config(QuestionKind::Rq1, 1);
    c.thresholds = vec![0];
    assert!(matches!(run_benchmark(&d, &c), Err(Error::InvalidInput(_))));
}

fn forest(n: usize) -> Hyperparameters {
    Hyperparameters::RandomForest(ForestParams {
        n_estimators: n,
        max_features: MaxFeatures::Sqrt,
    })
}

#[test]
fn trained_model_ranks_marker_issues_first() {
    let d = corpus(9, 40);
    let question = Question::Rq1(NewcomerThreshold::new(1).unwrap());
    let (model, vocab) = train_model(&d, question, forest(60), 9).unwrap();
    assert_eq!(model.metadata.threshold, Some(1));
    assert_eq!(model.metadata.question.as_deref(), Some("rq1"));
    let open: Vec<&Issue> = d.unresolved().collect();
    let tags = tag_issues(&model, &vocab, &open).unwrap();
    assert_eq!(tags.len(), 40);
    assert!(tags.windows(2).all(|w| w[0].score >= w[1].score));
    let marked: BTreeSet<&str> = open
        .iter()
        .filter(|i| i.text().split_whitespace().any(|w| w == "easyfix"))
        .map(|i| i.id.as_str())
        .collect();
    assert_eq!(marked.len(), 20);
    let top: BTreeSet<&str> = tags[..20].iter().map(|t| t.issue_id.as_str()).collect();
    assert_eq!(top, marked);
    assert!(tags[..20].iter().all(|t| t.label == Label::Positive));
}

#[test]
fn saved_model_predicts_identically() {
    let d = corpus(10, 10);
    let question = Question::Rq1(NewcomerThreshold::new(5).unwrap());
    let cell = Hyperparameters::DecisionTree(TreeParams::default());
    let (model, vocab) = train_model(&d, question, cell, 10).unwrap();
    let dir = tempfile::tempdir().unwrap();
    model.save(&dir.path().join("model.json")).unwrap();
    vocab.save(&dir.path().join("vocabulary.json")).unwrap();
    let vocab2 = Vocabulary::load(&dir.path().join("vocabulary.json")).unwrap();
    let model2 = TrainedModel::load(&dir.path().join("model.json"), &vocab2).unwrap();
    let open: Vec<&Issue> = d.unresolved().collect();
    assert_eq!(tag_issues(&model, &vocab, &open).unwrap(), tag_issues(&model2, &vocab2, &open).unwrap());
    assert_eq!(model2.metadata.threshold, Some(5));
}

#[test]
fn tagging_with_a_foreign_vocabulary_fails() {
    let d = corpus(11, 5);
    let q = Question::Rq1(NewcomerThreshold::new(1).unwrap());
    let (model, _) = train_model(&d, q, forest(5), 1).unwrap();
    let (_, other) = train_model(&corpus(12, 0), q, forest(5), 1).unwrap();
    let open: Vec<&Issue> = d.unresolved().collect();
    assert!(matches!(tag_issues(&model, &other, &open), Err(Error::VocabularyMismatch { .. })));
}
