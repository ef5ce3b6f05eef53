use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use onboard_core::classifiers::{Hyperparameters, Kind, TrainedModel};
use onboard_core::corpus::{compute_irf, compute_stats, load_dataset, Dataset};
use onboard_core::nlp::Vocabulary;
use onboard_core::pipeline::{
    run_benchmark, tag_issues, train_model, write_tags_csv, BenchmarkConfig, GridConfig, QuestionKind,
};
use onboard_core::roles::{label as label_issues, NewcomerThreshold, Question};
use onboard_core::synthetic::{planted_corpus, PlantedConfig};
use onboard_core::Error;
use serde_json::Value;

use crate::{BenchmarkArgs, QuestionArg, SynthArgs, TagArgs, TrainArgs};

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Failure {
        Failure {
            code: 1,
            error: anyhow!(message.into()),
        }
    }

    fn schema(error: impl Into<anyhow::Error>) -> Failure {
        Failure {
            code: 2,
            error: error.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let code = match e {
            Error::InvalidInput(_) => 1,
            Error::Io { .. } | Error::Schema { .. } | Error::Json(_) | Error::Csv(_) => 2,
            Error::VocabularyMismatch { .. } => 4,
            _ => 3,
        };
        Failure { code, error: e.into() }
    }
}

type Outcome = Result<(), Failure>;

fn load(path: &Path) -> Result<Dataset, Failure> {
    load_dataset(path).map_err(Failure::schema)
}

fn output_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::from(Error::Io {
        path: dir.to_path_buf(),
        source: e,
    }))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| {
        Failure::from(Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })
}

fn write(path: &Path, text: &str) -> Outcome {
    std::fs::write(path, text).map_err(|e| {
        Failure::from(Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })
}

fn questions(question: QuestionArg, thresholds: &[u32]) -> Result<Vec<Question>, Failure> {
    match question {
        QuestionArg::Rq2 => Ok(vec![Question::Rq2]),
        QuestionArg::Rq1 => {
            if thresholds.is_empty() {
                return Err(Failure::usage("at least one threshold required"));
            }
            thresholds
                .iter()
                .map(|&t| NewcomerThreshold::new(t).map(Question::Rq1).map_err(Failure::from))
                .collect()
        }
    }
}

fn days(v: f64) -> String {
    format!("{v:.2}")
}

pub fn ingest(input: &Path, out: Option<&Path>) -> Outcome {
    let d = load(input)?;
    let s = compute_stats(&d);
    println!("project            {}", s.project);
    println!("issues             {}", s.issue_count);
    println!("resolved issues    {}", s.resolved_count);
    println!("contributors       {}", s.contributor_count);
    let period = |t: Option<chrono::DateTime<chrono::Utc>>| t.map(|t| t.format("%Y-%m-%d").to_string());
    println!(
        "period             {} - {}",
        period(s.period_start).unwrap_or_else(|| "n/a".into()),
        period(s.period_end).unwrap_or_else(|| "n/a".into())
    );
    println!("avg title          {:.2} chars, {:.2} words", s.avg_title_chars, s.avg_title_words);
    println!("avg description    {:.2} chars, {:.2} words", s.avg_desc_chars, s.avg_desc_words);
    if let Some(dir) = out {
        output_dir(dir)?;
        write(&dir.join("stats.json"), &serde_json::to_string_pretty(&s).map_err(Error::from)?)?;
    }
    Ok(())
}

pub fn label(input: &Path, out: &Path, question: QuestionArg, thresholds: &[u32]) -> Outcome {
    let qs = questions(question, thresholds)?;
    let d = load(input)?;
    output_dir(out)?;
    for q in qs {
        let labeling = label_issues(&d, q);
        let name = match q.threshold() {
            Some(t) => format!("labels_{}_t{t}.csv", q.name()),
            None => format!("labels_{}.csv", q.name()),
        };
        labeling.write_csv(create(&out.join(&name))?)?;
        println!(
            "{q}: {} positive, {} negative -> {name}",
            labeling.count(onboard_core::Label::Positive),
            labeling.count(onboard_core::Label::Negative)
        );
    }
    Ok(())
}

pub fn irf(input: &Path, out: &Path) -> Outcome {
    let d = load(input)?;
    let stats = compute_irf(&d);
    output_dir(out)?;
    stats.write_csv(create(&out.join("irf.csv"))?)?;
    let summary = serde_json::json!({ "irf_avg": stats.irf_avg, "irf_med": stats.irf_med });
    write(
        &out.join("irf_summary.json"),
        &serde_json::to_string_pretty(&summary).map_err(Error::from)?,
    )?;
    println!("contributors with >= 2 resolutions: {}", stats.contributors.len());
    println!(
        "IRF avg (days): mean {} median {} sd {}",
        days(stats.irf_avg.mean),
        days(stats.irf_avg.median),
        days(stats.irf_avg.sd)
    );
    println!(
        "IRF med (days): mean {} median {} sd {}",
        days(stats.irf_med.mean),
        days(stats.irf_med.median),
        days(stats.irf_med.sd)
    );
    Ok(())
}

fn parse_kinds(values: &[String]) -> Result<Vec<Kind>, Failure> {
    if values.iter().any(|v| v == "all") {
        return Ok(Kind::ALL.to_vec());
    }
    let mut kinds = Vec::new();
    for v in values {
        let kind = Kind::from_short(v).ok_or_else(|| Failure::usage(format!("unknown classifier `{v}`")))?;
        if !kinds.contains(&kind) {
            kinds.push(kind);
        }
    }
    // Report rows follow the canonical order.
    kinds.sort_by_key(|k| Kind::ALL.iter().position(|a| a == k));
    Ok(kinds)
}

pub fn benchmark(a: &BenchmarkArgs) -> Outcome {
    let kinds = parse_kinds(&a.classifier)?;
    questions(a.question, &a.thresholds)?;
    let grid = match &a.grid {
        Some(path) => GridConfig::load(path).map_err(Failure::schema)?,
        None => GridConfig::default(),
    };
    let d = load(&a.input)?;
    let question = match a.question {
        QuestionArg::Rq1 => QuestionKind::Rq1,
        QuestionArg::Rq2 => QuestionKind::Rq2,
    };
    let config = BenchmarkConfig {
        thresholds: a.thresholds.clone(),
        classifiers: kinds,
        grid,
        runs: a.runs,
        folds: a.folds,
        metric: a.metric.into(),
        ..BenchmarkConfig::new(question, a.seed)
    };
    let report = run_benchmark(&d, &config).map_err(|e| match e {
        Error::InvalidInput(_) => Failure::from(e),
        other => Failure {
            code: 3,
            error: other.into(),
        },
    })?;
    output_dir(&a.output_dir)?;
    report.save(&a.output_dir)?;
    println!("{:<10} {:<14} {:>9} {:>7} {:>6}", "threshold", "classifier", "precision", "recall", "f1");
    for s in &report.sections {
        for r in &s.rows {
            let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.2}"));
            println!(
                "{:<10} {:<14} {:>9} {:>7} {:>6}",
                s.threshold.map_or("-".to_string(), |t| t.to_string()),
                r.classifier.name(),
                fmt(r.precision),
                fmt(r.recall),
                fmt(r.f1)
            );
        }
    }
    if !report.complete {
        eprintln!("warning: some classifier rows failed; see benchmark.json");
    }
    Ok(())
}

/// Builds a grid cell from `key=value` pairs. Values are read as JSON when
/// they parse, otherwise as strings.
fn parse_cell(kind: Kind, params: &[String]) -> Result<Hyperparameters, Failure> {
    let mut map = serde_json::Map::new();
    for p in params {
        let (key, raw) = p
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("--param `{p}` is not key=value")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        if map.insert(key.to_string(), value).is_some() {
            return Err(Failure::usage(format!("--param `{key}` given twice")));
        }
    }
    let doc = serde_json::json!({ "kind": kind, "hyperparameters": map });
    let cell: Hyperparameters = serde_json::from_value(doc)
        .map_err(|e| Failure::usage(format!("invalid hyperparameters for {}: {e}", kind.short())))?;
    cell.validate()?;
    Ok(cell)
}

pub fn train(a: &TrainArgs) -> Outcome {
    let kind = Kind::from_short(&a.classifier)
        .ok_or_else(|| Failure::usage(format!("unknown classifier `{}`", a.classifier)))?;
    let cell = parse_cell(kind, &a.params)?;
    let mut qs = questions(a.question, &a.thresholds)?;
    if qs.len() != 1 {
        return Err(Failure::usage("train takes exactly one threshold"));
    }
    let question = qs.remove(0);
    let d = load(&a.input)?;
    let (model, vocab) = train_model(&d, question, cell, a.seed).map_err(|e| Failure {
        code: 3,
        error: e.into(),
    })?;
    output_dir(&a.output_dir)?;
    model.save(&a.output_dir.join("model.json"))?;
    vocab.save(&a.output_dir.join("vocabulary.json"))?;
    println!(
        "trained {} ({cell}) on {} samples for {question}; vocabulary {} terms",
        kind.name(),
        model.metadata.samples,
        vocab.len()
    );
    Ok(())
}

pub fn tag(a: &TagArgs) -> Outcome {
    let vocab_path: PathBuf = match &a.vocabulary {
        Some(p) => p.clone(),
        None => a
            .model
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join("vocabulary.json"),
    };
    let text = std::fs::read_to_string(&a.model).map_err(|e| {
        Failure::from(Error::Io {
            path: a.model.clone(),
            source: e,
        })
    })?;
    let model = TrainedModel::from_json(&text).map_err(Failure::schema)?;
    let vocab = Vocabulary::load(&vocab_path).map_err(Failure::schema)?;
    model.check_vocabulary(&vocab)?;
    if model.metadata.question.as_deref() != Some("rq1") {
        eprintln!("warning: model was not trained for rq1 labels");
    }
    let d = load(&a.input)?;
    let open: Vec<_> = d.unresolved().collect();
    let tags = tag_issues(&model, &vocab, &open)?;
    output_dir(&a.output_dir)?;
    write_tags_csv(&tags, create(&a.output_dir.join("tags.csv"))?)?;
    let recommended = tags.iter().filter(|t| t.label.is_positive()).count();
    println!("{} unresolved issues scored, {recommended} recommended for newcomers", tags.len());
    Ok(())
}

pub fn synth(a: &SynthArgs) -> Outcome {
    let cfg = if a.eclipse_scale {
        PlantedConfig {
            unresolved: a.unresolved,
            ..PlantedConfig::eclipse_scale(a.seed)
        }
    } else {
        PlantedConfig {
            contributors: a.contributors,
            issues_per_contributor: a.issues_per_contributor,
            unresolved: a.unresolved,
            seed: a.seed,
            ..Default::default()
        }
    };
    if cfg.contributors == 0 || cfg.issues_per_contributor == 0 {
        return Err(Failure::usage("contributors and issues per contributor must be positive"));
    }
    let d = planted_corpus(&cfg)?;
    if let Some(parent) = a.output.parent().filter(|p| !p.as_os_str().is_empty()) {
        output_dir(parent)?;
    }
    d.save_jsonl(&a.output)?;
    println!("wrote {} issues to {}", d.len(), a.output.display());
    Ok(())
}
