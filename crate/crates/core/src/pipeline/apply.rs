//! Training a deployable model and tagging unresolved issues with it.

use std::cmp::Ordering;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::split::balance;
use crate::classifiers::{fit_rows, Hyperparameters, ModelSpec, Prediction, TrainedModel};
use crate::corpus::{Dataset, Issue};
use crate::nlp::{assemble_features, FeatureExtractor, Vocabulary};
use crate::roles::{label, Question};
use crate::{seed, Error, Result};

/// Fits one grid cell on every labeled issue of `d` after balancing, with a
/// vocabulary built from the same issues.
pub fn train_model(
    d: &Dataset,
    question: Question,
    hyperparameters: Hyperparameters,
    seed_value: u64,
) -> Result<(TrainedModel, Vocabulary)> {
    hyperparameters.validate()?;
    let labeling = label(d, question);
    let ids: Vec<String> = labeling.labels.keys().cloned().collect();
    let sample = balance(&ids, &labeling, seed::derive(seed_value, &[0]))?;
    let by_id = d.by_id();
    let unique: Vec<&Issue> = sample.unique_ids().into_iter().map(|id| by_id[id]).collect();
    let extractor = FeatureExtractor::default();
    let prepared = extractor.prepare_all(&unique);
    let vocab = Vocabulary::build(prepared.iter().map(|p| &p.doc))?;
    let features = assemble_features(&unique, &vocab, &extractor)?;
    let row_of: std::collections::HashMap<&str, usize> =
        unique.iter().enumerate().map(|(i, issue)| (issue.id.as_str(), i)).collect();
    let rows: Vec<usize> = sample.ids.iter().map(|id| row_of[id.as_str()]).collect();
    let spec = ModelSpec::new(hyperparameters, seed::derive(seed_value, &[1]));
    let mut model = fit_rows(&spec, &features.matrix, &rows, &sample.labels)?.with_vocabulary(&vocab);
    model.metadata.question = Some(question.name().to_string());
    model.metadata.threshold = question.threshold();
    model.metadata.data_cutoff = unique.iter().filter_map(|i| i.resolved_at).max();
    Ok((model, vocab))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tag {
    pub issue_id: String,
    pub score: f64,
    pub label: crate::Label,
}

/// Scores `issues` and sorts them by descending score, ties by ascending
/// id. The positive prefix is the recommendation list.
pub fn tag_issues(model: &TrainedModel, vocab: &Vocabulary, issues: &[&Issue]) -> Result<Vec<Tag>> {
    model.check_vocabulary(vocab)?;
    if issues.is_empty() {
        return Ok(Vec::new());
    }
    let features = assemble_features(issues, vocab, &FeatureExtractor::default())?;
    let predictions = model.predict(&features.matrix)?;
    let mut tags: Vec<Tag> = issues
        .iter()
        .zip(predictions)
        .map(|(issue, Prediction { label, score })| Tag {
            issue_id: issue.id.clone(),
            score,
            label,
        })
        .collect();
    tags.sort_by(rank_order);
    Ok(tags)
}

fn rank_order(a: &Tag, b: &Tag) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.issue_id.cmp(&b.issue_id))
}

/// CSV with header `issue_id,score,label`.
pub fn write_tags_csv<W: Write>(tags: &[Tag], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["issue_id", "score", "label"])?;
    for t in tags {
        w.write_record([t.issue_id.as_str(), &t.score.to_string(), t.label.as_str()])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Label;

    fn tag(id: &str, score: f64) -> Tag {
        Tag {
            issue_id: id.into(),
            score,
            label: Label::Negative,
        }
    }

    #[test]
    fn ranking_breaks_ties_by_id() {
        let mut tags = [tag("b", 0.5), tag("c", 0.9), tag("a", 0.5), tag("d", 0.1)];
        tags.sort_by(rank_order);
        let ids: Vec<&str> = tags.iter().map(|t| t.issue_id.as_str()).collect();
        assert_eq!(ids, ["c", "a", "b", "d"]);
    }

    #[test]
    fn empty_csv_has_header() {
        let mut buf = Vec::new();
        write_tags_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "issue_id,score,label\n");
    }
}
