//! Text features of an issue: TF-IDF over the preprocessed title and
//! description, plus three unscaled columns computed on the raw description
//! (positive sentiment, negative sentiment, word count).

mod preprocess;
mod sentiment;
mod tfidf;

use std::collections::HashSet;

pub use preprocess::{lemmatize, preprocess, tokenize, Preprocessor, Stopwords, TokenizedDoc};
pub use sentiment::{sentiment, Lexicon, SentimentScore};
pub use tfidf::{idf, Vocabulary};

use crate::corpus::{word_count, Issue};
use crate::matrix::CsrMatrix;
use crate::{Error, Result};

/// Number of dense columns appended after the TF-IDF block.
pub const APPENDED_COLUMNS: usize = 3;

/// Everything about one issue that does not depend on the vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedDoc {
    pub id: String,
    pub doc: TokenizedDoc,
    pub sentiment: SentimentScore,
    pub word_count: usize,
}

#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    preprocessor: Preprocessor,
    lexicon: Lexicon,
}

impl Default for FeatureExtractor {
    fn default() -> Self {
        FeatureExtractor::new(Preprocessor::default(), Lexicon::bundled().clone())
    }
}

impl FeatureExtractor {
    pub fn new(preprocessor: Preprocessor, lexicon: Lexicon) -> Self {
        FeatureExtractor {
            preprocessor,
            lexicon,
        }
    }

    pub fn prepare(&self, issue: &Issue) -> PreparedDoc {
        PreparedDoc {
            id: issue.id.clone(),
            doc: self.preprocessor.preprocess(&issue.text()),
            sentiment: self.lexicon.score(&issue.description),
            word_count: word_count(&issue.description),
        }
    }

    pub fn prepare_all(&self, issues: &[&Issue]) -> Vec<PreparedDoc> {
        use rayon::prelude::*;
        issues.par_iter().map(|i| self.prepare(i)).collect()
    }
}

/// Rows of TF-IDF weights followed by `[positive, negative, word_count]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub ids: Vec<String>,
    pub matrix: CsrMatrix,
    pub vocab_size: usize,
    pub vocabulary_hash: String,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn n_cols(&self) -> usize {
        self.matrix.n_cols()
    }

    pub fn positive_column(&self) -> usize {
        self.vocab_size
    }

    pub fn negative_column(&self) -> usize {
        self.vocab_size + 1
    }

    pub fn word_count_column(&self) -> usize {
        self.vocab_size + 2
    }
}

/// Builds the feature rows for already-prepared documents. The vocabulary is
/// only read.
pub fn assemble_prepared(docs: &[&PreparedDoc], vocab: &Vocabulary) -> Result<FeatureMatrix> {
    let mut seen = HashSet::with_capacity(docs.len());
    let v = vocab.len();
    let mut matrix = CsrMatrix::new(v + APPENDED_COLUMNS);
    for d in docs {
        if !seen.insert(d.id.as_str()) {
            return Err(Error::InvalidInput(format!("duplicate issue id `{}`", d.id)));
        }
        let appended = [
            (v, d.sentiment.positive as f64),
            (v + 1, d.sentiment.negative as f64),
            (v + 2, d.word_count as f64),
        ];
        matrix.push_row(vocab.transform(&d.doc).into_iter().chain(appended))?;
    }
    Ok(FeatureMatrix {
        ids: docs.iter().map(|d| d.id.clone()).collect(),
        matrix,
        vocab_size: v,
        vocabulary_hash: vocab.hash(),
    })
}

pub fn assemble_features(
    issues: &[&Issue],
    vocab: &Vocabulary,
    extractor: &FeatureExtractor,
) -> Result<FeatureMatrix> {
    let prepared = extractor.prepare_all(issues);
    let refs: Vec<&PreparedDoc> = prepared.iter().collect();
    assemble_prepared(&refs, vocab)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};

    fn issue(id: &str, title: &str, description: &str) -> Issue {
        Issue {
            id: id.into(),
            project: "p".into(),
            title: title.into(),
            description: description.into(),
            resolver_id: None,
            created_at: Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap(),
            resolved_at: None,
        }
    }

    #[test]
    fn empty_description_gives_neutral_appended_columns() {
        let ex = FeatureExtractor::default();
        let a = issue("a", "crash on save", "");
        let vocab = Vocabulary::build([&ex.prepare(&a).doc]).unwrap();
        let fm = assemble_features(&[&a], &vocab, &ex).unwrap();
        assert_eq!(fm.n_rows(), 1);
        assert_eq!(fm.matrix.get(0, fm.positive_column()), 1.0);
        assert_eq!(fm.matrix.get(0, fm.negative_column()), -1.0);
        assert_eq!(fm.matrix.get(0, fm.word_count_column()), 0.0);
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let ex = FeatureExtractor::default();
        let a = issue("a", "x", "y");
        let vocab = Vocabulary::build([&ex.prepare(&a).doc]).unwrap();
        assert!(assemble_features(&[&a, &a], &vocab, &ex).is_err());
    }

    #[test]
    fn sentiment_reads_description_only() {
        let ex = FeatureExtractor::default();
        let a = issue("a", "terrible title", "plain words here");
        let p = ex.prepare(&a);
        assert_eq!(p.sentiment, SentimentScore::NEUTRAL);
        assert_eq!(p.word_count, 3);
        assert!(p.doc.tokens.contains(&"terrible".to_string()));
    }

    #[test]
    fn transform_does_not_touch_vocabulary() {
        let ex = FeatureExtractor::default();
        let train = issue("a", "alpha beta", "");
        let test = issue("b", "gamma delta", "");
        let vocab = Vocabulary::build([&ex.prepare(&train).doc]).unwrap();
        let before = vocab.clone();
        let fm = assemble_features(&[&test], &vocab, &ex).unwrap();
        assert_eq!(vocab, before);
        assert_eq!(fm.vocabulary_hash, before.hash());
        assert_eq!(fm.n_cols(), 2 + APPENDED_COLUMNS);
    }
}
