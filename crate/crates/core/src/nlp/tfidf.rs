//! Vocabulary and TF-IDF weighting.
//!
//! Weights use raw term counts and smoothed inverse document frequency,
//! `idf(t) = ln((1 + N) / (1 + df(t))) + 1`, followed by L2 normalisation of
//! the row.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::TokenizedDoc;
use crate::{Error, Result};

/// Term to column index, with document frequencies over the corpus it was
/// built from. Indices follow lexicographic term order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    document_frequency: Vec<u32>,
    corpus_size: usize,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn build<'a, I>(docs: I) -> Result<Vocabulary>
    where
        I: IntoIterator<Item = &'a TokenizedDoc>,
    {
        Vocabulary::build_with_min_df(docs, 1)
    }

    /// Terms appearing in fewer than `min_df` documents are dropped.
    pub fn build_with_min_df<'a, I>(docs: I, min_df: u32) -> Result<Vocabulary>
    where
        I: IntoIterator<Item = &'a TokenizedDoc>,
    {
        let mut df: BTreeMap<&str, u32> = BTreeMap::new();
        let mut n = 0usize;
        for doc in docs {
            n += 1;
            let distinct: HashSet<&str> = doc.tokens.iter().map(String::as_str).collect();
            for t in distinct {
                *df.entry(t).or_insert(0) += 1;
            }
        }
        if n == 0 {
            return Err(Error::EmptyCorpus);
        }
        let (terms, document_frequency): (Vec<String>, Vec<u32>) = df
            .into_iter()
            .filter(|&(_, c)| c >= min_df.max(1))
            .map(|(t, c)| (t.to_string(), c))
            .unzip();
        Ok(Vocabulary::from_parts(terms, document_frequency, n))
    }

    fn from_parts(terms: Vec<String>, document_frequency: Vec<u32>, corpus_size: usize) -> Self {
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary {
            terms,
            document_frequency,
            corpus_size,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn corpus_size(&self) -> usize {
        self.corpus_size
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn df(&self, term: &str) -> Option<u32> {
        self.index_of(term).map(|i| self.document_frequency[i])
    }

    pub fn idf_at(&self, i: usize) -> f64 {
        idf(self.corpus_size, self.document_frequency[i] as usize)
    }

    /// Sparse, L2-normalised TF-IDF vector; out-of-vocabulary tokens are
    /// ignored. Entries are sorted by column.
    pub fn transform(&self, doc: &TokenizedDoc) -> Vec<(usize, f64)> {
        let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
        for t in &doc.tokens {
            if let Some(i) = self.index_of(t) {
                *counts.entry(i).or_insert(0) += 1;
            }
        }
        let mut row: Vec<(usize, f64)> = counts
            .into_iter()
            .map(|(i, tf)| (i, tf as f64 * self.idf_at(i)))
            .collect();
        let norm = row.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, w) in &mut row {
                *w /= norm;
            }
        }
        row
    }

    /// SHA-256 over terms, document frequencies and corpus size.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.corpus_size.to_le_bytes());
        for (t, df) in self.terms.iter().zip(&self.document_frequency) {
            h.update(t.as_bytes());
            h.update([0u8]);
            h.update(df.to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&VocabularyFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Vocabulary> {
        let file: VocabularyFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Vocabulary> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Vocabulary::from_json(&text)
    }
}

pub fn idf(corpus_size: usize, df: usize) -> f64 {
    ((1.0 + corpus_size as f64) / (1.0 + df as f64)).ln() + 1.0
}

/// On-disk layout: `{"corpus_size": N, "terms": {term: {"index": i, "df": d}}}`.
#[derive(Serialize, Deserialize)]
struct VocabularyFile {
    corpus_size: usize,
    terms: BTreeMap<String, TermEntry>,
}

#[derive(Serialize, Deserialize)]
struct TermEntry {
    index: usize,
    df: u32,
}

impl From<&Vocabulary> for VocabularyFile {
    fn from(v: &Vocabulary) -> Self {
        VocabularyFile {
            corpus_size: v.corpus_size,
            terms: v
                .terms
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    (
                        t.clone(),
                        TermEntry {
                            index: i,
                            df: v.document_frequency[i],
                        },
                    )
                })
                .collect(),
        }
    }
}

impl TryFrom<VocabularyFile> for Vocabulary {
    type Error = Error;

    fn try_from(file: VocabularyFile) -> Result<Vocabulary> {
        let n = file.terms.len();
        let mut terms = vec![None; n];
        let mut dfs = vec![0; n];
        for (t, e) in file.terms {
            if e.index >= n || terms[e.index].is_some() {
                return Err(Error::InvalidInput(format!("vocabulary index {} out of place", e.index)));
            }
            if e.df == 0 || e.df as usize > file.corpus_size {
                return Err(Error::InvalidInput(format!("document frequency of `{t}` out of range")));
            }
            terms[e.index] = Some(t);
            dfs[e.index] = e.df;
        }
        let terms: Vec<String> = terms.into_iter().map(Option::unwrap).collect();
        if terms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("vocabulary terms are not in sorted order".into()));
        }
        Ok(Vocabulary::from_parts(terms, dfs, file.corpus_size))
    }
}
