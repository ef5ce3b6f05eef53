//! Lowercasing, tokenization, stopword removal and rule-based lemmatization.

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const BUNDLED_STOPWORDS: &str = include_str!("../../resources/stopwords.txt");

/// Ordered tokens of one document after preprocessing.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenizedDoc {
    pub tokens: Vec<String>,
}

impl TokenizedDoc {
    pub fn join(&self) -> String {
        self.tokens.join(" ")
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stopwords(HashSet<String>);

impl Stopwords {
    pub fn bundled() -> &'static Stopwords {
        static LIST: OnceLock<Stopwords> = OnceLock::new();
        LIST.get_or_init(|| Stopwords::parse(BUNDLED_STOPWORDS))
    }

    /// One word per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Stopwords {
        Stopwords(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_lowercase)
                .collect(),
        )
    }

    pub fn load(path: &Path) -> Result<Stopwords> {
        std::fs::read_to_string(path)
            .map(|t| Stopwords::parse(&t))
            .map_err(|e| Error::io(path, e))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Splits lowercased text on every non-alphanumeric character.
pub fn tokenize(text: &str) -> impl Iterator<Item = &str> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
}

#[derive(Debug, Clone)]
pub struct Preprocessor {
    stopwords: Stopwords,
}

impl Default for Preprocessor {
    fn default() -> Self {
        Preprocessor::new(Stopwords::bundled().clone())
    }
}

impl Preprocessor {
    pub fn new(stopwords: Stopwords) -> Self {
        Preprocessor { stopwords }
    }

    pub fn stopwords(&self) -> &Stopwords {
        &self.stopwords
    }

    pub fn preprocess(&self, text: &str) -> TokenizedDoc {
        let lower = text.to_lowercase();
        let tokens = tokenize(&lower)
            .filter(|t| !self.stopwords.contains(t))
            .map(lemmatize)
            .filter(|t| !self.stopwords.contains(t))
            .collect();
        TokenizedDoc { tokens }
    }
}

/// Preprocesses with the bundled stopword list.
pub fn preprocess(text: &str) -> TokenizedDoc {
    static DEFAULT: OnceLock<Preprocessor> = OnceLock::new();
    DEFAULT.get_or_init(Preprocessor::default).preprocess(text)
}

fn irregular_forms() -> &'static HashMap<&'static str, &'static str> {
    static TABLE: OnceLock<HashMap<&'static str, &'static str>> = OnceLock::new();
    TABLE.get_or_init(|| {
        [
            ("children", "child"),
            ("men", "man"),
            ("women", "woman"),
            ("people", "person"),
            ("mice", "mouse"),
            ("feet", "foot"),
            ("teeth", "tooth"),
            ("geese", "goose"),
            ("indices", "index"),
            ("matrices", "matrix"),
            ("vertices", "vertex"),
            ("analyses", "analysis"),
            ("went", "go"),
            ("gone", "go"),
            ("ran", "run"),
            ("wrote", "write"),
            ("written", "write"),
            ("broke", "break"),
            ("took", "take"),
            ("taken", "take"),
            ("made", "make"),
            ("gave", "give"),
            ("given", "give"),
            ("found", "find"),
            ("got", "get"),
            ("gotten", "get"),
            ("began", "begin"),
            ("begun", "begin"),
            ("came", "come"),
            ("saw", "see"),
            ("seen", "see"),
            ("knew", "know"),
            ("known", "know"),
            ("thought", "think"),
            ("brought", "bring"),
            ("bought", "buy"),
            ("caught", "catch"),
            ("built", "build"),
            ("sent", "send"),
            ("spent", "spend"),
            ("kept", "keep"),
            ("held", "hold"),
            ("told", "tell"),
            ("said", "say"),
            ("paid", "pay"),
            ("stood", "stand"),
            ("understood", "understand"),
            ("chose", "choose"),
            ("chosen", "choose"),
            ("fell", "fall"),
            ("fallen", "fall"),
            ("froze", "freeze"),
            ("frozen", "freeze"),
            ("hid", "hide"),
            ("hidden", "hide"),
            ("threw", "throw"),
            ("thrown", "throw"),
            ("drew", "draw"),
            ("drawn", "draw"),
            ("drove", "drive"),
            ("driven", "drive"),
            ("grew", "grow"),
            ("grown", "grow"),
            ("forgot", "forget"),
            ("forgotten", "forget"),
            ("shown", "show"),
            ("lying", "lie"),
            ("dying", "die"),
        ]
        .into_iter()
        .collect()
    })
}

/// Words the suffix rules would mangle.
const PROTECTED: &[&str] = &[
    "always", "anything", "bring", "ceiling", "embed", "everything", "evening", "king",
    "morning", "news", "nothing", "perhaps", "ping", "ring", "series", "something",
    "species", "speed", "spring", "string", "thing", "various", "wing",
];

fn has_vowel(s: &str) -> bool {
    s.chars().any(|c| "aeiouy".contains(c))
}

fn undouble(stem: &str) -> &str {
    let b = stem.as_bytes();
    let n = b.len();
    if n >= 2 && b[n - 1] == b[n - 2] && b[n - 1].is_ascii_alphabetic() && !b"aeioulsz".contains(&b[n - 1]) {
        &stem[..n - 1]
    } else {
        stem
    }
}

fn strip_once(w: &str) -> Option<String> {
    if let Some(&lemma) = irregular_forms().get(w) {
        return (lemma != w).then(|| lemma.to_string());
    }
    if PROTECTED.contains(&w) || w.chars().count() <= 3 {
        return None;
    }
    let stem_ok = |stem: &str| stem.chars().count() >= 3 && has_vowel(stem);

    if let Some(stem) = w.strip_suffix("ies") {
        return (stem.len() >= 2).then(|| format!("{stem}y"));
    }
    if let Some(stem) = w.strip_suffix("sses") {
        return Some(format!("{stem}ss"));
    }
    for suffix in ["xes", "ches", "shes", "zzes"] {
        if w.ends_with(suffix) {
            return Some(w[..w.len() - 2].to_string());
        }
    }
    if w.ends_with('s') && !(w.ends_with("ss") || w.ends_with("us") || w.ends_with("is")) {
        return Some(w[..w.len() - 1].to_string());
    }
    if let Some(stem) = w.strip_suffix("ing") {
        return stem_ok(stem).then(|| undouble(stem).to_string());
    }
    if let Some(stem) = w.strip_suffix("ied") {
        return (stem.len() >= 2).then(|| format!("{stem}y"));
    }
    if let Some(stem) = w.strip_suffix("ed") {
        return stem_ok(stem).then(|| undouble(stem).to_string());
    }
    if let Some(stem) = w.strip_suffix("er") {
        // comparatives with a doubled consonant only: bigger, hotter
        let single = undouble(stem);
        return (single.len() < stem.len() && single.chars().count() >= 2).then(|| single.to_string());
    }
    None
}

/// Reduces a lowercase token to its lemma. The result is a fixed point:
/// `lemmatize(lemmatize(w)) == lemmatize(w)`.
pub fn lemmatize(word: &str) -> String {
    let mut current = word.to_string();
    // each rule shortens the word, so this terminates quickly
    for _ in 0..16 {
        match strip_once(&current) {
            Some(next) if next != current && !next.is_empty() => current = next,
            _ => break,
        }
    }
    current
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn example_sentence() {
        assert_eq!(preprocess("The Buttons were broken").tokens, ["button", "broken"]);
    }

    #[test]
    fn empty_input() {
        assert!(preprocess("").is_empty());
        assert!(preprocess("  ,;  ").is_empty());
    }

    #[test]
    fn bundled_list_size() {
        let n = Stopwords::bundled().len();
        assert!((120..=140).contains(&n), "{n}");
    }

    #[test]
    fn lemma_rules() {
        for (w, l) in [
            ("buttons", "button"),
            ("classes", "class"),
            ("boxes", "box"),
            ("queries", "query"),
            ("running", "run"),
            ("stopped", "stop"),
            ("failed", "fail"),
            ("applied", "apply"),
            ("bigger", "big"),
            ("children", "child"),
            ("status", "status"),
            ("string", "string"),
            ("user", "user"),
            ("need", "need"),
            ("bus", "bus"),
            ("x86", "x86"),
        ] {
            assert_eq!(lemmatize(w), l, "{w}");
        }
    }

    #[test]
    fn digits_are_kept_and_split_on_punctuation() {
        assert_eq!(
            preprocess("NullPointerException at Foo.java:42").tokens,
            ["nullpointerexception", "foo", "java", "42"]
        );
    }

    proptest! {
        #[test]
        fn lemmatize_is_idempotent(w in "[a-z]{1,12}") {
            let once = lemmatize(&w);
            prop_assert!(!once.is_empty());
            prop_assert_eq!(lemmatize(&once), once);
        }

        #[test]
        fn preprocess_is_idempotent(text in "[A-Za-z0-9 ,.!?'-]{0,80}") {
            let first = preprocess(&text);
            prop_assert_eq!(preprocess(&first.join()), first.clone());
            for t in &first.tokens {
                prop_assert!(!t.is_empty());
                prop_assert!(!Stopwords::bundled().contains(t));
            }
        }
    }
}
