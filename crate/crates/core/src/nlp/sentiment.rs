//! Dual-polarity lexicon sentiment.
//!
//! Each text receives a positive strength in `[1, 5]` and a negative strength
//! in `[-5, -1]`. The positive score is the strongest positive lexicon hit
//! (1 when there is none) and the negative score the strongest negative hit
//! (-1 when there is none). Booster words and negation are not modelled.

use std::collections::HashMap;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::preprocess::tokenize;
use crate::{Error, Result};

const BUNDLED_LEXICON: &str = include_str!("../../resources/lexicon.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentimentScore {
    pub positive: i8,
    pub negative: i8,
}

impl SentimentScore {
    pub const NEUTRAL: SentimentScore = SentimentScore {
        positive: 1,
        negative: -1,
    };
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon(HashMap<String, i8>);

impl Lexicon {
    pub fn bundled() -> &'static Lexicon {
        static LEXICON: OnceLock<Lexicon> = OnceLock::new();
        LEXICON.get_or_init(|| Lexicon::parse(BUNDLED_LEXICON).expect("bundled lexicon is valid"))
    }

    /// `term<TAB>strength` per line, strengths in `±2..=±5`. Blank lines and
    /// `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Lexicon> {
        let mut map = HashMap::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |message: &str| Error::Schema {
                line: k + 1,
                field: "strength".into(),
                message: message.into(),
            };
            let (term, strength) = line.split_once('\t').ok_or_else(|| bad("expected term<TAB>strength"))?;
            let strength: i8 = strength.trim().parse().map_err(|_| bad("not an integer"))?;
            if !(2..=5).contains(&strength.unsigned_abs()) {
                return Err(bad("strength must be within ±2..=±5"));
            }
            map.insert(term.trim().to_lowercase(), strength);
        }
        Ok(Lexicon(map))
    }

    pub fn load(path: &Path) -> Result<Lexicon> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Lexicon::parse(&text)
    }

    pub fn strength(&self, word: &str) -> Option<i8> {
        self.0.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Scores raw text, matching lowercase whole words.
    pub fn score(&self, text: &str) -> SentimentScore {
        let lower = text.to_lowercase();
        tokenize(&lower)
            .filter_map(|w| self.strength(w))
            .fold(SentimentScore::NEUTRAL, |acc, s| SentimentScore {
                positive: acc.positive.max(s),
                negative: acc.negative.min(s),
            })
    }
}

/// Scores with the bundled lexicon.
pub fn sentiment(text: &str) -> SentimentScore {
    Lexicon::bundled().score(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn neutral_text() {
        assert_eq!(sentiment("this is fine"), SentimentScore::NEUTRAL);
        assert_eq!(sentiment(""), SentimentScore::NEUTRAL);
    }

    #[test]
    fn max_and_min_rule() {
        let lex = Lexicon::parse("gloomy\t-4\nsunny\t3\nmild\t2\n").unwrap();
        assert_eq!(
            lex.score("Sunny but GLOOMY and mild"),
            SentimentScore {
                positive: 3,
                negative: -4
            }
        );
    }

    #[test]
    fn dual_polarity_sentence() {
        let s = sentiment("I loved this tool a lot until they turned it into worthless garbage of sofware");
        assert!(s.positive >= 2, "{s:?}");
        assert!(s.negative <= -2, "{s:?}");
    }

    #[test]
    fn out_of_range_strength_is_rejected() {
        assert!(Lexicon::parse("meh\t1\n").is_err());
        assert!(Lexicon::parse("doom\t-6\n").is_err());
        assert!(Lexicon::parse("no tab here\n").is_err());
    }

    proptest! {
        #[test]
        fn bounds_hold_for_any_text(text in "\\PC{0,200}") {
            let s = sentiment(&text);
            prop_assert!((1..=5).contains(&s.positive));
            prop_assert!((-5..=-1).contains(&s.negative));
        }
    }
}
