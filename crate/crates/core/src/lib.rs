//! Labels issue-tracker issues by who resolved them, extracts text features,
//! and benchmarks classifiers that predict which issues suit newcomers.
//!
//! The crate is organised bottom-up:
//!
//! * [`corpus`] ingests JSON Lines exports and characterises them.
//! * [`roles`] derives newcomer / active-developer roles and per-issue labels.
//! * [`nlp`] turns title and description text into TF-IDF, sentiment and
//!   word-count features.
//! * [`classifiers`] holds the four from-scratch binary classifiers.
//! * [`pipeline`] runs the split / balance / grid-search / evaluate loop and
//!   writes benchmark reports.
//! * [`synthetic`] generates planted-signal corpora and event logs for tests
//!   and demos.

pub mod classifiers;
pub mod corpus;
mod error;
pub mod matrix;
pub mod nlp;
pub mod pipeline;
pub mod roles;
pub mod seed;
pub mod synthetic;

pub use error::{Error, Result};

use serde::{Deserialize, Serialize};

/// Binary class of an issue. `Positive` is the class of interest
/// (resolved by a newcomer for RQ1, retained newcomer for RQ2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn is_positive(self) -> bool {
        matches!(self, Label::Positive)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Positive => "positive",
            Label::Negative => "negative",
        }
    }

    /// +1.0 for positive, -1.0 for negative.
    pub fn sign(self) -> f64 {
        if self.is_positive() {
            1.0
        } else {
            -1.0
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}
