//! Contributor roles derived from resolution history.
//!
//! A contributor is a *newcomer* (at threshold `t`) while resolving their
//! first `t` issues. A contributor is *monthly active* in a UTC calendar month
//! when their resolution count that month reaches the median count of that
//! month's resolvers, and an *active developer* once they have been monthly
//! active for six consecutive months.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use chrono::{DateTime, Datelike, Utc};
use serde::{Deserialize, Serialize};

use crate::corpus::{median, Dataset};
use crate::{Error, Label, Result};

/// Consecutive monthly-active months needed to count as an active developer.
pub const ACTIVE_STREAK_MONTHS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NewcomerThreshold(u32);

impl NewcomerThreshold {
    /// The thresholds evaluated by default.
    pub const DEFAULTS: [u32; 3] = [1, 5, 10];

    pub fn new(t: u32) -> Result<Self> {
        if t == 0 {
            return Err(Error::InvalidInput("newcomer threshold must be positive".into()));
        }
        Ok(NewcomerThreshold(t))
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

/// UTC calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Month {
    pub year: i32,
    pub month: u32,
}

impl Month {
    pub fn of(t: &DateTime<Utc>) -> Month {
        Month {
            year: t.year(),
            month: t.month(),
        }
    }

    /// Months since year 0; consecutive months differ by exactly one.
    pub fn ordinal(self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }
}

impl std::fmt::Display for Month {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContributorHistory {
    pub contributor_id: String,
    /// `(issue id, resolved_at)` ascending by `(resolved_at, id)`.
    pub resolved_issues: Vec<(String, DateTime<Utc>)>,
    pub monthly_counts: BTreeMap<Month, u32>,
    pub total: usize,
}

/// Resolution histories keyed by contributor id.
pub type Histories = BTreeMap<String, ContributorHistory>;

pub fn build_histories(d: &Dataset) -> Histories {
    let mut out: Histories = BTreeMap::new();
    // Dataset order is already (resolved_at, id).
    for issue in d.resolved() {
        let (Some(who), Some(at)) = (issue.resolver_id.as_ref(), issue.resolved_at) else {
            continue;
        };
        let h = out
            .entry(who.clone())
            .or_insert_with(|| ContributorHistory {
                contributor_id: who.clone(),
                resolved_issues: Vec::new(),
                monthly_counts: BTreeMap::new(),
                total: 0,
            });
        h.resolved_issues.push((issue.id.clone(), at));
        *h.monthly_counts.entry(Month::of(&at)).or_insert(0) += 1;
        h.total += 1;
    }
    out
}

/// Median per-contributor resolution count for each month, over the
/// contributors with at least one resolution in that month.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MonthlyMedians(pub BTreeMap<Month, f64>);

impl MonthlyMedians {
    pub fn get(&self, m: Month) -> Option<f64> {
        self.0.get(&m).copied()
    }
}

pub fn monthly_medians(histories: &Histories) -> MonthlyMedians {
    let mut counts: BTreeMap<Month, Vec<f64>> = BTreeMap::new();
    for h in histories.values() {
        for (&m, &c) in &h.monthly_counts {
            counts.entry(m).or_default().push(c as f64);
        }
    }
    MonthlyMedians(
        counts
            .into_iter()
            .filter_map(|(m, cs)| median(&cs).map(|med| (m, med)))
            .collect(),
    )
}

/// Months in which `h` resolved at least the month's median count.
pub fn monthly_active(h: &ContributorHistory, medians: &MonthlyMedians) -> BTreeSet<Month> {
    h.monthly_counts
        .iter()
        .filter(|&(&m, &c)| medians.get(m).is_some_and(|med| c as f64 >= med))
        .map(|(&m, _)| m)
        .collect()
}

/// True when `months` contains a run of `ACTIVE_STREAK_MONTHS` consecutive months.
pub fn has_streak(months: &BTreeSet<Month>) -> bool {
    let mut run = 0usize;
    let mut prev: Option<i64> = None;
    for m in months {
        let o = m.ordinal();
        run = if prev == Some(o - 1) { run + 1 } else { 1 };
        if run >= ACTIVE_STREAK_MONTHS {
            return true;
        }
        prev = Some(o);
    }
    false
}

pub fn active_developers(histories: &Histories, medians: &MonthlyMedians) -> BTreeSet<String> {
    histories
        .values()
        .filter(|h| has_streak(&monthly_active(h, medians)))
        .map(|h| h.contributor_id.clone())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "threshold")]
pub enum Question {
    /// Resolved by a newcomer (first `t` issues) vs. by anyone else.
    Rq1(NewcomerThreshold),
    /// Among first-resolved issues: resolver later became an active developer
    /// vs. did not.
    Rq2,
}

impl Question {
    pub fn threshold(self) -> Option<u32> {
        match self {
            Question::Rq1(t) => Some(t.get()),
            Question::Rq2 => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Question::Rq1(_) => "rq1",
            Question::Rq2 => "rq2",
        }
    }
}

impl std::fmt::Display for Question {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Question::Rq1(t) => write!(f, "rq1(t={})", t.get()),
            Question::Rq2 => f.write_str("rq2"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleLabeling {
    pub question: Question,
    /// Issue id to label. Only resolved issues appear.
    pub labels: BTreeMap<String, Label>,
    pub active_developers: BTreeSet<String>,
}

impl RoleLabeling {
    pub fn count(&self, label: Label) -> usize {
        self.labels.values().filter(|&&l| l == label).count()
    }

    pub fn positives(&self) -> BTreeSet<&str> {
        self.labels
            .iter()
            .filter(|(_, l)| l.is_positive())
            .map(|(id, _)| id.as_str())
            .collect()
    }

    /// CSV with header `issue_id,question,label`, rows ascending by id.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["issue_id", "question", "label"])?;
        let question = self.question.to_string();
        for (id, label) in &self.labels {
            w.write_record([id.as_str(), question.as_str(), label.as_str()])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

fn developers(histories: &Histories) -> BTreeSet<String> {
    active_developers(histories, &monthly_medians(histories))
}

pub fn label_rq1(d: &Dataset, t: NewcomerThreshold) -> RoleLabeling {
    let histories = build_histories(d);
    let mut labels = BTreeMap::new();
    for h in histories.values() {
        for (k, (id, _)) in h.resolved_issues.iter().enumerate() {
            let label = if k < t.get() as usize {
                Label::Positive
            } else {
                Label::Negative
            };
            labels.insert(id.clone(), label);
        }
    }
    RoleLabeling {
        question: Question::Rq1(t),
        labels,
        active_developers: developers(&histories),
    }
}

pub fn label_rq2(d: &Dataset) -> RoleLabeling {
    let histories = build_histories(d);
    let active = developers(&histories);
    let labels = histories
        .values()
        .filter_map(|h| {
            let (first, _) = h.resolved_issues.first()?;
            let label = if active.contains(&h.contributor_id) {
                Label::Positive
            } else {
                Label::Negative
            };
            Some((first.clone(), label))
        })
        .collect();
    RoleLabeling {
        question: Question::Rq2,
        labels,
        active_developers: active,
    }
}

pub fn label(d: &Dataset, question: Question) -> RoleLabeling {
    match question {
        Question::Rq1(t) => label_rq1(d, t),
        Question::Rq2 => label_rq2(d),
    }
}
