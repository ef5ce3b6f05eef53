//! Issue-tracker exports: loading, validation, ordering and descriptive
//! statistics (dataset size, text lengths, issue resolution frequency).

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::{Error, Result};

const SECONDS_PER_DAY: f64 = 86_400.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub id: String,
    pub project: String,
    pub title: String,
    pub description: String,
    pub resolver_id: Option<String>,
    pub created_at: DateTime<Utc>,
    pub resolved_at: Option<DateTime<Utc>>,
}

impl Issue {
    pub fn is_resolved(&self) -> bool {
        self.resolved_at.is_some()
    }

    /// Title and description joined by a single space.
    pub fn text(&self) -> String {
        format!("{} {}", self.title, self.description)
    }

    fn to_json(&self) -> Value {
        let ts = |t: &DateTime<Utc>| Value::String(t.to_rfc3339_opts(SecondsFormat::AutoSi, true));
        let mut m = Map::new();
        m.insert("id".into(), Value::String(self.id.clone()));
        m.insert("project".into(), Value::String(self.project.clone()));
        m.insert("title".into(), Value::String(self.title.clone()));
        m.insert("description".into(), Value::String(self.description.clone()));
        m.insert(
            "resolver_id".into(),
            self.resolver_id.clone().map_or(Value::Null, Value::String),
        );
        m.insert("created_at".into(), ts(&self.created_at));
        m.insert(
            "resolved_at".into(),
            self.resolved_at.as_ref().map_or(Value::Null, ts),
        );
        Value::Object(m)
    }
}

/// A validated, ordered set of issues from one project.
///
/// Resolved issues come first in ascending `(resolved_at, id)` order,
/// followed by unresolved issues in ascending `id` order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    project: String,
    issues: Vec<Issue>,
}

impl Dataset {
    pub fn new(project: impl Into<String>, mut issues: Vec<Issue>) -> Result<Self> {
        let project = project.into();
        let mut seen = HashSet::with_capacity(issues.len());
        for (k, issue) in issues.iter().enumerate() {
            check_issue(issue).map_err(|(field, message)| Error::Schema {
                line: k + 1,
                field: field.into(),
                message,
            })?;
            if !seen.insert(issue.id.as_str()) {
                return Err(Error::Schema {
                    line: k + 1,
                    field: "id".into(),
                    message: format!("duplicate id `{}`", issue.id),
                });
            }
        }
        issues.sort_by(|a, b| match (a.resolved_at, b.resolved_at) {
            (Some(x), Some(y)) => x.cmp(&y).then_with(|| a.id.cmp(&b.id)),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => a.id.cmp(&b.id),
        });
        Ok(Dataset { project, issues })
    }

    pub fn project(&self) -> &str {
        &self.project
    }

    pub fn issues(&self) -> &[Issue] {
        &self.issues
    }

    pub fn len(&self) -> usize {
        self.issues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn resolved(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.is_resolved())
    }

    pub fn unresolved(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| !i.is_resolved())
    }

    /// Distinct resolver ids.
    pub fn contributors(&self) -> BTreeSet<&str> {
        self.issues
            .iter()
            .filter_map(|i| i.resolver_id.as_deref())
            .collect()
    }

    /// Index from issue id to the issue.
    pub fn by_id(&self) -> BTreeMap<&str, &Issue> {
        self.issues.iter().map(|i| (i.id.as_str(), i)).collect()
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for issue in &self.issues {
            serde_json::to_writer(&mut out, &issue.to_json())?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save_jsonl(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        self.write_jsonl(&mut out)
            .and_then(|_| out.flush())
            .map_err(|e| Error::io(path, e))
    }
}

fn check_issue(issue: &Issue) -> std::result::Result<(), (&'static str, String)> {
    match (&issue.resolver_id, &issue.resolved_at) {
        (Some(_), None) => Err(("resolved_at", "resolver_id present without resolved_at".into())),
        (None, Some(_)) => Err(("resolver_id", "resolved_at present without resolver_id".into())),
        (_, Some(resolved)) if *resolved < issue.created_at => {
            Err(("resolved_at", "resolved_at precedes created_at".into()))
        }
        _ => Ok(()),
    }
}

/// Reads a JSON Lines export. Blank lines are skipped; unknown keys are
/// ignored.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_jsonl(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Dataset> {
    let mut issues = Vec::new();
    let mut project: Option<String> = None;
    let mut seen = HashSet::new();
    for (k, line) in reader.lines().enumerate() {
        let line_no = k + 1;
        let line = line.map_err(|e| Error::io("<input>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let issue = parse_record(&line).map_err(|(field, message)| Error::Schema {
            line: line_no,
            field,
            message,
        })?;
        let schema = |field: &str, message: String| Error::Schema {
            line: line_no,
            field: field.into(),
            message,
        };
        match &project {
            None => project = Some(issue.project.clone()),
            Some(p) if *p != issue.project => {
                return Err(schema(
                    "project",
                    format!("expected `{p}`, found `{}`", issue.project),
                ))
            }
            _ => {}
        }
        check_issue(&issue).map_err(|(f, m)| schema(f, m))?;
        if !seen.insert(issue.id.clone()) {
            return Err(schema("id", format!("duplicate id `{}`", issue.id)));
        }
        issues.push(issue);
    }
    Dataset::new(project.unwrap_or_default(), issues)
}

type FieldError = (String, String);

fn parse_record(line: &str) -> std::result::Result<Issue, FieldError> {
    let value: Value =
        serde_json::from_str(line).map_err(|e| ("<record>".to_string(), e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| ("<record>".to_string(), "expected a JSON object".to_string()))?;

    let required_str = |key: &str| -> std::result::Result<String, FieldError> {
        match obj.get(key) {
            Some(Value::String(s)) => Ok(s.clone()),
            Some(Value::Null) | None => Err((key.to_string(), "missing required field".into())),
            Some(_) => Err((key.to_string(), "expected a string".into())),
        }
    };
    let optional_str = |key: &str| -> std::result::Result<Option<String>, FieldError> {
        match obj.get(key) {
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(Value::Null) | None => Ok(None),
            Some(_) => Err((key.to_string(), "expected a string or null".into())),
        }
    };
    let timestamp = |key: &str, raw: &str| -> std::result::Result<DateTime<Utc>, FieldError> {
        DateTime::parse_from_rfc3339(raw)
            .map(|t| t.with_timezone(&Utc))
            .map_err(|e| (key.to_string(), format!("invalid RFC 3339 timestamp: {e}")))
    };

    let created_raw = required_str("created_at")?;
    let resolved_at = optional_str("resolved_at")?
        .map(|raw| timestamp("resolved_at", &raw))
        .transpose()?;
    Ok(Issue {
        id: required_str("id")?,
        project: required_str("project")?,
        title: required_str("title")?,
        description: optional_str("description")?.unwrap_or_default(),
        resolver_id: optional_str("resolver_id")?,
        created_at: timestamp("created_at", &created_raw)?,
        resolved_at,
    })
}

/// Number of maximal whitespace-separated tokens.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub project: String,
    pub issue_count: usize,
    pub resolved_count: usize,
    pub contributor_count: usize,
    pub period_start: Option<DateTime<Utc>>,
    pub period_end: Option<DateTime<Utc>>,
    pub avg_title_chars: f64,
    pub avg_title_words: f64,
    pub avg_desc_chars: f64,
    pub avg_desc_words: f64,
}

pub fn compute_stats(d: &Dataset) -> DatasetStats {
    let n = d.len();
    let avg = |f: &dyn Fn(&Issue) -> usize| {
        if n == 0 {
            0.0
        } else {
            d.issues.iter().map(|i| f(i) as f64).sum::<f64>() / n as f64
        }
    };
    DatasetStats {
        project: d.project.clone(),
        issue_count: n,
        resolved_count: d.resolved().count(),
        contributor_count: d.contributors().len(),
        period_start: d.issues.iter().map(|i| i.created_at).min(),
        period_end: d.issues.iter().filter_map(|i| i.resolved_at).max(),
        avg_title_chars: avg(&|i| i.title.chars().count()),
        avg_title_words: avg(&|i| word_count(&i.title)),
        avg_desc_chars: avg(&|i| i.description.chars().count()),
        avg_desc_words: avg(&|i| word_count(&i.description)),
    }
}

/// Issue resolution frequency of one contributor, in days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributorIrf {
    pub contributor_id: String,
    pub resolutions: usize,
    pub irf_avg: f64,
    pub irf_med: f64,
}

/// Mean, median and sample standard deviation of a per-contributor value.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
}

impl Aggregate {
    pub fn of(values: &[f64]) -> Aggregate {
        if values.is_empty() {
            return Aggregate::default();
        }
        let mean = mean(values);
        let sd = if values.len() < 2 {
            0.0
        } else {
            let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            (ss / (values.len() - 1) as f64).sqrt()
        };
        Aggregate {
            mean,
            median: median(values).unwrap_or(0.0),
            sd,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrfStats {
    /// Contributors with at least two resolutions, ascending by id.
    pub contributors: Vec<ContributorIrf>,
    pub irf_avg: Aggregate,
    pub irf_med: Aggregate,
}

impl IrfStats {
    /// One row per contributor: `contributor_id,resolutions,irf_avg_days,irf_med_days`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["contributor_id", "resolutions", "irf_avg_days", "irf_med_days"])?;
        for c in &self.contributors {
            w.write_record([
                c.contributor_id.clone(),
                c.resolutions.to_string(),
                format!("{:.6}", c.irf_avg),
                format!("{:.6}", c.irf_med),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

pub fn compute_irf(d: &Dataset) -> IrfStats {
    let mut times: BTreeMap<&str, Vec<DateTime<Utc>>> = BTreeMap::new();
    for issue in d.resolved() {
        if let (Some(who), Some(at)) = (issue.resolver_id.as_deref(), issue.resolved_at) {
            times.entry(who).or_default().push(at);
        }
    }
    let contributors: Vec<ContributorIrf> = times
        .into_iter()
        .filter(|(_, ts)| ts.len() >= 2)
        .map(|(who, mut ts)| {
            ts.sort();
            let gaps: Vec<f64> = ts
                .windows(2)
                .map(|w| (w[1] - w[0]).num_milliseconds() as f64 / 1000.0 / SECONDS_PER_DAY)
                .collect();
            ContributorIrf {
                contributor_id: who.to_string(),
                resolutions: ts.len(),
                irf_avg: mean(&gaps),
                irf_med: median(&gaps).unwrap_or(0.0),
            }
        })
        .collect();
    let avgs: Vec<f64> = contributors.iter().map(|c| c.irf_avg).collect();
    let meds: Vec<f64> = contributors.iter().map(|c| c.irf_med).collect();
    IrfStats {
        irf_avg: Aggregate::of(&avgs),
        irf_med: Aggregate::of(&meds),
        contributors,
    }
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Median; mean of the two middle values for even lengths.
pub(crate) fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn day(d: i64) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap() + chrono::Duration::days(d)
    }

    pub(crate) fn issue(id: &str, who: Option<&str>, resolved: Option<i64>) -> Issue {
        Issue {
            id: id.into(),
            project: "p".into(),
            title: "t".into(),
            description: String::new(),
            resolver_id: who.map(Into::into),
            created_at: day(0),
            resolved_at: resolved.map(day),
        }
    }

    const THREE: &str = r#"{"id":"b","project":"p","title":"Second","description":"x y","resolver_id":"u1","created_at":"2020-01-01T00:00:00Z","resolved_at":"2020-01-03T00:00:00Z"}
{"id":"a","project":"p","title":"First","resolver_id":"u2","created_at":"2020-01-01T00:00:00Z","resolved_at":"2020-01-02T00:00:00Z","extra":1}
{"id":"c","project":"p","title":"Open","description":null,"resolver_id":null,"created_at":"2020-01-01T00:00:00Z","resolved_at":null}
"#;

    #[test]
    fn loads_and_orders_three_records() {
        let d = read_jsonl(THREE.as_bytes()).unwrap();
        let ids: Vec<_> = d.issues().iter().map(|i| i.id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        assert_eq!(d.project(), "p");
        assert_eq!(d.issues()[2].description, "");
        assert_eq!(d.contributors().len(), 2);
    }

    #[test]
    fn missing_id_names_line_and_field() {
        let text = format!(
            "{}\n{}\n",
            THREE.lines().next().unwrap(),
            r#"{"project":"p","title":"x","created_at":"2020-01-01T00:00:00Z"}"#
        );
        match read_jsonl(text.as_bytes()) {
            Err(Error::Schema { line, field, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(field, "id");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn resolved_without_resolver_is_rejected() {
        let text = r#"{"id":"a","project":"p","title":"x","created_at":"2020-01-01T00:00:00Z","resolved_at":"2020-01-02T00:00:00Z"}"#;
        match read_jsonl(text.as_bytes()) {
            Err(Error::Schema { line: 1, field, .. }) => assert_eq!(field, "resolver_id"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn resolution_before_creation_is_rejected() {
        let text = r#"{"id":"a","project":"p","title":"x","resolver_id":"u","created_at":"2020-01-05T00:00:00Z","resolved_at":"2020-01-02T00:00:00Z"}"#;
        assert!(matches!(
            read_jsonl(text.as_bytes()),
            Err(Error::Schema { field, .. }) if field == "resolved_at"
        ));
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let line = THREE.lines().next().unwrap();
        let text = format!("{line}\n{line}\n");
        assert!(matches!(
            read_jsonl(text.as_bytes()),
            Err(Error::Schema { line: 2, field, .. }) if field == "id"
        ));
    }

    #[test]
    fn equal_timestamps_break_ties_by_id() {
        let d = Dataset::new(
            "p",
            vec![
                issue("z", Some("u"), Some(3)),
                issue("m", Some("v"), Some(3)),
                issue("open", None, None),
                issue("a", Some("u"), Some(5)),
            ],
        )
        .unwrap();
        let ids: Vec<_> = d.issues().iter().map(|i| i.id.as_str()).collect();
        assert_eq!(ids, ["m", "z", "a", "open"]);
    }

    #[test]
    fn stats_of_single_issue() {
        let mut i = issue("a", None, None);
        i.title = "a b".into();
        let s = compute_stats(&Dataset::new("p", vec![i]).unwrap());
        assert_eq!(s.avg_title_chars, 3.0);
        assert_eq!(s.avg_title_words, 2.0);
        assert_eq!(s.avg_desc_words, 0.0);
        assert_eq!(s.resolved_count, 0);
    }

    #[test]
    fn stats_of_empty_dataset_are_zero() {
        let s = compute_stats(&Dataset::new("p", vec![]).unwrap());
        assert_eq!(s.issue_count, 0);
        assert_eq!(s.contributor_count, 0);
        assert_eq!(s.avg_title_chars, 0.0);
        assert_eq!(s.avg_desc_chars, 0.0);
        assert!(s.period_start.is_none());
    }

    #[test]
    fn irf_of_two_gaps() {
        let d = Dataset::new(
            "p",
            vec![
                issue("a", Some("u"), Some(0)),
                issue("b", Some("u"), Some(7)),
                issue("c", Some("u"), Some(7)),
                issue("d", Some("solo"), Some(2)),
            ],
        )
        .unwrap();
        let irf = compute_irf(&d);
        assert_eq!(irf.contributors.len(), 1);
        let u = &irf.contributors[0];
        assert_eq!(u.contributor_id, "u");
        assert_eq!(u.irf_med, 3.5);
        assert_eq!(u.irf_avg, 3.5);
        assert_eq!(irf.irf_avg.sd, 0.0);
    }

    #[test]
    fn fractional_days() {
        let mut a = issue("a", Some("u"), Some(0));
        let mut b = issue("b", Some("u"), Some(0));
        b.resolved_at = Some(day(0) + chrono::Duration::hours(12));
        a.created_at = day(0);
        let irf = compute_irf(&Dataset::new("p", vec![a, b]).unwrap());
        assert_eq!(irf.contributors[0].irf_avg, 0.5);
    }

    #[test]
    fn median_rules() {
        assert_eq!(median(&[1.0, 4.0, 7.0]), Some(4.0));
        assert_eq!(median(&[4.0, 2.0]), Some(3.0));
        assert_eq!(median(&[]), None);
    }
}
