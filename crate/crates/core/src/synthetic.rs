//! Seeded synthetic corpora: planted-signal issue trackers and random
//! resolution logs.
//!
//! In a planted corpus each contributor resolves one issue per calendar
//! month (retained contributors) or all of their issues inside a single
//! month (contributors who quit). The first `newcomer_issues` issues of each
//! contributor carry the newcomer signal: the marker keyword with
//! probability `keyword_rate_positive` and cue words from a newcomer pool.
//! Other issues carry the keyword with probability `keyword_rate_negative`
//! and cue words from a core pool. Each cue word comes from the opposite
//! pool with probability `1 - cue_fidelity`.
//!
//! The keyword alone cannot support high precision at a 1:9 class ratio:
//! among keyword issues the positive share is at most
//! `0.9 * 1 / (0.9 * 1 + 0.05 * 9) = 2/3`. The cue pools carry the rest of
//! the planted signal.

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, Issue};
use crate::{seed, Result};

/// Cue words typical of issues a newcomer resolves.
pub const NEWCOMER_CUES: [&str; 12] = [
    "typo", "readme", "tooltip", "spelling", "cosmetic", "wording", "icon", "translation", "docs", "label",
    "placeholder", "comment",
];

/// Cue words typical of issues resolved by established contributors.
pub const CORE_CUES: [&str; 12] = [
    "crash", "deadlock", "segfault", "regression", "race", "kernel", "corruption", "concurrency", "overflow",
    "scheduler", "allocator", "protocol",
];

const SYLLABLES: [&str; 16] = [
    "ka", "lo", "mi", "nu", "pe", "ra", "si", "to", "vu", "ze", "bo", "da", "fi", "gu", "ho", "ju",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedConfig {
    pub project: String,
    pub contributors: usize,
    pub issues_per_contributor: usize,
    /// Leading issues of each contributor that carry the newcomer signal.
    pub newcomer_issues: usize,
    pub keyword: String,
    pub keyword_rate_positive: f64,
    pub keyword_rate_negative: f64,
    /// Cue words per issue.
    pub cue_words: usize,
    /// Leading words of each cue pool in use (at most 12).
    pub cue_pool: usize,
    /// Probability that a cue word comes from the issue's own pool.
    pub cue_fidelity: f64,
    /// Share of contributors who stay (one resolution per month).
    pub retained_share: f64,
    pub filler_vocabulary: usize,
    pub title_words: (usize, usize),
    pub description_words: (usize, usize),
    /// Unresolved issues appended. Every other one is newcomer-like and
    /// always carries the keyword; the rest never do.
    pub unresolved: usize,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            project: "planted".into(),
            contributors: 200,
            issues_per_contributor: 10,
            newcomer_issues: 1,
            keyword: "easyfix".into(),
            keyword_rate_positive: 0.9,
            keyword_rate_negative: 0.05,
            cue_words: 3,
            cue_pool: 4,
            cue_fidelity: 1.0,
            retained_share: 0.7,
            filler_vocabulary: 1500,
            title_words: (3, 8),
            description_words: (15, 40),
            unresolved: 0,
            seed: 0,
        }
    }
}

impl PlantedConfig {
    /// Roughly the size of the Eclipse tracker: 3,964 contributors and
    /// about 159k issues with ~80-word descriptions.
    pub fn eclipse_scale(seed: u64) -> Self {
        PlantedConfig {
            project: "eclipse-synthetic".into(),
            contributors: 3964,
            issues_per_contributor: 40,
            filler_vocabulary: 20000,
            title_words: (5, 10),
            description_words: (60, 100),
            seed,
            ..Default::default()
        }
    }
}

/// Deterministic pseudo-word for filler rank `i`. Words end in a vowel, so
/// they survive lemmatization unchanged.
pub fn filler_word(i: usize) -> String {
    let mut word = String::from("w");
    let mut n = i;
    loop {
        word.push_str(SYLLABLES[n % SYLLABLES.len()]);
        n /= SYLLABLES.len();
        if n == 0 {
            break;
        }
    }
    word
}

/// Log-uniform rank, so low ranks are frequent.
fn filler(rng: &mut ChaCha8Rng, vocabulary: usize) -> String {
    let u: f64 = rng.gen();
    let rank = ((vocabulary as f64).powf(u) as usize).saturating_sub(1).min(vocabulary - 1);
    filler_word(rank)
}

fn words(rng: &mut ChaCha8Rng, range: (usize, usize), vocabulary: usize) -> Vec<String> {
    let n = rng.gen_range(range.0..=range.1.max(range.0));
    (0..n).map(|_| filler(rng, vocabulary)).collect()
}

fn compose(rng: &mut ChaCha8Rng, cfg: &PlantedConfig, newcomer: bool, keyword_rate: f64) -> (String, String) {
    let vocabulary = cfg.filler_vocabulary.max(1);
    let title = words(rng, cfg.title_words, vocabulary);
    let mut body = words(rng, cfg.description_words, vocabulary);
    for _ in 0..cfg.cue_words {
        let own = rng.gen_bool(cfg.cue_fidelity);
        let pool = if own == newcomer { &NEWCOMER_CUES } else { &CORE_CUES };
        let pool = &pool[..cfg.cue_pool.clamp(1, pool.len())];
        body.push(pool.choose(rng).unwrap().to_string());
    }
    if rng.gen_bool(keyword_rate) {
        body.push(cfg.keyword.clone());
    }
    body.shuffle(rng);
    (title.join(" "), body.join(" "))
}

fn epoch() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2015, 1, 1, 0, 0, 0).unwrap()
}

fn month_start(offset: u32) -> DateTime<Utc> {
    let y = 2015 + (offset / 12) as i32;
    let m = offset % 12 + 1;
    Utc.with_ymd_and_hms(y, m, 1, 0, 0, 0).unwrap()
}

/// Planted-signal corpus. Contributor `devNNNN` is retained when it
/// resolves its issues in consecutive months.
pub fn planted_corpus(cfg: &PlantedConfig) -> Result<Dataset> {
    let mut rng = seed::rng(cfg.seed);
    let mut issues = Vec::with_capacity(cfg.contributors * cfg.issues_per_contributor + cfg.unresolved);
    let mut next_id = 0usize;
    let id = |n: &mut usize| {
        *n += 1;
        format!("{}-{:07}", cfg.project, n)
    };
    for c in 0..cfg.contributors {
        let who = format!("dev{c:04}");
        let retained = rng.gen_bool(cfg.retained_share);
        let start: u32 = rng.gen_range(0..24);
        for k in 0..cfg.issues_per_contributor {
            let month = if retained { start + k as u32 } else { start };
            let within = if retained {
                rng.gen_range(0..27 * 86_400)
            } else {
                // Bursts stay ordered inside the month.
                let step = (26 * 86_400 / cfg.issues_per_contributor as i64).max(1);
                86_400 + k as i64 * step + rng.gen_range(0..step)
            };
            let resolved = month_start(month) + Duration::seconds(within);
            let created = resolved - Duration::seconds(rng.gen_range(3_600..30 * 86_400));
            let newcomer = k < cfg.newcomer_issues;
            let rate = if newcomer {
                cfg.keyword_rate_positive
            } else {
                cfg.keyword_rate_negative
            };
            let (title, description) = compose(&mut rng, cfg, newcomer, rate);
            issues.push(Issue {
                id: id(&mut next_id),
                project: cfg.project.clone(),
                title,
                description,
                resolver_id: Some(who.clone()),
                created_at: created,
                resolved_at: Some(resolved),
            });
        }
    }
    for u in 0..cfg.unresolved {
        let newcomer = u % 2 == 0;
        let (title, description) = compose(&mut rng, cfg, newcomer, if newcomer { 1.0 } else { 0.0 });
        issues.push(Issue {
            id: id(&mut next_id),
            project: cfg.project.clone(),
            title,
            description,
            resolver_id: None,
            created_at: month_start(36) + Duration::seconds(u as i64 * 60),
            resolved_at: None,
        });
    }
    Dataset::new(cfg.project.clone(), issues)
}

/// Random resolution log with at most `max_resolutions` resolved issues:
/// up to 15 contributors, each resolving 1-6 issues in a random subset of
/// 18 months. Texts are empty.
pub fn random_event_log(seed_value: u64, max_resolutions: usize) -> Result<Dataset> {
    let mut rng = seed::rng(seed_value);
    let contributors = rng.gen_range(1..=15);
    let mut issues = Vec::new();
    'outer: for c in 0..contributors {
        let density: f64 = rng.gen_range(0.2..0.95);
        let heavy = rng.gen_range(1..=6);
        for month in 0..18 {
            if !rng.gen_bool(density) {
                continue;
            }
            for _ in 0..rng.gen_range(1..=heavy) {
                if issues.len() >= max_resolutions {
                    break 'outer;
                }
                // Coarse times so that exact timestamp ties occur.
                let at = month_start(month) + Duration::hours(rng.gen_range(0..27 * 24 / 12) * 12);
                issues.push(Issue {
                    id: format!("log-{:05}", issues.len()),
                    project: "log".into(),
                    title: String::new(),
                    description: String::new(),
                    resolver_id: Some(format!("c{c:02}")),
                    created_at: epoch(),
                    resolved_at: Some(at),
                });
            }
        }
    }
    Dataset::new("log", issues)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roles::{label, NewcomerThreshold, Question};

    #[test]
    fn planted_corpus_shape() {
        let d = planted_corpus(&PlantedConfig::default()).unwrap();
        assert_eq!(d.len(), 2000);
        assert_eq!(d.contributors().len(), 200);
        let rq1 = label(&d, Question::Rq1(NewcomerThreshold::new(1).unwrap()));
        assert_eq!(rq1.count(crate::Label::Positive), 200);
        assert_eq!(rq1.count(crate::Label::Negative), 1800);
    }

    #[test]
    fn planted_keyword_rates() {
        let cfg = PlantedConfig::default();
        let d = planted_corpus(&cfg).unwrap();
        let rq1 = label(&d, Question::Rq1(NewcomerThreshold::new(1).unwrap()));
        let mut hits = [0usize; 2];
        for issue in d.issues() {
            if issue.description.split(' ').any(|w| w == cfg.keyword) {
                hits[usize::from(!rq1.labels[&issue.id].is_positive())] += 1;
            }
        }
        let pos_rate = hits[0] as f64 / 200.0;
        let neg_rate = hits[1] as f64 / 1800.0;
        assert!((pos_rate - 0.9).abs() < 0.06, "{pos_rate}");
        assert!((neg_rate - 0.05).abs() < 0.02, "{neg_rate}");
    }

    #[test]
    fn retained_contributors_become_active() {
        let d = planted_corpus(&PlantedConfig::default()).unwrap();
        let rq2 = label(&d, Question::Rq2);
        let pos = rq2.count(crate::Label::Positive);
        assert_eq!(rq2.labels.len(), 200);
        assert!((100..180).contains(&pos), "{pos}");
    }

    #[test]
    fn deterministic() {
        let cfg = PlantedConfig {
            unresolved: 10,
            ..Default::default()
        };
        let a = planted_corpus(&cfg).unwrap();
        let b = planted_corpus(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.unresolved().count(), 10);
    }

    #[test]
    fn filler_words_are_distinct_and_stable() {
        let words: std::collections::BTreeSet<_> = (0..5000).map(filler_word).collect();
        assert_eq!(words.len(), 5000);
        for w in words.iter().take(200) {
            assert_eq!(&crate::nlp::lemmatize(w), w);
        }
    }

    #[test]
    fn event_log_respects_cap() {
        for s in 0..20 {
            let d = random_event_log(s, 50).unwrap();
            assert!(d.len() <= 50);
        }
    }
}
