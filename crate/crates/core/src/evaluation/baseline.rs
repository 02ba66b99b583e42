use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;

use crate::abstraction::{AbstractedLog, EventId, EventVocabulary};

/// The pattern-search baseline: `error|fault|fail*`, case-insensitive,
/// with the trailing `*` read as a glob wildcard, so `fail` matches as a
/// substring (`failure`, `Failover`).
pub const BASELINE_PATTERN: &str = "(?i)error|fault|fail";

fn pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(BASELINE_PATTERN).expect("baseline pattern compiles"))
}

pub fn baseline_matches(text: &str) -> bool {
    pattern().is_match(text)
}

/// Distinct events of `log` whose text matches the baseline pattern.
pub fn baseline_search(log: &AbstractedLog, vocab: &EventVocabulary) -> BTreeSet<EventId> {
    log.distinct_events()
        .into_iter()
        .filter(|&e| vocab.text(e).is_some_and(baseline_matches))
        .collect()
}
