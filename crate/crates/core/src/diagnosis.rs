//! End-to-end analysis of one failing log against a coverage spectrum.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::abstraction::{AbstractedLog, EventId, EventVocabulary, Verdict};
use crate::clustering::{cluster_scores, Aggregate};
use crate::error::{Error, Result};
use crate::spectrum::{score, CoverageMatrix, Measure};

/// How many ranked clusters to hand back as the retrieved set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Retrieve {
    Top(usize),
    All,
}

impl Retrieve {
    fn count(self, available: usize) -> usize {
        match self {
            Retrieve::Top(k) => k.min(available),
            Retrieve::All => available,
        }
    }
}

impl std::str::FromStr for Retrieve {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("all") {
            return Ok(Retrieve::All);
        }
        match s.trim().parse::<usize>() {
            Ok(k) if k >= 1 => Ok(Retrieve::Top(k)),
            _ => Err(Error::Config(format!(
                "invalid k {s:?}: expected an integer >= 1 or `all`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEvent {
    pub event_id: EventId,
    #[serde(with = "extended_f64")]
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportCluster {
    pub rank: usize,
    pub aggregate: f64,
    pub retrieved: bool,
    pub events: Vec<ReportEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosisReport {
    pub target: String,
    pub measure: Measure,
    pub aggregate: Aggregate,
    pub threshold: f64,
    pub clusters: Vec<ReportCluster>,
    pub retrieved_k: usize,
    pub events_in_log: usize,
    pub events_retrieved: usize,
}

impl DiagnosisReport {
    /// Events in the first `retrieved_k` clusters.
    pub fn retrieved_events(&self) -> BTreeSet<EventId> {
        self.clusters
            .iter()
            .filter(|c| c.retrieved)
            .flat_map(|c| c.events.iter().map(|e| e.event_id))
            .collect()
    }

    /// Fill in event texts from the vocabulary.
    pub fn resolve_texts(&mut self, vocab: &EventVocabulary) {
        for ev in self.clusters.iter_mut().flat_map(|c| c.events.iter_mut()) {
            ev.text = vocab.text(ev.event_id).map(str::to_string);
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Human-readable rendering, highest-ranked cluster first.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "target: {}\nmeasure: {}  aggregate: {}  threshold: {:.6}\nretrieved {} of {} events in {} of {} clusters",
            self.target,
            self.measure,
            self.aggregate,
            self.threshold,
            self.events_retrieved,
            self.events_in_log,
            self.retrieved_k,
            self.clusters.len()
        );
        for c in &self.clusters {
            let mark = if c.retrieved { "*" } else { " " };
            let _ = writeln!(
                out,
                "\n{mark} cluster {} (aggregate {:.6}, {} events)",
                c.rank,
                c.aggregate,
                c.events.len()
            );
            for e in &c.events {
                let text = e.text.as_deref().unwrap_or("");
                let mut lines = text.lines();
                let _ = writeln!(
                    out,
                    "  [{:>10.6}] #{:<6} {}",
                    e.score,
                    e.event_id.0,
                    lines.next().unwrap_or("")
                );
                for line in lines {
                    let _ = writeln!(out, "  {:>20} {line}", "");
                }
            }
        }
        out
    }
}

/// Score the target's events, cluster them and mark the first `k` clusters
/// as retrieved. The target must be a failing row of `matrix`.
pub fn diagnose(
    target: &AbstractedLog,
    matrix: &CoverageMatrix,
    measure: Measure,
    k: Retrieve,
) -> Result<DiagnosisReport> {
    diagnose_with(target, matrix, measure, k, Aggregate::Mean)
}

pub fn diagnose_with(
    target: &AbstractedLog,
    matrix: &CoverageMatrix,
    measure: Measure,
    k: Retrieve,
    aggregate: Aggregate,
) -> Result<DiagnosisReport> {
    diagnose_source(&target.source_id, matrix, measure, k, aggregate)
}

/// Like [`diagnose_with`], for a target known only by its row in `matrix`.
pub fn diagnose_source(
    source_id: &str,
    matrix: &CoverageMatrix,
    measure: Measure,
    k: Retrieve,
    aggregate: Aggregate,
) -> Result<DiagnosisReport> {
    let row = matrix
        .row_index(source_id)
        .filter(|&r| matrix.rows()[r].verdict == Verdict::Fail)
        .ok_or_else(|| {
            Error::Usage(format!(
                "target {source_id:?} is not a failing log of this spectrum; rebuild the spectrum including it"
            ))
        })?;
    let events: Vec<EventId> = matrix.row_events(row).collect();
    diagnose_events(source_id, &events, matrix, measure, k, aggregate)
}

pub(crate) fn diagnose_events(
    target: &str,
    events: &[EventId],
    matrix: &CoverageMatrix,
    measure: Measure,
    k: Retrieve,
    aggregate: Aggregate,
) -> Result<DiagnosisReport> {
    if events.is_empty() {
        return Err(Error::Usage(format!("target {target:?} has no events")));
    }
    let scored: Vec<(EventId, f64)> = events
        .iter()
        .map(|&e| {
            let p = matrix.primitives(e).ok_or_else(|| {
                Error::Usage(format!("event {e} of {target:?} missing from spectrum"))
            })?;
            Ok((e, score(p, measure)))
        })
        .collect::<Result<_>>()?;
    let (threshold, ranked) = cluster_scores(&scored, aggregate)?;
    let retrieved_k = k.count(ranked.len());
    let raw: std::collections::HashMap<EventId, f64> = scored.into_iter().collect();
    let clusters: Vec<ReportCluster> = ranked
        .into_iter()
        .enumerate()
        .map(|(i, c)| ReportCluster {
            rank: i + 1,
            aggregate: c.aggregate,
            retrieved: i < retrieved_k,
            events: c
                .members
                .iter()
                .map(|m| ReportEvent {
                    event_id: m.event_id,
                    // Report the measure's own value, including +inf.
                    score: raw[&m.event_id],
                    text: None,
                })
                .collect(),
        })
        .collect();
    let events_retrieved = clusters
        .iter()
        .filter(|c| c.retrieved)
        .map(|c| c.events.len())
        .sum();
    Ok(DiagnosisReport {
        target: target.to_string(),
        measure,
        aggregate,
        threshold,
        clusters,
        retrieved_k,
        events_in_log: events.len(),
        events_retrieved,
    })
}

/// JSON has no infinity; sentinel scores travel as the strings `"inf"`/`"-inf"`.
mod extended_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                _ => Err(serde::de::Error::custom(format!("invalid score {s:?}"))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::to_seconds;
    use crate::spectrum::build_matrix;
    use chrono::Utc;

    fn log(id: &str, verdict: Verdict, events: &[u32]) -> AbstractedLog {
        AbstractedLog {
            source_id: id.into(),
            verdict,
            produced_at: to_seconds(Utc::now()),
            events: events.iter().map(|&e| EventId(e)).collect(),
            event_count: events.len(),
        }
    }

    /// Three failing, three passing; events 90 and 91 only in failing logs.
    fn fixture() -> (Vec<AbstractedLog>, Vec<AbstractedLog>) {
        let f = vec![
            log("f1", Verdict::Fail, &[1, 2, 3, 90, 91, 4]),
            log("f2", Verdict::Fail, &[1, 3, 90, 91, 5]),
            log("f3", Verdict::Fail, &[1, 2, 90, 91, 90]),
        ];
        let p = vec![
            log("p1", Verdict::Pass, &[1, 2, 3, 4]),
            log("p2", Verdict::Pass, &[1, 2, 5]),
            log("p3", Verdict::Pass, &[1, 3, 4, 5]),
        ];
        (f, p)
    }

    #[test]
    fn planted_failure_exclusive_events_retrieved() {
        let (f, p) = fixture();
        let m = build_matrix(&f, &p);
        for target in &f {
            let oracle: BTreeSet<EventId> = target
                .distinct_events()
                .into_iter()
                .filter(|e| !p.iter().any(|l| l.events.contains(e)))
                .collect();
            let r = diagnose(target, &m, Measure::FailedOnly, Retrieve::Top(1)).unwrap();
            assert_eq!(r.retrieved_events(), oracle);
            assert_eq!(r.events_in_log, target.distinct_events().len());
        }
    }

    #[test]
    fn retrieving_all_clusters_covers_log() {
        let (f, p) = fixture();
        let m = build_matrix(&f, &p);
        let r = diagnose(&f[0], &m, Measure::Ochiai, Retrieve::All).unwrap();
        assert_eq!(r.events_retrieved, r.events_in_log);
        assert_eq!(r.retrieved_k, r.clusters.len());
        let r2 = diagnose(&f[0], &m, Measure::Ochiai, Retrieve::Top(r.clusters.len())).unwrap();
        assert_eq!(r2.events_retrieved, r2.events_in_log);
    }

    #[test]
    fn equal_scores_collapse() {
        let f = vec![log("f1", Verdict::Fail, &[1, 2, 3])];
        let m = build_matrix(&f, &[]);
        let r = diagnose(&f[0], &m, Measure::FailedOnly, Retrieve::Top(3)).unwrap();
        assert_eq!(r.clusters.len(), 1);
        assert_eq!(r.retrieved_k, 1);
        assert_eq!(r.events_retrieved, 3);
    }

    #[test]
    fn target_not_in_matrix() {
        let (f, p) = fixture();
        let m = build_matrix(&f[1..], &p);
        let err = diagnose(&f[0], &m, Measure::Ochiai, Retrieve::Top(1)).unwrap_err();
        assert!(matches!(err, Error::Usage(ref s) if s.contains("rebuild")));
        let err = diagnose(&p[0], &m, Measure::Ochiai, Retrieve::Top(1)).unwrap_err();
        assert!(matches!(err, Error::Usage(_)));
    }

    #[test]
    fn report_only_contains_target_events_and_is_monotone() {
        let (f, p) = fixture();
        let m = build_matrix(&f, &p);
        for measure in Measure::ALL {
            for target in &f {
                let own: BTreeSet<EventId> = target.events.iter().copied().collect();
                let mut prev: Option<BTreeSet<EventId>> = None;
                for k in 1..=4 {
                    let r = diagnose(target, &m, measure, Retrieve::Top(k)).unwrap();
                    let got = r.retrieved_events();
                    assert!(got.is_subset(&own));
                    if let Some(prev) = prev {
                        assert!(prev.is_subset(&got));
                    }
                    prev = Some(got);
                }
            }
        }
    }

    #[test]
    fn text_and_json_rendering() {
        let (f, p) = fixture();
        let m = build_matrix(&f, &p);
        let mut vocab = EventVocabulary::new();
        for i in 0..=91 {
            vocab.get_or_insert(&format!("event number {i}\nsecond line"));
        }
        let mut r = diagnose(&f[0], &m, Measure::FailedOnly, Retrieve::Top(1)).unwrap();
        r.resolve_texts(&vocab);
        let text = r.render_text();
        assert!(text.contains("* cluster 1"));
        assert!(text.contains("event number 90"));
        let back: DiagnosisReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        let r = diagnose(&f[0], &m, Measure::DStar2, Retrieve::Top(1)).unwrap();
        assert_eq!(r.clusters[0].events[0].score, f64::INFINITY);
        assert!(r.to_json().contains("\"inf\""));
        let back: DiagnosisReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn retrieve_parsing() {
        assert_eq!("all".parse::<Retrieve>().unwrap(), Retrieve::All);
        assert_eq!("2".parse::<Retrieve>().unwrap(), Retrieve::Top(2));
        assert!("0".parse::<Retrieve>().is_err());
    }
}
