//! Log abstraction: splitting raw log text into events and masking
//! run-specific data so recurring events collapse onto one generic text.
//!
//! A raw log is cut into blocks at every line that starts with the
//! delimiter expression (by default an ISO-like timestamp). Text before the
//! first delimiter match is kept as a preamble block. Each block is then
//! passed through an ordered list of [`MaskingRule`]s and interned in an
//! [`EventVocabulary`], which hands out dense integer [`EventId`]s.

use std::collections::HashMap;
use std::fmt;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outcome of the run that produced a log. Always known up front.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Fail,
    Pass,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Fail => "FAIL",
            Verdict::Pass => "PASS",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Verdict {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "FAIL" | "FAILED" => Ok(Verdict::Fail),
            "PASS" | "PASSED" => Ok(Verdict::Pass),
            other => Err(Error::Format(format!("unknown verdict {other:?}"))),
        }
    }
}

/// Dense identifier of an abstracted event within one [`EventVocabulary`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventId(pub u32);

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Truncate a timestamp to whole seconds.
pub fn to_seconds(t: DateTime<Utc>) -> DateTime<Utc> {
    DateTime::from_timestamp(t.timestamp(), 0).unwrap_or(t)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawLog {
    pub source_id: String,
    pub verdict: Verdict,
    pub produced_at: DateTime<Utc>,
    pub text: String,
}

impl RawLog {
    pub fn new(
        source_id: impl Into<String>,
        verdict: Verdict,
        produced_at: DateTime<Utc>,
        text: impl Into<String>,
    ) -> Self {
        RawLog {
            source_id: source_id.into(),
            verdict,
            produced_at: to_seconds(produced_at),
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskingRule {
    pub name: String,
    pub pattern: String,
    pub replacement: String,
}

impl MaskingRule {
    pub fn new(name: &str, pattern: &str, replacement: &str) -> Self {
        MaskingRule {
            name: name.to_string(),
            pattern: pattern.to_string(),
            replacement: replacement.to_string(),
        }
    }
}

const TIMESTAMP: &str = r"\b\d{4}-\d{2}-\d{2}[T ]\d{2}:\d{2}:\d{2}(?:[.,]\d+)?(?:Z|[+-]\d{2}:?\d{2}|\s?(?:UTC|GMT|CEST|CET|EEST|EET|WEST|WET|BST|IST|JST|AEST|AEDT|[ECMP][SD]T)\b)?";
const UUID: &str =
    r"\b[0-9a-fA-F]{8}-[0-9a-fA-F]{4}-[0-9a-fA-F]{4}-[0-9a-fA-F]{4}-[0-9a-fA-F]{12}\b";
const IPV6: &str = r"\b(?:[0-9a-fA-F]{1,4}:){7}[0-9a-fA-F]{1,4}\b|\b[0-9a-fA-F]{1,4}(?::[0-9a-fA-F]{1,4}){0,6}::[0-9a-fA-F]{1,4}(?::[0-9a-fA-F]{1,4}){0,6}\b";
const IPV4: &str = r"\b(?:\d{1,3}\.){3}\d{1,3}\b";
const HEX: &str = r"\b(?:0x)?[0-9a-fA-F]{8,}\b";
const DECIMAL_ID: &str = r"\b\d{6,}\b";

/// Default line-start delimiter: an ISO-like date and time.
pub const DEFAULT_DELIMITER: &str = r"^\d{4}-\d{2}-\d{2}[T ]\d{2}:\d{2}:\d{2}";

/// Delimiter plus masking rules, as read from a JSON config document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbstractionProfile {
    pub delimiter: String,
    pub masking_rules: Vec<MaskingRule>,
}

impl Default for AbstractionProfile {
    fn default() -> Self {
        AbstractionProfile {
            delimiter: DEFAULT_DELIMITER.to_string(),
            masking_rules: vec![
                MaskingRule::new("timestamp", TIMESTAMP, "<TS>"),
                MaskingRule::new("uuid", UUID, "<UUID>"),
                MaskingRule::new("ipv6", IPV6, "<IPV6>"),
                MaskingRule::new("ipv4", IPV4, "<IP>"),
                MaskingRule::new("hex", HEX, "<HEX>"),
                MaskingRule::new("decimal_id", DECIMAL_ID, "<NUM>"),
            ],
        }
    }
}

impl AbstractionProfile {
    pub fn from_json(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::json("abstraction config", e))
    }

    pub fn compile(&self) -> Result<Abstractor> {
        Abstractor::new(self)
    }
}

/// Compiled line-start delimiter.
#[derive(Debug, Clone)]
pub struct Delimiter {
    regex: Regex,
}

impl Delimiter {
    pub fn new(pattern: &str) -> Result<Self> {
        let regex = RegexBuilder::new(pattern)
            .multi_line(true)
            .build()
            .map_err(|e| Error::Config(format!("invalid delimiter {pattern:?}: {e}")))?;
        Ok(Delimiter { regex })
    }

    /// Byte offsets of every non-empty delimiter match that begins a line.
    fn starts(&self, text: &str) -> Vec<usize> {
        let bytes = text.as_bytes();
        self.regex
            .find_iter(text)
            .filter(|m| !m.is_empty())
            .map(|m| m.start())
            .filter(|&s| s == 0 || bytes[s - 1] == b'\n')
            .collect()
    }

    /// Split `text` into blocks. Joining the blocks gives back `text`.
    pub fn split<'t>(&self, text: &'t str) -> Vec<&'t str> {
        let mut cuts = self.starts(text);
        if cuts.first() != Some(&0) {
            cuts.insert(0, 0);
        }
        cuts.push(text.len());
        cuts.windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| &text[w[0]..w[1]])
            .collect()
    }
}

/// Split raw log text into event blocks at lines matching `delimiter`.
///
/// Content ahead of the first match becomes a leading preamble block.
pub fn delineate<'t>(text: &'t str, delimiter: &str) -> Result<Vec<&'t str>> {
    Ok(Delimiter::new(delimiter)?.split(text))
}

#[derive(Debug, Clone)]
struct CompiledRule {
    regex: Regex,
    replacement: String,
}

/// Apply `rules` in order, each globally, to one block of text.
pub fn mask(block: &str, rules: &[MaskingRule]) -> Result<String> {
    let compiled = compile_rules(rules)?;
    Ok(apply_rules(block, &compiled))
}

fn compile_rules(rules: &[MaskingRule]) -> Result<Vec<CompiledRule>> {
    rules
        .iter()
        .map(|r| {
            let regex = Regex::new(&r.pattern).map_err(|e| {
                Error::Config(format!("masking rule {:?}: invalid pattern: {e}", r.name))
            })?;
            Ok(CompiledRule {
                regex,
                replacement: r.replacement.clone(),
            })
        })
        .collect()
}

fn apply_rules(block: &str, rules: &[CompiledRule]) -> String {
    let mut out = block.to_string();
    for rule in rules {
        // NoExpand: placeholders are literal, `$` carries no meaning.
        let replaced = rule
            .regex
            .replace_all(&out, regex::NoExpand(&rule.replacement));
        if let std::borrow::Cow::Owned(s) = replaced {
            out = s;
        }
    }
    out
}

/// A compiled [`AbstractionProfile`].
#[derive(Debug, Clone)]
pub struct Abstractor {
    delimiter: Delimiter,
    rules: Vec<CompiledRule>,
}

impl Abstractor {
    /// Compile a profile. Rejects invalid expressions and any rule whose
    /// replacement text would itself be matched by one of the rule patterns.
    pub fn new(profile: &AbstractionProfile) -> Result<Self> {
        let delimiter = Delimiter::new(&profile.delimiter)?;
        let rules = compile_rules(&profile.masking_rules)?;
        for (rule, src) in rules.iter().zip(&profile.masking_rules) {
            for (other, other_src) in rules.iter().zip(&profile.masking_rules) {
                if other.regex.is_match(&rule.replacement) {
                    return Err(Error::Config(format!(
                        "masking rule {:?}: replacement {:?} is matched by rule {:?}",
                        src.name, src.replacement, other_src.name
                    )));
                }
            }
        }
        Ok(Abstractor { delimiter, rules })
    }

    pub fn delineate<'t>(&self, text: &'t str) -> Vec<&'t str> {
        self.delimiter.split(text)
    }

    pub fn mask(&self, block: &str) -> String {
        apply_rules(block, &self.rules)
    }

    /// Masked event texts of a raw log in original order.
    ///
    /// Trailing whitespace is trimmed from each event and blank blocks are
    /// dropped, so the final event of a file matches the same event elsewhere.
    pub fn event_texts(&self, text: &str) -> Vec<String> {
        self.delineate(text)
            .into_iter()
            .map(|block| {
                let mut masked = self.mask(block);
                masked.truncate(masked.trim_end().len());
                masked
            })
            .filter(|m| !m.trim().is_empty())
            .collect()
    }
}

impl Default for Abstractor {
    fn default() -> Self {
        Abstractor::new(&AbstractionProfile::default()).expect("default profile compiles")
    }
}

/// Bidirectional map between event ids and abstracted event texts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventVocabulary {
    texts: Vec<String>,
    ids: HashMap<String, EventId>,
}

#[derive(Serialize, Deserialize)]
struct VocabEntry {
    id: EventId,
    text: String,
}

impl EventVocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.texts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.texts.is_empty()
    }

    pub fn get_or_insert(&mut self, text: &str) -> EventId {
        if let Some(&id) = self.ids.get(text) {
            return id;
        }
        let id = EventId(self.texts.len() as u32);
        self.texts.push(text.to_string());
        self.ids.insert(text.to_string(), id);
        id
    }

    pub fn id(&self, text: &str) -> Option<EventId> {
        self.ids.get(text).copied()
    }

    pub fn text(&self, id: EventId) -> Option<&str> {
        self.texts.get(id.0 as usize).map(String::as_str)
    }

    /// Number of lines the event spans. Kept for display only.
    pub fn line_count(&self, id: EventId) -> Option<usize> {
        self.text(id).map(|t| t.lines().count().max(1))
    }

    pub fn iter(&self) -> impl Iterator<Item = (EventId, &str)> {
        self.texts
            .iter()
            .enumerate()
            .map(|(i, t)| (EventId(i as u32), t.as_str()))
    }

    pub fn to_json(&self) -> String {
        let entries: Vec<VocabEntry> = self
            .iter()
            .map(|(id, text)| VocabEntry {
                id,
                text: text.to_string(),
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&entries).expect("vocabulary serializes");
        s.push('\n');
        s
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let mut entries: Vec<VocabEntry> =
            serde_json::from_str(json).map_err(|e| Error::json("vocabulary", e))?;
        entries.sort_by_key(|e| e.id);
        let mut vocab = EventVocabulary::new();
        for (i, entry) in entries.into_iter().enumerate() {
            if entry.id.0 as usize != i {
                return Err(Error::Format(format!(
                    "vocabulary ids are not dense: expected {i}, found {}",
                    entry.id
                )));
            }
            if vocab.ids.contains_key(&entry.text) {
                return Err(Error::Format(format!(
                    "vocabulary text of id {} is duplicated",
                    entry.id
                )));
            }
            vocab.get_or_insert(&entry.text);
        }
        Ok(vocab)
    }
}

/// A raw log reduced to its sequence of generic events.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbstractedLog {
    pub source_id: String,
    pub verdict: Verdict,
    pub produced_at: DateTime<Utc>,
    pub events: Vec<EventId>,
    pub event_count: usize,
}

impl AbstractedLog {
    /// Distinct events, ascending by id.
    pub fn distinct_events(&self) -> Vec<EventId> {
        let mut ids = self.events.clone();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    fn from_texts(raw: &RawLog, texts: &[String], vocab: &mut EventVocabulary) -> Self {
        let events: Vec<EventId> = texts.iter().map(|t| vocab.get_or_insert(t)).collect();
        AbstractedLog {
            source_id: raw.source_id.clone(),
            verdict: raw.verdict,
            produced_at: raw.produced_at,
            event_count: events.len(),
            events,
        }
    }
}

/// Abstract one log, extending `vocab` with any event text not seen before.
pub fn abstract_log(
    raw: &RawLog,
    abstractor: &Abstractor,
    vocab: &mut EventVocabulary,
) -> AbstractedLog {
    let texts = abstractor.event_texts(&raw.text);
    AbstractedLog::from_texts(raw, &texts, vocab)
}

/// Abstract many logs. Masking runs in parallel; interning happens in
/// input order so ids are the same as for sequential [`abstract_log`] calls.
pub fn abstract_corpus(
    raws: &[RawLog],
    abstractor: &Abstractor,
    vocab: &mut EventVocabulary,
) -> Vec<AbstractedLog> {
    let masked: Vec<Vec<String>> = raws
        .par_iter()
        .map(|raw| abstractor.event_texts(&raw.text))
        .collect();
    raws.iter()
        .zip(&masked)
        .map(|(raw, texts)| AbstractedLog::from_texts(raw, texts, vocab))
        .collect()
}
