//! Known-error signatures and the ground truth they induce.

use std::collections::{BTreeMap, BTreeSet};

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::abstraction::{AbstractedLog, EventId, EventVocabulary, RawLog};
use crate::error::{Error, Result};

/// A named set of sub-patterns. A log carries the signature only when every
/// sub-pattern matches somewhere in it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub name: String,
    pub sub_patterns: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct CompiledSignature {
    pub name: String,
    patterns: Vec<(String, Regex)>,
}

impl CompiledSignature {
    pub fn new(sig: &Signature) -> Result<Self> {
        if sig.sub_patterns.is_empty() {
            return Err(Error::Config(format!(
                "signature {:?} has no sub-patterns",
                sig.name
            )));
        }
        let patterns = sig
            .sub_patterns
            .iter()
            .map(|p| {
                Regex::new(p).map(|re| (p.clone(), re)).map_err(|e| {
                    Error::Config(format!(
                        "signature {:?}: invalid sub-pattern {p:?}: {e}",
                        sig.name
                    ))
                })
            })
            .collect::<Result<_>>()?;
        Ok(CompiledSignature {
            name: sig.name.clone(),
            patterns,
        })
    }

    pub fn sub_patterns(&self) -> impl Iterator<Item = &str> {
        self.patterns.iter().map(|(p, _)| p.as_str())
    }

    /// Every sub-pattern matches the log text taken as a whole.
    pub fn matches_log(&self, text: &str) -> bool {
        self.patterns.iter().all(|(_, re)| re.is_match(text))
    }

    pub fn matches_event(&self, text: &str) -> bool {
        self.patterns.iter().any(|(_, re)| re.is_match(text))
    }
}

/// Why a failing log was left out of the evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Exclusion {
    /// Some sub-pattern never matches the log.
    SignatureMismatch {
        source_id: String,
        signature: String,
    },
    /// The signature matched the log but no single abstracted event.
    NoRelevantEvents {
        source_id: String,
        signature: String,
    },
}

impl std::fmt::Display for Exclusion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exclusion::SignatureMismatch {
                source_id,
                signature,
            } => {
                write!(f, "excluded {source_id}: does not match all sub-patterns of signature {signature}")
            }
            Exclusion::NoRelevantEvents {
                source_id,
                signature,
            } => {
                write!(
                    f,
                    "excluded {source_id}: no event matches signature {signature}"
                )
            }
        }
    }
}

/// Relevant events of a failing log: the distinct events whose abstracted
/// text matches at least one sub-pattern.
pub fn ground_truth(
    raw: &RawLog,
    log: &AbstractedLog,
    vocab: &EventVocabulary,
    sig: &CompiledSignature,
) -> Result<BTreeSet<EventId>, Exclusion> {
    if !sig.matches_log(&raw.text) {
        return Err(Exclusion::SignatureMismatch {
            source_id: raw.source_id.clone(),
            signature: sig.name.clone(),
        });
    }
    let relevant: BTreeSet<EventId> = log
        .distinct_events()
        .into_iter()
        .filter(|&e| vocab.text(e).is_some_and(|t| sig.matches_event(t)))
        .collect();
    if relevant.is_empty() {
        return Err(Exclusion::NoRelevantEvents {
            source_id: raw.source_id.clone(),
            signature: sig.name.clone(),
        });
    }
    Ok(relevant)
}

/// Sub-patterns that match every log of a test set. Such patterns say
/// nothing about the failure and should be removed from the signature.
pub fn lint_signature<'a>(sig: &'a CompiledSignature, logs: &[&RawLog]) -> Vec<&'a str> {
    if logs.is_empty() {
        return Vec::new();
    }
    sig.patterns
        .iter()
        .filter(|(_, re)| logs.iter().all(|l| re.is_match(&l.text)))
        .map(|(p, _)| p.as_str())
        .collect()
}

/// Signatures plus the test-to-signature assignment.
#[derive(Debug, Clone, Default)]
pub struct SignatureBook {
    signatures: BTreeMap<String, CompiledSignature>,
    assignments: BTreeMap<String, String>,
}

impl SignatureBook {
    pub fn new(signatures: &[Signature], assignments: BTreeMap<String, String>) -> Result<Self> {
        let mut compiled = BTreeMap::new();
        for sig in signatures {
            if compiled
                .insert(sig.name.clone(), CompiledSignature::new(sig)?)
                .is_some()
            {
                return Err(Error::Config(format!(
                    "signature {:?} defined twice",
                    sig.name
                )));
            }
        }
        Ok(SignatureBook {
            signatures: compiled,
            assignments,
        })
    }

    /// Parse the signatures array and the `{test: signature}` object.
    pub fn from_json(signatures: &str, assignments: &str) -> Result<Self> {
        let sigs: Vec<Signature> =
            serde_json::from_str(signatures).map_err(|e| Error::json("signatures", e))?;
        let map: BTreeMap<String, String> = serde_json::from_str(assignments)
            .map_err(|e| Error::json("signature assignments", e))?;
        Self::new(&sigs, map)
    }

    /// Signature assigned to a test, if the test is mapped to a known one.
    pub fn for_test(&self, test: &str) -> Option<&CompiledSignature> {
        self.signatures.get(self.assignments.get(test)?)
    }

    pub fn assignment(&self, test: &str) -> Option<&str> {
        self.assignments.get(test).map(String::as_str)
    }
}
