//! Reading log corpora laid out as `<root>/<test>/fail/*.log` and
//! `<root>/<test>/pass/*.log`.
//!
//! Production times come from `manifest.csv` (`source_id,verdict,produced_at`)
//! when present, otherwise from file modification times.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDateTime, Utc};

use crate::abstraction::{to_seconds, RawLog, Verdict};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.csv";
pub const MANIFEST_HEADER: &str = "source_id,verdict,produced_at";

/// All logs of one test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestCorpus {
    pub name: String,
    pub logs: Vec<RawLog>,
}

impl TestCorpus {
    pub fn failing(&self) -> impl Iterator<Item = &RawLog> {
        self.logs.iter().filter(|l| l.verdict == Verdict::Fail)
    }

    pub fn passing(&self) -> impl Iterator<Item = &RawLog> {
        self.logs.iter().filter(|l| l.verdict == Verdict::Pass)
    }
}

/// Test name of a source id of the form `<test>/<fail|pass>/<file>`.
pub fn test_of(source_id: &str) -> &str {
    source_id.split('/').next().unwrap_or(source_id)
}

pub fn parse_timestamp(s: &str) -> Result<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(to_seconds(t.with_timezone(&Utc)));
    }
    for fmt in ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(to_seconds(t.and_utc()));
        }
    }
    if let Ok(secs) = s.parse::<i64>() {
        if let Some(t) = DateTime::from_timestamp(secs, 0) {
            return Ok(t);
        }
    }
    Err(Error::Format(format!("unrecognised timestamp {s:?}")))
}

pub fn format_timestamp(t: DateTime<Utc>) -> String {
    t.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub verdict: Verdict,
    pub produced_at: DateTime<Utc>,
}

pub fn read_manifest(path: &Path) -> Result<HashMap<String, ManifestEntry>> {
    let ctx = path.display().to_string();
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(ctx.clone(), e))?;
    let mut out = HashMap::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::csv(ctx.clone(), e))?;
        if row.len() != 3 {
            return Err(Error::Format(format!(
                "{ctx}: expected {MANIFEST_HEADER}, got {row:?}"
            )));
        }
        let entry = ManifestEntry {
            verdict: row[1].parse()?,
            produced_at: parse_timestamp(&row[2])?,
        };
        out.insert(row[0].to_string(), entry);
    }
    Ok(out)
}

pub fn manifest_csv(logs: &[&RawLog]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    let err = |e| Error::csv(MANIFEST_FILE, e);
    w.write_record(MANIFEST_HEADER.split(',')).map_err(err)?;
    for l in logs {
        w.write_record([
            l.source_id.as_str(),
            l.verdict.as_str(),
            &format_timestamp(l.produced_at),
        ])
        .map_err(err)?;
    }
    crate::evaluation::sweep::finish(w, MANIFEST_FILE)
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|e| Error::io(dir, e)))
        .collect::<Result<_>>()?;
    out.sort();
    Ok(out)
}

fn file_time(path: &Path) -> Result<DateTime<Utc>> {
    let modified = fs::metadata(path)
        .and_then(|m| m.modified())
        .map_err(|e| Error::io(path, e))?;
    Ok(to_seconds(DateTime::<Utc>::from(modified)))
}

/// Load every test under `root`, tests and files in name order.
///
/// `manifest` defaults to `<root>/manifest.csv` when that file exists.
pub fn load_corpus(root: &Path, manifest: Option<&Path>) -> Result<Vec<TestCorpus>> {
    if !root.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "corpus directory not found"),
        ));
    }
    let default_manifest = root.join(MANIFEST_FILE);
    let manifest = match manifest {
        Some(p) => Some(read_manifest(p)?),
        None if default_manifest.is_file() => Some(read_manifest(&default_manifest)?),
        None => None,
    };

    let mut tests = Vec::new();
    for test_dir in sorted_entries(root)? {
        if !test_dir.is_dir() {
            continue;
        }
        let name = test_dir
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| {
                Error::Format(format!("non UTF-8 test directory {}", test_dir.display()))
            })?
            .to_string();
        let mut logs = Vec::new();
        for (sub, verdict) in [("fail", Verdict::Fail), ("pass", Verdict::Pass)] {
            let dir = test_dir.join(sub);
            if !dir.is_dir() {
                continue;
            }
            for path in sorted_entries(&dir)? {
                if !path.is_file() || path.extension().and_then(|e| e.to_str()) != Some("log") {
                    continue;
                }
                let file = path.file_name().and_then(|n| n.to_str()).ok_or_else(|| {
                    Error::Format(format!("non UTF-8 file name {}", path.display()))
                })?;
                let source_id = format!("{name}/{sub}/{file}");
                let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
                let text = String::from_utf8_lossy(&bytes).into_owned();
                let produced_at = match manifest.as_ref().and_then(|m| m.get(&source_id)) {
                    Some(entry) => {
                        if entry.verdict != verdict {
                            return Err(Error::Format(format!(
                                "manifest says {source_id} is {} but it lives under {sub}/",
                                entry.verdict
                            )));
                        }
                        entry.produced_at
                    }
                    None => file_time(&path)?,
                };
                logs.push(RawLog::new(source_id, verdict, produced_at, text));
            }
        }
        if !logs.is_empty() {
            tests.push(TestCorpus { name, logs });
        }
    }
    Ok(tests)
}
