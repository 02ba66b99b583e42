//! On-disk formats: vocabulary JSON, abstracted logs as JSON lines, and the
//! spectrum database (vocabulary plus sparse `matrix.csv`).

use std::fs;
use std::path::Path;

use crate::abstraction::{AbstractedLog, EventId, EventVocabulary, Verdict};
use crate::error::{Error, Result};
use crate::spectrum::{CoverageMatrix, CoverageRow};

pub const VOCABULARY_FILE: &str = "vocabulary.json";
pub const LOGS_FILE: &str = "logs.jsonl";
pub const MATRIX_FILE: &str = "matrix.csv";
pub const MATRIX_HEADER: &str = "source_id,verdict,event_id,value";

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn save_vocabulary(path: &Path, vocab: &EventVocabulary) -> Result<()> {
    write_text(path, &vocab.to_json())
}

pub fn load_vocabulary(path: &Path) -> Result<EventVocabulary> {
    EventVocabulary::from_json(&read_text(path)?)
}

pub fn logs_jsonl(logs: &[AbstractedLog]) -> String {
    let mut out = String::new();
    for log in logs {
        out.push_str(&serde_json::to_string(log).expect("log serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_logs_jsonl(text: &str) -> Result<Vec<AbstractedLog>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, line)| {
            let log: AbstractedLog = serde_json::from_str(line)
                .map_err(|e| Error::json(format!("logs line {}", n + 1), e))?;
            if log.event_count != log.events.len() {
                return Err(Error::Format(format!(
                    "logs line {}: event_count {} but {} events",
                    n + 1,
                    log.event_count,
                    log.events.len()
                )));
            }
            Ok(log)
        })
        .collect()
}

/// Sparse triplet form, one `source_id,verdict,event_id,1` line per set
/// cell. A row with no events is kept as `source_id,verdict,,0`.
pub fn matrix_csv(matrix: &CoverageMatrix) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    let err = |e| Error::csv(MATRIX_FILE, e);
    w.write_record(MATRIX_HEADER.split(',')).map_err(err)?;
    for (r, row) in matrix.rows().iter().enumerate() {
        let mut any = false;
        for e in matrix.row_events(r) {
            any = true;
            w.write_record([
                row.source_id.as_str(),
                row.verdict.as_str(),
                &e.0.to_string(),
                "1",
            ])
            .map_err(err)?;
        }
        if !any {
            w.write_record([row.source_id.as_str(), row.verdict.as_str(), "", "0"])
                .map_err(err)?;
        }
    }
    crate::evaluation::sweep::finish(w, MATRIX_FILE)
}

pub fn parse_matrix_csv(text: &str) -> Result<CoverageMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let mut rows: Vec<(CoverageRow, Vec<EventId>)> = Vec::new();
    let mut index: std::collections::HashMap<String, usize> = std::collections::HashMap::new();
    for (n, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(MATRIX_FILE, e))?;
        let line = n + 2;
        if rec.len() != 4 {
            return Err(Error::Format(format!(
                "{MATRIX_FILE} line {line}: expected 4 fields"
            )));
        }
        let verdict: Verdict = rec[1].parse()?;
        let r = *index.entry(rec[0].to_string()).or_insert_with(|| {
            rows.push((
                CoverageRow {
                    source_id: rec[0].to_string(),
                    verdict,
                },
                Vec::new(),
            ));
            rows.len() - 1
        });
        if rows[r].0.verdict != verdict {
            return Err(Error::Format(format!(
                "{MATRIX_FILE} line {line}: {} listed with two verdicts",
                &rec[0]
            )));
        }
        match (&rec[2], &rec[3]) {
            ("", "0") => {}
            (id, "1") => {
                let id: u32 = id.parse().map_err(|_| {
                    Error::Format(format!("{MATRIX_FILE} line {line}: bad event id {id:?}"))
                })?;
                rows[r].1.push(EventId(id));
            }
            _ => {
                return Err(Error::Format(format!(
                    "{MATRIX_FILE} line {line}: expected `<id>,1` or `,0`"
                )))
            }
        }
    }
    Ok(CoverageMatrix::from_rows(rows))
}

/// Vocabulary and coverage matrix persisted side by side in one directory.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumDb {
    pub vocabulary: EventVocabulary,
    pub matrix: CoverageMatrix,
}

impl SpectrumDb {
    pub fn save(&self, dir: &Path) -> Result<()> {
        for e in self.matrix.columns() {
            if self.vocabulary.text(*e).is_none() {
                return Err(Error::Usage(format!("event {e} missing from vocabulary")));
            }
        }
        save_vocabulary(&dir.join(VOCABULARY_FILE), &self.vocabulary)?;
        write_text(&dir.join(MATRIX_FILE), &matrix_csv(&self.matrix)?)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let vocabulary = load_vocabulary(&dir.join(VOCABULARY_FILE))?;
        let matrix = parse_matrix_csv(&read_text(&dir.join(MATRIX_FILE))?)?;
        for e in matrix.columns() {
            if vocabulary.text(*e).is_none() {
                return Err(Error::Format(format!(
                    "{}: event {e} not in vocabulary",
                    dir.join(MATRIX_FILE).display()
                )));
            }
        }
        Ok(SpectrumDb { vocabulary, matrix })
    }
}
