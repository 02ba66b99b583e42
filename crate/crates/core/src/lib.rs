//! Spectrum-based log diagnosis.
//!
//! Logs from failing and passing CI runs are split into events and masked
//! ([`abstraction`]), counted into a coverage matrix and scored with one of
//! ten interestingness measures ([`spectrum`]), grouped by score with
//! complete-linkage clustering ([`clustering`]) and returned as ranked
//! clusters for a target failing log ([`diagnosis`]).
//!
//! [`evaluation`] and [`stats`] implement the experiment harness: signature
//! ground truth, recall and effort reduction, the chronological sweep,
//! evidence variants, a pattern-search baseline, Wilcoxon-Pratt tests, Holm
//! correction and Vargha-Delaney A12. [`synth`] generates a public corpus
//! with planted faults, and [`cli`] backs the `sbld` binary.
//!
//! ```
//! use sbld::abstraction::{abstract_log, Abstractor, EventVocabulary, RawLog, Verdict};
//! use sbld::spectrum::{build_matrix, Measure};
//! use sbld::diagnosis::{diagnose, Retrieve};
//!
//! let abstractor = Abstractor::default();
//! let mut vocab = EventVocabulary::new();
//! let t = chrono::DateTime::from_timestamp(0, 0).unwrap();
//! let fail = RawLog::new("f.log", Verdict::Fail, t,
//!     "2024-01-01 10:00:00 boot\n2024-01-01 10:00:01 disk 0xdeadbeef10 corrupt\n");
//! let pass = RawLog::new("p.log", Verdict::Pass, t, "2024-01-01 11:00:00 boot\n");
//! let f = abstract_log(&fail, &abstractor, &mut vocab);
//! let p = abstract_log(&pass, &abstractor, &mut vocab);
//! let matrix = build_matrix([&f], [&p]);
//! let mut report = diagnose(&f, &matrix, Measure::Ochiai, Retrieve::Top(1)).unwrap();
//! report.resolve_texts(&vocab);
//! assert_eq!(report.clusters[0].events[0].text.as_deref(), Some("<TS> disk <HEX> corrupt"));
//! ```

pub mod abstraction;
pub mod cli;
pub mod clustering;
pub mod corpus;
pub mod diagnosis;
pub mod error;
pub mod evaluation;
pub mod spectrum;
pub mod stats;
pub mod store;
pub mod synth;

pub use error::{Error, Result};
