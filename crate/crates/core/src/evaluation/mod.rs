//! Experimental harness: signature ground truth, recall and effort
//! reduction, the chronological sweep, evidence variants, the pattern-search
//! baseline and the CSV artifacts consumed by plotting and statistics.

pub mod baseline;
pub mod evidence;
pub mod metrics;
pub mod pipeline;
pub mod signature;
pub mod sweep;

pub use baseline::{baseline_search, BASELINE_PATTERN};
pub use evidence::{evidence_config, EvidenceVariant};
pub use metrics::{effort_reduction, median, recall_best, RetrievalScore};
pub use pipeline::{
    evaluate, prepare_tests, EvaluationConfig, EvaluationOutput, PerLogScore, PreparedTest,
};
pub use signature::{
    ground_truth, lint_signature, CompiledSignature, Exclusion, Signature, SignatureBook,
};
pub use sweep::{
    heatmap, score_target, sweep, GroundTruth, HeatmapCell, MedianScores, SbldOptions, SweepRecord,
};
