//! The complete experiment over a corpus of tests: chronological sweep,
//! evidence variants, pattern-search baseline, and paired statistics.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::abstraction::{
    abstract_corpus, AbstractedLog, Abstractor, EventId, EventVocabulary, RawLog, Verdict,
};
use crate::corpus::TestCorpus;
use crate::error::{Error, Result};
use crate::evaluation::baseline::baseline_search;
use crate::evaluation::evidence::{evidence_config, EvidenceVariant};
use crate::evaluation::metrics::RetrievalScore;
use crate::evaluation::signature::{ground_truth, lint_signature, SignatureBook};
use crate::evaluation::sweep::{
    finish, heatmap, heatmap_csv, score_target, sort_chronologically, sweep, sweep_csv,
    GroundTruth, HeatmapCell, SbldOptions, SweepRecord,
};
use crate::spectrum::build_matrix;
use crate::stats::{compare, compare_csv, ComparisonResult, PairedSample};

pub const BASELINE_VARIANT: &str = "pattern-search";
pub const METRIC_ER: &str = "effort_reduction";
pub const METRIC_RECALL: &str = "recall";
pub const PER_LOG_HEADER: &str = "test,target,variant,metric,value,empty_retrieval";

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationConfig {
    pub sbld: SbldOptions,
    pub variants: Vec<EvidenceVariant>,
    pub run_sweep: bool,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            sbld: SbldOptions::default(),
            variants: EvidenceVariant::ALL.to_vec(),
            run_sweep: true,
        }
    }
}

/// One row of `per_log_scores.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerLogScore {
    pub test: String,
    pub target: String,
    pub variant: String,
    pub metric: &'static str,
    pub value: f64,
    pub empty_retrieval: bool,
}

/// A test after abstraction, signature checks and chronological sorting.
#[derive(Debug, Clone)]
pub struct PreparedTest {
    pub name: String,
    /// Admitted failing logs, oldest first.
    pub failing: Vec<AbstractedLog>,
    /// Passing logs, oldest first.
    pub passing: Vec<AbstractedLog>,
    pub truth: GroundTruth,
}

#[derive(Debug, Clone, Default)]
pub struct EvaluationOutput {
    pub sweep: Vec<SweepRecord>,
    pub heatmap: Vec<HeatmapCell>,
    pub per_log: Vec<PerLogScore>,
    pub comparisons: Vec<ComparisonResult>,
    /// Excluded tests and logs, lint findings, skipped comparisons.
    pub warnings: Vec<String>,
    pub admitted_targets: usize,
}

impl EvaluationOutput {
    pub fn sweep_csv(&self) -> Result<String> {
        sweep_csv(&self.sweep)
    }

    pub fn heatmap_csv(&self) -> Result<String> {
        heatmap_csv(&self.heatmap)
    }

    pub fn per_log_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(Vec::new());
        let err = |e| Error::csv("per_log_scores.csv", e);
        w.write_record(PER_LOG_HEADER.split(',')).map_err(err)?;
        for s in &self.per_log {
            w.write_record([
                s.test.as_str(),
                s.target.as_str(),
                s.variant.as_str(),
                s.metric,
                &format!("{:.6}", s.value),
                if s.empty_retrieval { "true" } else { "false" },
            ])
            .map_err(err)?;
        }
        finish(w, "per_log_scores.csv")
    }

    pub fn compare_csv(&self) -> String {
        compare_csv(&self.comparisons)
    }
}

/// Abstract every test and apply its signature. Tests without a signature
/// are skipped with a warning; failing logs that do not carry the signature
/// are dropped from the test entirely.
pub fn prepare_tests(
    corpus: &[TestCorpus],
    abstractor: &Abstractor,
    signatures: &SignatureBook,
    warnings: &mut Vec<String>,
) -> (Vec<PreparedTest>, EventVocabulary) {
    let mut vocab = EventVocabulary::new();
    let mut prepared = Vec::new();
    for test in corpus {
        let Some(sig) = signatures.for_test(&test.name) else {
            match signatures.assignment(&test.name) {
                Some(name) => warnings.push(format!(
                    "test {}: unknown signature {name:?}; test excluded",
                    test.name
                )),
                None => warnings.push(format!(
                    "test {}: no signature assigned; test excluded",
                    test.name
                )),
            }
            continue;
        };
        let raw_refs: Vec<&RawLog> = test.logs.iter().collect();
        for p in lint_signature(sig, &raw_refs) {
            warnings.push(format!(
                "test {}: sub-pattern {p:?} of signature {} matches every log",
                test.name, sig.name
            ));
        }
        let abstracted = abstract_corpus(&test.logs, abstractor, &mut vocab);
        let mut failing = Vec::new();
        let mut passing = Vec::new();
        let mut truth = GroundTruth::new();
        for (raw, log) in test.logs.iter().zip(abstracted) {
            match raw.verdict {
                Verdict::Pass => passing.push(log),
                Verdict::Fail => match ground_truth(raw, &log, &vocab, sig) {
                    Ok(relevant) => {
                        truth.insert(log.source_id.clone(), relevant);
                        failing.push(log);
                    }
                    Err(excluded) => warnings.push(excluded.to_string()),
                },
            }
        }
        if failing.is_empty() {
            warnings.push(format!("test {}: no admissible failing logs", test.name));
            continue;
        }
        sort_chronologically(&mut failing);
        sort_chronologically(&mut passing);
        prepared.push(PreparedTest {
            name: test.name.clone(),
            failing,
            passing,
            truth,
        });
    }
    (prepared, vocab)
}

fn score_rows(test: &str, target: &str, variant: &str, s: RetrievalScore) -> [PerLogScore; 2] {
    let row = |metric, value| PerLogScore {
        test: test.to_string(),
        target: target.to_string(),
        variant: variant.to_string(),
        metric,
        value,
        empty_retrieval: s.empty,
    };
    [
        row(METRIC_ER, s.effort_reduction),
        row(METRIC_RECALL, s.recall),
    ]
}

/// Baseline and evidence-variant scores for every admitted target.
pub fn per_log_scores(
    test: &PreparedTest,
    vocab: &EventVocabulary,
    config: &EvaluationConfig,
) -> Result<Vec<PerLogScore>> {
    let per_target: Vec<Vec<PerLogScore>> = (0..test.failing.len())
        .into_par_iter()
        .map(|t| {
            let target = &test.failing[t];
            let relevant = &test.truth[&target.source_id];
            let mut rows = Vec::new();
            let found = baseline_search(target, vocab);
            let base = RetrievalScore::of(&found, relevant, target.distinct_events().len())?;
            rows.extend(score_rows(
                &test.name,
                &target.source_id,
                BASELINE_VARIANT,
                base,
            ));
            for &variant in &config.variants {
                if variant == EvidenceVariant::Minimal && test.passing.is_empty() {
                    continue;
                }
                let (f, p) = evidence_config(&test.failing, &test.passing, t, variant)?;
                let matrix = build_matrix(f, p);
                let s = score_target(target, &matrix, relevant, &config.sbld)?;
                let score = RetrievalScore {
                    effort_reduction: s.effort_reduction,
                    recall: s.recall,
                    empty: false,
                };
                rows.extend(score_rows(
                    &test.name,
                    &target.source_id,
                    variant.name(),
                    score,
                ));
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    Ok(per_target.into_iter().flatten().collect())
}

/// Variant pairs in the order comparisons are reported.
pub fn comparison_pairs() -> Vec<(&'static str, &'static str)> {
    let b = BASELINE_VARIANT;
    let (min, med, max) = ("minimal", "median", "maximal");
    vec![
        (b, min),
        (b, max),
        (b, med),
        (min, max),
        (min, med),
        (max, med),
    ]
}

/// Pair up per-log scores by target and run the comparison family.
pub fn compare_variants(
    per_log: &[PerLogScore],
    warnings: &mut Vec<String>,
) -> Result<Vec<ComparisonResult>> {
    let mut table: BTreeMap<(&str, &str, &str), f64> = BTreeMap::new();
    let mut targets: BTreeSet<(&str, &str)> = BTreeSet::new();
    for s in per_log {
        table.insert((s.target.as_str(), s.variant.as_str(), s.metric), s.value);
        targets.insert((s.test.as_str(), s.target.as_str()));
    }
    let mut samples = Vec::new();
    for metric in [METRIC_ER, METRIC_RECALL] {
        for (v1, v2) in comparison_pairs() {
            let pairs: Vec<(f64, f64)> = targets
                .iter()
                .filter_map(|&(_, t)| {
                    Some((*table.get(&(t, v1, metric))?, *table.get(&(t, v2, metric))?))
                })
                .collect();
            if pairs.is_empty() {
                warnings.push(format!(
                    "comparison {v1} vs {v2} on {metric}: no paired targets; skipped"
                ));
                continue;
            }
            samples.push(PairedSample {
                variant1: v1.to_string(),
                variant2: v2.to_string(),
                metric: metric.to_string(),
                pairs,
            });
        }
    }
    compare(&samples)
}

/// Run the whole experiment on the current rayon pool.
pub fn evaluate(
    corpus: &[TestCorpus],
    abstractor: &Abstractor,
    signatures: &SignatureBook,
    config: &EvaluationConfig,
) -> Result<EvaluationOutput> {
    let mut out = EvaluationOutput::default();
    let (tests, vocab) = prepare_tests(corpus, abstractor, signatures, &mut out.warnings);
    for test in &tests {
        if config.run_sweep {
            out.sweep.extend(sweep(
                &test.name,
                &test.failing,
                &test.passing,
                &test.truth,
                &config.sbld,
            )?);
        }
        out.per_log.extend(per_log_scores(test, &vocab, config)?);
        out.admitted_targets += test.failing.len();
    }
    out.heatmap = heatmap(&out.sweep);
    if out.admitted_targets > 0 {
        out.comparisons = compare_variants(&out.per_log, &mut out.warnings)?;
    }
    Ok(out)
}

/// Ground truth of a prepared test as a map from source id to relevant ids.
pub fn relevant_events<'a>(test: &'a PreparedTest, target: &str) -> Option<&'a BTreeSet<EventId>> {
    test.truth.get(target)
}
