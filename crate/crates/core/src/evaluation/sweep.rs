//! Chronological data sweep: every target is re-diagnosed as failing and
//! passing logs accumulate in time order.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::abstraction::{AbstractedLog, EventId};
use crate::clustering::Aggregate;
use crate::diagnosis::{diagnose_events, Retrieve};
use crate::error::{Error, Result};
use crate::evaluation::metrics::{median, RetrievalScore};
use crate::spectrum::{build_matrix, CoverageMatrix, Measure};

/// Relevant events per failing log, keyed by source id.
pub type GroundTruth = BTreeMap<String, BTreeSet<EventId>>;

#[derive(Debug, Clone, PartialEq)]
pub struct SbldOptions {
    pub measures: Vec<Measure>,
    pub k: Retrieve,
    pub aggregate: Aggregate,
}

impl Default for SbldOptions {
    fn default() -> Self {
        SbldOptions {
            measures: Measure::ALL.to_vec(),
            k: Retrieve::Top(1),
            aggregate: Aggregate::Mean,
        }
    }
}

/// Median effort reduction and recall over the measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedianScores {
    pub effort_reduction: f64,
    pub recall: f64,
}

/// Diagnose `target` once per measure against `matrix` and take medians.
pub fn score_target(
    target: &AbstractedLog,
    matrix: &CoverageMatrix,
    relevant: &BTreeSet<EventId>,
    options: &SbldOptions,
) -> Result<MedianScores> {
    if options.measures.is_empty() {
        return Err(Error::Usage("no measures selected".into()));
    }
    let events = target.distinct_events();
    let mut er = Vec::with_capacity(options.measures.len());
    let mut recall = Vec::with_capacity(options.measures.len());
    for &m in &options.measures {
        let report = diagnose_events(
            &target.source_id,
            &events,
            matrix,
            m,
            options.k,
            options.aggregate,
        )?;
        let s = RetrievalScore::of(&report.retrieved_events(), relevant, report.events_in_log)?;
        er.push(s.effort_reduction);
        recall.push(s.recall);
    }
    Ok(MedianScores {
        effort_reduction: median(&er).expect("nonempty"),
        recall: median(&recall).expect("nonempty"),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub test: String,
    /// Number of failing logs in the spectrum.
    pub i: usize,
    /// Number of passing logs in the spectrum.
    pub j: usize,
    pub target: String,
    pub median_effort_reduction: f64,
    pub median_recall: f64,
}

/// Stable chronological order, ties broken by source id.
pub fn sort_chronologically(logs: &mut [AbstractedLog]) {
    logs.sort_by(|a, b| {
        a.produced_at
            .cmp(&b.produced_at)
            .then_with(|| a.source_id.cmp(&b.source_id))
    });
}

/// For every `i` in `1..=|F|` and `j` in `0..=|P|`, diagnose each of the
/// first `i` failing logs against the spectrum of the first `i` failing and
/// first `j` passing logs.
///
/// Cells run in parallel on the current rayon pool; output is ordered by
/// `(i, j, chronological target position)` regardless of scheduling.
pub fn sweep(
    test: &str,
    failing: &[AbstractedLog],
    passing: &[AbstractedLog],
    truth: &GroundTruth,
    options: &SbldOptions,
) -> Result<Vec<SweepRecord>> {
    let mut f = failing.to_vec();
    let mut p = passing.to_vec();
    sort_chronologically(&mut f);
    sort_chronologically(&mut p);
    for l in &f {
        if !truth.contains_key(&l.source_id) {
            return Err(Error::Usage(format!("no ground truth for {}", l.source_id)));
        }
    }
    let cells: Vec<(usize, usize)> = (1..=f.len())
        .flat_map(|i| (0..=p.len()).map(move |j| (i, j)))
        .collect();
    let per_cell: Vec<Vec<SweepRecord>> = cells
        .par_iter()
        .map(|&(i, j)| {
            let matrix = build_matrix(&f[..i], &p[..j]);
            f[..i]
                .iter()
                .map(|target| {
                    let s = score_target(target, &matrix, &truth[&target.source_id], options)?;
                    Ok(SweepRecord {
                        test: test.to_string(),
                        i,
                        j,
                        target: target.source_id.clone(),
                        median_effort_reduction: s.effort_reduction,
                        median_recall: s.recall,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    // par_iter().collect() preserves input order, which is already (i, j).
    Ok(per_cell.into_iter().flatten().collect())
}

/// Number of records [`sweep`] emits for the given corpus sizes.
pub fn sweep_record_count(n_failing: usize, n_passing: usize) -> usize {
    (n_passing + 1) * n_failing * (n_failing + 1) / 2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapCell {
    pub test: String,
    pub i: usize,
    pub j: usize,
    pub median_effort_reduction: f64,
    pub median_recall: f64,
}

/// Median of the per-target medians for each `(test, i, j)`, sorted.
pub fn heatmap(records: &[SweepRecord]) -> Vec<HeatmapCell> {
    type Cell<'a> = (&'a str, usize, usize);
    let mut groups: BTreeMap<Cell, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in records {
        let g = groups.entry((r.test.as_str(), r.i, r.j)).or_default();
        g.0.push(r.median_effort_reduction);
        g.1.push(r.median_recall);
    }
    groups
        .into_iter()
        .map(|((test, i, j), (er, rc))| HeatmapCell {
            test: test.to_string(),
            i,
            j,
            median_effort_reduction: median(&er).expect("nonempty group"),
            median_recall: median(&rc).expect("nonempty group"),
        })
        .collect()
}

pub const SWEEP_HEADER: &str = "test,i,j,target,median_er,median_recall";
pub const HEATMAP_HEADER: &str = "test,i,j,median_er,median_recall";

pub fn sweep_csv(records: &[SweepRecord]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(SWEEP_HEADER.split(','))
        .map_err(|e| Error::csv("sweep.csv", e))?;
    for r in records {
        w.write_record([
            r.test.clone(),
            r.i.to_string(),
            r.j.to_string(),
            r.target.clone(),
            format!("{:.6}", r.median_effort_reduction),
            format!("{:.6}", r.median_recall),
        ])
        .map_err(|e| Error::csv("sweep.csv", e))?;
    }
    finish(w, "sweep.csv")
}

pub fn heatmap_csv(cells: &[HeatmapCell]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(HEATMAP_HEADER.split(','))
        .map_err(|e| Error::csv("heatmap.csv", e))?;
    for c in cells {
        w.write_record([
            c.test.clone(),
            c.i.to_string(),
            c.j.to_string(),
            format!("{:.6}", c.median_effort_reduction),
            format!("{:.6}", c.median_recall),
        ])
        .map_err(|e| Error::csv("heatmap.csv", e))?;
    }
    finish(w, "heatmap.csv")
}

pub(crate) fn finish(w: csv::Writer<Vec<u8>>, what: &str) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Format(format!("{what}: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(format!("{what}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::Verdict;
    use chrono::{TimeZone, Utc};

    fn log(id: &str, minute: u32, events: &[u32]) -> AbstractedLog {
        AbstractedLog {
            source_id: id.into(),
            verdict: Verdict::Fail,
            produced_at: Utc.with_ymd_and_hms(2021, 3, 1, 10, minute, 0).unwrap(),
            events: events.iter().map(|&e| EventId(e)).collect(),
            event_count: events.len(),
        }
    }

    fn truth_for(logs: &[AbstractedLog], relevant: &[u32]) -> GroundTruth {
        logs.iter()
            .map(|l| {
                (
                    l.source_id.clone(),
                    relevant.iter().map(|&e| EventId(e)).collect(),
                )
            })
            .collect()
    }

    #[test]
    fn one_fail_one_pass_loop_shape() {
        let f = vec![log("f", 1, &[1, 2])];
        let p = vec![log("p", 2, &[1])];
        let recs = sweep("t", &f, &p, &truth_for(&f, &[2]), &SbldOptions::default()).unwrap();
        let cells: Vec<(usize, usize)> = recs.iter().map(|r| (r.i, r.j)).collect();
        assert_eq!(cells, vec![(1, 0), (1, 1)]);
    }

    #[test]
    fn record_count_closed_form() {
        for nf in 1..=4 {
            for np in 0..=3 {
                let f: Vec<_> = (0..nf)
                    .map(|i| log(&format!("f{i}"), i as u32, &[1, 2, 3 + i as u32]))
                    .collect();
                let p: Vec<_> = (0..np)
                    .map(|i| log(&format!("p{i}"), 30 + i as u32, &[1, 2]))
                    .collect();
                let recs =
                    sweep("t", &f, &p, &truth_for(&f, &[1]), &SbldOptions::default()).unwrap();
                let mut enumerated = 0;
                for i in 1..=nf {
                    for _j in 0..=np {
                        enumerated += i;
                    }
                }
                assert_eq!(recs.len(), enumerated);
                assert_eq!(recs.len(), sweep_record_count(nf, np));
            }
        }
    }

    #[test]
    fn no_passing_logs_gives_full_recall_zero_er_for_failed_only() {
        let f = vec![log("f0", 0, &[1, 2, 3]), log("f1", 1, &[1, 4])];
        let p = vec![log("p0", 5, &[1])];
        let opts = SbldOptions {
            measures: vec![Measure::FailedOnly],
            ..SbldOptions::default()
        };
        let recs = sweep("t", &f, &p, &truth_for(&f, &[1]), &opts).unwrap();
        for r in recs.iter().filter(|r| r.j == 0) {
            assert_eq!(r.median_recall, 1.0);
            assert_eq!(r.median_effort_reduction, 0.0);
        }
    }

    #[test]
    fn targets_do_not_depend_on_j() {
        let f: Vec<_> = (0..3)
            .map(|i| log(&format!("f{i}"), 10 - i, &[1, i + 2]))
            .collect();
        let p: Vec<_> = (0..2)
            .map(|i| log(&format!("p{i}"), 20 + i, &[1]))
            .collect();
        let recs = sweep("t", &f, &p, &truth_for(&f, &[1]), &SbldOptions::default()).unwrap();
        for i in 1..=3 {
            let sets: BTreeSet<Vec<&str>> = (0..=2)
                .map(|j| {
                    recs.iter()
                        .filter(|r| r.i == i && r.j == j)
                        .map(|r| r.target.as_str())
                        .collect()
                })
                .collect();
            assert_eq!(sets.len(), 1);
        }
        // chronological: f2 is the oldest
        assert_eq!(recs[0].target, "f2");
    }

    #[test]
    fn heatmap_medians_and_order() {
        let rec = |test: &str, i, j, t: &str, er, rc| SweepRecord {
            test: test.into(),
            i,
            j,
            target: t.into(),
            median_effort_reduction: er,
            median_recall: rc,
        };
        let single = heatmap(&[rec("a", 1, 0, "x", 0.4, 0.9)]);
        assert_eq!(
            (single[0].median_effort_reduction, single[0].median_recall),
            (0.4, 0.9)
        );
        let cells = heatmap(&[
            rec("b", 1, 0, "x", 0.1, 0.1),
            rec("a", 2, 1, "x", 0.8, 1.0),
            rec("a", 2, 1, "y", 0.6, 0.0),
            rec("a", 1, 3, "x", 0.5, 0.5),
        ]);
        let keys: Vec<(&str, usize, usize)> =
            cells.iter().map(|c| (c.test.as_str(), c.i, c.j)).collect();
        assert_eq!(keys, vec![("a", 1, 3), ("a", 2, 1), ("b", 1, 0)]);
        assert!((cells[1].median_effort_reduction - 0.7).abs() < 1e-12);
        assert_eq!(cells[1].median_recall, 0.5);
        let csv = heatmap_csv(&cells).unwrap();
        assert!(csv.starts_with("test,i,j,median_er,median_recall\na,1,3,0.500000,0.500000\n"));
    }
}
