//! One-dimensional complete-linkage clustering of event scores.
//!
//! Events are merged while the score spread of the merged cluster stays
//! within the uncorrected standard deviation of all scores being clustered.
//! With distance `|a - b|` and complete linkage every cluster is an interval
//! in score order and only neighbouring intervals can be the closest pair,
//! so the agglomeration runs over a linked list of intervals with a heap of
//! neighbour candidates instead of a full distance matrix.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::abstraction::EventId;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredEvent {
    pub event_id: EventId,
    pub score: f64,
}

impl ScoredEvent {
    pub fn new(event_id: EventId, score: f64) -> Self {
        ScoredEvent { event_id, score }
    }
}

/// How a cluster's members are folded into its rank score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    #[default]
    Mean,
    Max,
}

impl Aggregate {
    pub fn name(self) -> &'static str {
        match self {
            Aggregate::Mean => "mean",
            Aggregate::Max => "max",
        }
    }

    fn apply(self, members: &[ScoredEvent]) -> f64 {
        match self {
            Aggregate::Mean => members.iter().map(|m| m.score).sum::<f64>() / members.len() as f64,
            Aggregate::Max => members
                .iter()
                .map(|m| m.score)
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

impl fmt::Display for Aggregate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Aggregate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mean" => Ok(Aggregate::Mean),
            "max" => Ok(Aggregate::Max),
            other => Err(Error::Config(format!(
                "unknown aggregate {other:?}; expected mean or max"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCluster {
    /// Members by descending score, then ascending event id.
    pub members: Vec<ScoredEvent>,
    pub aggregate: f64,
}

impl ScoredCluster {
    pub fn max_score(&self) -> f64 {
        self.members[0].score
    }

    pub fn min_score(&self) -> f64 {
        self.members[self.members.len() - 1].score
    }

    pub fn min_event_id(&self) -> EventId {
        self.members
            .iter()
            .map(|m| m.event_id)
            .min()
            .expect("nonempty cluster")
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Uncorrected sample standard deviation, `sqrt(sum((x - mean)^2) / N)`.
pub fn threshold(scores: &[f64]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::Usage("threshold of an empty score list".into()));
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let var = scores.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    Ok(var.sqrt())
}

/// Replace infinite scores with finite stand-ins that stay strictly apart
/// from every finite score after thresholding.
///
/// `+inf` becomes `max + unit`, where `unit` is the spread of the finite
/// scores (or 1 when they are all equal or absent). The standard deviation of
/// the result is then always below `unit`, so the stand-ins never merge with
/// finite events, and all of them land on the same value.
pub fn finite_events(scores: &[(EventId, f64)]) -> Vec<ScoredEvent> {
    let finite = scores.iter().map(|s| s.1).filter(|s| s.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
        (lo.min(s), hi.max(s))
    });
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 0.0) };
    let unit = if hi > lo { hi - lo } else { 1.0 };
    scores
        .iter()
        .map(|&(id, s)| {
            let s = if s == f64::INFINITY {
                hi + unit
            } else if s == f64::NEG_INFINITY {
                lo - unit
            } else {
                s
            };
            ScoredEvent::new(id, s)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    distance: f64,
    min_id: EventId,
    left: usize,
    right: usize,
    left_version: u32,
    right_version: u32,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then(self.min_id.cmp(&other.min_id))
            .then(self.left.cmp(&other.left))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Interval {
    start: usize,
    end: usize,
    min_id: EventId,
    prev: Option<usize>,
    next: Option<usize>,
    alive: bool,
    version: u32,
}

/// Complete-linkage agglomerative clustering of scores with distance
/// `|a - b|`, merging the closest pair while its merged spread is at most `t`.
///
/// Equal-distance candidates merge in order of the smallest event id they
/// contain, then lowest scores first. Returns the partition as member lists in ascending score order.
pub fn hac_complete(events: &[ScoredEvent], t: f64) -> Vec<Vec<ScoredEvent>> {
    let mut sorted = events.to_vec();
    sorted.sort_by(|a, b| {
        a.score
            .total_cmp(&b.score)
            .then(a.event_id.cmp(&b.event_id))
    });

    // Equal scores are at distance 0 and always merge first.
    let mut clusters: Vec<Interval> = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j].score == sorted[i].score {
            j += 1;
        }
        let min_id = sorted[i..j].iter().map(|e| e.event_id).min().unwrap();
        let idx = clusters.len();
        clusters.push(Interval {
            start: i,
            end: j,
            min_id,
            prev: idx.checked_sub(1),
            next: None,
            alive: true,
            version: 0,
        });
        if idx > 0 {
            clusters[idx - 1].next = Some(idx);
        }
        i = j;
    }

    let candidate = |clusters: &[Interval], l: usize, r: usize| Candidate {
        distance: sorted[clusters[r].end - 1].score - sorted[clusters[l].start].score,
        min_id: clusters[l].min_id.min(clusters[r].min_id),
        left: l,
        right: r,
        left_version: clusters[l].version,
        right_version: clusters[r].version,
    };

    let mut heap = BinaryHeap::new();
    for l in 0..clusters.len().saturating_sub(1) {
        heap.push(Reverse(candidate(&clusters, l, l + 1)));
    }

    while let Some(Reverse(c)) = heap.pop() {
        let (l, r) = (c.left, c.right);
        let stale = !clusters[l].alive
            || !clusters[r].alive
            || clusters[l].version != c.left_version
            || clusters[r].version != c.right_version
            || clusters[l].next != Some(r);
        if stale {
            continue;
        }
        if c.distance > t {
            break;
        }
        let (r_end, r_min, r_next) = (clusters[r].end, clusters[r].min_id, clusters[r].next);
        clusters[r].alive = false;
        let left = &mut clusters[l];
        left.end = r_end;
        left.min_id = left.min_id.min(r_min);
        left.next = r_next;
        left.version += 1;
        if let Some(n) = r_next {
            clusters[n].prev = Some(l);
            heap.push(Reverse(candidate(&clusters, l, n)));
        }
        if let Some(p) = clusters[l].prev {
            heap.push(Reverse(candidate(&clusters, p, l)));
        }
    }

    clusters
        .iter()
        .filter(|c| c.alive)
        .map(|c| sorted[c.start..c.end].to_vec())
        .collect()
}

/// Order clusters by aggregate score, descending. Ties go to the cluster
/// with the higher top score, then to the smallest member event id.
pub fn rank_clusters(partition: Vec<Vec<ScoredEvent>>, aggregate: Aggregate) -> Vec<ScoredCluster> {
    let mut ranked: Vec<ScoredCluster> = partition
        .into_iter()
        .filter(|members| !members.is_empty())
        .map(|mut members| {
            members.sort_by(|a, b| {
                b.score
                    .total_cmp(&a.score)
                    .then(a.event_id.cmp(&b.event_id))
            });
            let aggregate = aggregate.apply(&members);
            ScoredCluster { members, aggregate }
        })
        .collect();
    ranked.sort_by(|a, b| {
        b.aggregate
            .total_cmp(&a.aggregate)
            .then(b.max_score().total_cmp(&a.max_score()))
            .then(a.min_event_id().cmp(&b.min_event_id()))
    });
    ranked
}

/// Threshold, cluster and rank a set of scored events in one go.
/// Infinite scores are made finite first (see [`finite_events`]).
pub fn cluster_scores(
    scores: &[(EventId, f64)],
    aggregate: Aggregate,
) -> Result<(f64, Vec<ScoredCluster>)> {
    let events = finite_events(scores);
    let values: Vec<f64> = events.iter().map(|e| e.score).collect();
    let t = threshold(&values)?;
    Ok((t, rank_clusters(hac_complete(&events, t), aggregate)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn events(scores: &[f64]) -> Vec<ScoredEvent> {
        scores
            .iter()
            .enumerate()
            .map(|(i, &s)| ScoredEvent::new(EventId(i as u32), s))
            .collect()
    }

    fn score_sets(p: &[Vec<ScoredEvent>]) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = p
            .iter()
            .map(|c| c.iter().map(|e| e.score).collect())
            .collect();
        out.sort_by(|a, b| a[0].total_cmp(&b[0]));
        out
    }

    #[test]
    fn threshold_examples() {
        let t = threshold(&[1.0, 1.0, 0.5]).unwrap();
        assert!((t - 0.2357022603955158).abs() < 1e-12);
        assert!((t - 0.23570).abs() < 1e-5);
        assert_eq!(threshold(&[0.3, 0.3, 0.3]).unwrap(), 0.0);
        assert_eq!(threshold(&[0.0, 1.0]).unwrap(), 0.5);
        assert!(matches!(threshold(&[]), Err(Error::Usage(_))));
    }

    #[test]
    fn hand_simulated_merge() {
        let ev = events(&[1.0, 1.0, 0.5]);
        let t = threshold(&[1.0, 1.0, 0.5]).unwrap();
        assert_eq!(
            score_sets(&hac_complete(&ev, t)),
            vec![vec![0.5], vec![1.0, 1.0]]
        );
    }

    #[test]
    fn all_equal_single_cluster() {
        let ev = events(&[0.7; 6]);
        assert_eq!(hac_complete(&ev, 0.0).len(), 1);
    }

    #[test]
    fn far_apart_singletons() {
        assert_eq!(hac_complete(&events(&[0.0, 10.0]), 0.5).len(), 2);
    }

    #[test]
    fn equal_distance_tie_goes_to_smallest_id() {
        // 0 -- 1 -- 2 with t = 1: only one of the two unit-distance merges fits.
        let ev = vec![
            ScoredEvent::new(EventId(5), 0.0),
            ScoredEvent::new(EventId(9), 1.0),
            ScoredEvent::new(EventId(2), 2.0),
        ];
        assert_eq!(
            score_sets(&hac_complete(&ev, 1.0)),
            vec![vec![0.0], vec![1.0, 2.0]]
        );
        let ev = vec![
            ScoredEvent::new(EventId(1), 0.0),
            ScoredEvent::new(EventId(9), 1.0),
            ScoredEvent::new(EventId(2), 2.0),
        ];
        assert_eq!(
            score_sets(&hac_complete(&ev, 1.0)),
            vec![vec![0.0, 1.0], vec![2.0]]
        );
    }

    #[test]
    fn ranking() {
        let a = vec![ScoredEvent::new(EventId(1), 0.9)];
        let b = vec![ScoredEvent::new(EventId(0), 0.2)];
        let r = rank_clusters(vec![b.clone(), a.clone()], Aggregate::Mean);
        assert_eq!(r[0].members, a);
        assert_eq!(r[1].members, b);
        let single = rank_clusters(vec![a.clone()], Aggregate::Mean);
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].aggregate, 0.9);
    }

    #[test]
    fn ranking_tie_prefers_higher_max() {
        let low = vec![
            ScoredEvent::new(EventId(0), 0.75),
            ScoredEvent::new(EventId(1), 0.75),
        ];
        let high = vec![
            ScoredEvent::new(EventId(2), 1.0),
            ScoredEvent::new(EventId(3), 0.5),
        ];
        let r = rank_clusters(vec![low, high], Aggregate::Mean);
        assert_eq!(r[0].aggregate, r[1].aggregate);
        assert_eq!(r[0].max_score(), 1.0);
    }

    #[test]
    fn max_aggregate() {
        let c = vec![
            ScoredEvent::new(EventId(0), 0.1),
            ScoredEvent::new(EventId(1), 0.4),
        ];
        assert_eq!(rank_clusters(vec![c], Aggregate::Max)[0].aggregate, 0.4);
    }

    #[test]
    fn sentinels_stay_apart() {
        let scores = vec![
            (EventId(0), f64::INFINITY),
            (EventId(1), 4.0),
            (EventId(2), 1.0),
            (EventId(3), 4.0),
            (EventId(4), f64::INFINITY),
        ];
        let fin = finite_events(&scores);
        assert_eq!(fin[0].score, 7.0);
        let (_, ranked) = cluster_scores(&scores, Aggregate::Mean).unwrap();
        let top: Vec<EventId> = ranked[0].members.iter().map(|m| m.event_id).collect();
        assert_eq!(top, vec![EventId(0), EventId(4)]);
        let only_inf = finite_events(&[(EventId(0), f64::INFINITY), (EventId(1), f64::INFINITY)]);
        assert!(only_inf.iter().all(|e| e.score == 1.0));
    }

    /// Textbook complete-linkage HAC over all cluster pairs.
    fn naive_hac(events: &[ScoredEvent], t: f64) -> Vec<Vec<ScoredEvent>> {
        let mut clusters: Vec<Vec<ScoredEvent>> = events.iter().map(|e| vec![*e]).collect();
        loop {
            let mut best: Option<(f64, EventId, f64, usize, usize)> = None;
            for a in 0..clusters.len() {
                for b in a + 1..clusters.len() {
                    let mut d: f64 = 0.0;
                    for x in &clusters[a] {
                        for y in &clusters[b] {
                            d = d.max((x.score - y.score).abs());
                        }
                    }
                    let union = || clusters[a].iter().chain(&clusters[b]);
                    let id = union().map(|e| e.event_id).min().unwrap();
                    let low = union().map(|e| e.score).fold(f64::INFINITY, f64::min);
                    let better = match best {
                        None => true,
                        Some((bd, bid, blow, _, _)) => {
                            d < bd || (d == bd && (id < bid || (id == bid && low < blow)))
                        }
                    };
                    if better {
                        best = Some((d, id, low, a, b));
                    }
                }
            }
            match best {
                Some((d, _, _, a, b)) if d <= t => {
                    let moved = clusters.remove(b);
                    clusters[a].extend(moved);
                }
                _ => return clusters,
            }
        }
    }

    fn canon(p: Vec<Vec<ScoredEvent>>) -> Vec<Vec<u32>> {
        let mut out: Vec<Vec<u32>> = p
            .into_iter()
            .map(|c| {
                let mut ids: Vec<u32> = c.iter().map(|e| e.event_id.0).collect();
                ids.sort();
                ids
            })
            .collect();
        out.sort();
        out
    }

    proptest! {
        #[test]
        fn matches_naive_hac(raw in proptest::collection::vec(0u8..12, 1..25), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut order: Vec<u32> = (0..raw.len() as u32).collect();
            order.shuffle(&mut rng);
            let ev: Vec<ScoredEvent> = raw.iter().zip(&order).map(|(&s, &id)| ScoredEvent::new(EventId(id), f64::from(s) * 0.25)).collect();
            let values: Vec<f64> = ev.iter().map(|e| e.score).collect();
            let t = threshold(&values).unwrap();
            prop_assert_eq!(canon(hac_complete(&ev, t)), canon(naive_hac(&ev, t)));
            // also at a threshold that produces exact ties
            prop_assert_eq!(canon(hac_complete(&ev, 0.5)), canon(naive_hac(&ev, 0.5)));
        }

        #[test]
        fn sentinel_gap_exceeds_threshold(finite in proptest::collection::vec(-5.0f64..5.0, 0..30), n_inf in 1usize..5) {
            let mut scores: Vec<(EventId, f64)> = finite.iter().enumerate().map(|(i, &s)| (EventId(i as u32), s)).collect();
            for k in 0..n_inf {
                scores.push((EventId((finite.len() + k) as u32), f64::INFINITY));
            }
            let (_, ranked) = cluster_scores(&scores, Aggregate::Mean).unwrap();
            prop_assert_eq!(ranked[0].len(), n_inf);
            prop_assert!(ranked[0].members.iter().all(|m| m.event_id.0 as usize >= finite.len()));
        }
    }
}
