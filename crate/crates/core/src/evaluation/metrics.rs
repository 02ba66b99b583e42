use std::collections::BTreeSet;

use crate::abstraction::EventId;
use crate::error::{Error, Result};

/// Share of relevant events found among the retrieved ones.
pub fn recall_best(retrieved: &BTreeSet<EventId>, relevant: &BTreeSet<EventId>) -> Result<f64> {
    if relevant.is_empty() {
        return Err(Error::Usage("recall needs a nonempty relevant set".into()));
    }
    let hit = retrieved.intersection(relevant).count();
    Ok(hit as f64 / relevant.len() as f64)
}

/// `1 - retrieved / total`, the share of the log a reader can skip.
pub fn effort_reduction(retrieved_count: usize, log_event_count: usize) -> Result<f64> {
    if retrieved_count == 0 || retrieved_count > log_event_count {
        return Err(Error::Usage(format!(
            "effort reduction needs 1 <= retrieved ({retrieved_count}) <= events in log ({log_event_count})"
        )));
    }
    Ok(1.0 - retrieved_count as f64 / log_event_count as f64)
}

/// Recall and effort reduction of one retrieval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetrievalScore {
    pub effort_reduction: f64,
    pub recall: f64,
    /// Nothing was retrieved; scored as ER 1, recall 0.
    pub empty: bool,
}

impl RetrievalScore {
    pub fn of(
        retrieved: &BTreeSet<EventId>,
        relevant: &BTreeSet<EventId>,
        log_event_count: usize,
    ) -> Result<Self> {
        if retrieved.is_empty() {
            // Still validate the relevant set.
            recall_best(retrieved, relevant)?;
            return Ok(RetrievalScore {
                effort_reduction: 1.0,
                recall: 0.0,
                empty: true,
            });
        }
        Ok(RetrievalScore {
            effort_reduction: effort_reduction(retrieved.len(), log_event_count)?,
            recall: recall_best(retrieved, relevant)?,
            empty: false,
        })
    }
}

/// Median; an even count averages the two central order statistics.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(ids: &[u32]) -> BTreeSet<EventId> {
        ids.iter().map(|&i| EventId(i)).collect()
    }

    #[test]
    fn recall_cases() {
        assert_eq!(recall_best(&set(&[0, 2]), &set(&[0, 1])).unwrap(), 0.5);
        assert_eq!(recall_best(&set(&[0, 1, 2]), &set(&[0, 1])).unwrap(), 1.0);
        assert_eq!(recall_best(&set(&[5]), &set(&[0, 1])).unwrap(), 0.0);
        assert!(recall_best(&set(&[5]), &set(&[])).is_err());
    }

    #[test]
    fn effort_reduction_cases() {
        assert!((effort_reduction(11, 30).unwrap() - 0.6333).abs() < 1e-4);
        assert!((effort_reduction(1, 100).unwrap() - 0.99).abs() < 1e-12);
        assert_eq!(effort_reduction(7, 7).unwrap(), 0.0);
        assert!(effort_reduction(0, 7).is_err());
        assert!(effort_reduction(8, 7).is_err());
    }

    #[test]
    fn empty_retrieval_convention() {
        let s = RetrievalScore::of(&set(&[]), &set(&[1]), 10).unwrap();
        assert_eq!((s.effort_reduction, s.recall, s.empty), (1.0, 0.0, true));
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[0.8, 0.6]), Some(0.7));
        let ten: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(median(&ten), Some(5.5));
    }
}
