use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::abstraction::AbstractedLog;
use crate::error::{Error, Result};

/// How much spectrum data accompanies a target log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvidenceVariant {
    /// The target plus the earliest passing log.
    Minimal,
    /// The earliest half (rounded up) of each list, the target forced in.
    Median,
    /// Every log of the test.
    Maximal,
}

impl EvidenceVariant {
    pub const ALL: [EvidenceVariant; 3] = [
        EvidenceVariant::Minimal,
        EvidenceVariant::Median,
        EvidenceVariant::Maximal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EvidenceVariant::Minimal => "minimal",
            EvidenceVariant::Median => "median",
            EvidenceVariant::Maximal => "maximal",
        }
    }
}

impl fmt::Display for EvidenceVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EvidenceVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "minimal" | "min" => Ok(EvidenceVariant::Minimal),
            "median" | "med" => Ok(EvidenceVariant::Median),
            "maximal" | "max" => Ok(EvidenceVariant::Maximal),
            other => Err(Error::Config(format!(
                "unknown evidence variant {other:?}; expected minimal, median or maximal"
            ))),
        }
    }
}

/// Failing and passing logs used as spectrum data for one target.
///
/// `failing` and `passing` must already be in chronological order and
/// `target` must index into `failing`.
pub fn evidence_config<'a>(
    failing: &'a [AbstractedLog],
    passing: &'a [AbstractedLog],
    target: usize,
    variant: EvidenceVariant,
) -> Result<(Vec<&'a AbstractedLog>, Vec<&'a AbstractedLog>)> {
    if target >= failing.len() {
        return Err(Error::Usage(format!(
            "target index {target} out of range for {} failing logs",
            failing.len()
        )));
    }
    match variant {
        EvidenceVariant::Minimal => {
            let first = passing.first().ok_or_else(|| {
                Error::Usage("minimal evidence needs at least one passing log".into())
            })?;
            Ok((vec![&failing[target]], vec![first]))
        }
        EvidenceVariant::Median => {
            let nf = failing.len().div_ceil(2);
            let np = passing.len().div_ceil(2);
            let mut f: Vec<&AbstractedLog> = failing[..nf].iter().collect();
            if target >= nf {
                f[nf - 1] = &failing[target];
            }
            Ok((f, passing[..np].iter().collect()))
        }
        EvidenceVariant::Maximal => Ok((failing.iter().collect(), passing.iter().collect())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::{to_seconds, Verdict};
    use chrono::Utc;

    fn logs(prefix: &str, n: usize) -> Vec<AbstractedLog> {
        (0..n)
            .map(|i| AbstractedLog {
                source_id: format!("{prefix}{i}"),
                verdict: Verdict::Fail,
                produced_at: to_seconds(Utc::now()),
                events: vec![],
                event_count: 0,
            })
            .collect()
    }

    #[test]
    fn median_counts_follow_ceiling() {
        let f = logs("f", 4);
        let p = logs("p", 25);
        for t in 0..4 {
            let (fs, ps) = evidence_config(&f, &p, t, EvidenceVariant::Median).unwrap();
            assert_eq!((fs.len(), ps.len()), (2, 13));
            assert!(fs.iter().any(|l| l.source_id == f[t].source_id));
            // enumeration cross-check of the ceiling rule
            let expected_f = (1..=4).filter(|i| 2 * i <= 4 + 1).count();
            assert_eq!(fs.len(), expected_f);
        }
        let (fs, _) = evidence_config(&f, &p, 3, EvidenceVariant::Median).unwrap();
        assert_eq!(
            fs.iter().map(|l| l.source_id.as_str()).collect::<Vec<_>>(),
            vec!["f0", "f3"]
        );
    }

    #[test]
    fn maximal_uses_everything() {
        let f = logs("f", 24);
        let p = logs("p", 100);
        let (fs, ps) = evidence_config(&f, &p, 5, EvidenceVariant::Maximal).unwrap();
        assert_eq!((fs.len(), ps.len()), (24, 100));
    }

    #[test]
    fn minimal_is_target_and_first_pass() {
        let f = logs("f", 5);
        let p = logs("p", 3);
        let (fs, ps) = evidence_config(&f, &p, 2, EvidenceVariant::Minimal).unwrap();
        assert_eq!(fs.len(), 1);
        assert_eq!(fs[0].source_id, "f2");
        assert_eq!(ps.len(), 1);
        assert_eq!(ps[0].source_id, "p0");
        assert!(evidence_config(&f, &[], 2, EvidenceVariant::Minimal).is_err());
    }
}
