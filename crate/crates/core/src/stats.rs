//! Paired comparison statistics: Wilcoxon signed-rank with Pratt zero
//! handling, Holm step-down correction and the Vargha-Delaney A12 effect size.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest number of non-zero differences for which the exact null
/// distribution is enumerated.
pub const EXACT_MAX_N: usize = 25;

/// Family-wise significance level.
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Sum of the ranks of positive differences (`x - y > 0`).
    pub statistic: f64,
    pub p_value: f64,
    /// Non-zero differences that entered the test.
    pub n_effective: usize,
    pub exact: bool,
}

/// Average ranks (1-based) of `values`, ties sharing the mean of their ranks.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j hold ranks i+1..=j
        let avg = (i + 1 + j) as f64 / 2.0;
        for &o in &order[i..j] {
            ranks[o] = avg;
        }
        i = j;
    }
    ranks
}

/// Signed ranks under the Pratt convention: zeros take part in ranking the
/// absolute differences and are dropped afterwards. Returns `(rank, positive)`.
pub fn pratt_signed_ranks(diffs: &[f64]) -> Vec<(f64, bool)> {
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    average_ranks(&abs)
        .into_iter()
        .zip(diffs)
        .filter(|(_, &d)| d != 0.0)
        .map(|(r, &d)| (r, d > 0.0))
        .collect()
}

/// Two-sided paired Wilcoxon signed-rank test of `x - y` with Pratt zeros.
///
/// The p-value is exact (full null distribution of the positive rank sum)
/// for at most [`EXACT_MAX_N`] non-zero differences and otherwise uses the
/// normal approximation with continuity correction and tie-aware variance.
pub fn wilcoxon_pratt(pairs: &[(f64, f64)]) -> Result<WilcoxonResult> {
    if pairs.is_empty() {
        return Err(Error::Usage("Wilcoxon test needs at least one pair".into()));
    }
    let diffs: Vec<f64> = pairs.iter().map(|(x, y)| x - y).collect();
    let signed = pratt_signed_ranks(&diffs);
    if signed.is_empty() {
        return Ok(WilcoxonResult {
            statistic: 0.0,
            p_value: 1.0,
            n_effective: 0,
            exact: true,
        });
    }
    let statistic = signed.iter().filter(|s| s.1).fold(0.0, |acc, s| acc + s.0);
    let ranks: Vec<f64> = signed.iter().map(|s| s.0).collect();
    let n = ranks.len();
    if n <= EXACT_MAX_N {
        Ok(WilcoxonResult {
            statistic,
            p_value: exact_p(&ranks, statistic),
            n_effective: n,
            exact: true,
        })
    } else {
        let mean = ranks.iter().sum::<f64>() / 2.0;
        let sd = (ranks.iter().map(|r| r * r).sum::<f64>() / 4.0).sqrt();
        let d = statistic - mean;
        let z = (d - 0.5 * d.signum()) / sd;
        let normal = Normal::standard();
        let p = (2.0 * normal.cdf(-z.abs())).min(1.0);
        Ok(WilcoxonResult {
            statistic,
            p_value: p,
            n_effective: n,
            exact: false,
        })
    }
}

/// Exact two-sided p of the positive rank sum over all sign assignments.
/// Ranks are multiples of 1/2, so the distribution is built over doubled
/// integer ranks.
fn exact_p(ranks: &[f64], statistic: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0f64; total + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let w = (statistic * 2.0).round() as usize;
    let all = 2f64.powi(ranks.len() as i32);
    let lower: f64 = counts[..=w].iter().sum::<f64>() / all;
    let upper: f64 = counts[w..].iter().sum::<f64>() / all;
    (2.0 * lower.min(upper)).min(1.0)
}

/// Holm step-down adjustment. Output is in the input order.
pub fn holm(p_values: &[f64]) -> Vec<f64> {
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]).then(a.cmp(&b)));
    let mut adjusted = vec![0.0; m];
    let mut running: f64 = 0.0;
    for (k, &i) in order.iter().enumerate() {
        let v = (p_values[i] * (m - k) as f64).min(1.0);
        running = running.max(v);
        adjusted[i] = running;
    }
    adjusted
}

/// Vargha-Delaney A12: probability that a draw from `xs` exceeds one from
/// `ys`, counting ties as one half.
pub fn a12(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::Usage("A12 needs two nonempty samples".into()));
    }
    let mut sorted = ys.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut wins = 0.0;
    for &x in xs {
        let below = sorted.partition_point(|&y| y.total_cmp(&x) == Ordering::Less);
        let not_above = sorted.partition_point(|&y| y.total_cmp(&x) != Ordering::Greater);
        wins += below as f64 + 0.5 * (not_above - below) as f64;
    }
    Ok(wins / (xs.len() as f64 * ys.len() as f64))
}

/// Conventional A12 magnitude labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Magnitude {
    Negligible,
    Small,
    Medium,
    Large,
}

impl Magnitude {
    /// Label an A12 value by its distance from 0.5 in either direction.
    pub fn of(a12: f64) -> Self {
        let effect = a12.max(1.0 - a12);
        if effect >= 0.71 {
            Magnitude::Large
        } else if effect >= 0.64 {
            Magnitude::Medium
        } else if effect >= 0.56 {
            Magnitude::Small
        } else {
            Magnitude::Negligible
        }
    }
}

impl fmt::Display for Magnitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Magnitude::Negligible => "negligible",
            Magnitude::Small => "small",
            Magnitude::Medium => "medium",
            Magnitude::Large => "large",
        };
        f.write_str(s)
    }
}

/// Scores of two variants on the same targets, one pair per target.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    pub variant1: String,
    pub variant2: String,
    pub metric: String,
    pub pairs: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub variant1: String,
    pub variant2: String,
    pub metric: String,
    pub statistic: f64,
    pub a12: f64,
    pub a21: f64,
    pub p_raw: f64,
    pub p_holm: f64,
    pub significant: bool,
}

/// Run every comparison and Holm-adjust the p-values across the family.
pub fn compare(samples: &[PairedSample]) -> Result<Vec<ComparisonResult>> {
    let mut partial = Vec::with_capacity(samples.len());
    for s in samples {
        let w = wilcoxon_pratt(&s.pairs)?;
        let xs: Vec<f64> = s.pairs.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = s.pairs.iter().map(|p| p.1).collect();
        let a = a12(&xs, &ys)?;
        partial.push((s, w, a));
    }
    let raw: Vec<f64> = partial.iter().map(|(_, w, _)| w.p_value).collect();
    let adjusted = holm(&raw);
    Ok(partial
        .into_iter()
        .zip(adjusted)
        .map(|((s, w, a), p_holm)| ComparisonResult {
            variant1: s.variant1.clone(),
            variant2: s.variant2.clone(),
            metric: s.metric.clone(),
            statistic: w.statistic,
            a12: a,
            a21: 1.0 - a,
            p_raw: w.p_value,
            p_holm,
            significant: p_holm < ALPHA,
        })
        .collect())
}

pub const COMPARE_HEADER: &str =
    "variant1,variant2,metric,statistic,a12,a21,p_raw,p_holm,significant";

/// Render comparison rows as `compare.csv`.
pub fn compare_csv(results: &[ComparisonResult]) -> String {
    let mut out = String::from(COMPARE_HEADER);
    out.push('\n');
    for r in results {
        out.push_str(&format!(
            "{},{},{},{},{:.6},{:.6},{:.6e},{:.6e},{}\n",
            r.variant1,
            r.variant2,
            r.metric,
            r.statistic,
            r.a12,
            r.a21,
            r.p_raw,
            r.p_holm,
            r.significant
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs_from_diffs(d: &[f64]) -> Vec<(f64, f64)> {
        d.iter().map(|&d| (d, 0.0)).collect()
    }

    #[test]
    fn identical_pairs() {
        let w = wilcoxon_pratt(&[(1.0, 1.0), (2.0, 2.0)]).unwrap();
        assert_eq!(w.p_value, 1.0);
        assert_eq!(w.statistic, 0.0);
    }

    #[test]
    fn pratt_drops_zero_rank() {
        let w = wilcoxon_pratt(&pairs_from_diffs(&[0.0, 1.0, -2.0, 3.0])).unwrap();
        assert_eq!(w.statistic, 6.0);
        assert_eq!(w.n_effective, 3);
        // ranks {2,3,4}: sums >= 6 are {6 (2+4), 7, 9} of 8 patterns, sums <= 6 are 6 of 8
        assert!((w.p_value - 2.0 * 3.0 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn three_positive() {
        let w = wilcoxon_pratt(&pairs_from_diffs(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(w.statistic, 6.0);
        assert!((w.p_value - 0.25).abs() < 1e-12);
    }

    #[test]
    fn average_ranks_with_ties() {
        assert_eq!(
            average_ranks(&[3.0, 1.0, 3.0, 2.0]),
            vec![3.5, 1.0, 3.5, 2.0]
        );
    }

    #[test]
    fn large_sample_uses_normal_approximation() {
        let d: Vec<f64> = (1..=40).map(f64::from).collect();
        let w = wilcoxon_pratt(&pairs_from_diffs(&d)).unwrap();
        assert!(!w.exact);
        assert_eq!(w.statistic, 820.0);
        assert!(w.p_value < 1e-6);
        let alternating: Vec<f64> = (1..=40)
            .map(|i| {
                if i % 2 == 0 {
                    f64::from(i)
                } else {
                    -f64::from(i)
                }
            })
            .collect();
        let w = wilcoxon_pratt(&pairs_from_diffs(&alternating)).unwrap();
        assert!(w.p_value > 0.5);
    }

    #[test]
    fn holm_examples() {
        let adj = holm(&[0.01, 0.04, 0.03]);
        for (a, b) in adj.iter().zip([0.03, 0.06, 0.06]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(holm(&[0.2]), vec![0.2]);
        assert_eq!(holm(&[1.0, 1.0]), vec![1.0, 1.0]);
        assert!(holm(&[]).is_empty());
    }

    #[test]
    fn a12_examples() {
        assert_eq!(a12(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.5);
        assert_eq!(a12(&[5.0, 6.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(a12(&[1.0, 2.0], &[2.0, 3.0]).unwrap(), 0.125);
        assert!(a12(&[], &[1.0]).is_err());
    }

    #[test]
    fn magnitude_labels() {
        assert_eq!(Magnitude::of(0.5), Magnitude::Negligible);
        assert_eq!(Magnitude::of(0.56), Magnitude::Small);
        assert_eq!(Magnitude::of(0.64), Magnitude::Medium);
        assert_eq!(Magnitude::of(0.71), Magnitude::Large);
        assert_eq!(Magnitude::of(0.2), Magnitude::Large);
    }

    #[test]
    fn compare_family() {
        let s = |m: &str, d: &[f64]| PairedSample {
            variant1: "a".into(),
            variant2: "b".into(),
            metric: m.into(),
            pairs: pairs_from_diffs(d),
        };
        let rows = compare(&[
            s("recall", &[1.0, 2.0, 3.0]),
            s("effort_reduction", &[0.0, 0.0]),
        ])
        .unwrap();
        assert_eq!(rows[0].p_holm, 0.5);
        assert_eq!(rows[1].p_holm, 1.0);
        assert!(rows
            .iter()
            .all(|r| (r.a12 + r.a21 - 1.0).abs() < 1e-15 && r.p_holm >= r.p_raw));
        let csv = compare_csv(&rows);
        assert!(csv.starts_with(COMPARE_HEADER));
        assert_eq!(csv.lines().count(), 3);
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn a12_invariant_under_monotone_map(xs in proptest::collection::vec(-20i32..20, 1..15), ys in proptest::collection::vec(-20i32..20, 1..15)) {
            let f = |v: &[i32]| v.iter().map(|&x| f64::from(x)).collect::<Vec<_>>();
            let g = |v: &[i32]| v.iter().map(|&x| (f64::from(x) / 7.0).exp() * 3.0 + 1.0).collect::<Vec<_>>();
            let a = a12(&f(&xs), &f(&ys)).unwrap();
            prop_assert_eq!(a, a12(&g(&xs), &g(&ys)).unwrap());
            prop_assert!((a + a12(&f(&ys), &f(&xs)).unwrap() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn holm_bounds(ps in proptest::collection::vec(0.0f64..=1.0, 1..20)) {
            let adj = holm(&ps);
            for (a, p) in adj.iter().zip(&ps) {
                prop_assert!(*a >= *p && *a <= 1.0);
            }
            for i in 0..ps.len() {
                for j in 0..ps.len() {
                    if ps[i] < ps[j] {
                        prop_assert!(adj[i] <= adj[j]);
                    }
                }
            }
        }
    }
}
