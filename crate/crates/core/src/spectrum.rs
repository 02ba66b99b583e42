//! Binary coverage spectra over failing and passing logs, and the ten
//! interestingness measures used to rank events.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::abstraction::{AbstractedLog, EventId, Verdict};
use crate::error::{Error, Result};

/// The four counts an interestingness measure is computed from.
///
/// In the `A` notation these are `Aef`, `Anf`, `Aep` and `Anp`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct SpectrumPrimitives {
    /// Failing logs that include the event.
    pub n_fi: u32,
    /// Failing logs that exclude the event.
    pub n_fe: u32,
    /// Passing logs that include the event.
    pub n_pi: u32,
    /// Passing logs that exclude the event.
    pub n_pe: u32,
}

impl SpectrumPrimitives {
    pub const fn new(n_fi: u32, n_fe: u32, n_pi: u32, n_pe: u32) -> Self {
        SpectrumPrimitives {
            n_fi,
            n_fe,
            n_pi,
            n_pe,
        }
    }

    pub fn failing(&self) -> u32 {
        self.n_fi + self.n_fe
    }

    pub fn passing(&self) -> u32 {
        self.n_pi + self.n_pe
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Measure {
    Tarantula,
    Jaccard,
    Ochiai,
    Ochiai2,
    Zoltar,
    /// D* with star = 2.
    DStar2,
    Op,
    Wong3,
    Kulczynski2,
    FailedOnly,
}

impl Measure {
    pub const ALL: [Measure; 10] = [
        Measure::Tarantula,
        Measure::Jaccard,
        Measure::Ochiai,
        Measure::Ochiai2,
        Measure::Zoltar,
        Measure::DStar2,
        Measure::Op,
        Measure::Wong3,
        Measure::Kulczynski2,
        Measure::FailedOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Tarantula => "tarantula",
            Measure::Jaccard => "jaccard",
            Measure::Ochiai => "ochiai",
            Measure::Ochiai2 => "ochiai2",
            Measure::Zoltar => "zoltar",
            Measure::DStar2 => "dstar2",
            Measure::Op => "op",
            Measure::Wong3 => "wong3",
            Measure::Kulczynski2 => "kulczynski2",
            Measure::FailedOnly => "failed-only",
        }
    }

    /// Parse a comma separated list of measure names, or `all`.
    pub fn parse_list(s: &str) -> Result<Vec<Measure>> {
        if s.trim().eq_ignore_ascii_case("all") {
            return Ok(Measure::ALL.to_vec());
        }
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let m: Measure = part.parse()?;
            if !out.contains(&m) {
                out.push(m);
            }
        }
        if out.is_empty() {
            return Err(Error::Config("empty measure list".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Ok(match key.as_str() {
            "tarantula" => Measure::Tarantula,
            "jaccard" => Measure::Jaccard,
            "ochiai" => Measure::Ochiai,
            "ochiai2" => Measure::Ochiai2,
            "zoltar" => Measure::Zoltar,
            "dstar" | "dstar2" => Measure::DStar2,
            "op" => Measure::Op,
            "wong3" => Measure::Wong3,
            "kulczynski2" => Measure::Kulczynski2,
            "failedonly" => Measure::FailedOnly,
            _ => {
                return Err(Error::Config(format!(
                    "unknown measure {s:?}; expected one of {}",
                    Measure::ALL.map(Measure::name).join(", ")
                )))
            }
        })
    }
}

/// `x / y` where `0/0` is 0 and `x/0` for `x > 0` is `+inf`.
fn div(x: f64, y: f64) -> f64 {
    if y == 0.0 {
        if x == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        x / y
    }
}

/// Score one event's primitives with a measure. Higher is more interesting.
///
/// Degenerate denominators never produce NaN: `0/0` is 0, and a positive
/// numerator over zero yields `f64::INFINITY`. Only D* reaches that case in
/// practice, for events seen in every failing log and no passing log.
pub fn score(p: SpectrumPrimitives, m: Measure) -> f64 {
    let ef = f64::from(p.n_fi);
    let nf = f64::from(p.n_fe);
    let ep = f64::from(p.n_pi);
    let np = f64::from(p.n_pe);
    match m {
        Measure::Tarantula => {
            let fail_frac = div(ef, ef + nf);
            let pass_frac = div(ep, ep + np);
            div(fail_frac, fail_frac + pass_frac)
        }
        Measure::Jaccard => div(ef, ef + nf + ep),
        Measure::Ochiai => div(ef, ((ef + nf) * (ef + ep)).sqrt()),
        Measure::Ochiai2 => div(
            ef * np,
            ((ef + ep) * (nf + np) * (ef + nf) * (ep + np)).sqrt(),
        ),
        Measure::Zoltar => {
            if p.n_fi == 0 {
                0.0
            } else {
                ef / (ef + nf + ep + 10000.0 * nf * ep / ef)
            }
        }
        Measure::DStar2 => div(ef * ef, nf + ep),
        Measure::Op => ef - ep / (ep + np + 1.0),
        Measure::Wong3 => {
            let h = if p.n_pi <= 2 {
                ep
            } else if p.n_pi <= 10 {
                2.0 + 0.1 * (ep - 2.0)
            } else {
                2.8 + 0.001 * (ep - 10.0)
            };
            ef - h
        }
        Measure::Kulczynski2 => 0.5 * (div(ef, ef + nf) + div(ef, ef + ep)),
        Measure::FailedOnly => {
            if p.n_pi == 0 {
                1.0
            } else {
                0.0
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub source_id: String,
    pub verdict: Verdict,
}

/// Binary logs-by-events occurrence matrix.
///
/// Rows are stored sparsely as the sorted column indices they cover. Per
/// column failing and passing counts are cached at build time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageMatrix {
    rows: Vec<CoverageRow>,
    cells: Vec<Vec<u32>>,
    columns: Vec<EventId>,
    column_index: HashMap<EventId, usize>,
    fail_counts: Vec<u32>,
    pass_counts: Vec<u32>,
    n_failing: u32,
    n_passing: u32,
}

impl CoverageMatrix {
    /// Assemble from rows and their (unsorted, possibly repeated) events.
    pub fn from_rows<I, E>(rows: I) -> Self
    where
        I: IntoIterator<Item = (CoverageRow, E)>,
        E: IntoIterator<Item = EventId>,
    {
        let mut row_meta = Vec::new();
        let mut row_events: Vec<BTreeSet<EventId>> = Vec::new();
        for (row, events) in rows {
            row_meta.push(row);
            row_events.push(events.into_iter().collect());
        }
        let columns: Vec<EventId> = row_events
            .iter()
            .flatten()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let column_index: HashMap<EventId, usize> =
            columns.iter().enumerate().map(|(i, &e)| (e, i)).collect();

        let mut fail_counts = vec![0u32; columns.len()];
        let mut pass_counts = vec![0u32; columns.len()];
        let mut n_failing = 0;
        let mut n_passing = 0;
        let mut cells = Vec::with_capacity(row_events.len());
        for (meta, events) in row_meta.iter().zip(&row_events) {
            let counts = match meta.verdict {
                Verdict::Fail => {
                    n_failing += 1;
                    &mut fail_counts
                }
                Verdict::Pass => {
                    n_passing += 1;
                    &mut pass_counts
                }
            };
            let idx: Vec<u32> = events.iter().map(|e| column_index[e] as u32).collect();
            for &c in &idx {
                counts[c as usize] += 1;
            }
            cells.push(idx);
        }

        CoverageMatrix {
            rows: row_meta,
            cells,
            columns,
            column_index,
            fail_counts,
            pass_counts,
            n_failing,
            n_passing,
        }
    }

    pub fn rows(&self) -> &[CoverageRow] {
        &self.rows
    }

    /// Event ids of all columns, ascending.
    pub fn columns(&self) -> &[EventId] {
        &self.columns
    }

    pub fn n_failing(&self) -> u32 {
        self.n_failing
    }

    pub fn n_passing(&self) -> u32 {
        self.n_passing
    }

    pub fn row_index(&self, source_id: &str) -> Option<usize> {
        self.rows.iter().position(|r| r.source_id == source_id)
    }

    /// Events covered by row `r`, ascending.
    pub fn row_events(&self, r: usize) -> impl Iterator<Item = EventId> + '_ {
        self.cells[r].iter().map(|&c| self.columns[c as usize])
    }

    pub fn cell(&self, r: usize, event: EventId) -> bool {
        match self.column_index.get(&event) {
            Some(&c) => self.cells[r].binary_search(&(c as u32)).is_ok(),
            None => false,
        }
    }

    pub fn primitives(&self, event: EventId) -> Option<SpectrumPrimitives> {
        let c = *self.column_index.get(&event)?;
        let n_fi = self.fail_counts[c];
        let n_pi = self.pass_counts[c];
        Some(SpectrumPrimitives::new(
            n_fi,
            self.n_failing - n_fi,
            n_pi,
            self.n_passing - n_pi,
        ))
    }
}

/// Build the coverage matrix of failing rows followed by passing rows.
///
/// The logs' own verdict fields are ignored; list membership decides.
pub fn build_matrix<'a, F, P>(failing: F, passing: P) -> CoverageMatrix
where
    F: IntoIterator<Item = &'a AbstractedLog>,
    P: IntoIterator<Item = &'a AbstractedLog>,
{
    let tag = |verdict: Verdict| {
        move |log: &'a AbstractedLog| {
            (
                CoverageRow {
                    source_id: log.source_id.clone(),
                    verdict,
                },
                log.events.iter().copied(),
            )
        }
    };
    CoverageMatrix::from_rows(
        failing
            .into_iter()
            .map(tag(Verdict::Fail))
            .chain(passing.into_iter().map(tag(Verdict::Pass))),
    )
}

/// Score every column of the matrix.
pub fn score_all(matrix: &CoverageMatrix, m: Measure) -> BTreeMap<EventId, f64> {
    matrix
        .columns()
        .iter()
        .map(|&e| {
            let p = matrix.primitives(e).expect("column present");
            (e, score(p, m))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Utc;
    use proptest::prelude::*;

    fn log(id: &str, events: &[u32]) -> AbstractedLog {
        AbstractedLog {
            source_id: id.into(),
            verdict: Verdict::Fail,
            produced_at: crate::abstraction::to_seconds(Utc::now()),
            events: events.iter().map(|&e| EventId(e)).collect(),
            event_count: events.len(),
        }
    }

    const SHARED: SpectrumPrimitives = SpectrumPrimitives::new(3, 1, 1, 9);

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn direct_counting() {
        let f = [log("f1", &[1, 2]), log("f2", &[1])];
        let p = [log("p1", &[2])];
        let m = build_matrix(&f, &p);
        assert_eq!(
            m.primitives(EventId(1)),
            Some(SpectrumPrimitives::new(2, 0, 0, 1))
        );
        assert_eq!(
            m.primitives(EventId(2)),
            Some(SpectrumPrimitives::new(1, 1, 1, 0))
        );
    }

    #[test]
    fn empty_corpora() {
        let m = build_matrix(&[], &[]);
        assert!(m.rows().is_empty());
        assert!(m.columns().is_empty());
    }

    #[test]
    fn repeated_event_is_one_cell() {
        let f = [log("f1", &[7, 7, 7, 7, 7])];
        let m = build_matrix(&f, &[]);
        assert!(m.cell(0, EventId(7)));
        assert_eq!(m.primitives(EventId(7)).unwrap().n_fi, 1);
        assert_eq!(m.row_events(0).count(), 1);
    }

    #[test]
    fn shared_vector_spot_values() {
        let expected = [
            (Measure::Tarantula, 0.75 / 0.85),
            (Measure::Jaccard, 0.6),
            (Measure::Ochiai, 0.75),
            (Measure::Ochiai2, 0.675),
            (Measure::Zoltar, 3.0 / (5.0 + 10000.0 / 3.0)),
            (Measure::DStar2, 4.5),
            (Measure::Op, 3.0 - 1.0 / 11.0),
            (Measure::Wong3, 2.0),
            (Measure::Kulczynski2, 0.75),
            (Measure::FailedOnly, 0.0),
        ];
        for (m, want) in expected {
            assert!(
                close(score(SHARED, m), want, 1e-12),
                "{m}: {}",
                score(SHARED, m)
            );
        }
        assert!(close(score(SHARED, Measure::Tarantula), 0.88235, 1e-5));
        assert!(close(score(SHARED, Measure::Zoltar), 0.0008987, 1e-7));
        assert!(close(score(SHARED, Measure::Op), 2.90909, 1e-5));
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn ochiai_spot() {
        let s = score(SpectrumPrimitives::new(2, 2, 0, 5), Measure::Ochiai);
        assert!(close(s, 2.0 / 8f64.sqrt(), 1e-12));
        assert!(close(s, 0.70711, 1e-5));
    }

    #[test]
    fn failed_only_branches() {
        assert_eq!(
            score(SpectrumPrimitives::new(1, 0, 0, 4), Measure::FailedOnly),
            1.0
        );
        assert_eq!(
            score(SpectrumPrimitives::new(1, 0, 2, 2), Measure::FailedOnly),
            0.0
        );
    }

    #[test]
    fn sanitized_degenerate_cases() {
        // Zoltar never in failing logs.
        assert_eq!(
            score(SpectrumPrimitives::new(0, 3, 2, 1), Measure::Zoltar),
            0.0
        );
        // D* perfectly correlated with failure.
        assert_eq!(
            score(SpectrumPrimitives::new(2, 0, 0, 3), Measure::DStar2),
            f64::INFINITY
        );
        assert_eq!(
            score(SpectrumPrimitives::new(0, 0, 0, 3), Measure::DStar2),
            0.0
        );
        // Tarantula without passing logs.
        assert_eq!(
            score(SpectrumPrimitives::new(2, 1, 0, 0), Measure::Tarantula),
            1.0
        );
        for m in Measure::ALL {
            for p in [
                SpectrumPrimitives::new(0, 0, 0, 0),
                SpectrumPrimitives::new(0, 0, 1, 0),
                SpectrumPrimitives::new(1, 0, 0, 0),
                SpectrumPrimitives::new(0, 1, 0, 1),
            ] {
                assert!(!score(p, m).is_nan(), "{m} {p:?}");
            }
        }
    }

    #[test]
    fn score_all_failed_only() {
        let f = [log("f", &[1])];
        let p = [log("p", &[2])];
        let scores = score_all(&build_matrix(&f, &p), Measure::FailedOnly);
        assert_eq!(
            scores,
            BTreeMap::from([(EventId(1), 1.0), (EventId(2), 0.0)])
        );
    }

    #[test]
    fn score_all_is_per_column_score() {
        let f = [log("f1", &[1, 2, 3]), log("f2", &[1])];
        let p = [log("p1", &[2, 4])];
        let m = build_matrix(&f, &p);
        for (e, s) in score_all(&m, Measure::DStar2) {
            assert_eq!(s, score(m.primitives(e).unwrap(), Measure::DStar2));
        }
    }

    #[test]
    fn monotone_in_n_fi() {
        let monotone = [
            Measure::Tarantula,
            Measure::Jaccard,
            Measure::Ochiai,
            Measure::DStar2,
            Measure::Op,
            Measure::Kulczynski2,
        ];
        for m in monotone {
            for n_fe in 0..=10 {
                for n_pi in 0..=10 {
                    for n_pe in 0..=10 {
                        let mut prev = score(SpectrumPrimitives::new(0, n_fe, n_pi, n_pe), m);
                        for n_fi in 1..=10 {
                            let s = score(SpectrumPrimitives::new(n_fi, n_fe, n_pi, n_pe), m);
                            assert!(s >= prev, "{m} ({n_fi},{n_fe},{n_pi},{n_pe})");
                            prev = s;
                        }
                    }
                }
            }
        }
    }

    fn corpus() -> impl Strategy<Value = (Vec<Vec<u32>>, Vec<Vec<u32>>)> {
        let row = proptest::collection::vec(0u32..12, 0..12);
        (
            proptest::collection::vec(row.clone(), 0..5),
            proptest::collection::vec(row, 0..5),
        )
    }

    proptest! {
        #[test]
        fn primitives_match_brute_force((fail, pass) in corpus()) {
            let f: Vec<_> = fail.iter().enumerate().map(|(i, e)| log(&format!("f{i}"), e)).collect();
            let p: Vec<_> = pass.iter().enumerate().map(|(i, e)| log(&format!("p{i}"), e)).collect();
            let m = build_matrix(&f, &p);
            for &e in m.columns() {
                let prim = m.primitives(e).unwrap();
                let n_fi = fail.iter().filter(|r| r.contains(&e.0)).count() as u32;
                let n_pi = pass.iter().filter(|r| r.contains(&e.0)).count() as u32;
                prop_assert_eq!(prim, SpectrumPrimitives::new(n_fi, fail.len() as u32 - n_fi, n_pi, pass.len() as u32 - n_pi));
                prop_assert_eq!(prim.failing() as usize, fail.len());
                prop_assert_eq!(prim.passing() as usize, pass.len());
            }
            let all: BTreeSet<u32> = fail.iter().chain(&pass).flatten().copied().collect();
            prop_assert_eq!(m.columns().len(), all.len());
        }

        #[test]
        fn row_permutation_invariance((fail, pass) in corpus(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let f: Vec<_> = fail.iter().enumerate().map(|(i, e)| log(&format!("f{i}"), e)).collect();
            let p: Vec<_> = pass.iter().enumerate().map(|(i, e)| log(&format!("p{i}"), e)).collect();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut f2 = f.clone();
            let mut p2 = p.clone();
            f2.shuffle(&mut rng);
            p2.shuffle(&mut rng);
            let a = build_matrix(&f, &p);
            let b = build_matrix(&f2, &p2);
            for m in Measure::ALL {
                prop_assert_eq!(score_all(&a, m), score_all(&b, m));
            }
        }
    }

    #[test]
    fn measure_names_roundtrip() {
        for m in Measure::ALL {
            assert_eq!(m.name().parse::<Measure>().unwrap(), m);
        }
        assert_eq!("DStar".parse::<Measure>().unwrap(), Measure::DStar2);
        assert_eq!(
            "FailedOnly".parse::<Measure>().unwrap(),
            Measure::FailedOnly
        );
        assert!("tarantulla".parse::<Measure>().is_err());
        assert_eq!(Measure::parse_list("ALL").unwrap().len(), 10);
        assert_eq!(
            Measure::parse_list("ochiai, op,ochiai").unwrap(),
            vec![Measure::Ochiai, Measure::Op]
        );
    }
}
