//! Diagnose a failing run against a handful of earlier runs, compare with
//! a plain keyword search, and persist the spectrum for later use.
//!
//! cargo run --example diagnose_failure

use chrono::{DateTime, Duration};
use sbld::abstraction::{abstract_corpus, Abstractor, EventVocabulary, RawLog, Verdict};
use sbld::diagnosis::{diagnose, Retrieve};
use sbld::evaluation::baseline_search;
use sbld::spectrum::{build_matrix, Measure};
use sbld::store::SpectrumDb;

fn run(day: i64, failing: bool) -> String {
    let mut lines = vec![
        "INFO starting deploy pipeline".to_string(),
        format!("INFO fetched artifact 0x{:010x}", 0xabc000 + day),
        "WARN retry budget low, continuing".to_string(),
    ];
    if day % 2 == 0 {
        lines.push("INFO cache warm".to_string());
    }
    if day % 3 == 0 {
        lines.push("ERROR flaky metrics push failed".to_string());
    }
    if failing {
        lines.push("ERROR migration 0042 failed: column \"owner\" already exists".to_string());
        lines.push("INFO rolling back schema".to_string());
    }
    lines.push("INFO pipeline finished".to_string());
    lines
        .iter()
        .enumerate()
        .map(|(i, l)| format!("2024-06-{:02} 08:00:{i:02} {l}\n", day + 1))
        .collect()
}

fn main() {
    let t0 = DateTime::from_timestamp(1_717_200_000, 0).unwrap();
    let raws: Vec<RawLog> = (0..8)
        .map(|day| {
            let failing = day == 2 || day == 5 || day == 7;
            let (verdict, dir) = if failing {
                (Verdict::Fail, "fail")
            } else {
                (Verdict::Pass, "pass")
            };
            RawLog::new(
                format!("deploy/{dir}/day{day}.log"),
                verdict,
                t0 + Duration::days(day),
                run(day, failing),
            )
        })
        .collect();

    let mut vocab = EventVocabulary::new();
    let logs = abstract_corpus(&raws, &Abstractor::default(), &mut vocab);
    let matrix = build_matrix(
        logs.iter().filter(|l| l.verdict == Verdict::Fail),
        logs.iter().filter(|l| l.verdict == Verdict::Pass),
    );

    let target = logs
        .iter()
        .find(|l| l.source_id == "deploy/fail/day7.log")
        .unwrap();
    let mut report = diagnose(target, &matrix, Measure::Ochiai, Retrieve::Top(1)).unwrap();
    report.resolve_texts(&vocab);
    print!("{}", report.render_text());

    println!("\nkeyword search (error|fault|fail) would show:");
    for id in baseline_search(target, &vocab) {
        println!("  #{id} {}", vocab.text(id).unwrap());
    }

    let dir = std::env::temp_dir().join("sbld-diagnose-example");
    SpectrumDb {
        vocabulary: vocab,
        matrix,
    }
    .save(&dir)
    .unwrap();
    println!("\nspectrum saved to {}", dir.display());
}
