//! Split raw logs into events, mask run-specific values and intern the
//! results in a shared vocabulary.
//!
//! cargo run --example abstract_logs

use chrono::DateTime;
use sbld::abstraction::{abstract_log, Abstractor, EventVocabulary, RawLog, Verdict};

const RUN_A: &str = "\
2024-03-01 09:00:00 INFO worker 10.0.4.17 joined pool
2024-03-01 09:00:02 INFO job 8821340 scheduled
2024-03-01 09:00:09 ERROR job 8821340 crashed
Traceback (most recent call last):
  File \"worker.py\", line 41, in run
2024-03-01 09:00:10 INFO worker 10.0.4.17 left pool
";

const RUN_B: &str = "\
2024-03-02 14:30:00 INFO worker 10.0.9.2 joined pool
2024-03-02 14:30:04 INFO job 8830011 scheduled
2024-03-02 14:30:07 INFO job 8830011 finished
2024-03-02 14:30:08 INFO worker 10.0.9.2 left pool
";

fn main() {
    let abstractor = Abstractor::default();
    let mut vocab = EventVocabulary::new();
    let t = DateTime::from_timestamp(1_709_283_600, 0).unwrap();
    let runs = [
        RawLog::new("nightly/fail/a.log", Verdict::Fail, t, RUN_A),
        RawLog::new("nightly/pass/b.log", Verdict::Pass, t, RUN_B),
    ];
    for raw in &runs {
        let log = abstract_log(raw, &abstractor, &mut vocab);
        let ids: Vec<String> = log.events.iter().map(|e| e.to_string()).collect();
        println!(
            "{} ({}): events [{}]",
            log.source_id,
            log.verdict,
            ids.join(", ")
        );
    }
    println!("\nvocabulary ({} events):", vocab.len());
    for (id, text) in vocab.iter() {
        println!("  #{id}: {}", text.replace('\n', "\n       "));
    }
}
