//! Group event scores with complete-linkage clustering and rank the groups.
//!
//! cargo run --example cluster_scores -- 0.9 0.88 0.5 0.47 0.45 0.1 inf

use sbld::abstraction::EventId;
use sbld::clustering::{cluster_scores, Aggregate};

fn main() {
    let mut values: Vec<f64> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("scores are numbers"))
        .collect();
    if values.is_empty() {
        values = vec![0.92, 0.9, 0.61, 0.58, 0.55, 0.2, 0.18, 0.02];
    }
    let scores: Vec<(EventId, f64)> = values
        .iter()
        .enumerate()
        .map(|(i, &s)| (EventId(i as u32), s))
        .collect();
    let (t, clusters) = cluster_scores(&scores, Aggregate::Mean).expect("at least one score");
    println!("threshold (std of scores): {t:.4}");
    for (rank, c) in clusters.iter().enumerate() {
        let members: Vec<String> = c
            .members
            .iter()
            .map(|m| format!("#{}={:.3}", m.event_id, m.score))
            .collect();
        println!(
            "{:>2}. mean {:.4}  {}",
            rank + 1,
            c.aggregate,
            members.join(" ")
        );
    }
}
