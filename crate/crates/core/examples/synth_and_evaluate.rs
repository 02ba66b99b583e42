//! Generate a synthetic suite with planted faults and run the full
//! evaluation: sweep, evidence variants, keyword baseline and statistics.
//!
//! cargo run --release --example synth_and_evaluate -- [output-dir]

use std::path::PathBuf;

use sbld::cli::{cmd_evaluate, cmd_synth, RunConfig};
use sbld::synth::SynthConfig;

fn main() -> sbld::Result<()> {
    let root = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("sbld-synth-example"));
    let corpus = root.join("corpus");
    let synth = SynthConfig {
        tests: 3,
        failing: 6,
        passing: 12,
        noise: 120,
        ..SynthConfig::default()
    };
    cmd_synth(
        &RunConfig {
            out: corpus.clone(),
            ..RunConfig::default()
        },
        &synth,
    )?;

    let config = RunConfig {
        corpus: Some(corpus),
        out: root.join("results"),
        ..RunConfig::default()
    };
    let out = cmd_evaluate(&config)?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "{} targets, {} sweep records, {} heatmap cells",
        out.admitted_targets,
        out.sweep.len(),
        out.heatmap.len()
    );
    print!("\n{}", out.compare_csv());
    println!("\nCSV files in {}", config.out.display());
    Ok(())
}
