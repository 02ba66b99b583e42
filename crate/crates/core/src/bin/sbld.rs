use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sbld::cli::{self, RunConfig};
use sbld::clustering::Aggregate;
use sbld::diagnosis::Retrieve;
use sbld::evaluation::EvidenceVariant;
use sbld::spectrum::Measure;
use sbld::synth::{SynthConfig, DEFAULT_SEED};

#[derive(Parser)]
#[command(
    name = "sbld",
    version,
    about = "Spectrum-based diagnosis of failing CI logs"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Corpus root laid out as <test>/{fail,pass}/*.log
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Abstraction profile JSON: {"delimiter": ..., "masking_rules": [...]}
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// CSV of source_id,verdict,produced_at (default <corpus>/manifest.csv)
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// One measure, a comma list, or "all"
    #[arg(long, global = true)]
    measure: Option<String>,
    /// Clusters to retrieve: a positive number or "all"
    #[arg(long, global = true, default_value = "1")]
    k: Retrieve,
    /// Evidence variants for evaluate: minimal, median, maximal, comma list or "all"
    #[arg(long, global = true, default_value = "all")]
    variant: String,
    /// Cluster score used for ranking: mean or max
    #[arg(long, global = true, default_value = "mean")]
    aggregate: Aggregate,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Restrict to one test (repeatable)
    #[arg(long = "test", global = true)]
    tests: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Abstract every log into logs.jsonl and vocabulary.json
    Abstract,
    /// Build a spectrum database (vocabulary.json + matrix.csv)
    Spectrum,
    /// Rank the events of one failing log against a spectrum database
    Diagnose {
        /// Spectrum database directory
        #[arg(long)]
        spectrum: PathBuf,
        /// Source id of the failing log, e.g. checkout/fail/run-003.log
        #[arg(long)]
        target: String,
    },
    /// Run the sweep, evidence variants, baseline and statistics
    Evaluate {
        /// Signatures JSON array (default <corpus>/signatures.json)
        #[arg(long)]
        signatures: Option<PathBuf>,
        /// Test-to-signature JSON object (default <corpus>/test_signatures.json)
        #[arg(long)]
        signature_map: Option<PathBuf>,
        /// Skip the chronological sweep
        #[arg(long)]
        no_sweep: bool,
    },
    /// Write a synthetic corpus with planted faults and signatures
    Synth {
        /// Number of tests to generate
        #[arg(long = "tests", id = "n_tests", default_value_t = 5)]
        n_tests: usize,
        #[arg(long, default_value_t = 10)]
        failing: usize,
        #[arg(long, default_value_t = 20)]
        passing: usize,
        #[arg(long, default_value_t = 3)]
        planted: usize,
        #[arg(long, default_value_t = 240)]
        noise: usize,
        #[arg(long, default_value_t = 16)]
        common: usize,
        #[arg(long, env = "SBLD_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
}

fn parse_variants(s: &str) -> sbld::Result<Vec<EvidenceVariant>> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(EvidenceVariant::ALL.to_vec());
    }
    s.split(',').map(|v| v.trim().parse()).collect()
}

fn run(cli: Cli) -> sbld::Result<i32> {
    let c = cli.common;
    let default_measure = match cli.command {
        Command::Diagnose { .. } => "ochiai",
        _ => "all",
    };
    let mut config = RunConfig {
        corpus: c.corpus,
        config: c.config,
        manifest: c.manifest,
        tests: c.tests,
        measures: Measure::parse_list(c.measure.as_deref().unwrap_or(default_measure))?,
        k: c.k,
        variants: parse_variants(&c.variant)?,
        aggregate: c.aggregate,
        out: c.out,
        jobs: c.jobs,
        ..RunConfig::default()
    };
    match cli.command {
        Command::Abstract => {
            let s = cli::cmd_abstract(&config)?;
            println!("{} logs, {} distinct events", s.logs, s.events);
            println!(
                "wrote {} and {}",
                s.logs_path.display(),
                s.vocabulary_path.display()
            );
        }
        Command::Spectrum => {
            let db = cli::cmd_spectrum(&config)?;
            println!(
                "{} failing, {} passing logs over {} events; wrote {}",
                db.matrix.n_failing(),
                db.matrix.n_passing(),
                db.matrix.columns().len(),
                config.out.display()
            );
        }
        Command::Diagnose { spectrum, target } => {
            config.spectrum = Some(spectrum);
            let report = cli::cmd_diagnose(&config, &target)?;
            print!("{}", report.render_text());
        }
        Command::Evaluate {
            signatures,
            signature_map,
            no_sweep,
        } => {
            config.signatures = signatures;
            config.signature_map = signature_map;
            config.sweep = !no_sweep;
            let out = cli::cmd_evaluate(&config)?;
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            if out.admitted_targets == 0 {
                eprintln!("error: no admissible failing logs; nothing evaluated");
                return Ok(cli::EXIT_NO_ADMISSIBLE_LOGS);
            }
            println!(
                "{} targets, {} sweep records, {} comparisons; wrote {}",
                out.admitted_targets,
                out.sweep.len(),
                out.comparisons.len(),
                config.out.display()
            );
            println!("statistic = sum of ranks of positive differences (variant1 - variant2), Pratt zero handling");
        }
        Command::Synth {
            n_tests,
            failing,
            passing,
            planted,
            noise,
            common,
            seed,
        } => {
            let synth = SynthConfig {
                tests: n_tests,
                failing,
                passing,
                planted,
                noise,
                common,
                seed,
            };
            let suite = cli::cmd_synth(&config, &synth)?;
            println!(
                "wrote {} tests to {} (seed {seed})",
                suite.tests.len(),
                config.out.display()
            );
        }
    }
    Ok(cli::EXIT_OK)
}

fn main() -> ExitCode {
    let args = Cli::parse();
    match run(args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
