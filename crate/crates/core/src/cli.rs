//! Command implementations behind the `sbld` binary. Each `cmd_*` function
//! reads its inputs, does the work, writes its artifacts under the output
//! directory and returns what it produced so callers can print or inspect it.

use std::path::{Path, PathBuf};

use crate::abstraction::{
    abstract_corpus, AbstractedLog, AbstractionProfile, Abstractor, EventVocabulary, RawLog,
    Verdict,
};
use crate::clustering::Aggregate;
use crate::corpus::{load_corpus, TestCorpus};
use crate::diagnosis::{diagnose_source, DiagnosisReport, Retrieve};
use crate::error::{Error, Result};
use crate::evaluation::pipeline::{evaluate, EvaluationConfig, EvaluationOutput};
use crate::evaluation::signature::SignatureBook;
use crate::evaluation::sweep::SbldOptions;
use crate::evaluation::EvidenceVariant;
use crate::spectrum::{build_matrix, Measure};
use crate::store::{
    logs_jsonl, read_text, save_vocabulary, write_text, SpectrumDb, LOGS_FILE, VOCABULARY_FILE,
};
use crate::synth::{generate, SynthConfig, SynthSuite, SIGNATURES_FILE, SIGNATURE_MAP_FILE};

pub const REPORT_FILE: &str = "report.json";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const HEATMAP_FILE: &str = "heatmap.csv";
pub const PER_LOG_FILE: &str = "per_log_scores.csv";
pub const COMPARE_FILE: &str = "compare.csv";

/// Exit codes of the binary.
pub const EXIT_OK: i32 = 0;
pub const EXIT_NO_ADMISSIBLE_LOGS: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Everything a command may need. Paths left unset fall back to defaults
/// under the corpus root or the output directory.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    /// Abstraction profile (delimiter and masking rules) as JSON.
    pub config: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    /// Spectrum database directory used by `diagnose`.
    pub spectrum: Option<PathBuf>,
    pub signatures: Option<PathBuf>,
    pub signature_map: Option<PathBuf>,
    /// Restrict to these tests; empty means all.
    pub tests: Vec<String>,
    pub measures: Vec<Measure>,
    pub k: Retrieve,
    pub variants: Vec<EvidenceVariant>,
    pub aggregate: Aggregate,
    pub out: PathBuf,
    /// Worker threads; `None` lets rayon decide.
    pub jobs: Option<usize>,
    pub sweep: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: None,
            config: None,
            manifest: None,
            spectrum: None,
            signatures: None,
            signature_map: None,
            tests: Vec::new(),
            measures: Measure::ALL.to_vec(),
            k: Retrieve::Top(1),
            variants: EvidenceVariant::ALL.to_vec(),
            aggregate: Aggregate::Mean,
            out: PathBuf::from("out"),
            jobs: None,
            sweep: true,
        }
    }
}

fn require(path: &Path, what: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{what} {} does not exist",
            path.display()
        )))
    }
}

impl RunConfig {
    fn corpus_root(&self) -> Result<&Path> {
        let root = self
            .corpus
            .as_deref()
            .ok_or_else(|| Error::Config("--corpus is required".into()))?;
        require(root, "corpus")?;
        Ok(root)
    }

    pub fn abstractor(&self) -> Result<Abstractor> {
        match &self.config {
            None => Abstractor::new(&AbstractionProfile::default()),
            Some(path) => {
                require(path, "config")?;
                AbstractionProfile::from_json(&read_text(path)?)?.compile()
            }
        }
    }

    /// Load the corpus, restricted to the selected tests.
    pub fn load_tests(&self) -> Result<Vec<TestCorpus>> {
        let root = self.corpus_root()?;
        if let Some(m) = &self.manifest {
            require(m, "manifest")?;
        }
        let mut tests = load_corpus(root, self.manifest.as_deref())?;
        if !self.tests.is_empty() {
            for name in &self.tests {
                if !tests.iter().any(|t| &t.name == name) {
                    return Err(Error::Config(format!(
                        "test {name:?} not found under {}",
                        root.display()
                    )));
                }
            }
            tests.retain(|t| self.tests.contains(&t.name));
        }
        Ok(tests)
    }

    pub fn signature_book(&self) -> Result<SignatureBook> {
        let root = self.corpus_root()?;
        let sigs = self
            .signatures
            .clone()
            .unwrap_or_else(|| root.join(SIGNATURES_FILE));
        let map = self
            .signature_map
            .clone()
            .unwrap_or_else(|| root.join(SIGNATURE_MAP_FILE));
        require(&sigs, "signatures file")?;
        require(&map, "signature map")?;
        SignatureBook::from_json(&read_text(&sigs)?, &read_text(&map)?)
    }

    fn single_measure(&self) -> Result<Measure> {
        match self.measures.as_slice() {
            [m] => Ok(*m),
            _ => Err(Error::Usage("diagnose takes exactly one measure".into())),
        }
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.jobs {
            builder = builder.num_threads(n);
        }
        builder.build().map_err(|e| {
            Error::Config(format!(
                "cannot start {} worker threads: {e}",
                self.jobs.unwrap_or(0)
            ))
        })
    }
}

fn abstract_tests(
    tests: &[TestCorpus],
    abstractor: &Abstractor,
) -> (Vec<AbstractedLog>, EventVocabulary) {
    let raws: Vec<RawLog> = tests.iter().flat_map(|t| t.logs.iter().cloned()).collect();
    let mut vocab = EventVocabulary::new();
    let logs = abstract_corpus(&raws, abstractor, &mut vocab);
    (logs, vocab)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbstractSummary {
    pub logs: usize,
    pub events: usize,
    pub logs_path: PathBuf,
    pub vocabulary_path: PathBuf,
}

/// Abstract every log under the corpus root into `logs.jsonl` plus
/// `vocabulary.json`.
pub fn cmd_abstract(config: &RunConfig) -> Result<AbstractSummary> {
    let abstractor = config.abstractor()?;
    let tests = config.load_tests()?;
    let (logs, vocab) = config
        .pool()?
        .install(|| abstract_tests(&tests, &abstractor));
    let logs_path = config.out.join(LOGS_FILE);
    let vocabulary_path = config.out.join(VOCABULARY_FILE);
    write_text(&logs_path, &logs_jsonl(&logs))?;
    save_vocabulary(&vocabulary_path, &vocab)?;
    Ok(AbstractSummary {
        logs: logs.len(),
        events: vocab.len(),
        logs_path,
        vocabulary_path,
    })
}

/// Abstract the corpus and persist its coverage matrix and vocabulary as a
/// spectrum database in the output directory.
pub fn cmd_spectrum(config: &RunConfig) -> Result<SpectrumDb> {
    let abstractor = config.abstractor()?;
    let tests = config.load_tests()?;
    let (logs, vocabulary) = config
        .pool()?
        .install(|| abstract_tests(&tests, &abstractor));
    let failing: Vec<&AbstractedLog> = logs.iter().filter(|l| l.verdict == Verdict::Fail).collect();
    let passing: Vec<&AbstractedLog> = logs.iter().filter(|l| l.verdict == Verdict::Pass).collect();
    let db = SpectrumDb {
        vocabulary,
        matrix: build_matrix(failing, passing),
    };
    db.save(&config.out)?;
    Ok(db)
}

/// Diagnose one failing log of a stored spectrum and write `report.json`.
pub fn cmd_diagnose(config: &RunConfig, target: &str) -> Result<DiagnosisReport> {
    let measure = config.single_measure()?;
    let dir = config.spectrum.as_deref().ok_or_else(|| {
        Error::Config("--spectrum is required; build one with `sbld spectrum`".into())
    })?;
    if !dir.is_dir() {
        return Err(Error::Config(format!(
            "spectrum {} not found; rebuild it with `sbld spectrum --corpus <dir> --out {}`",
            dir.display(),
            dir.display()
        )));
    }
    let db = SpectrumDb::load(dir)?;
    let mut report = diagnose_source(target, &db.matrix, measure, config.k, config.aggregate)?;
    report.resolve_texts(&db.vocabulary);
    write_text(&config.out.join(REPORT_FILE), &report.to_json())?;
    Ok(report)
}

/// Run the full experiment and write its four CSV artifacts.
pub fn cmd_evaluate(config: &RunConfig) -> Result<EvaluationOutput> {
    let abstractor = config.abstractor()?;
    let book = config.signature_book()?;
    let tests = config.load_tests()?;
    let eval = EvaluationConfig {
        sbld: SbldOptions {
            measures: config.measures.clone(),
            k: config.k,
            aggregate: config.aggregate,
        },
        variants: config.variants.clone(),
        run_sweep: config.sweep,
    };
    let output = config
        .pool()?
        .install(|| evaluate(&tests, &abstractor, &book, &eval))?;
    if output.admitted_targets > 0 {
        write_text(&config.out.join(SWEEP_FILE), &output.sweep_csv()?)?;
        write_text(&config.out.join(HEATMAP_FILE), &output.heatmap_csv()?)?;
        write_text(&config.out.join(PER_LOG_FILE), &output.per_log_csv()?)?;
        write_text(&config.out.join(COMPARE_FILE), &output.compare_csv())?;
    }
    Ok(output)
}

/// Generate a synthetic suite into the output directory.
pub fn cmd_synth(config: &RunConfig, synth: &SynthConfig) -> Result<SynthSuite> {
    let suite = generate(synth)?;
    suite.write(&config.out)?;
    Ok(suite)
}

/// Exit code for an error: everything the commands can fail on is
/// configuration or IO.
pub fn exit_code(_: &Error) -> i32 {
    EXIT_CONFIG
}
