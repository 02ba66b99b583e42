//! Synthetic CI corpus with planted failure-exclusive events and matching
//! signatures, laid out the way [`crate::corpus::load_corpus`] expects.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, Duration, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::abstraction::{RawLog, Verdict};
use crate::corpus::{manifest_csv, TestCorpus, MANIFEST_FILE};
use crate::error::{Error, Result};
use crate::evaluation::signature::{Signature, SignatureBook};
use crate::store::write_text;

pub const SIGNATURES_FILE: &str = "signatures.json";
pub const SIGNATURE_MAP_FILE: &str = "test_signatures.json";
pub const DEFAULT_SEED: u64 = 20_240_301;

const LEVELS: [&str; 4] = ["DEBUG", "INFO", "INFO", "WARN"];
const COMPONENTS: [&str; 16] = [
    "scheduler",
    "storage",
    "gateway",
    "auth",
    "billing",
    "indexer",
    "cache",
    "router",
    "metrics",
    "uploader",
    "resolver",
    "watchdog",
    "ledger",
    "mailer",
    "registry",
    "planner",
];
const ACTIONS: [&str; 12] = [
    "started",
    "finished",
    "refreshed",
    "rotated",
    "queued",
    "acknowledged",
    "flushed",
    "loaded",
    "validated",
    "retrying after transient error on",
    "failed to refresh",
    "skipped",
];
const OBJECTS: [&str; 16] = [
    "session table",
    "config snapshot",
    "worker pool",
    "audit trail",
    "request batch",
    "token bucket",
    "segment index",
    "upload chunk",
    "health probe",
    "route map",
    "invoice queue",
    "dns cache",
    "feature flags",
    "metric window",
    "job lease",
    "mail spool",
];
const FAULTS: [&str; 8] = [
    "replica quorum lost while committing epoch",
    "checksum mismatch detected in persisted block",
    "lock lease expired before barrier release",
    "allocator exhausted reserved arena",
    "invariant violated in admission controller",
    "deadline exceeded awaiting coordinator vote",
    "corrupted frame header rejected by decoder",
    "orphaned transaction aborted during recovery",
];
const FAULT_LEVELS: [&str; 3] = ["ERROR", "FATAL", "SEVERE"];
const FRAMES: [&str; 4] = [
    "    at org.example.core.Pipeline.advance(Pipeline.java:214)",
    "    at org.example.core.Stage.run(Stage.java:88)",
    "    at org.example.runtime.Worker.loop(Worker.java:57)",
    "    at java.base/java.lang.Thread.run(Thread.java:833)",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthConfig {
    pub tests: usize,
    pub failing: usize,
    pub passing: usize,
    /// Failure-exclusive events present in every failing log of a test.
    pub planted: usize,
    /// Events that occur in failing and passing logs with equal probability.
    pub noise: usize,
    /// Events present in every log.
    pub common: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            tests: 5,
            failing: 10,
            passing: 20,
            planted: 3,
            noise: 240,
            common: 16,
            seed: DEFAULT_SEED,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        let templates = COMPONENTS.len() * ACTIONS.len() * OBJECTS.len();
        if self.tests == 0 || self.failing == 0 {
            return Err(Error::Usage(
                "synthetic suite needs at least one test and one failing log".into(),
            ));
        }
        if self.planted == 0 || self.planted > FAULTS.len() {
            return Err(Error::Usage(format!(
                "planted events must be between 1 and {}",
                FAULTS.len()
            )));
        }
        if self.noise + self.common > templates {
            return Err(Error::Usage(format!(
                "at most {templates} noise and common events are available"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    None,
    Ip,
    Hex,
    Uuid,
    Id,
}

#[derive(Debug, Clone)]
struct Template {
    text: String,
    slot: Slot,
}

impl Template {
    fn render(&self, rng: &mut ChaCha8Rng) -> String {
        let value = match self.slot {
            Slot::None => return self.text.clone(),
            Slot::Ip => format!(
                "{}.{}.{}.{}",
                rng.gen_range(10..=250),
                rng.gen_range(0..=255),
                rng.gen_range(0..=255),
                rng.gen_range(1..=254)
            ),
            Slot::Hex => format!("0x{:012x}", rng.gen::<u64>() & 0xffff_ffff_ffff),
            Slot::Uuid => {
                let a: u128 = rng.gen();
                let h = format!("{a:032x}");
                format!(
                    "{}-{}-{}-{}-{}",
                    &h[..8],
                    &h[8..12],
                    &h[12..16],
                    &h[16..20],
                    &h[20..]
                )
            }
            Slot::Id => rng.gen_range(100_000u64..100_000_000).to_string(),
        };
        format!("{} {value}", self.text)
    }
}

/// A generated suite: logs per test plus the signatures identifying the
/// planted events.
#[derive(Debug, Clone)]
pub struct SynthSuite {
    pub tests: Vec<TestCorpus>,
    pub signatures: Vec<Signature>,
    /// Test name to signature name.
    pub assignments: BTreeMap<String, String>,
}

impl SynthSuite {
    pub fn signature_book(&self) -> Result<SignatureBook> {
        SignatureBook::new(&self.signatures, self.assignments.clone())
    }

    pub fn signatures_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.signatures).expect("signatures serialize");
        s.push('\n');
        s
    }

    pub fn assignments_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.assignments).expect("assignments serialize");
        s.push('\n');
        s
    }

    /// Write `<dir>/<test>/{fail,pass}/*.log`, the manifest, the signatures
    /// and the test-to-signature map.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut all: Vec<&RawLog> = Vec::new();
        for test in &self.tests {
            for log in &test.logs {
                write_text(&dir.join(&log.source_id), &log.text)?;
                all.push(log);
            }
        }
        write_text(&dir.join(MANIFEST_FILE), &manifest_csv(&all)?)?;
        write_text(&dir.join(SIGNATURES_FILE), &self.signatures_json())?;
        write_text(&dir.join(SIGNATURE_MAP_FILE), &self.assignments_json())
    }
}

pub fn test_name(index: usize) -> String {
    format!("suite-{:02}", index + 1)
}

fn templates(rng: &mut ChaCha8Rng, n: usize) -> Vec<Template> {
    let mut combos: Vec<(usize, usize, usize)> = (0..COMPONENTS.len())
        .flat_map(|c| {
            (0..ACTIONS.len()).flat_map(move |a| (0..OBJECTS.len()).map(move |o| (c, a, o)))
        })
        .collect();
    combos.shuffle(rng);
    combos
        .into_iter()
        .take(n)
        .map(|(c, a, o)| {
            let failing_word = ACTIONS[a].contains("error") || ACTIONS[a].contains("fail");
            let level = if failing_word && rng.gen_bool(0.5) {
                "ERROR"
            } else {
                LEVELS[rng.gen_range(0..LEVELS.len())]
            };
            let slot = [
                Slot::None,
                Slot::None,
                Slot::Ip,
                Slot::Hex,
                Slot::Uuid,
                Slot::Id,
            ][rng.gen_range(0..6)];
            Template {
                text: format!("{level} [{}] {} {}", COMPONENTS[c], ACTIONS[a], OBJECTS[o]),
                slot,
            }
        })
        .collect()
}

struct TestPlan {
    common: Vec<Template>,
    noise: Vec<(Template, f64)>,
    planted: Vec<String>,
}

fn render_log(
    plan: &TestPlan,
    verdict: Verdict,
    start: DateTime<Utc>,
    rng: &mut ChaCha8Rng,
) -> String {
    let head = plan.common.len() / 2;
    let mut body: Vec<String> = Vec::new();
    for (t, p) in &plan.noise {
        if rng.gen_bool(*p) {
            body.push(t.render(rng));
            if rng.gen_bool(0.05) {
                body.push(t.render(rng));
            }
        }
    }
    body.shuffle(rng);
    if verdict == Verdict::Fail {
        for event in &plan.planted {
            let at = rng.gen_range(body.len() / 2..=body.len());
            body.insert(at, event.clone());
        }
    }
    let mut events: Vec<String> = plan.common[..head].iter().map(|t| t.render(rng)).collect();
    events.extend(body);
    for t in &plan.common[head..] {
        events.push(t.render(rng));
    }
    let mut text = String::new();
    for (i, event) in events.into_iter().enumerate() {
        let ts = start + Duration::seconds(i as i64);
        text.push_str(&ts.format("%Y-%m-%d %H:%M:%S").to_string());
        text.push(' ');
        text.push_str(&event);
        text.push('\n');
    }
    text
}

/// Generate a suite. The same config always yields the same suite.
pub fn generate(config: &SynthConfig) -> Result<SynthSuite> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let base = DateTime::from_timestamp(1_709_251_200, 0).expect("valid epoch");
    let mut tests = Vec::new();
    let mut signatures = Vec::new();
    let mut assignments = BTreeMap::new();

    for t in 0..config.tests {
        let name = test_name(t);
        let mut pool = templates(&mut rng, config.common + config.noise);
        let noise = pool
            .split_off(config.common)
            .into_iter()
            .map(|tpl| {
                let p = rng.gen_range(0.2..0.8);
                (tpl, p)
            })
            .collect();
        let mut faults = FAULTS.to_vec();
        faults.shuffle(&mut rng);
        let phrases: Vec<String> = faults[..config.planted]
            .iter()
            .map(|f| format!("{f} (suite {:02})", t + 1))
            .collect();
        let planted = phrases
            .iter()
            .enumerate()
            .map(|(i, phrase)| {
                let level = FAULT_LEVELS[rng.gen_range(0..FAULT_LEVELS.len())];
                let component = COMPONENTS[rng.gen_range(0..COMPONENTS.len())];
                let mut event = format!("{level} [{component}] {phrase}");
                if i == 0 {
                    for frame in FRAMES {
                        event.push('\n');
                        event.push_str(frame);
                    }
                }
                event
            })
            .collect();
        let plan = TestPlan {
            common: pool,
            noise,
            planted,
        };

        let mut verdicts: Vec<Verdict> = std::iter::repeat_n(Verdict::Fail, config.failing)
            .chain(std::iter::repeat_n(Verdict::Pass, config.passing))
            .collect();
        verdicts.shuffle(&mut rng);
        let test_start = base + Duration::days(t as i64);
        let logs = verdicts
            .into_iter()
            .enumerate()
            .map(|(slot, verdict)| {
                let start = test_start + Duration::minutes(30 * slot as i64);
                let dir = match verdict {
                    Verdict::Fail => "fail",
                    Verdict::Pass => "pass",
                };
                let text = render_log(&plan, verdict, start, &mut rng);
                RawLog::new(
                    format!("{name}/{dir}/run-{slot:03}.log"),
                    verdict,
                    start,
                    text,
                )
            })
            .collect::<Vec<_>>();
        let mut logs = logs;
        logs.sort_by(|a, b| a.source_id.cmp(&b.source_id));

        let sig_name = format!("{name}-fault");
        signatures.push(Signature {
            name: sig_name.clone(),
            sub_patterns: phrases.iter().map(|p| regex::escape(p)).collect(),
        });
        assignments.insert(name.clone(), sig_name);
        tests.push(TestCorpus { name, logs });
    }
    Ok(SynthSuite {
        tests,
        signatures,
        assignments,
    })
}
