//! Semantics-invariance checks: run a unit's tests on the original and on
//! each variant in separate runner processes and compare outcome vectors.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rewrite::ObfuscationRecord;
use crate::strategies::StrategyTag;

pub const SCHEMA: u32 = 1;
pub const RUNNER_SOURCE: &str = include_str!("../pyrunner/runner.py");
/// Extra seconds the runner process gets beyond its jobs' own timeouts.
const HANG_GRACE_S: f64 = 30.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    pub timeout_s: f64,
    pub memory_mb: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            timeout_s: 30.0,
            memory_mb: 512,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Entry {
    UnittestModule,
    FunctionCall,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallSpec {
    pub function: String,
    /// Python literal text of the positional arguments, without parentheses.
    pub args: String,
}

/// One runner job, serialized as a single JSON line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub schema: u32,
    pub code: String,
    pub test_code: String,
    pub timeout_s: f64,
    pub memory_mb: u64,
    pub entry: Entry,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub call_spec: Option<CallSpec>,
}

impl Job {
    pub fn tests(code: &str, test_code: &str, limits: Limits) -> Self {
        Job {
            schema: SCHEMA,
            code: code.to_string(),
            test_code: test_code.to_string(),
            timeout_s: limits.timeout_s,
            memory_mb: limits.memory_mb,
            entry: Entry::UnittestModule,
            call_spec: None,
        }
    }

    pub fn call(code: &str, function: &str, args: &str, limits: Limits) -> Self {
        Job {
            schema: SCHEMA,
            code: code.to_string(),
            test_code: String::new(),
            timeout_s: limits.timeout_s,
            memory_mb: limits.memory_mb,
            entry: Entry::FunctionCall,
            call_spec: Some(CallSpec {
                function: function.to_string(),
                args: args.to_string(),
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    Error,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub name: String,
    pub outcome: Outcome,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Ok,
    Crash,
    Timeout,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobResult {
    pub schema: u32,
    pub status: JobStatus,
    pub tests: Vec<TestOutcome>,
    pub returned_value: Option<String>,
    pub stderr_tail: String,
    pub error: Option<String>,
}

impl JobResult {
    /// Protocol rules a well-formed result obeys for `job`.
    pub fn validate(&self, job: &Job) -> Result<(), String> {
        if self.schema != SCHEMA {
            return Err(format!("schema {} (expected {SCHEMA})", self.schema));
        }
        if !self.tests.windows(2).all(|w| w[0].name < w[1].name) {
            return Err("tests are not ordered by name".into());
        }
        let want_value = job.entry == Entry::FunctionCall && self.status == JobStatus::Ok;
        if want_value != self.returned_value.is_some() {
            return Err("returned_value present iff a function call succeeded".into());
        }
        Ok(())
    }

    pub fn all_pass(&self) -> bool {
        self.status == JobStatus::Ok && !self.tests.is_empty() && self.tests.iter().all(|t| t.outcome == Outcome::Pass)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RunnerError {
    #[error("cannot start {python}: {message}")]
    Spawn { python: String, message: String },
    #[error("runner protocol: {0}")]
    Protocol(String),
    #[error("runner did not answer within {0:?}")]
    Hung(Duration),
}

/// Spawns the Python runner, one process per job.
#[derive(Clone, Debug)]
pub struct Runner {
    pub python: PathBuf,
    /// Runner script; the bundled one when `None`.
    pub script: Option<PathBuf>,
}

impl Default for Runner {
    fn default() -> Self {
        Runner {
            python: std::env::var_os("NAMEOBF_PYTHON")
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("python3")),
            script: std::env::var_os("NAMEOBF_RUNNER").map(PathBuf::from),
        }
    }
}

impl Runner {
    /// Is the interpreter present?
    pub fn available(&self) -> bool {
        Command::new(&self.python)
            .arg("-c")
            .arg("import sys; sys.exit(0 if sys.version_info >= (3, 8) else 1)")
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .status()
            .is_ok_and(|s| s.success())
    }

    pub fn run(&self, job: &Job) -> Result<JobResult, RunnerError> {
        let mut line = serde_json::to_string(job).expect("job serializes");
        line.push('\n');
        Ok(self.run_lines(&line)?.remove(0))
    }

    /// Feed raw protocol lines; one result per non-blank line.
    pub fn run_lines(&self, input: &str) -> Result<Vec<JobResult>, RunnerError> {
        let mut cmd = Command::new(&self.python);
        cmd.arg("-I");
        match &self.script {
            Some(p) => cmd.arg(p),
            None => cmd.arg("-c").arg(RUNNER_SOURCE),
        };
        let mut child = cmd
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| RunnerError::Spawn {
                python: self.python.display().to_string(),
                message: e.to_string(),
            })?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let payload = input.to_string();
        let writer = std::thread::spawn(move || {
            let _ = stdin.write_all(payload.as_bytes());
        });
        let mut stdout = child.stdout.take().expect("piped stdout");
        let reader = std::thread::spawn(move || {
            let mut s = String::new();
            let _ = stdout.read_to_string(&mut s);
            s
        });
        let mut stderr = child.stderr.take().expect("piped stderr");
        let err_reader = std::thread::spawn(move || {
            let mut s = String::new();
            let _ = stderr.read_to_string(&mut s);
            s
        });
        let budget: f64 = input
            .lines()
            .filter_map(|l| serde_json::from_str::<serde_json::Value>(l).ok())
            .filter_map(|v| v.get("timeout_s").and_then(|t| t.as_f64()))
            .filter(|t| t.is_finite() && *t > 0.0)
            .sum();
        let guard = Duration::from_secs_f64(budget + HANG_GRACE_S);
        let deadline = Instant::now() + guard;
        let status = loop {
            match child.try_wait() {
                Ok(Some(st)) => break st,
                Ok(None) if Instant::now() >= deadline => {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(RunnerError::Hung(guard));
                }
                Ok(None) => std::thread::sleep(Duration::from_millis(5)),
                Err(e) => return Err(RunnerError::Protocol(e.to_string())),
            }
        };
        let _ = writer.join();
        let out = reader.join().unwrap_or_default();
        let err = err_reader.join().unwrap_or_default();
        if !status.success() {
            return Err(RunnerError::Protocol(format!("runner exited with {status}: {}", tail(&err))));
        }
        let mut results = Vec::new();
        for l in out.lines().filter(|l| !l.trim().is_empty()) {
            let r: JobResult =
                serde_json::from_str(l).map_err(|e| RunnerError::Protocol(format!("bad result line: {e}: {l}")))?;
            results.push(r);
        }
        if results.is_empty() {
            return Err(RunnerError::Protocol(format!("no result line: {}", tail(&err))));
        }
        Ok(results)
    }
}

fn tail(s: &str) -> &str {
    let start = s.len().saturating_sub(500);
    let mut i = start;
    while !s.is_char_boundary(i) {
        i += 1;
    }
    &s[i..]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Equivalent,
    Divergent,
    OriginalFails,
    RunnerError,
    Timeout,
}

impl Status {
    pub const ALL: [Status; 5] = [
        Status::Equivalent,
        Status::Divergent,
        Status::OriginalFails,
        Status::RunnerError,
        Status::Timeout,
    ];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    pub original: Vec<TestOutcome>,
    pub variant: Vec<TestOutcome>,
    pub wall_ms: u64,
    /// The configured limit, for timeouts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeout_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// Verdict from the two job results.
pub fn judge(original: &JobResult, variant: &JobResult, limits: Limits, wall_ms: u64) -> Verdict {
    let mut v = Verdict {
        status: Status::Equivalent,
        original: original.tests.clone(),
        variant: variant.tests.clone(),
        wall_ms,
        timeout_s: None,
        detail: None,
    };
    if original.status == JobStatus::Timeout || variant.status == JobStatus::Timeout {
        v.status = Status::Timeout;
        v.timeout_s = Some(limits.timeout_s);
    } else if !original.all_pass() {
        v.status = Status::OriginalFails;
        v.detail = original.error.clone().or_else(|| Some(tail(&original.stderr_tail).to_string()));
    } else if variant.status != JobStatus::Ok || variant.tests != original.tests {
        v.status = Status::Divergent;
        if variant.status != JobStatus::Ok {
            v.detail = variant.error.clone().or_else(|| Some(tail(&variant.stderr_tail).to_string()));
        }
    }
    v
}

fn runner_error(e: &RunnerError, wall_ms: u64) -> Verdict {
    Verdict {
        status: Status::RunnerError,
        original: Vec::new(),
        variant: Vec::new(),
        wall_ms,
        timeout_s: None,
        detail: Some(e.to_string()),
    }
}

/// Verify one code/test pair against the original's result.
fn check_pair(runner: &Runner, original: &Result<JobResult, RunnerError>, code: &str, tests: &str, limits: Limits) -> Verdict {
    let start = Instant::now();
    let orig = match original {
        Ok(r) => r,
        Err(e) => return runner_error(e, 0),
    };
    match runner.run(&Job::tests(code, tests, limits)) {
        Ok(var) => judge(orig, &var, limits, start.elapsed().as_millis() as u64),
        Err(e) => runner_error(&e, start.elapsed().as_millis() as u64),
    }
}

fn original_result(runner: &Runner, record: &ObfuscationRecord, limits: Limits) -> Result<JobResult, RunnerError> {
    let tests = record.original.test_code.as_deref().unwrap_or("");
    runner.run(&Job::tests(&record.original.code, tests, limits))
}

/// Verify one variant and store the verdict in the record.
pub fn verify_variant(record: &mut ObfuscationRecord, tag: StrategyTag, limits: Limits, runner: &Runner) -> Verdict {
    let orig = original_result(runner, record, limits);
    let verdict = match record.variants.get(&tag) {
        Some(v) => check_pair(runner, &orig, &v.code, v.test_code.as_deref().unwrap_or(""), limits),
        None => runner_error(&RunnerError::Protocol(format!("record has no {tag} variant")), 0),
    };
    record.verdicts.insert(tag, verdict.clone());
    verdict
}

/// Verify every variant of a record, running the original once.
pub fn verify_record(record: &mut ObfuscationRecord, limits: Limits, runner: &Runner) {
    let orig = original_result(runner, record, limits);
    let verdicts: Vec<(StrategyTag, Verdict)> = record
        .variants
        .par_iter()
        .map(|(&tag, v)| (tag, check_pair(runner, &orig, &v.code, v.test_code.as_deref().unwrap_or(""), limits)))
        .collect();
    record.verdicts.extend(verdicts);
}

/// Verify a single code/test pair against an original unit (used for
/// fault-injection checks).
pub fn verify_pair(
    original_code: &str,
    original_tests: &str,
    code: &str,
    tests: &str,
    limits: Limits,
    runner: &Runner,
) -> Verdict {
    let orig = runner.run(&Job::tests(original_code, original_tests, limits));
    check_pair(runner, &orig, code, tests, limits)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonEquivalent {
    pub task_id: String,
    pub strategy: StrategyTag,
    pub status: Status,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub counts: BTreeMap<Status, usize>,
    pub non_equivalent: Vec<NonEquivalent>,
}

impl CorpusSummary {
    pub fn any_divergent(&self) -> bool {
        self.counts.get(&Status::Divergent).copied().unwrap_or(0) > 0
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }
}

/// Verify all records on a bounded pool and summarize by status.
pub fn verify_corpus(records: &mut [ObfuscationRecord], limits: Limits, runner: &Runner, workers: usize) -> CorpusSummary {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| {
        records.par_iter_mut().for_each(|r| verify_record(r, limits, runner));
    });
    summarize(records)
}

/// Counts per status over already-verified records, in task order.
pub fn summarize(records: &[ObfuscationRecord]) -> CorpusSummary {
    let mut counts: BTreeMap<Status, usize> = Status::ALL.iter().map(|&s| (s, 0)).collect();
    let mut non_equivalent = Vec::new();
    let mut sorted: Vec<&ObfuscationRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.task_id.cmp(&b.task_id));
    for r in sorted {
        for (&tag, v) in &r.verdicts {
            *counts.entry(v.status).or_default() += 1;
            if v.status != Status::Equivalent {
                non_equivalent.push(NonEquivalent {
                    task_id: r.task_id.clone(),
                    strategy: tag,
                    status: v.status,
                });
            }
        }
    }
    CorpusSummary { counts, non_equivalent }
}
