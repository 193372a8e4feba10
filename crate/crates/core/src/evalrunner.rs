//! Output-prediction evaluation: prompting a model on original and
//! obfuscated programs, pass@k scoring, memorization counts, judge rubric
//! scores and original-vs-variant deltas.

pub mod answer;
pub mod endpoint;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rewrite::ObfuscationRecord;
use crate::scopes::BindingKind;
use crate::strategies::StrategyTag;
use crate::verify::{CallSpec, Job, JobStatus, Limits, Runner, RunnerError};

pub use answer::{canonicalize, extract_answer};
pub use endpoint::{Endpoint, EndpointError, Fixture, HttpConfig, HttpEndpoint, MockEndpoint, Recorder, ReplayEndpoint};

pub const DEFAULT_CONCURRENCY: usize = 4;
pub const DEFAULT_SAMPLES: usize = 5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("task sets differ: {0}")]
    MismatchedTaskSets(String),
    #[error(transparent)]
    Endpoint(#[from] EndpointError),
    #[error(transparent)]
    Runner(#[from] RunnerError),
    #[error("ground truth for {task_id}: {detail}")]
    GroundTruth { task_id: String, detail: String },
}

/// Unbiased pass@k estimate `1 - C(n-c, k) / C(n, k)`.
pub fn pass_at_k(n: u64, c: u64, k: u64) -> Result<f64, EvalError> {
    if c > n || k < 1 || k > n {
        return Err(EvalError::Domain(format!("pass@k needs 0 <= c <= n and 1 <= k <= n, got n={n} c={c} k={k}")));
    }
    if n - c < k {
        return Ok(1.0);
    }
    // C(n-c, k) / C(n, k) as a product of k ratios, each in [0, 1].
    let miss: f64 = (0..k).map(|i| (n - c - i) as f64 / (n - i) as f64).product();
    Ok(1.0 - miss)
}

/// Rubric scores on a 1 to 5 scale: intent capture, behavioral coverage,
/// algorithmic adequacy, faithfulness, clarity.
pub type Rating = [f64; 5];

/// One summary's score on 0..=100.
pub fn judge_score(r: &Rating) -> Result<f64, EvalError> {
    if let Some(bad) = r.iter().find(|d| !(1.0..=5.0).contains(*d)) {
        return Err(EvalError::Domain(format!("rating {bad} outside 1..=5")));
    }
    let sum: f64 = r.iter().sum();
    Ok((sum - 5.0) / 20.0 * 100.0)
}

/// Mean score over summaries.
pub fn judge_aggregate(ratings: &[Rating]) -> Result<f64, EvalError> {
    if ratings.is_empty() {
        return Err(EvalError::Domain("no ratings".into()));
    }
    let scores = ratings.iter().map(judge_score).collect::<Result<Vec<_>, _>>()?;
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// The original program or one obfuscated variant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Condition {
    Orig,
    Obf(StrategyTag),
}

impl Condition {
    pub const ALL: [Condition; 5] = [
        Condition::Orig,
        Condition::Obf(StrategyTag::Alpha),
        Condition::Obf(StrategyTag::Ambiguity),
        Condition::Obf(StrategyTag::Crossdomain),
        Condition::Obf(StrategyTag::Misleading),
    ];
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Orig => f.write_str("orig"),
            Condition::Obf(t) => t.fmt(f),
        }
    }
}

impl FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "orig" {
            return Ok(Condition::Orig);
        }
        s.parse::<StrategyTag>().map(Condition::Obf).map_err(|_| format!("unknown condition '{s}'"))
    }
}

impl Serialize for Condition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Condition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputDomain {
    SmallFinite,
    #[default]
    Large,
}

impl OutputDomain {
    /// Booleans and `None` are guessable without reading the code.
    pub fn estimate(expected: &str) -> Self {
        match expected {
            "True" | "False" | "None" => OutputDomain::SmallFinite,
            _ => OutputDomain::Large,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionTask {
    pub task_id: String,
    pub condition: Condition,
    pub prompt: String,
    pub expected_output: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub old_output: Option<String>,
    #[serde(default)]
    pub output_domain: OutputDomain,
}

impl PredictionTask {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.expected_output.is_empty() {
            return Err(EvalError::Domain(format!("{}: empty expected output", self.task_id)));
        }
        if self.old_output.as_deref() == Some(self.expected_output.as_str()) {
            return Err(EvalError::Domain(format!(
                "{}: old output equals the new expected output",
                self.task_id
            )));
        }
        Ok(())
    }
}

/// Plain-text prompt with `{{code}}` and `{{input}}` placeholders.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptTemplate(pub String);

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate(include_str!("../prompts/output_prediction.txt").to_string())
    }
}

impl PromptTemplate {
    pub fn render(&self, code: &str, input: &str) -> String {
        self.0.replace("{{code}}", code).replace("{{input}}", input)
    }
}

/// A call to predict, plus what the original dataset expected for the
/// pre-augmentation input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub call: CallSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub old_output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_domain: Option<OutputDomain>,
}

/// Run `call` on `code` and return the canonical repr of its result.
pub fn ground_truth(runner: &Runner, code: &str, call: &CallSpec, limits: Limits) -> Result<String, EvalError> {
    let r = runner.run(&Job::call(code, &call.function, &call.args, limits))?;
    match (r.status, r.returned_value) {
        (JobStatus::Ok, Some(v)) => Ok(v),
        (status, _) => Err(EvalError::GroundTruth {
            task_id: String::new(),
            detail: format!("{status:?}: {}", r.error.unwrap_or(r.stderr_tail)),
        }),
    }
}

/// The call as it must be written against a variant.
pub fn renamed_call(record: &ObfuscationRecord, tag: StrategyTag, call: &CallSpec) -> CallSpec {
    let function = record
        .variants
        .get(&tag)
        .and_then(|v| {
            v.name_map
                .entries
                .values()
                .find(|e| e.original == call.function && e.kind == BindingKind::Function)
        })
        .map_or_else(|| call.function.clone(), |e| e.renamed.clone());
    CallSpec {
        function,
        args: call.args.clone(),
    }
}

/// One task per condition. Expected outputs come from executing the
/// original; each variant is executed too and must agree.
pub fn prediction_tasks(
    record: &ObfuscationRecord,
    probe: &Probe,
    template: &PromptTemplate,
    runner: &Runner,
    limits: Limits,
) -> Result<Vec<PredictionTask>, EvalError> {
    let tag_err = |e: EvalError| match e {
        EvalError::GroundTruth { detail, .. } => EvalError::GroundTruth {
            task_id: record.task_id.clone(),
            detail,
        },
        e => e,
    };
    let expected = ground_truth(runner, &record.original.code, &probe.call, limits).map_err(tag_err)?;
    let domain = probe.output_domain.unwrap_or_else(|| OutputDomain::estimate(&expected));
    let input = |c: &CallSpec| format!("{}({})", c.function, c.args);
    let mut tasks = vec![PredictionTask {
        task_id: record.task_id.clone(),
        condition: Condition::Orig,
        prompt: template.render(&record.original.code, &input(&probe.call)),
        expected_output: expected.clone(),
        old_output: probe.old_output.clone(),
        output_domain: domain,
    }];
    for (&tag, v) in &record.variants {
        let call = renamed_call(record, tag, &probe.call);
        let got = ground_truth(runner, &v.code, &call, limits).map_err(tag_err)?;
        if got != expected {
            return Err(EvalError::GroundTruth {
                task_id: record.task_id.clone(),
                detail: format!("{tag} returns {got}, original returns {expected}"),
            });
        }
        tasks.push(PredictionTask {
            task_id: record.task_id.clone(),
            condition: Condition::Obf(tag),
            prompt: template.render(&v.code, &input(&call)),
            expected_output: expected.clone(),
            old_output: probe.old_output.clone(),
            output_domain: domain,
        });
    }
    for t in &tasks {
        t.validate()?;
    }
    Ok(tasks)
}

/// All samples drawn for one task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskSamples {
    pub task_id: String,
    pub condition: Condition,
    /// Extracted answers; `None` when the response had no answer block.
    pub answers: Vec<Option<String>>,
    pub correct: Vec<bool>,
    pub old_match: Vec<bool>,
    pub output_domain: OutputDomain,
    pub has_old_output: bool,
    /// Set when the endpoint failed; the missing samples count as wrong.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TaskSamples {
    pub fn correct_count(&self) -> usize {
        self.correct.iter().filter(|&&c| c).count()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub samples_per_task: usize,
    /// Sorted by condition, then task id.
    pub tasks: Vec<TaskSamples>,
}

fn sample_task(task: &PredictionTask, endpoint: &dyn Endpoint, n: usize) -> TaskSamples {
    let expected = canonicalize(&task.expected_output);
    let old = task.old_output.as_deref().map(canonicalize);
    let mut out = TaskSamples {
        task_id: task.task_id.clone(),
        condition: task.condition,
        answers: Vec::with_capacity(n),
        correct: Vec::with_capacity(n),
        old_match: Vec::with_capacity(n),
        output_domain: task.output_domain,
        has_old_output: old.is_some(),
        error: None,
    };
    for i in 0..n {
        let answer = match endpoint.complete(task, i) {
            Ok(r) => extract_answer(&r),
            Err(e) => {
                out.error.get_or_insert_with(|| e.to_string());
                None
            }
        };
        out.correct.push(answer.as_deref() == Some(expected.as_str()));
        out.old_match.push(old.is_some() && answer.as_deref() == old.as_deref());
        out.answers.push(answer);
    }
    out
}

/// Draw `n` samples per task with at most `concurrency` requests in flight.
pub fn run_prediction(
    tasks: &[PredictionTask],
    endpoint: &dyn Endpoint,
    n: usize,
    concurrency: usize,
) -> Result<RunResult, EvalError> {
    if n == 0 {
        return Err(EvalError::Domain("need at least one sample per task".into()));
    }
    for t in tasks {
        t.validate()?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(concurrency.max(1))
        .build()
        .map_err(|e| EvalError::Domain(e.to_string()))?;
    let mut done: Vec<TaskSamples> = pool.install(|| tasks.par_iter().map(|t| sample_task(t, endpoint, n)).collect());
    done.sort_by(|a, b| (a.condition, &a.task_id).cmp(&(b.condition, &b.task_id)));
    Ok(RunResult {
        samples_per_task: n,
        tasks: done,
    })
}

/// Tasks with at least one sample equal to the pre-augmentation output,
/// per condition. Tasks with small finite output domains are skipped.
pub fn memorization_check(results: &RunResult) -> BTreeMap<Condition, usize> {
    let mut counts = BTreeMap::new();
    for t in &results.tasks {
        let c = counts.entry(t.condition).or_insert(0);
        if t.has_old_output && t.output_domain != OutputDomain::SmallFinite && t.old_match.iter().any(|&m| m) {
            *c += 1;
        }
    }
    counts
}

/// A score over a fixed task set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreSlice {
    pub tasks: BTreeSet<String>,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaSummary {
    /// Original minus variant; positive means the variant scored lower.
    pub per_strategy: BTreeMap<StrategyTag, f64>,
    pub min: f64,
    pub max: f64,
    pub avg: f64,
}

pub fn delta_report(orig: &ScoreSlice, variants: &BTreeMap<StrategyTag, ScoreSlice>) -> Result<DeltaSummary, EvalError> {
    if variants.is_empty() {
        return Err(EvalError::MismatchedTaskSets("no variants".into()));
    }
    let mut per_strategy = BTreeMap::new();
    for (&tag, v) in variants {
        if v.tasks != orig.tasks {
            return Err(EvalError::MismatchedTaskSets(format!(
                "{tag} covers {} tasks, orig covers {}",
                v.tasks.len(),
                orig.tasks.len()
            )));
        }
        per_strategy.insert(tag, orig.score - v.score);
    }
    let d: Vec<f64> = per_strategy.values().copied().collect();
    Ok(DeltaSummary {
        min: d.iter().copied().fold(f64::INFINITY, f64::min),
        max: d.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        avg: d.iter().sum::<f64>() / d.len() as f64,
        per_strategy,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionScores {
    pub tasks: usize,
    /// pass@k on 0..=100, keyed by k.
    pub pass_at: BTreeMap<usize, f64>,
    pub memorization: usize,
    pub failed_tasks: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub samples_per_task: usize,
    pub conditions: BTreeMap<Condition, ConditionScores>,
    /// Deltas against `orig`, keyed by k.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub deltas: BTreeMap<usize, DeltaSummary>,
}

impl EvalReport {
    /// Scores for each `k` not exceeding the sample count.
    pub fn from_run(run: &RunResult, ks: &[usize]) -> Result<Self, EvalError> {
        let n = run.samples_per_task;
        if let Some(t) = run.tasks.iter().find(|t| t.correct.len() != n) {
            return Err(EvalError::Domain(format!(
                "{}/{} has {} samples, expected {n}",
                t.condition,
                t.task_id,
                t.correct.len()
            )));
        }
        let ks: Vec<usize> = ks.iter().copied().filter(|&k| k >= 1 && k <= n).collect();
        let memo = memorization_check(run);
        let mut by_cond: BTreeMap<Condition, Vec<&TaskSamples>> = BTreeMap::new();
        for t in &run.tasks {
            by_cond.entry(t.condition).or_default().push(t);
        }
        let mut conditions = BTreeMap::new();
        let mut slices: BTreeMap<usize, BTreeMap<Condition, ScoreSlice>> = BTreeMap::new();
        for (cond, tasks) in &by_cond {
            let mut pass_at = BTreeMap::new();
            for &k in &ks {
                let mut total = 0.0;
                for t in tasks {
                    total += pass_at_k(n as u64, t.correct_count() as u64, k as u64)?;
                }
                let score = total / tasks.len() as f64 * 100.0;
                pass_at.insert(k, score);
                slices.entry(k).or_default().insert(
                    *cond,
                    ScoreSlice {
                        tasks: tasks.iter().map(|t| t.task_id.clone()).collect(),
                        score,
                    },
                );
            }
            conditions.insert(
                *cond,
                ConditionScores {
                    tasks: tasks.len(),
                    pass_at,
                    memorization: memo.get(cond).copied().unwrap_or(0),
                    failed_tasks: tasks.iter().filter(|t| t.error.is_some()).count(),
                },
            );
        }
        let mut deltas = BTreeMap::new();
        for (k, mut s) in slices {
            let Some(orig) = s.remove(&Condition::Orig) else { continue };
            let variants: BTreeMap<StrategyTag, ScoreSlice> = s
                .into_iter()
                .filter_map(|(c, v)| match c {
                    Condition::Obf(t) => Some((t, v)),
                    Condition::Orig => None,
                })
                .collect();
            if !variants.is_empty() {
                deltas.insert(k, delta_report(&orig, &variants)?);
            }
        }
        Ok(EvalReport {
            samples_per_task: n,
            conditions,
            deltas,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// One row per condition; pass@k columns for every k in the report.
    pub fn to_csv(&self) -> String {
        let ks: BTreeSet<usize> = self.conditions.values().flat_map(|c| c.pass_at.keys().copied()).collect();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["condition".to_string(), "tasks".to_string()];
        header.extend(ks.iter().map(|k| format!("pass@{k}")));
        header.extend(ks.iter().map(|k| format!("delta@{k}")));
        header.extend(["memorization".to_string(), "failed_tasks".to_string()]);
        w.write_record(&header).expect("in-memory write");
        for (cond, s) in &self.conditions {
            let mut row = vec![cond.to_string(), s.tasks.to_string()];
            row.extend(ks.iter().map(|k| s.pass_at.get(k).map_or(String::new(), |v| format!("{v:.4}"))));
            row.extend(ks.iter().map(|k| match cond {
                Condition::Obf(t) => self
                    .deltas
                    .get(k)
                    .and_then(|d| d.per_strategy.get(t))
                    .map_or(String::new(), |v| format!("{v:.4}")),
                Condition::Orig => String::new(),
            }));
            row.extend([s.memorization.to_string(), s.failed_tasks.to_string()]);
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

#[cfg(test)]
mod tests;
