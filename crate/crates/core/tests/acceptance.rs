//! Acceptance checks. One PASS/FAIL line per criterion; exits non-zero if any fail.
//!
//! cargo test --test acceptance

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::{corpus, rename_all};
use nameobf::evalrunner::endpoint::{fenced, Fixture, ReplayEndpoint};
use nameobf::evalrunner::{
    delta_report, judge_score, pass_at_k, run_prediction, Condition, EvalReport, OutputDomain, PredictionTask,
    PromptTemplate, ScoreSlice,
};
use nameobf::metrics::{cyclomatic, unit_complexity};
use nameobf::frontend::parse;
use nameobf::pipeline::{build_dataset, obfuscate_and_verify, PipelineConfig};
use nameobf::datasetio::manifest_path;
use nameobf::rewrite::{obfuscate_all, Analyzed, RewriteOptions};
use nameobf::scopes::RenamePolicy;
use nameobf::strategies::{Strategy, StrategyTag};
use nameobf::verify::{verify_pair, Limits, Runner, Status};

const SEED: u64 = 42;
const RUNTIME_LIMIT: Duration = Duration::from_secs(120);
const FAULT_TRIALS: u64 = 20;
const SCOPE_CONFIGS: u64 = 256;
const PASS_AT_K_TOL: f64 = 1e-12;
const SCORE_TOL: f64 = 1e-9;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn semantics() -> Outcome {
    let start = Instant::now();
    let runner = Runner::default();
    ensure(runner.available(), "python3 not available")?;
    let units = corpus();
    let ids: BTreeSet<&str> = units.iter().map(|u| u.task_id.as_str()).collect();
    ensure(units.len() >= 10, format!("corpus has {} units", units.len()))?;
    ensure(ids.contains("minesweeper") && ids.contains("palindrome"), "corpus lacks minesweeper or palindrome")?;

    let out = obfuscate_and_verify(&units, &PipelineConfig { seed: SEED, ..PipelineConfig::default() }, &runner);
    let expected = units.len() * StrategyTag::ALL.len();
    let equivalent = out.summary.counts.get(&Status::Equivalent).copied().unwrap_or(0);
    ensure(
        equivalent == expected,
        format!("{equivalent}/{expected} equivalent; skipped: {:?}", out.skipped),
    )?;

    let limits = Limits::default();
    let mut divergent = 0;
    let mut misses = Vec::new();
    for trial in 0..FAULT_TRIALS {
        let unit = &units[trial as usize % units.len()];
        let tag = StrategyTag::ALL[trial as usize % StrategyTag::ALL.len()];
        let a = Analyzed::new(unit).map_err(|e| e.to_string())?;
        let map = a.build_map(&Strategy::new(tag, SEED + trial), RenamePolicy::default()).map_err(|e| e.to_string())?;
        let opts = RewriteOptions {
            fault: Some(trial),
            ..RewriteOptions::default()
        };
        let broken = a.rewrite(&map, &opts).map_err(|e| e.to_string())?;
        let skipped = broken.skipped.ok_or(format!("trial {trial}: nothing to break in {}", unit.task_id))?;
        let v = verify_pair(
            &unit.code,
            unit.test_code.as_deref().unwrap_or(""),
            &broken.unit.code,
            broken.unit.test_code.as_deref().unwrap_or(""),
            limits,
            &runner,
        );
        if v.status == Status::Divergent {
            divergent += 1;
        } else {
            misses.push(format!("{}/{tag} '{}' -> {:?}", unit.task_id, skipped.name, v.status));
        }
    }
    ensure(divergent == FAULT_TRIALS, format!("{divergent}/{FAULT_TRIALS} faults detected: {misses:?}"))?;
    let took = start.elapsed();
    ensure(took < RUNTIME_LIMIT, format!("took {took:.1?}"))?;
    Ok(format!(
        "{equivalent}/{expected} variants equivalent, {divergent}/{FAULT_TRIALS} faults divergent, {:.1}s",
        took.as_secs_f64()
    ))
}

fn determinism() -> Outcome {
    let runner = Runner::default();
    ensure(runner.available(), "python3 not available")?;
    let units = corpus();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = PipelineConfig {
        seed: SEED,
        ..PipelineConfig::default()
    };
    let mut files = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run).join("dataset.jsonl");
        let res = build_dataset(&units, &cfg, &runner, &out).map_err(|e| e.to_string())?;
        let records = res.manifest.map_or(0, |m| m.records.len());
        let read = |p: &std::path::Path| std::fs::read(p).map_err(|e| e.to_string());
        files.push((records, read(&out)?, read(&manifest_path(&out))?));
    }
    ensure(files[0].0 > 0, "no records written")?;
    ensure(files[0].1 == files[1].1, "dataset files differ")?;
    ensure(files[0].2 == files[1].2, "manifests differ")?;
    Ok(format!("{} records, dataset and manifest byte-identical across runs", files[0].0))
}

fn capture_avoidance() -> Outcome {
    for seed in 0..SCOPE_CONFIGS {
        rename_all(seed).map_err(|e| format!("seed {seed}: {e}"))?;
    }
    Ok(format!("{SCOPE_CONFIGS} generated scope configurations x 4 strategies, no capture"))
}

/// Fraction of k-subsets of n samples, the first c correct, holding a correct one.
fn enumerate_subsets(n: u32, c: u32, k: u32) -> f64 {
    let (mut hit, mut all) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() == k {
            all += 1;
            if mask & ((1 << c) - 1) != 0 {
                hit += 1;
            }
        }
    }
    hit as f64 / all as f64
}

fn pass_at_k_oracle() -> Outcome {
    let mut cases = 0;
    let mut worst: f64 = 0.0;
    for n in 1..=8u32 {
        for c in 0..=n {
            for k in 1..=n {
                let got = pass_at_k(n.into(), c.into(), k.into()).map_err(|e| e.to_string())?;
                let err = (got - enumerate_subsets(n, c, k)).abs();
                worst = worst.max(err);
                ensure(err <= PASS_AT_K_TOL, format!("n={n} c={c} k={k}: error {err:e}"))?;
                cases += 1;
            }
        }
    }
    let p = pass_at_k(5, 2, 3).map_err(|e| e.to_string())?;
    ensure((p - 0.9).abs() <= PASS_AT_K_TOL, format!("pass@3(5,2) = {p}"))?;
    Ok(format!("{cases} (n,c,k) cases, max error {worst:e}, pass@3(n=5,c=2) = {p}"))
}

fn cc_oracle() -> Outcome {
    let units = corpus();
    let listing = units.iter().find(|u| u.task_id == "palindrome").ok_or("no palindrome unit")?;
    let palindrome = cyclomatic(&parse(&listing.code).map_err(|e| e.to_string())?);
    ensure(palindrome.unit_cc_max == 2, format!("palindrome CC {}", palindrome.unit_cc_max))?;
    let mut checked = 0;
    for u in &units {
        let base = unit_complexity(u).ok_or(format!("{} does not parse", u.task_id))?;
        let shape = |r: &nameobf::metrics::ComplexityReport| -> Vec<(usize, u32)> {
            r.functions.iter().map(|f| (f.qualname.matches('.').count(), f.cc)).collect()
        };
        let rec = obfuscate_all(u, SEED).map_err(|e| e.to_string())?;
        for tag in StrategyTag::ALL {
            let v = rec.variant_unit(tag).ok_or(format!("{} lacks {tag}", u.task_id))?;
            let got = unit_complexity(&v).ok_or("variant does not parse")?;
            ensure(
                shape(&got) == shape(&base) && got.unit_cc_max == base.unit_cc_max && got.unit_cc_sum == base.unit_cc_sum,
                format!("{} {tag}: complexity changed", u.task_id),
            )?;
            checked += 1;
        }
    }
    let independent = python_cc_agrees(&units)?;
    Ok(format!(
        "palindrome CC 2, {checked} variants invariant, {independent} units match the independent counter"
    ))
}

fn python_cc_agrees(units: &[nameobf::frontend::SourceUnit]) -> Result<usize, String> {
    const COUNTER: &str = r#"
import ast, json, sys
def cc(fn):
    n = 1
    stack = list(fn.body)
    while stack:
        node = stack.pop()
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
            continue
        if isinstance(node, (ast.If, ast.For, ast.AsyncFor, ast.While, ast.IfExp, ast.ExceptHandler)):
            n += 1
        elif isinstance(node, ast.BoolOp):
            n += len(node.values) - 1
        elif isinstance(node, ast.comprehension):
            n += len(node.ifs)
        elif isinstance(node, ast.Match):
            last = node.cases[-1]
            wild = isinstance(last.pattern, ast.MatchAs) and last.pattern.pattern is None and last.guard is None
            n += len(node.cases) - (1 if wild else 0)
        stack.extend(ast.iter_child_nodes(node))
    return n
out = []
for src in json.load(sys.stdin):
    fns = [f for f in ast.walk(ast.parse(src)) if isinstance(f, (ast.FunctionDef, ast.AsyncFunctionDef))]
    out.append(sorted(cc(f) for f in fns))
print(json.dumps(out))
"#;
    if common::python().is_none() {
        return Err("python3 not available".into());
    }
    let sources: Vec<&str> = units.iter().map(|u| u.code.as_str()).collect();
    let theirs = common::run_python(COUNTER, &serde_json::json!(sources));
    let mut n = 0;
    for (u, t) in units.iter().zip(theirs.as_array().ok_or("bad oracle output")?) {
        let mut ours: Vec<u32> = unit_complexity(u).ok_or("unparseable")?.functions.iter().map(|f| f.cc).collect();
        ours.sort();
        let theirs: Vec<u32> = serde_json::from_value(t.clone()).map_err(|e| e.to_string())?;
        ensure(ours == theirs, format!("{}: {ours:?} vs independent {theirs:?}", u.task_id))?;
        n += 1;
    }
    Ok(n)
}

fn judge_arithmetic() -> Outcome {
    let cases = [([1.0; 5], 0.0), ([5.0; 5], 100.0), ([5.0, 4.0, 4.0, 3.0, 4.0], 75.0)];
    let mut got = Vec::new();
    for (r, want) in cases {
        let s = judge_score(&r).map_err(|e| e.to_string())?;
        ensure(s == want, format!("{r:?} -> {s}, want {want}"))?;
        got.push(s);
    }
    Ok(format!("(1,1,1,1,1)->{} (5,5,5,5,5)->{} (5,4,4,3,4)->{}", got[0], got[1], got[2]))
}

fn mock_evaluation() -> Outcome {
    const TASKS: usize = 10;
    const PARROTED: usize = 2;
    const SAMPLES: usize = 5;
    let ambiguity = Condition::Obf(StrategyTag::Ambiguity);
    let template = PromptTemplate::default();
    let mut tasks = Vec::new();
    for i in 0..TASKS {
        let code = format!("def f{i}(s):\n    return s[::-1] + '{i}'\n");
        for cond in [Condition::Orig, ambiguity] {
            let expected = format!("'cba{i}'");
            tasks.push(PredictionTask {
                task_id: format!("task{i:02}"),
                condition: cond,
                prompt: template.render(&code, "'abc'"),
                output_domain: OutputDomain::estimate(&expected),
                expected_output: expected,
                old_output: Some(format!("'xyz{i}'")),
            });
        }
    }
    let mut fixture = Fixture::default();
    for t in &tasks {
        let parrot = t.condition == ambiguity && t.task_id.as_str() < "task02";
        let answer = if parrot { t.old_output.as_deref().unwrap_or_default() } else { &t.expected_output };
        for s in 0..SAMPLES {
            fixture.insert(t, s, format!("The function reverses its input.\n{}", fenced(answer)));
        }
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("fixture.json");
    fixture.save(&path).map_err(|e| e.to_string())?;
    let replay = ReplayEndpoint::new(Fixture::load(&path).map_err(|e| e.to_string())?);
    let run = run_prediction(&tasks, &replay, SAMPLES, 4).map_err(|e| e.to_string())?;
    let report = EvalReport::from_run(&run, &[1]).map_err(|e| e.to_string())?;

    let orig = &report.conditions[&Condition::Orig];
    let amb = &report.conditions[&ambiguity];
    ensure(orig.pass_at[&1] == 100.0, format!("pass@1(orig) = {}", orig.pass_at[&1]))?;
    ensure(amb.memorization == PARROTED, format!("memorization count {}", amb.memorization))?;
    ensure(orig.memorization == 0, format!("orig memorization count {}", orig.memorization))?;
    let want_amb = 100.0 * (TASKS - PARROTED) as f64 / TASKS as f64;
    ensure((amb.pass_at[&1] - want_amb).abs() < SCORE_TOL, format!("pass@1(ambiguity) = {}", amb.pass_at[&1]))?;
    let d = report.deltas[&1].per_strategy[&StrategyTag::Ambiguity];
    ensure((d - (100.0 - want_amb)).abs() < SCORE_TOL, format!("delta {d}"))?;

    let ids: BTreeSet<String> = (0..TASKS).map(|i| format!("task{i:02}")).collect();
    let slice = |score| ScoreSlice {
        tasks: ids.clone(),
        score,
    };
    let table = delta_report(&slice(85.7), &BTreeMap::from([(StrategyTag::Ambiguity, slice(76.1))]))
        .map_err(|e| e.to_string())?;
    let fed = table.per_strategy[&StrategyTag::Ambiguity];
    ensure((fed - 9.6).abs() < SCORE_TOL, format!("85.7 - 76.1 -> {fed}"))?;
    Ok(format!(
        "pass@1(orig) = {}, memorization {} of {TASKS}, replay delta {d:.1}; 85.7 vs 76.1 -> {fed:.1}",
        orig.pass_at[&1], amb.memorization
    ))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("semantics preservation", semantics),
        ("determinism", determinism),
        ("capture avoidance", capture_avoidance),
        ("pass@k oracle equivalence", pass_at_k_oracle),
        ("cc oracle equivalence", cc_oracle),
        ("judge arithmetic", judge_arithmetic),
        ("mock-endpoint evaluation", mock_evaluation),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("{} of 7 criteria passed", 7 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
