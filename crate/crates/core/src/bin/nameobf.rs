//! Command-line front end over the library.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use nameobf::datasetio::{ingest, read_probes, sorted_json, Format, Ingested};
use nameobf::evalrunner::{
    judge_aggregate, prediction_tasks, run_prediction, EvalReport, Fixture, HttpConfig, HttpEndpoint, PromptTemplate,
    Rating, Recorder, ReplayEndpoint, DEFAULT_CONCURRENCY, DEFAULT_SAMPLES,
};
use nameobf::frontend::{parse, SourceUnit};
use nameobf::metrics::{cyclomatic, filter_corpus, identifier_stats, Aggregate, IdentifierStats};
use nameobf::pipeline::{build_dataset, obfuscate_and_verify, PipelineConfig};
use nameobf::rewrite::{obfuscate_all_with, Analyzed, RewriteOptions};
use nameobf::scopes::{ReflectionPolicy, RenamePolicy};
use nameobf::strategies::{Strategy, StrategyTag};
use nameobf::verify::{Limits, Runner};

#[derive(Parser)]
#[command(name = "nameobf", version, about = "Capture-avoiding identifier obfuscation for Python")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Args)]
struct Opts {
    /// Seed for name generation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Restrict to these strategies (repeatable); all four by default.
    #[arg(long, global = true)]
    strategy: Vec<StrategyTag>,
    /// Keep units whose complexity reaches this value.
    #[arg(long, global = true, default_value_t = 1)]
    cc_threshold: u32,
    /// Compare the per-function maximum or sum against the threshold.
    #[arg(long, global = true, value_enum, default_value_t = AggregateArg::Max)]
    aggregate: AggregateArg,
    #[arg(long, global = true, value_enum, default_value_t = PolicyArg::Strict)]
    policy: PolicyArg,
    /// Leave attributes (`self.x`) alone.
    #[arg(long, global = true)]
    keep_attributes: bool,
    /// Per-job time limit in seconds.
    #[arg(long, global = true, default_value_t = 30.0)]
    timeout: f64,
    #[arg(long, global = true, default_value_t = 512)]
    memory_mb: u64,
    /// Input layout; guessed from the path when omitted.
    #[arg(long, global = true)]
    format: Option<Format>,
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AggregateArg {
    Max,
    Sum,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Strict,
    RewriteLiterals,
}

#[derive(Subcommand)]
enum Command {
    /// Print obfuscated code for one file, or records as JSON lines for a corpus.
    Obfuscate {
        input: PathBuf,
        /// Companion test file for a single-file input.
        #[arg(long)]
        tests: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run tests against every variant and report verdict counts.
    Verify { input: PathBuf },
    /// Complexity and identifier-length statistics.
    Stats {
        input: PathBuf,
        /// Write the pooled name-length histogram as CSV.
        #[arg(long)]
        histogram: Option<PathBuf>,
    },
    /// Obfuscate, verify and write the dataset plus manifest.
    BuildDataset {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Output-prediction evaluation against a model endpoint or a replay fixture.
    Eval {
        input: PathBuf,
        /// Probes file; defaults to the probes found while ingesting.
        #[arg(long)]
        probes: Option<PathBuf>,
        #[arg(long, conflicts_with = "record")]
        replay: Option<PathBuf>,
        /// Call the HTTP endpoint and save responses here.
        #[arg(long)]
        record: Option<PathBuf>,
        #[arg(long)]
        template: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_CONCURRENCY)]
        concurrency: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Render an evaluation report, or score judge ratings.
    Report {
        /// EvalReport JSON written by `eval`.
        #[arg(long, required_unless_present = "ratings")]
        input: Option<PathBuf>,
        /// CSV of five 1-5 rubric columns per summary.
        #[arg(long)]
        ratings: Option<PathBuf>,
    },
}

impl Opts {
    fn policy(&self) -> RenamePolicy {
        RenamePolicy {
            reflection: match self.policy {
                PolicyArg::Strict => ReflectionPolicy::Strict,
                PolicyArg::RewriteLiterals => ReflectionPolicy::RewriteLiterals,
            },
            rename_attributes: !self.keep_attributes,
        }
    }

    fn limits(&self) -> Limits {
        Limits {
            timeout_s: self.timeout,
            memory_mb: self.memory_mb,
        }
    }

    fn aggregate(&self) -> Aggregate {
        match self.aggregate {
            AggregateArg::Max => Aggregate::Max,
            AggregateArg::Sum => Aggregate::Sum,
        }
    }

    fn pipeline(&self) -> PipelineConfig {
        let mut cfg = PipelineConfig {
            seed: self.seed,
            policy: self.policy(),
            limits: self.limits(),
            cc_threshold: self.cc_threshold,
            aggregate: self.aggregate(),
            ..PipelineConfig::default()
        };
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        if !self.strategy.is_empty() {
            cfg.strategies = self.strategy.clone();
        }
        cfg
    }

    fn wants(&self, tag: StrategyTag) -> bool {
        self.strategy.is_empty() || self.strategy.contains(&tag)
    }

    fn load(&self, path: &Path) -> Result<Ingested, String> {
        let format = match self.format {
            Some(f) => f,
            None if path.is_dir() => Format::PlainDir,
            None => Format::LcbJson,
        };
        let got = ingest(path, format).map_err(|e| e.to_string())?;
        for w in &got.warnings {
            eprintln!("warning: {w}");
        }
        Ok(got)
    }
}

type Res = Result<ExitCode, String>;

fn write_or_print(out: Option<&Path>, text: &str) -> Result<(), String> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn obfuscate(o: &Opts, input: &Path, tests: Option<&Path>, out: Option<&Path>) -> Res {
    if input.extension().is_some_and(|e| e == "py") {
        let read = |p: &Path| fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()));
        let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("unit");
        let mut unit = SourceUnit::new(stem, read(input)?);
        if let Some(t) = tests {
            unit = unit.with_tests(read(t)?);
        }
        let a = Analyzed::new(&unit).map_err(|e| e.to_string())?;
        let mut text = String::new();
        for tag in StrategyTag::ALL.into_iter().filter(|t| o.wants(*t)) {
            let map = a.build_map(&Strategy::new(tag, o.seed), o.policy()).map_err(|e| e.to_string())?;
            let r = a.rewrite(&map, &RewriteOptions::default()).map_err(|e| e.to_string())?;
            if o.strategy.len() != 1 {
                text.push_str(&format!("# --- {tag} ---\n"));
            }
            text.push_str(&r.unit.code);
        }
        write_or_print(out, &text)?;
        return Ok(ExitCode::SUCCESS);
    }
    let units = filter_corpus(&o.load(input)?.units, o.cc_threshold.max(1), o.aggregate());
    let mut text = String::new();
    for u in &units {
        match obfuscate_all_with(u, o.seed, o.policy(), &RewriteOptions::default()) {
            Ok(mut r) => {
                r.variants.retain(|t, _| o.wants(*t));
                text.push_str(&r.to_json());
                text.push('\n');
            }
            Err(e) => eprintln!("{}: {e}", u.task_id),
        }
    }
    write_or_print(out, &text)?;
    Ok(ExitCode::SUCCESS)
}

fn verify(o: &Opts, input: &Path) -> Res {
    let units = o.load(input)?.units;
    let runner = Runner::default();
    if !runner.available() {
        return Err("python interpreter not found (set NAMEOBF_PYTHON)".into());
    }
    let result = obfuscate_and_verify(&units, &o.pipeline(), &runner);
    println!("{}", serde_json::to_string_pretty(&result.summary).expect("summary serializes"));
    for s in &result.skipped {
        eprintln!("{}: {}", s.task_id, s.reason);
    }
    Ok(if result.summary.any_divergent() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    })
}

fn stats(o: &Opts, input: &Path, histogram: Option<&Path>) -> Res {
    let units = filter_corpus(&o.load(input)?.units, o.cc_threshold.max(1), o.aggregate());
    let mut per_unit = serde_json::Map::new();
    let mut pooled = Vec::new();
    for u in &units {
        let a = match Analyzed::new(u) {
            Ok(a) => a,
            Err(e) => {
                eprintln!("{}: {e}", u.task_id);
                continue;
            }
        };
        let s = identifier_stats(&a.graph);
        per_unit.insert(
            u.task_id.clone(),
            serde_json::json!({
                "cc": cyclomatic(&parse(&u.code).expect("parsed above")),
                "identifiers": s.summary,
            }),
        );
        pooled.push(s);
    }
    let all = IdentifierStats::merge(&pooled);
    let out = serde_json::json!({
        "units": per_unit,
        "identifiers": {"summary": all.summary, "by_kind": all.by_kind, "histogram": all.histogram},
    });
    println!("{}", serde_json::to_string_pretty(&out).expect("stats serialize"));
    if let Some(p) = histogram {
        fs::write(p, all.histogram_csv()).map_err(|e| format!("{}: {e}", p.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn dataset(o: &Opts, input: &Path, out: &Path) -> Res {
    let units = o.load(input)?.units;
    let result = build_dataset(&units, &o.pipeline(), &Runner::default(), out).map_err(|e| e.to_string())?;
    for s in &result.skipped {
        eprintln!("skipped {}: {}", s.task_id, s.reason);
    }
    let m = result.manifest.expect("manifest written");
    eprintln!("{} records written to {}", m.records.len(), out.display());
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn eval(
    o: &Opts,
    input: &Path,
    probes: Option<&Path>,
    replay: Option<&Path>,
    record: Option<&Path>,
    template: Option<&Path>,
    samples: usize,
    concurrency: usize,
    out: Option<&Path>,
    csv: Option<&Path>,
) -> Res {
    let got = o.load(input)?;
    let probes = match probes {
        Some(p) => read_probes(p).map_err(|e| e.to_string())?,
        None => got.probes.clone(),
    };
    let template = match template {
        Some(p) => PromptTemplate(fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?),
        None => PromptTemplate::default(),
    };
    let runner = Runner::default();
    let mut tasks = Vec::new();
    for u in &got.units {
        let Some(probe) = probes.get(&u.task_id) else { continue };
        let mut r = obfuscate_all_with(u, o.seed, o.policy(), &RewriteOptions::default()).map_err(|e| e.to_string())?;
        r.variants.retain(|t, _| o.wants(*t));
        match prediction_tasks(&r, probe, &template, &runner, o.limits()) {
            Ok(t) => tasks.extend(t),
            Err(e) => eprintln!("{}: {e}", u.task_id),
        }
    }
    let run = match (replay, record) {
        (Some(f), _) => {
            let fixture = Fixture::load(f).map_err(|e| format!("{}: {e}", f.display()))?;
            run_prediction(&tasks, &ReplayEndpoint::new(fixture), samples, concurrency)
        }
        (None, rec) => {
            let http = HttpEndpoint::new(HttpConfig::from_env().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            let recorder = Recorder::new(http);
            let run = run_prediction(&tasks, &recorder, samples, concurrency);
            if let Some(p) = rec {
                recorder.into_fixture().save(p).map_err(|e| format!("{}: {e}", p.display()))?;
            }
            run
        }
    }
    .map_err(|e| e.to_string())?;
    let report = EvalReport::from_run(&run, &[1, 3]).map_err(|e| e.to_string())?;
    write_or_print(out, &report.to_json())?;
    if let Some(p) = csv {
        fs::write(p, report.to_csv()).map_err(|e| format!("{}: {e}", p.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn report(input: Option<&Path>, ratings: Option<&Path>) -> Res {
    if let Some(p) = input {
        let text = fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
        let r: EvalReport = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))?;
        print!("{}", r.to_csv());
        for (k, d) in &r.deltas {
            println!("delta pass@{k}: min {:.1} max {:.1} avg {:.1}", d.min, d.max, d.avg);
        }
    }
    if let Some(p) = ratings {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_path(p)
            .map_err(|e| format!("{}: {e}", p.display()))?;
        let mut rows: Vec<Rating> = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| e.to_string())?;
            let vals: Vec<f64> = rec.iter().filter_map(|f| f.trim().parse().ok()).collect();
            let row: Rating = vals
                .try_into()
                .map_err(|v: Vec<f64>| format!("expected 5 numeric columns, got {}", v.len()))?;
            rows.push(row);
        }
        let score = judge_aggregate(&rows).map_err(|e| e.to_string())?;
        println!("{}", sorted_json(&serde_json::json!({"summaries": rows.len(), "judge_score": score})));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let o = &cli.opts;
    let result = match &cli.command {
        Command::Obfuscate { input, tests, out } => obfuscate(o, input, tests.as_deref(), out.as_deref()),
        Command::Verify { input } => verify(o, input),
        Command::Stats { input, histogram } => stats(o, input, histogram.as_deref()),
        Command::BuildDataset { input, out } => dataset(o, input, out),
        Command::Eval {
            input,
            probes,
            replay,
            record,
            template,
            samples,
            concurrency,
            out,
            csv,
        } => eval(
            o,
            input,
            probes.as_deref(),
            replay.as_deref(),
            record.as_deref(),
            template.as_deref(),
            *samples,
            *concurrency,
            out.as_deref(),
            csv.as_deref(),
        ),
        Command::Report { input, ratings } => report(input.as_deref(), ratings.as_deref()),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
