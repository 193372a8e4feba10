//! Reading benchmark corpora and writing the obfuscated dataset.
//!
//! Inputs come in three shapes: a ClassEval-style JSON array, a
//! LiveCodeBench-style execution file (JSON array or JSON lines), or a
//! directory of `name.py` files with optional `name_test.py` companions and
//! an optional `probes.jsonl`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::evalrunner::{OutputDomain, Probe};
use crate::frontend::{parse, Origin, SourceUnit};
use crate::metrics::{unit_complexity, ComplexityReport};
use crate::rewrite::{ObfuscationRecord, Variant};
use crate::strategies::{Lexicon, StrategyTag};
use crate::verify::{CallSpec, Status};

pub const SCHEMA_VERSION: u32 = 1;
pub const PROBES_FILE: &str = "probes.jsonl";

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("record {index}: {detail}")]
    Format { index: usize, detail: String },
    #[error("{task_id}: {strategy} is {status:?}, not verified equivalent")]
    UnverifiedRecord {
        task_id: String,
        strategy: StrategyTag,
        status: Option<Status>,
    },
    #[error("duplicate task id '{0}'")]
    DuplicateTask(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    ClassevalJson,
    LcbJson,
    PlainDir,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.replace('-', "_").as_str() {
            "classeval_json" => Ok(Format::ClassevalJson),
            "lcb_json" => Ok(Format::LcbJson),
            "plain_dir" => Ok(Format::PlainDir),
            _ => Err(format!("unknown format '{s}' (classeval_json, lcb_json, plain_dir)")),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Ingested {
    pub units: Vec<SourceUnit>,
    /// Output-prediction probes by task id.
    pub probes: BTreeMap<String, Probe>,
    /// One line per skipped unit.
    pub warnings: Vec<String>,
}

impl Ingested {
    fn push(&mut self, unit: SourceUnit) -> Result<(), DatasetError> {
        if self.units.iter().any(|u| u.task_id == unit.task_id) {
            return Err(DatasetError::DuplicateTask(unit.task_id));
        }
        let bad = parse(&unit.code)
            .err()
            .map(|e| ("code", e))
            .or_else(|| unit.test_code.as_deref().and_then(|t| parse(t).err()).map(|e| ("tests", e)));
        match bad {
            Some((part, e)) => {
                self.probes.remove(&unit.task_id);
                self.warnings.push(format!("{}: {part} does not parse: {e}", unit.task_id))
            }
            None => self.units.push(unit),
        }
        Ok(())
    }
}

pub fn ingest(path: &Path, format: Format) -> Result<Ingested, DatasetError> {
    match format {
        Format::ClassevalJson => ingest_classeval(path),
        Format::LcbJson => ingest_lcb(path),
        Format::PlainDir => ingest_dir(path),
    }
}

/// JSON array, or one JSON value per non-empty line.
fn read_records(path: &Path) -> Result<Vec<Value>, DatasetError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    if text.trim_start().starts_with('[') {
        let v: Value = serde_json::from_str(&text).map_err(|e| DatasetError::Format {
            index: 0,
            detail: e.to_string(),
        })?;
        return Ok(v.as_array().cloned().unwrap_or_default());
    }
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(index, l)| {
            serde_json::from_str(l).map_err(|e| DatasetError::Format {
                index,
                detail: e.to_string(),
            })
        })
        .collect()
}

fn field<'a>(rec: &'a Value, index: usize, names: &[&str]) -> Result<&'a str, DatasetError> {
    names
        .iter()
        .find_map(|n| rec.get(*n).and_then(Value::as_str))
        .ok_or_else(|| DatasetError::Format {
            index,
            detail: format!("missing string field '{}'", names[0]),
        })
}

fn task_id(rec: &Value, index: usize, names: &[&str]) -> Result<String, DatasetError> {
    for n in names {
        match rec.get(*n) {
            Some(Value::String(s)) => return Ok(s.clone()),
            Some(Value::Number(x)) => return Ok(x.to_string()),
            _ => {}
        }
    }
    Err(DatasetError::Format {
        index,
        detail: format!("missing '{}'", names[0]),
    })
}

fn ingest_classeval(path: &Path) -> Result<Ingested, DatasetError> {
    let mut out = Ingested::default();
    for (index, rec) in read_records(path)?.iter().enumerate() {
        let id = task_id(rec, index, &["task_id"])?;
        let solution = field(rec, index, &["solution_code", "code"])?;
        let tests = field(rec, index, &["test", "test_code"])?;
        let imports = match rec.get("import_statement") {
            Some(Value::Array(xs)) => xs.iter().filter_map(Value::as_str).collect::<Vec<_>>().join("\n"),
            Some(Value::String(s)) => s.clone(),
            _ => String::new(),
        };
        let code = if imports.trim().is_empty() || solution.contains(imports.trim()) {
            solution.to_string()
        } else {
            format!("{}\n\n{solution}", imports.trim_end())
        };
        out.push(
            SourceUnit::new(&id, &code)
                .with_tests(tests)
                .with_origin(Origin::Classeval),
        )?;
    }
    Ok(out)
}

/// First top-level `def` name in `code`.
fn first_function(code: &str) -> Option<String> {
    code.lines()
        .find_map(|l| l.strip_prefix("def ").and_then(|r| r.split('(').next()).map(|n| n.trim().to_string()))
}

/// A unittest module asserting one call's result.
pub fn call_test(call: &CallSpec, expected: &str) -> String {
    format!(
        "import unittest\n\n\nclass TestExecution(unittest.TestCase):\n    def test_output(self):\n        self.assertEqual({}({}), {})\n",
        call.function, call.args, expected
    )
}

fn ingest_lcb(path: &Path) -> Result<Ingested, DatasetError> {
    let mut out = Ingested::default();
    for (index, rec) in read_records(path)?.iter().enumerate() {
        let id = task_id(rec, index, &["task_id", "question_id", "id"])?;
        let code = field(rec, index, &["code"])?;
        let function = match rec.get("function_name").and_then(Value::as_str) {
            Some(f) => f.to_string(),
            None => first_function(code).ok_or_else(|| DatasetError::Format {
                index,
                detail: "no function_name and no top-level def".into(),
            })?,
        };
        let input = field(rec, index, &["input"])?;
        let output = field(rec, index, &["output"])?;
        let call = CallSpec {
            function,
            args: input.to_string(),
        };
        let tests = match rec.get("test_code").and_then(Value::as_str) {
            Some(t) => t.to_string(),
            None => call_test(&call, output),
        };
        let probe = match rec.get("augmented_input").and_then(Value::as_str) {
            Some(new_input) => Probe {
                call: CallSpec {
                    function: call.function.clone(),
                    args: new_input.to_string(),
                },
                old_output: Some(output.to_string()),
                output_domain: domain_field(rec),
            },
            None => Probe {
                call,
                old_output: None,
                output_domain: domain_field(rec),
            },
        };
        out.probes.insert(id.clone(), probe);
        out.push(
            SourceUnit::new(&id, code)
                .with_tests(&tests)
                .with_origin(Origin::Livecodebench),
        )?;
    }
    Ok(out)
}

fn domain_field(rec: &Value) -> Option<OutputDomain> {
    rec.get("output_domain").and_then(|v| serde_json::from_value(v.clone()).ok())
}

/// One probe per line, in the shape of [`ProbeLine`].
pub fn read_probes(path: &Path) -> Result<BTreeMap<String, Probe>, DatasetError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut probes = BTreeMap::new();
    for (index, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
        let p: ProbeLine = serde_json::from_str(line).map_err(|e| DatasetError::Format {
            index,
            detail: e.to_string(),
        })?;
        probes.insert(
            p.task_id,
            Probe {
                call: CallSpec {
                    function: p.function,
                    args: p.args,
                },
                old_output: p.old_output,
                output_domain: p.output_domain,
            },
        );
    }
    Ok(probes)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeLine {
    pub task_id: String,
    pub function: String,
    pub args: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub old_output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_domain: Option<OutputDomain>,
}

fn ingest_dir(dir: &Path) -> Result<Ingested, DatasetError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "py"))
        .collect();
    files.sort();
    let names: BTreeSet<String> = files
        .iter()
        .filter_map(|p| p.file_stem().and_then(|s| s.to_str()).map(str::to_string))
        .collect();
    let mut out = Ingested::default();
    let probes_path = dir.join(PROBES_FILE);
    if probes_path.exists() {
        out.probes = read_probes(&probes_path)?;
    }
    for stem in &names {
        let is_test = stem.strip_suffix("_test").is_some_and(|s| names.contains(s))
            || stem.strip_prefix("test_").is_some_and(|s| names.contains(s));
        if is_test {
            continue;
        }
        let read = |p: PathBuf| fs::read_to_string(&p).map_err(io_err(&p));
        let code = read(dir.join(format!("{stem}.py")))?;
        let test = [format!("{stem}_test.py"), format!("test_{stem}.py")]
            .into_iter()
            .map(|n| dir.join(n))
            .find(|p| p.exists());
        let mut unit = SourceUnit::new(stem, &code);
        if let Some(t) = test {
            unit = unit.with_tests(&read(t)?);
        }
        out.push(unit)?;
    }
    out.probes.retain(|id, _| out.units.iter().any(|u| &u.task_id == id));
    Ok(out)
}

/// Per-record manifest entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub task_id: String,
    pub origin: Origin,
    pub cc: CcSummary,
    pub verdicts: BTreeMap<StrategyTag, Status>,
    pub strategies: Vec<StrategyTag>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CcSummary {
    pub max: u32,
    pub sum: u32,
    pub functions: BTreeMap<String, u32>,
}

impl From<&ComplexityReport> for CcSummary {
    fn from(r: &ComplexityReport) -> Self {
        CcSummary {
            max: r.unit_cc_max,
            sum: r.unit_cc_sum,
            functions: r.functions.iter().map(|f| (f.qualname.clone(), f.cc)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub seed: u64,
    pub lexicon_versions: BTreeMap<String, String>,
    pub dataset_file: String,
    pub dataset_sha256: String,
    pub records: Vec<ManifestEntry>,
}

/// One dataset line as read back.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub task_id: String,
    pub origin: Origin,
    pub original_code: String,
    pub original_test: Option<String>,
    pub variants: BTreeMap<StrategyTag, DatasetVariant>,
    pub cc: CcSummary,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetVariant {
    pub code: String,
    pub test: Option<String>,
    /// `(original, renamed)` pairs, sorted.
    pub name_map: Vec<(String, String)>,
}

impl From<&Variant> for DatasetVariant {
    fn from(v: &Variant) -> Self {
        DatasetVariant {
            code: v.code.clone(),
            test: v.test_code.clone(),
            name_map: v.name_map.pairs(),
        }
    }
}

/// Serialize with object keys sorted at every level.
pub fn sorted_json<T: Serialize>(v: &T) -> String {
    fn sort(v: Value) -> Value {
        match v {
            Value::Object(m) => {
                let mut entries: Vec<(String, Value)> = m.into_iter().collect();
                entries.sort_by(|a, b| a.0.cmp(&b.0));
                Value::Object(entries.into_iter().map(|(k, v)| (k, sort(v))).collect::<Map<_, _>>())
            }
            Value::Array(xs) => Value::Array(xs.into_iter().map(sort).collect()),
            other => other,
        }
    }
    serde_json::to_string(&sort(serde_json::to_value(v).expect("serializable"))).expect("value serializes")
}

/// Path of the manifest written next to `dataset`.
pub fn manifest_path(dataset: &Path) -> PathBuf {
    let stem = dataset.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset");
    dataset.with_file_name(format!("{stem}.manifest.json"))
}

fn check_verified(r: &ObfuscationRecord) -> Result<(), DatasetError> {
    for tag in StrategyTag::ALL {
        let status = r.verdicts.get(&tag).map(|v| v.status);
        if !r.variants.contains_key(&tag) || status != Some(Status::Equivalent) {
            return Err(DatasetError::UnverifiedRecord {
                task_id: r.task_id.clone(),
                strategy: tag,
                status,
            });
        }
    }
    Ok(())
}

/// Write `records` as JSON lines at `out` and the manifest beside it. Every
/// record must carry all four variants, each verified equivalent.
pub fn emit_dataset(records: &[ObfuscationRecord], out: &Path, seed: u64) -> Result<DatasetManifest, DatasetError> {
    let mut seen = BTreeSet::new();
    for r in records {
        check_verified(r)?;
        if !seen.insert(&r.task_id) {
            return Err(DatasetError::DuplicateTask(r.task_id.clone()));
        }
    }
    let mut text = String::new();
    let mut entries = Vec::with_capacity(records.len());
    for r in records {
        let cc = CcSummary::from(&unit_complexity(&r.original).ok_or_else(|| DatasetError::Format {
            index: entries.len(),
            detail: format!("{}: original does not parse", r.task_id),
        })?);
        let line = DatasetRecord {
            task_id: r.task_id.clone(),
            origin: r.original.origin,
            original_code: r.original.code.clone(),
            original_test: r.original.test_code.clone(),
            variants: r.variants.iter().map(|(t, v)| (*t, DatasetVariant::from(v))).collect(),
            cc: cc.clone(),
            seed,
        };
        text.push_str(&sorted_json(&line));
        text.push('\n');
        entries.push(ManifestEntry {
            task_id: r.task_id.clone(),
            origin: r.original.origin,
            cc,
            verdicts: r.verdicts.iter().map(|(t, v)| (*t, v.status)).collect(),
            strategies: r.variants.keys().copied().collect(),
        });
    }
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(out, &text).map_err(io_err(out))?;
    let manifest = DatasetManifest {
        schema_version: SCHEMA_VERSION,
        seed,
        lexicon_versions: BTreeMap::from([
            ("crossdomain".to_string(), Lexicon::crossdomain().version.clone()),
            ("misleading".to_string(), Lexicon::misleading().version.clone()),
        ]),
        dataset_file: out.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string(),
        dataset_sha256: hex::encode(Sha256::digest(text.as_bytes())),
        records: entries,
    };
    let mpath = manifest_path(out);
    let mtext = serde_json::to_string_pretty(&serde_json::from_str::<Value>(&sorted_json(&manifest)).expect("own json"))
        .expect("value serializes");
    fs::write(&mpath, mtext + "\n").map_err(io_err(&mpath))?;
    Ok(manifest)
}

pub fn read_dataset(path: &Path) -> Result<Vec<DatasetRecord>, DatasetError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(index, l)| {
            serde_json::from_str(l).map_err(|e| DatasetError::Format {
                index,
                detail: e.to_string(),
            })
        })
        .collect()
}

pub fn read_manifest(path: &Path) -> Result<DatasetManifest, DatasetError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| DatasetError::Format {
        index: 0,
        detail: e.to_string(),
    })
}

/// Units of a written dataset, as ingested originals.
pub fn dataset_units(records: &[DatasetRecord]) -> Vec<SourceUnit> {
    records
        .iter()
        .map(|r| {
            let mut u = SourceUnit::new(&r.task_id, &r.original_code).with_origin(r.origin);
            u.test_code = r.original_test.clone();
            u
        })
        .collect()
}

pub fn probe_line(task_id: &str, probe: &Probe) -> String {
    sorted_json(&ProbeLine {
        task_id: task_id.to_string(),
        function: probe.call.function.clone(),
        args: probe.call.args.clone(),
        old_output: probe.old_output.clone(),
        output_domain: probe.output_domain,
    })
}
