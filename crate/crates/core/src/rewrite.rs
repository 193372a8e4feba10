//! Applying name maps to units and producing all four variants.

use std::collections::{BTreeMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::frontend::ast::{Expr, FElement, FString, Ident, PlainStr};
use crate::frontend::visit::{plain_str_body, walk_expr, walk_module, VisitMut};
use crate::frontend::{emit, parse, EmitOptions, Role, SourceUnit, SyntaxError, SyntaxTree};
use crate::scopes::{analyze_unit, renameable_set, AnalysisError, BindingId, Part, RenamePolicy, ScopeGraph};
use crate::strategies::{build_map, NameMap, Strategy, StrategyError, StrategyTag};
use crate::verify::Verdict;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RewriteError {
    #[error("{part:?} does not parse: {error}")]
    Syntax { part: Part, error: SyntaxError },
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("stale name map: {0}")]
    StaleMap(String),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
}

/// A unit parsed and analyzed once, ready to be rewritten with any map.
#[derive(Clone, Debug)]
pub struct Analyzed {
    pub unit: SourceUnit,
    pub code: SyntaxTree,
    pub tests: Option<SyntaxTree>,
    pub graph: ScopeGraph,
}

impl Analyzed {
    pub fn new(unit: &SourceUnit) -> Result<Self, RewriteError> {
        let code = parse(&unit.code).map_err(|error| RewriteError::Syntax { part: Part::Code, error })?;
        let tests = match &unit.test_code {
            Some(t) => Some(parse(t).map_err(|error| RewriteError::Syntax { part: Part::Test, error })?),
            None => None,
        };
        let graph = analyze_unit(&code, tests.as_ref())?;
        Ok(Analyzed {
            unit: unit.clone(),
            code,
            tests,
            graph,
        })
    }

    fn tree(&self, part: Part) -> &SyntaxTree {
        match part {
            Part::Code => &self.code,
            Part::Test => self.tests.as_ref().expect("test occurrence without test tree"),
        }
    }

    pub fn build_map(&self, strategy: &Strategy, policy: RenamePolicy) -> Result<NameMap, RewriteError> {
        Ok(build_map(&self.graph, strategy, policy)?.with_task(&self.unit.task_id))
    }

    fn check_map(&self, map: &NameMap) -> Result<(), RewriteError> {
        if !map.task_id.is_empty() && map.task_id != self.unit.task_id {
            return Err(RewriteError::StaleMap(format!(
                "map is for '{}', unit is '{}'",
                map.task_id, self.unit.task_id
            )));
        }
        let allowed: HashSet<BindingId> = renameable_set(&self.graph, map.policy).into_iter().collect();
        for (&b, e) in &map.entries {
            match self.graph.bindings.get(b) {
                Some(binding) if binding.name == e.original && allowed.contains(&b) => {}
                Some(binding) if binding.name == e.original => {
                    return Err(RewriteError::StaleMap(format!("binding {b} '{}' is not renameable", e.original)))
                }
                Some(binding) => {
                    return Err(RewriteError::StaleMap(format!(
                        "binding {b} is '{}', map expects '{}'",
                        binding.name, e.original
                    )))
                }
                None => return Err(RewriteError::StaleMap(format!("no binding {b} for '{}'", e.original))),
            }
        }
        Ok(())
    }

    /// New names keyed by part and occurrence start offset.
    fn rename_table(&self, map: &NameMap) -> [BTreeMap<usize, String>; 2] {
        let mut table: [BTreeMap<usize, String>; 2] = Default::default();
        for (&b, e) in &map.entries {
            for occ in &self.graph.bindings[b].occurrences {
                let start = self.tree(occ.part).occurrences[occ.index].span.start;
                table[occ.part as usize].insert(start, e.renamed.clone());
            }
        }
        for (occ, b) in self.graph.literal_targets(map.policy) {
            if let Some(n) = map.renamed(b) {
                let start = self.tree(occ.part).occurrences[occ.index].span.start;
                table[occ.part as usize].insert(start, n.to_string());
            }
        }
        table
    }

    pub fn rewrite(&self, map: &NameMap, opts: &RewriteOptions) -> Result<Rewritten, RewriteError> {
        self.check_map(map)?;
        let mut table = self.rename_table(map);
        let mut skipped = None;
        if let Some(seed) = opts.fault {
            skipped = self.pick_fault(&table, seed);
            if let Some(s) = &skipped {
                table[s.part as usize].remove(&s.offset);
            }
        }
        let code = apply(&self.code, &table[0], opts.emit);
        let test_code = self.tests.as_ref().map(|t| apply(t, &table[1], opts.emit));
        let mut unit = self.unit.clone();
        unit.code = code;
        unit.test_code = test_code;
        Ok(Rewritten { unit, skipped })
    }

    /// One renamed occurrence, preferring test code, chosen by `seed`.
    fn pick_fault(&self, table: &[BTreeMap<usize, String>; 2], seed: u64) -> Option<SkippedOccurrence> {
        let part = if table[1].is_empty() { Part::Code } else { Part::Test };
        let tree = self.tree(part);
        let candidates: Vec<(usize, &str)> = tree
            .occurrences
            .iter()
            .filter(|o| o.role != Role::StringLiteral && table[part as usize].contains_key(&o.span.start))
            .map(|o| (o.span.start, o.name.as_str()))
            .collect();
        if candidates.is_empty() {
            return None;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (offset, name) = candidates[rng.random_range(0..candidates.len())];
        Some(SkippedOccurrence {
            part,
            offset,
            name: name.to_string(),
        })
    }
}

/// Rewriting knobs. `fault` leaves one renamed occurrence untouched, to
/// check that verification notices broken variants.
#[derive(Clone, Copy, Debug, Default)]
pub struct RewriteOptions {
    pub emit: EmitOptions,
    pub fault: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedOccurrence {
    pub part: Part,
    pub offset: usize,
    pub name: String,
}

#[derive(Clone, Debug)]
pub struct Rewritten {
    pub unit: SourceUnit,
    pub skipped: Option<SkippedOccurrence>,
}

struct Renamer<'a> {
    table: &'a BTreeMap<usize, String>,
}

struct Spans(Vec<usize>);

impl VisitMut for Spans {
    fn ident(&mut self, id: &mut Ident, _role: Role) {
        self.0.push(id.span.start);
    }
}

impl Renamer<'_> {
    fn touches(&self, e: &Expr) -> bool {
        let mut s = Spans(Vec::new());
        walk_expr(&mut s, &mut e.clone());
        s.0.iter().any(|o| self.table.contains_key(o))
    }

    /// `{x=}` prints its own source text, so renaming `x` inside it would
    /// change output. Such fields become a literal label plus a plain field.
    fn desugar(&self, els: &mut Vec<FElement>) {
        let mut out = Vec::with_capacity(els.len());
        for el in els.drain(..) {
            match el {
                FElement::Field(mut f) => {
                    if let Some(spec) = &mut f.format_spec {
                        self.desugar(spec);
                    }
                    match f.debug_text.take() {
                        Some(label) if self.touches(&f.expr) => {
                            out.push(FElement::Literal(label.replace('{', "{{").replace('}', "}}")));
                            if f.conversion.is_none() && f.format_spec.is_none() {
                                f.conversion = Some('r');
                            }
                            out.push(FElement::Field(f));
                        }
                        label => {
                            f.debug_text = label;
                            out.push(FElement::Field(f));
                        }
                    }
                }
                lit => out.push(lit),
            }
        }
        *els = out;
    }
}

impl VisitMut for Renamer<'_> {
    fn ident(&mut self, id: &mut Ident, _role: Role) {
        if let Some(n) = self.table.get(&id.span.start) {
            id.name = n.clone();
        }
    }

    fn plain_str(&mut self, s: &mut PlainStr) {
        if let Some((body, off)) = plain_str_body(&s.raw) {
            if let Some(n) = self.table.get(&(s.span.start + off)) {
                s.raw = format!("{}{}{}", &s.raw[..off], n, &s.raw[off + body.len()..]);
            }
        }
    }

    fn fstring(&mut self, f: &mut FString) {
        self.desugar(&mut f.elements);
    }
}

fn apply(tree: &SyntaxTree, table: &BTreeMap<usize, String>, opts: EmitOptions) -> String {
    let mut renamed = tree.clone();
    walk_module(&mut Renamer { table }, &mut renamed.module);
    emit(&renamed, opts)
}

/// Rename every occurrence of every mapped binding in code and tests.
pub fn obfuscate(unit: &SourceUnit, map: &NameMap) -> Result<SourceUnit, RewriteError> {
    Ok(Analyzed::new(unit)?.rewrite(map, &RewriteOptions::default())?.unit)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variant {
    pub code: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_code: Option<String>,
    pub name_map: NameMap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObfuscationRecord {
    pub task_id: String,
    pub original: SourceUnit,
    pub variants: BTreeMap<StrategyTag, Variant>,
    #[serde(default)]
    pub verdicts: BTreeMap<StrategyTag, Verdict>,
    /// Strategies that failed, with their error.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub errors: BTreeMap<StrategyTag, String>,
}

impl ObfuscationRecord {
    pub fn is_partial(&self) -> bool {
        !self.errors.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }

    /// The variant as a runnable unit.
    pub fn variant_unit(&self, tag: StrategyTag) -> Option<SourceUnit> {
        self.variants.get(&tag).map(|v| {
            let mut u = self.original.clone();
            u.code = v.code.clone();
            u.test_code = v.test_code.clone();
            u
        })
    }
}

/// All four variants from one analysis and a shared seed.
pub fn obfuscate_all(unit: &SourceUnit, seed: u64) -> Result<ObfuscationRecord, RewriteError> {
    obfuscate_all_with(unit, seed, RenamePolicy::default(), &RewriteOptions::default())
}

pub fn obfuscate_all_with(
    unit: &SourceUnit,
    seed: u64,
    policy: RenamePolicy,
    opts: &RewriteOptions,
) -> Result<ObfuscationRecord, RewriteError> {
    let a = Analyzed::new(unit)?;
    let mut record = ObfuscationRecord {
        task_id: unit.task_id.clone(),
        original: unit.clone(),
        variants: BTreeMap::new(),
        verdicts: BTreeMap::new(),
        errors: BTreeMap::new(),
    };
    for tag in StrategyTag::ALL {
        let made = a
            .build_map(&Strategy::new(tag, seed), policy)
            .and_then(|map| a.rewrite(&map, opts).map(|r| (map, r)));
        match made {
            Ok((name_map, r)) => {
                record.variants.insert(
                    tag,
                    Variant {
                        code: r.unit.code,
                        test_code: r.unit.test_code,
                        name_map,
                    },
                );
            }
            Err(e) => {
                record.errors.insert(tag, e.to_string());
            }
        }
    }
    Ok(record)
}

#[cfg(test)]
mod tests;
