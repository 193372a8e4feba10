//! McCabe cyclomatic complexity and identifier-length statistics.
//!
//! A function's complexity is 1 plus its decision points: `if`/`elif`,
//! `for`/`while` headers, each extra operand of `and`/`or`, conditional
//! expressions, `except` clauses, comprehension `if` filters and `case`
//! clauses other than a trailing catch-all. Nested functions and methods
//! are reported separately; lambdas count toward the enclosing function.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::frontend::ast::*;
use crate::frontend::{parse, SourceUnit, SyntaxTree};
use crate::scopes::{renameable_set, BindingKind, RenamePolicy, ScopeGraph};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionComplexity {
    pub qualname: String,
    pub line: usize,
    pub cc: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityReport {
    /// In source order.
    pub functions: Vec<FunctionComplexity>,
    pub unit_cc_max: u32,
    pub unit_cc_sum: u32,
}

impl ComplexityReport {
    pub fn by_name(&self) -> BTreeMap<&str, u32> {
        self.functions.iter().map(|f| (f.qualname.as_str(), f.cc)).collect()
    }
}

/// Which per-function aggregate `filter_corpus` compares to the threshold.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    #[default]
    Max,
    Sum,
}

struct Counter<'a> {
    source: &'a str,
    out: Vec<FunctionComplexity>,
}

impl Counter<'_> {
    fn line(&self, offset: usize) -> usize {
        self.source[..offset.min(self.source.len())].matches('\n').count() + 1
    }

    /// Records `f` and returns the decision points of its decorators,
    /// defaults and annotations, which run in the enclosing scope.
    fn function(&mut self, prefix: &str, f: &FunctionDef, start: usize) -> u32 {
        let qualname = format!("{prefix}{}", f.name.name);
        let slot = self.out.len();
        self.out.push(FunctionComplexity {
            qualname: qualname.clone(),
            line: self.line(start),
            cc: 1,
        });
        let mut outer = 0;
        for d in &f.decorators {
            outer += self.expr(d);
        }
        for p in f.params.iter() {
            for e in [&p.default, &p.annotation].into_iter().flatten() {
                outer += self.expr(e);
            }
        }
        if let Some(r) = &f.returns {
            outer += self.expr(r);
        }
        self.out[slot].cc = 1 + self.body(&f.body, &format!("{qualname}.<locals>."));
        outer
    }

    /// Decision points of `body` that belong to the current function.
    fn body(&mut self, body: &[Stmt], prefix: &str) -> u32 {
        body.iter().map(|s| self.stmt(s, prefix)).sum()
    }

    fn stmt(&mut self, s: &Stmt, prefix: &str) -> u32 {
        match &s.kind {
            StmtKind::FunctionDef(f) => self.function(prefix, f, s.span.start),
            StmtKind::ClassDef(c) => {
                let mut n: u32 = c.decorators.iter().map(|d| self.expr(d)).sum();
                n += c.bases.iter().map(|a| self.expr(a.value())).sum::<u32>();
                n + self.body(&c.body, &format!("{prefix}{}.", c.name.name))
            }
            StmtKind::Return(v) => v.as_ref().map_or(0, |e| self.expr(e)),
            StmtKind::Delete(ts) => ts.iter().map(|e| self.expr(e)).sum(),
            StmtKind::Assign { targets, value } => targets.iter().map(|e| self.expr(e)).sum::<u32>() + self.expr(value),
            StmtKind::AugAssign { target, value, .. } => self.expr(target) + self.expr(value),
            StmtKind::AnnAssign {
                target,
                annotation,
                value,
                ..
            } => self.expr(target) + self.expr(annotation) + value.as_ref().map_or(0, |e| self.expr(e)),
            StmtKind::For {
                target,
                iter,
                body,
                orelse,
                ..
            } => 1 + self.expr(target) + self.expr(iter) + self.body(body, prefix) + self.body(orelse, prefix),
            StmtKind::While { test, body, orelse } | StmtKind::If { test, body, orelse } => {
                1 + self.expr(test) + self.body(body, prefix) + self.body(orelse, prefix)
            }
            StmtKind::With { items, body, .. } => {
                let mut n = 0;
                for it in items {
                    n += self.expr(&it.context);
                    if let Some(v) = &it.vars {
                        n += self.expr(v);
                    }
                }
                n + self.body(body, prefix)
            }
            StmtKind::Match { subject, cases } => {
                let mut n = self.expr(subject);
                for (i, c) in cases.iter().enumerate() {
                    let catch_all = i + 1 == cases.len() && c.guard.is_none() && irrefutable(&c.pattern);
                    if !catch_all {
                        n += 1;
                    }
                    n += self.pattern(&c.pattern);
                    if let Some(g) = &c.guard {
                        n += self.expr(g);
                    }
                    n += self.body(&c.body, prefix);
                }
                n
            }
            StmtKind::Raise { exc, cause } => [exc, cause].into_iter().flatten().map(|e| self.expr(e)).sum(),
            StmtKind::Try {
                body,
                handlers,
                orelse,
                finalbody,
            } => {
                let mut n = self.body(body, prefix);
                for h in handlers {
                    n += 1;
                    if let Some(k) = &h.kind {
                        n += self.expr(k);
                    }
                    n += self.body(&h.body, prefix);
                }
                n + self.body(orelse, prefix) + self.body(finalbody, prefix)
            }
            StmtKind::Assert { test, msg } => self.expr(test) + msg.as_ref().map_or(0, |e| self.expr(e)),
            StmtKind::Expr(e) => self.expr(e),
            StmtKind::Import(_)
            | StmtKind::ImportFrom { .. }
            | StmtKind::Global(_)
            | StmtKind::Nonlocal(_)
            | StmtKind::Pass
            | StmtKind::Break
            | StmtKind::Continue => 0,
        }
    }

    fn comps(&mut self, gens: &[Comprehension]) -> u32 {
        gens.iter()
            .map(|g| {
                g.ifs.len() as u32
                    + self.expr(&g.target)
                    + self.expr(&g.iter)
                    + g.ifs.iter().map(|c| self.expr(c)).sum::<u32>()
            })
            .sum()
    }

    fn felements(&mut self, els: &[FElement]) -> u32 {
        els.iter()
            .map(|el| match el {
                FElement::Field(f) => self.expr(&f.expr) + f.format_spec.as_ref().map_or(0, |s| self.felements(s)),
                FElement::Literal(_) => 0,
            })
            .sum()
    }

    fn expr(&mut self, e: &Expr) -> u32 {
        match &e.kind {
            ExprKind::BoolOp { values, .. } => {
                values.len() as u32 - 1 + values.iter().map(|v| self.expr(v)).sum::<u32>()
            }
            ExprKind::IfExp { test, body, orelse } => 1 + self.expr(test) + self.expr(body) + self.expr(orelse),
            ExprKind::NamedExpr { value, .. } => self.expr(value),
            ExprKind::BinOp { left, right, .. } => self.expr(left) + self.expr(right),
            ExprKind::UnaryOp { operand, .. } => self.expr(operand),
            ExprKind::Lambda { params, body } => {
                let mut n = self.expr(body);
                for p in params.iter() {
                    if let Some(d) = &p.default {
                        n += self.expr(d);
                    }
                }
                n
            }
            ExprKind::Dict(items) => items
                .iter()
                .map(|it| match it {
                    DictItem::Pair(k, v) => self.expr(k) + self.expr(v),
                    DictItem::Unpack(v) => self.expr(v),
                })
                .sum(),
            ExprKind::Set(xs) | ExprKind::List(xs) | ExprKind::Tuple(xs) => xs.iter().map(|x| self.expr(x)).sum(),
            ExprKind::ListComp { elt, generators }
            | ExprKind::SetComp { elt, generators }
            | ExprKind::GeneratorExp { elt, generators } => self.comps(generators) + self.expr(elt),
            ExprKind::DictComp {
                key,
                value,
                generators,
            } => self.comps(generators) + self.expr(key) + self.expr(value),
            ExprKind::Await(x) | ExprKind::YieldFrom(x) | ExprKind::Starred(x) => self.expr(x),
            ExprKind::Yield(x) => x.as_ref().map_or(0, |x| self.expr(x)),
            ExprKind::Compare {
                left, comparators, ..
            } => self.expr(left) + comparators.iter().map(|c| self.expr(c)).sum::<u32>(),
            ExprKind::Call { func, args } => self.expr(func) + args.iter().map(|a| self.expr(a.value())).sum::<u32>(),
            ExprKind::Str(s) => s
                .parts
                .iter()
                .map(|p| match p {
                    StrPart::Formatted(f) => self.felements(&f.elements),
                    StrPart::Plain(_) => 0,
                })
                .sum(),
            ExprKind::Attribute { value, .. } => self.expr(value),
            ExprKind::Subscript { value, slice } => self.expr(value) + self.expr(slice),
            ExprKind::Slice { lower, upper, step } => {
                [lower, upper, step].into_iter().flatten().map(|x| self.expr(x)).sum()
            }
            ExprKind::Num(_) | ExprKind::Constant(_) | ExprKind::Name(_) => 0,
        }
    }

    fn pattern(&mut self, p: &Pattern) -> u32 {
        match &p.kind {
            PatternKind::Value(e) => self.expr(e),
            PatternKind::Sequence(ps) | PatternKind::Or(ps) => ps.iter().map(|x| self.pattern(x)).sum(),
            PatternKind::Mapping { keys, patterns, .. } => {
                keys.iter().map(|k| self.expr(k)).sum::<u32>() + patterns.iter().map(|x| self.pattern(x)).sum::<u32>()
            }
            PatternKind::Class {
                cls,
                patterns,
                kwd_patterns,
                ..
            } => {
                self.expr(cls)
                    + patterns.iter().map(|x| self.pattern(x)).sum::<u32>()
                    + kwd_patterns.iter().map(|x| self.pattern(x)).sum::<u32>()
            }
            PatternKind::As { pattern, .. } => pattern.as_ref().map_or(0, |x| self.pattern(x)),
            PatternKind::Singleton(_) | PatternKind::Star(_) => 0,
        }
    }
}

fn irrefutable(p: &Pattern) -> bool {
    match &p.kind {
        PatternKind::As { pattern: None, .. } => true,
        PatternKind::As { pattern: Some(x), .. } => irrefutable(x),
        PatternKind::Or(ps) => ps.iter().any(irrefutable),
        _ => false,
    }
}

pub fn cyclomatic(tree: &SyntaxTree) -> ComplexityReport {
    cyclomatic_module(&tree.module, &tree.source)
}

pub fn cyclomatic_module(module: &Module, source: &str) -> ComplexityReport {
    let mut c = Counter {
        source,
        out: Vec::new(),
    };
    c.body(&module.body, "");
    let mut functions = c.out;
    functions.sort_by_key(|f| f.line);
    ComplexityReport {
        unit_cc_max: functions.iter().map(|f| f.cc).max().unwrap_or(1),
        unit_cc_sum: functions.iter().map(|f| f.cc).sum::<u32>().max(1),
        functions,
    }
}

/// Complexity of a unit's program code; `None` when it does not parse.
pub fn unit_complexity(unit: &SourceUnit) -> Option<ComplexityReport> {
    parse(&unit.code).ok().map(|t| cyclomatic(&t))
}

/// Units whose aggregate complexity reaches `threshold`, in input order.
pub fn filter_corpus(units: &[SourceUnit], threshold: u32, aggregate: Aggregate) -> Vec<SourceUnit> {
    assert!(threshold >= 1, "threshold must be at least 1");
    units
        .iter()
        .filter(|u| {
            unit_complexity(u).is_some_and(|r| {
                let v = match aggregate {
                    Aggregate::Max => r.unit_cc_max,
                    Aggregate::Sum => r.unit_cc_sum,
                };
                v >= threshold
            })
        })
        .cloned()
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LengthSummary {
    pub count: usize,
    pub median: f64,
    pub mean: f64,
    pub p90: f64,
}

impl LengthSummary {
    /// Median and p90 interpolate linearly between order statistics.
    pub fn of(lengths: &[usize]) -> Self {
        let mut v: Vec<usize> = lengths.to_vec();
        v.sort_unstable();
        let n = v.len();
        if n == 0 {
            return LengthSummary {
                count: 0,
                median: 0.0,
                mean: 0.0,
                p90: 0.0,
            };
        }
        LengthSummary {
            count: n,
            median: quantile(&v, 0.5),
            mean: v.iter().sum::<usize>() as f64 / n as f64,
            p90: quantile(&v, 0.9),
        }
    }
}

fn quantile(sorted: &[usize], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] as f64 + (sorted[hi] as f64 - sorted[lo] as f64) * frac
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedLength {
    pub name: String,
    pub kind: BindingKind,
    pub length: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentifierStats {
    pub names: Vec<NamedLength>,
    pub summary: LengthSummary,
    /// Name length to number of bindings.
    pub histogram: BTreeMap<usize, usize>,
    pub by_kind: BTreeMap<BindingKind, LengthSummary>,
}

impl IdentifierStats {
    pub fn from_names(names: Vec<NamedLength>) -> Self {
        let lengths: Vec<usize> = names.iter().map(|n| n.length).collect();
        let mut histogram = BTreeMap::new();
        for &l in &lengths {
            *histogram.entry(l).or_insert(0) += 1;
        }
        let mut kinds: BTreeMap<BindingKind, Vec<usize>> = BTreeMap::new();
        for n in &names {
            kinds.entry(n.kind).or_default().push(n.length);
        }
        IdentifierStats {
            summary: LengthSummary::of(&lengths),
            histogram,
            by_kind: kinds.into_iter().map(|(k, v)| (k, LengthSummary::of(&v))).collect(),
            names,
        }
    }

    /// Pool several units' statistics.
    pub fn merge<'a>(parts: impl IntoIterator<Item = &'a IdentifierStats>) -> Self {
        Self::from_names(parts.into_iter().flat_map(|s| s.names.iter().cloned()).collect())
    }

    /// `length,count` rows for plotting.
    pub fn histogram_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["length", "count"]).expect("in-memory write");
        for (l, c) in &self.histogram {
            w.write_record([l.to_string(), c.to_string()]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

/// Name lengths (in characters) of the renameable bindings, one per binding.
pub fn identifier_stats(graph: &ScopeGraph) -> IdentifierStats {
    let names = renameable_set(graph, RenamePolicy::default())
        .into_iter()
        .map(|b| {
            let b = &graph.bindings[b];
            NamedLength {
                name: b.name.clone(),
                kind: b.kind,
                length: b.name.chars().count(),
            }
        })
        .collect();
    IdentifierStats::from_names(names)
}

#[cfg(test)]
mod tests;
