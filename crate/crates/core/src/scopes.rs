//! Lexical scope graph, name resolution and renameability.
//!
//! The program and its tests are analyzed together: both run in one module
//! namespace, so they share the module scope. Attribute names are resolved
//! per class by name, and same-named members of different classes are
//! grouped so that overriding and duck-typed calls stay consistent.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::data;
use crate::frontend::ast::*;
use crate::frontend::visit::plain_str_body;
use crate::frontend::{is_identifier, SyntaxTree};

pub type ScopeId = usize;
pub type BindingId = usize;

/// Which source text of a unit an occurrence belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Code,
    Test,
}

/// Index of an occurrence in the code or test tree's occurrence list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OccRef {
    pub part: Part,
    pub index: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScopeKind {
    Module,
    Class,
    Function,
    Comprehension,
}

#[derive(Clone, Debug, Serialize)]
pub struct Scope {
    pub id: ScopeId,
    pub kind: ScopeKind,
    pub parent: Option<ScopeId>,
    pub name: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BindingKind {
    Class,
    Function,
    Method,
    Parameter,
    Local,
    GlobalVar,
    ComprehensionVar,
    ImportAlias,
    AttributeSlot,
}

impl BindingKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BindingKind::Class => "class",
            BindingKind::Function => "function",
            BindingKind::Method => "method",
            BindingKind::Parameter => "parameter",
            BindingKind::Local => "local",
            BindingKind::GlobalVar => "global_var",
            BindingKind::ComprehensionVar => "comprehension_var",
            BindingKind::ImportAlias => "import_alias",
            BindingKind::AttributeSlot => "attribute_slot",
        }
    }
}

/// Why a binding is not renameable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Demotion {
    Dunder,
    ImportAlias,
    Receiver,
    DefinedInTests,
    ExternalBase,
    ExternalReceiver,
    ExternalAttributeName,
    UnresolvedKeyword,
    NoDefinition,
    /// Shares a rename group with a demoted binding.
    Group,
}

#[derive(Clone, Debug, Serialize)]
pub struct Binding {
    pub id: BindingId,
    pub name: String,
    pub kind: BindingKind,
    pub scope_id: ScopeId,
    /// Policy-independent eligibility; see [`renameable_set`] for the final set.
    pub renameable: bool,
    pub demotion: Option<Demotion>,
    pub occurrences: Vec<OccRef>,
    /// First definition site.
    pub definition: Option<OccRef>,
    pub defined_in_tests: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    Binding(BindingId),
    External,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReflectionPolicy {
    /// Names used through string reflection are never renamed.
    #[default]
    Strict,
    /// Reflection literals are rewritten along with the member they name.
    RewriteLiterals,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RenamePolicy {
    pub reflection: ReflectionPolicy,
    pub rename_attributes: bool,
}

impl Default for RenamePolicy {
    fn default() -> Self {
        RenamePolicy {
            reflection: ReflectionPolicy::Strict,
            rename_attributes: true,
        }
    }
}

/// A string literal naming an attribute or global by reflection.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReflectionUse {
    pub name: String,
    pub occurrence: OccRef,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalysisError {
    #[error("{part:?} line {line}: star import makes external names ambiguous")]
    StarImport { part: Part, line: usize },
    #[error("{part:?} line {line}: no binding for nonlocal '{name}'")]
    NonlocalUnbound { part: Part, line: usize, name: String },
}

#[derive(Clone, Debug, Serialize)]
pub struct ScopeGraph {
    pub scopes: Vec<Scope>,
    pub bindings: Vec<Binding>,
    #[serde(serialize_with = "entries")]
    pub resolution: BTreeMap<OccRef, Resolution>,
    pub reflection: Vec<ReflectionUse>,
    /// Every identifier spelled anywhere in the code or tests.
    pub names_in_use: BTreeSet<String>,
    /// Representative binding of each binding's rename group.
    group: Vec<BindingId>,
}

fn entries<S: serde::Serializer>(map: &BTreeMap<OccRef, Resolution>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(map.iter())
}

impl ScopeGraph {
    pub fn resolve(&self, occ: OccRef) -> Option<BindingId> {
        match self.resolution.get(&occ) {
            Some(Resolution::Binding(b)) => Some(*b),
            _ => None,
        }
    }

    /// Representative id of the rename group containing `b`.
    pub fn group_of(&self, b: BindingId) -> BindingId {
        self.group[b]
    }

    /// Rename groups as sorted member lists, ordered by representative.
    pub fn groups(&self) -> Vec<Vec<BindingId>> {
        let mut by_rep: BTreeMap<BindingId, Vec<BindingId>> = BTreeMap::new();
        for b in 0..self.bindings.len() {
            by_rep.entry(self.group[b]).or_default().push(b);
        }
        by_rep.into_values().collect()
    }

    /// Group representatives blocked from renaming under `policy`.
    fn blocked_groups(&self, policy: RenamePolicy) -> HashSet<BindingId> {
        let mut blocked: HashSet<BindingId> = HashSet::new();
        for b in &self.bindings {
            if !b.renameable || (!policy.rename_attributes && b.kind == BindingKind::AttributeSlot) {
                blocked.insert(self.group[b.id]);
            }
        }
        let names: BTreeSet<&str> = self.reflection.iter().map(|r| r.name.as_str()).collect();
        for name in names {
            let same: Vec<&Binding> = self.bindings.iter().filter(|b| b.name == name).collect();
            let block_all = match policy.reflection {
                ReflectionPolicy::Strict => true,
                ReflectionPolicy::RewriteLiterals => self.literal_group(name, &blocked).is_none(),
            };
            if block_all {
                for b in same {
                    blocked.insert(self.group[b.id]);
                }
            }
        }
        blocked
    }

    /// The single unblocked member group a reflection literal can follow.
    fn literal_group(&self, name: &str, blocked: &HashSet<BindingId>) -> Option<BindingId> {
        let groups: BTreeSet<BindingId> = self
            .bindings
            .iter()
            .filter(|b| b.name == name && self.scopes[b.scope_id].kind == ScopeKind::Class)
            .map(|b| self.group[b.id])
            .collect();
        if groups.len() == 1 {
            let g = *groups.iter().next().unwrap();
            if !blocked.contains(&g) {
                return Some(g);
            }
        }
        None
    }

    /// Reflection literals to rewrite under `policy`, with the binding whose
    /// new name they take.
    pub fn literal_targets(&self, policy: RenamePolicy) -> Vec<(OccRef, BindingId)> {
        if policy.reflection != ReflectionPolicy::RewriteLiterals {
            return Vec::new();
        }
        let blocked = self.blocked_groups(policy);
        self.reflection
            .iter()
            .filter_map(|r| self.literal_group(&r.name, &blocked).map(|g| (r.occurrence, g)))
            .filter(|(_, g)| !blocked.contains(g))
            .collect()
    }

    /// Bindings of one scope, in id order.
    pub fn bindings_in(&self, scope: ScopeId) -> impl Iterator<Item = &Binding> {
        self.bindings.iter().filter(move |b| b.scope_id == scope)
    }
}

/// Bindings that may be renamed under `policy`. The result is closed under
/// rename groups and sorted by binding id.
pub fn renameable_set(graph: &ScopeGraph, policy: RenamePolicy) -> Vec<BindingId> {
    let blocked = graph.blocked_groups(policy);
    graph
        .bindings
        .iter()
        .filter(|b| !blocked.contains(&graph.group[b.id]))
        .map(|b| b.id)
        .collect()
}

pub fn is_dunder(name: &str) -> bool {
    name.len() > 4 && name.starts_with("__") && name.ends_with("__")
}

/// Analyze a single module with no companion tests.
pub fn analyze(tree: &SyntaxTree) -> Result<ScopeGraph, AnalysisError> {
    analyze_unit(tree, None)
}

/// Analyze program code together with its test code.
pub fn analyze_unit(code: &SyntaxTree, tests: Option<&SyntaxTree>) -> Result<ScopeGraph, AnalysisError> {
    let mut w = Walker::new(code, tests);
    w.part = Part::Code;
    w.body(&code.module.body)?;
    if let Some(t) = tests {
        w.part = Part::Test;
        w.body(&t.module.body)?;
    }
    let mut g = Resolver::new(w).run()?;
    g.names_in_use = code
        .occurrences
        .iter()
        .chain(tests.into_iter().flat_map(|t| t.occurrences.iter()))
        .map(|o| o.name.clone())
        .collect();
    Ok(g)
}

// ----- collection ------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum BindKind {
    Class,
    Function,
    Param,
    Import,
    Assign,
    CompTarget,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Use {
    Load,
    Store(BindKind),
    Global,
    Nonlocal,
}

#[derive(Clone, Debug)]
struct NameEvent {
    scope: ScopeId,
    name: String,
    occ: OccRef,
    offset: usize,
    use_: Use,
    /// For simple assignments `x = C(...)`: the occurrence of `C`.
    value_callee: Option<OccRef>,
    /// Set on the receiver parameter of a method: the class scope.
    self_of: Option<ScopeId>,
    /// Scope created by a `def` / `class` binding.
    def_scope: Option<ScopeId>,
}

#[derive(Clone, Debug)]
enum RecvSyntax {
    Name(OccRef),
    Super,
    CallName(OccRef),
    Literal,
    Chain(OccRef),
    Other,
}

#[derive(Clone, Debug)]
struct AttrEvent {
    occ: OccRef,
    attr: String,
    recv: RecvSyntax,
    store: bool,
}

#[derive(Clone, Debug)]
enum CalleeSyntax {
    Name(OccRef, String),
    Attr { recv: RecvSyntax, attr: String },
    Other,
}

#[derive(Clone, Debug)]
struct CallEvent {
    callee: CalleeSyntax,
    keywords: Vec<(String, OccRef)>,
    /// Positional string-literal arguments that look like identifiers.
    str_args: Vec<(usize, String, OccRef)>,
    /// Positions of positional arguments that are not string literals.
    other_args: Vec<usize>,
}

#[derive(Clone, Debug)]
struct ClassData {
    scope: ScopeId,
    /// Name bases by occurrence; `None` for any other base expression.
    bases: Vec<Option<OccRef>>,
    metaclass: bool,
    dataclass: bool,
}

struct ScopeData {
    kind: ScopeKind,
    parent: Option<ScopeId>,
    name: String,
    globals: HashSet<String>,
    nonlocals: HashSet<String>,
}

struct Walker {
    part: Part,
    occ_index: HashMap<(Part, usize), usize>,
    line_starts: [Vec<usize>; 2],
    scopes: Vec<ScopeData>,
    cur: ScopeId,
    names: Vec<NameEvent>,
    attrs: Vec<AttrEvent>,
    calls: Vec<CallEvent>,
    classes: Vec<ClassData>,
    reflection: Vec<ReflectionUse>,
    /// Every identifier-like plain string literal.
    strings: Vec<ReflectionUse>,
    /// Occurrences known to be external (import paths, literals, ...).
    external: Vec<OccRef>,
}

fn line_starts(src: &str) -> Vec<usize> {
    std::iter::once(0)
        .chain(src.match_indices('\n').map(|(i, _)| i + 1))
        .collect()
}

impl Walker {
    fn new(code: &SyntaxTree, tests: Option<&SyntaxTree>) -> Self {
        let mut occ_index = HashMap::new();
        for (i, o) in code.occurrences.iter().enumerate() {
            occ_index.insert((Part::Code, o.span.start), i);
        }
        if let Some(t) = tests {
            for (i, o) in t.occurrences.iter().enumerate() {
                occ_index.insert((Part::Test, o.span.start), i);
            }
        }
        Walker {
            part: Part::Code,
            occ_index,
            line_starts: [
                line_starts(&code.source),
                tests.map(|t| line_starts(&t.source)).unwrap_or_default(),
            ],
            scopes: vec![ScopeData {
                kind: ScopeKind::Module,
                parent: None,
                name: "<module>".into(),
                globals: HashSet::new(),
                nonlocals: HashSet::new(),
            }],
            cur: 0,
            names: Vec::new(),
            attrs: Vec::new(),
            calls: Vec::new(),
            classes: Vec::new(),
            reflection: Vec::new(),
            strings: Vec::new(),
            external: Vec::new(),
        }
    }

    fn line(&self, offset: usize) -> usize {
        let starts = &self.line_starts[self.part as usize];
        starts.partition_point(|&s| s <= offset)
    }

    fn occ(&self, span: Span) -> OccRef {
        let index = *self
            .occ_index
            .get(&(self.part, span.start))
            .unwrap_or_else(|| panic!("no occurrence recorded at {span}"));
        OccRef {
            part: self.part,
            index,
        }
    }

    fn str_occ(&self, lit: &StrLit) -> Option<(String, OccRef)> {
        match lit.parts.as_slice() {
            [StrPart::Plain(p)] => {
                let (body, off) = plain_str_body(&p.raw)?;
                if !is_identifier(body) {
                    return None;
                }
                let start = p.span.start + off;
                let index = *self.occ_index.get(&(self.part, start))?;
                Some((
                    body.to_string(),
                    OccRef {
                        part: self.part,
                        index,
                    },
                ))
            }
            _ => None,
        }
    }

    fn push_scope(&mut self, kind: ScopeKind, name: &str) -> ScopeId {
        self.scopes.push(ScopeData {
            kind,
            parent: Some(self.cur),
            name: name.to_string(),
            globals: HashSet::new(),
            nonlocals: HashSet::new(),
        });
        self.scopes.len() - 1
    }

    fn event(&mut self, scope: ScopeId, id: &Ident, use_: Use) -> usize {
        let occ = self.occ(id.span);
        self.names.push(NameEvent {
            scope,
            name: id.name.clone(),
            occ,
            offset: id.span.start,
            use_,
            value_callee: None,
            self_of: None,
            def_scope: None,
        });
        self.names.len() - 1
    }

    fn load(&mut self, id: &Ident) {
        self.event(self.cur, id, Use::Load);
    }

    fn store(&mut self, id: &Ident, kind: BindKind) -> usize {
        self.event(self.cur, id, Use::Store(kind))
    }

    fn external_ident(&mut self, id: &Ident) {
        let o = self.occ(id.span);
        self.external.push(o);
    }

    fn body(&mut self, body: &[Stmt]) -> Result<(), AnalysisError> {
        for s in body {
            self.stmt(s)?;
        }
        Ok(())
    }

    fn stmt(&mut self, s: &Stmt) -> Result<(), AnalysisError> {
        match &s.kind {
            StmtKind::FunctionDef(f) => self.function_def(f)?,
            StmtKind::ClassDef(c) => self.class_def(c)?,
            StmtKind::Return(v) => {
                if let Some(v) = v {
                    self.expr(v);
                }
            }
            StmtKind::Delete(ts) => {
                for t in ts {
                    self.target(t, BindKind::Assign, None);
                }
            }
            StmtKind::Assign { targets, value } => {
                self.expr(value);
                let callee = self.callee_name(value);
                for t in targets {
                    self.target(t, BindKind::Assign, callee);
                }
                if self.scopes[self.cur].kind != ScopeKind::Function {
                    let special = targets.iter().any(|t| {
                        matches!(t.as_name(), Some(n) if n.name == "__slots__" || n.name == "__all__" || n.name == "__match_args__")
                    });
                    if special {
                        self.reflect_strings(value);
                    }
                }
            }
            StmtKind::AugAssign { target, value, .. } => {
                self.expr(value);
                if let ExprKind::Name(id) = &target.kind {
                    self.load(id);
                }
                self.target(target, BindKind::Assign, None);
            }
            StmtKind::AnnAssign {
                target,
                annotation,
                value,
                ..
            } => {
                self.expr(annotation);
                let mut callee = None;
                if let Some(v) = value {
                    self.expr(v);
                    callee = self.callee_name(v);
                }
                self.target(target, BindKind::Assign, callee);
            }
            StmtKind::For {
                target,
                iter,
                body,
                orelse,
                ..
            } => {
                self.expr(iter);
                self.target(target, BindKind::Assign, None);
                self.body(body)?;
                self.body(orelse)?;
            }
            StmtKind::While { test, body, orelse } | StmtKind::If { test, body, orelse } => {
                self.expr(test);
                self.body(body)?;
                self.body(orelse)?;
            }
            StmtKind::With { items, body, .. } => {
                for it in items {
                    self.expr(&it.context);
                    if let Some(v) = &it.vars {
                        self.target(v, BindKind::Assign, None);
                    }
                }
                self.body(body)?;
            }
            StmtKind::Match { subject, cases } => {
                self.expr(subject);
                for c in cases {
                    self.pattern(&c.pattern);
                    if let Some(g) = &c.guard {
                        self.expr(g);
                    }
                    self.body(&c.body)?;
                }
            }
            StmtKind::Raise { exc, cause } => {
                for e in [exc, cause].into_iter().flatten() {
                    self.expr(e);
                }
            }
            StmtKind::Try {
                body,
                handlers,
                orelse,
                finalbody,
            } => {
                self.body(body)?;
                for h in handlers {
                    if let Some(k) = &h.kind {
                        self.expr(k);
                    }
                    if let Some(n) = &h.name {
                        self.store(n, BindKind::Assign);
                    }
                    self.body(&h.body)?;
                }
                self.body(orelse)?;
                self.body(finalbody)?;
            }
            StmtKind::Assert { test, msg } => {
                self.expr(test);
                if let Some(m) = msg {
                    self.expr(m);
                }
            }
            StmtKind::Import(aliases) => {
                for a in aliases {
                    if let Some(asname) = &a.asname {
                        for p in &a.name {
                            self.external_ident(p);
                        }
                        self.store(asname, BindKind::Import);
                    } else {
                        self.store(&a.name[0], BindKind::Import);
                        for p in &a.name[1..] {
                            self.external_ident(p);
                        }
                    }
                }
            }
            StmtKind::ImportFrom {
                module,
                names,
                star,
                ..
            } => {
                if *star {
                    return Err(AnalysisError::StarImport {
                        part: self.part,
                        line: self.line(s.span.start),
                    });
                }
                for p in module.iter().flatten() {
                    self.external_ident(p);
                }
                for a in names {
                    if let Some(asname) = &a.asname {
                        self.external_ident(&a.name[0]);
                        self.store(asname, BindKind::Import);
                    } else {
                        self.store(&a.name[0], BindKind::Import);
                    }
                }
            }
            StmtKind::Global(names) => {
                for n in names {
                    self.scopes[self.cur].globals.insert(n.name.clone());
                    self.event(self.cur, n, Use::Global);
                }
            }
            StmtKind::Nonlocal(names) => {
                for n in names {
                    self.scopes[self.cur].nonlocals.insert(n.name.clone());
                    self.event(self.cur, n, Use::Nonlocal);
                }
            }
            StmtKind::Expr(e) => self.expr(e),
            StmtKind::Pass | StmtKind::Break | StmtKind::Continue => {}
        }
        Ok(())
    }

    fn callee_name(&self, value: &Expr) -> Option<OccRef> {
        match &value.kind {
            ExprKind::Call { func, .. } => func.as_name().map(|n| self.occ(n.span)),
            _ => None,
        }
    }

    fn reflect_strings(&mut self, value: &Expr) {
        let items: Vec<&Expr> = match &value.kind {
            ExprKind::List(elts) | ExprKind::Tuple(elts) | ExprKind::Set(elts) => elts.iter().collect(),
            _ => vec![value],
        };
        for e in items {
            if let ExprKind::Str(lit) = &e.kind {
                if let Some((name, occ)) = self.str_occ(lit) {
                    self.reflection.push(ReflectionUse { name, occurrence: occ });
                }
            }
        }
    }

    fn params_outer(&mut self, p: &Parameters) {
        for param in p.iter() {
            if let Some(a) = &param.annotation {
                self.expr(a);
            }
            if let Some(d) = &param.default {
                self.expr(d);
            }
        }
    }

    fn function_def(&mut self, f: &FunctionDef) -> Result<(), AnalysisError> {
        for d in &f.decorators {
            self.expr(d);
        }
        self.params_outer(&f.params);
        if let Some(r) = &f.returns {
            self.expr(r);
        }
        let class_scope = (self.scopes[self.cur].kind == ScopeKind::Class).then_some(self.cur);
        let is_static = f.decorators.iter().any(|d| {
            matches!(&d.kind, ExprKind::Name(n) if n.name == "staticmethod")
        });
        let fscope = self.push_scope(ScopeKind::Function, &f.name.name);
        let ev = self.store(&f.name, BindKind::Function);
        self.names[ev].def_scope = Some(fscope);
        let saved = self.cur;
        self.cur = fscope;
        let receiver = f.params.posonly.first().or(f.params.args.first()).map(|p| p.name.span);
        for param in f.params.iter() {
            let ev = self.store(&param.name, BindKind::Param);
            if !is_static && Some(param.name.span) == receiver {
                self.names[ev].self_of = class_scope;
            }
        }
        let r = self.body(&f.body);
        self.cur = saved;
        r
    }

    fn class_def(&mut self, c: &ClassDef) -> Result<(), AnalysisError> {
        for d in &c.decorators {
            self.expr(d);
        }
        let mut bases = Vec::new();
        let mut metaclass = false;
        for arg in &c.bases {
            match arg {
                CallArg::Positional(e) => {
                    self.expr(e);
                    bases.push(e.as_name().map(|n| self.occ(n.span)));
                }
                CallArg::Keyword { name, value } => {
                    self.external_ident(name);
                    self.expr(value);
                    metaclass = true;
                }
                CallArg::Starred(e) | CallArg::DoubleStarred(e) => {
                    self.expr(e);
                    bases.push(None);
                }
            }
        }
        let dataclass = c.decorators.iter().any(|d| {
            let target = match &d.kind {
                ExprKind::Call { func, .. } => func.as_ref(),
                _ => d,
            };
            match &target.kind {
                ExprKind::Name(n) => n.name == "dataclass",
                ExprKind::Attribute { attr, .. } => attr.name == "dataclass",
                _ => false,
            }
        });
        let cscope = self.push_scope(ScopeKind::Class, &c.name.name);
        self.classes.push(ClassData {
            scope: cscope,
            bases,
            metaclass,
            dataclass,
        });
        let saved = self.cur;
        self.cur = cscope;
        let r = self.body(&c.body);
        self.cur = saved;
        let ev = self.store(&c.name, BindKind::Class);
        self.names[ev].def_scope = Some(cscope);
        r
    }

    fn target(&mut self, e: &Expr, kind: BindKind, callee: Option<OccRef>) {
        match &e.kind {
            ExprKind::Name(id) => {
                let ev = self.store(id, kind);
                self.names[ev].value_callee = callee;
            }
            ExprKind::Tuple(elts) | ExprKind::List(elts) => {
                for x in elts {
                    self.target(x, kind, None);
                }
            }
            ExprKind::Starred(inner) => self.target(inner, kind, None),
            ExprKind::Attribute { value, attr } => {
                self.expr(value);
                let recv = self.recv_syntax(value);
                let occ = self.occ(attr.span);
                self.attrs.push(AttrEvent {
                    occ,
                    attr: attr.name.clone(),
                    recv,
                    store: true,
                });
            }
            _ => self.expr(e),
        }
    }

    fn recv_syntax(&self, e: &Expr) -> RecvSyntax {
        match &e.kind {
            ExprKind::Name(id) => RecvSyntax::Name(self.occ(id.span)),
            ExprKind::Call { func, .. } => match &func.kind {
                ExprKind::Name(id) if id.name == "super" => RecvSyntax::Super,
                ExprKind::Name(id) => RecvSyntax::CallName(self.occ(id.span)),
                _ => RecvSyntax::Other,
            },
            ExprKind::Str(_)
            | ExprKind::Num(_)
            | ExprKind::Constant(_)
            | ExprKind::List(_)
            | ExprKind::Tuple(_)
            | ExprKind::Dict(_)
            | ExprKind::Set(_)
            | ExprKind::ListComp { .. }
            | ExprKind::SetComp { .. }
            | ExprKind::DictComp { .. }
            | ExprKind::GeneratorExp { .. } => RecvSyntax::Literal,
            ExprKind::Attribute { value, .. } => {
                let mut root = value.as_ref();
                while let ExprKind::Attribute { value, .. } = &root.kind {
                    root = value;
                }
                match &root.kind {
                    ExprKind::Name(id) => RecvSyntax::Chain(self.occ(id.span)),
                    _ => RecvSyntax::Other,
                }
            }
            _ => RecvSyntax::Other,
        }
    }

    fn walrus_scope(&self) -> ScopeId {
        let mut s = self.cur;
        while self.scopes[s].kind == ScopeKind::Comprehension {
            s = self.scopes[s].parent.expect("comprehension has a parent");
        }
        s
    }

    fn comprehension(&mut self, gens: &[Comprehension], elts: &[&Expr], name: &str) {
        self.expr(&gens[0].iter);
        let cs = self.push_scope(ScopeKind::Comprehension, name);
        let saved = self.cur;
        self.cur = cs;
        for (i, g) in gens.iter().enumerate() {
            if i > 0 {
                self.expr(&g.iter);
            }
            self.target(&g.target, BindKind::CompTarget, None);
            for c in &g.ifs {
                self.expr(c);
            }
        }
        for e in elts {
            self.expr(e);
        }
        self.cur = saved;
    }

    fn felements(&mut self, els: &[FElement]) {
        for el in els {
            if let FElement::Field(f) = el {
                self.expr(&f.expr);
                if let Some(spec) = &f.format_spec {
                    self.felements(spec);
                }
            }
        }
    }

    fn expr(&mut self, e: &Expr) {
        match &e.kind {
            ExprKind::Name(id) => self.load(id),
            ExprKind::NamedExpr { target, value } => {
                self.expr(value);
                let scope = self.walrus_scope();
                self.event(scope, target, Use::Store(BindKind::Assign));
            }
            ExprKind::BoolOp { values, .. } => {
                for v in values {
                    self.expr(v);
                }
            }
            ExprKind::BinOp { left, right, .. } => {
                self.expr(left);
                self.expr(right);
            }
            ExprKind::UnaryOp { operand, .. } => self.expr(operand),
            ExprKind::Lambda { params, body } => {
                self.params_outer(params);
                let ls = self.push_scope(ScopeKind::Function, "<lambda>");
                let saved = self.cur;
                self.cur = ls;
                for p in params.iter() {
                    self.store(&p.name, BindKind::Param);
                }
                self.expr(body);
                self.cur = saved;
            }
            ExprKind::IfExp { test, body, orelse } => {
                self.expr(test);
                self.expr(body);
                self.expr(orelse);
            }
            ExprKind::Dict(items) => {
                for it in items {
                    match it {
                        DictItem::Pair(k, v) => {
                            self.expr(k);
                            self.expr(v);
                        }
                        DictItem::Unpack(v) => self.expr(v),
                    }
                }
            }
            ExprKind::Set(elts) | ExprKind::List(elts) | ExprKind::Tuple(elts) => {
                for x in elts {
                    self.expr(x);
                }
            }
            ExprKind::ListComp { elt, generators } => self.comprehension(generators, &[elt.as_ref()], "<listcomp>"),
            ExprKind::SetComp { elt, generators } => self.comprehension(generators, &[elt.as_ref()], "<setcomp>"),
            ExprKind::GeneratorExp { elt, generators } => self.comprehension(generators, &[elt.as_ref()], "<genexpr>"),
            ExprKind::DictComp {
                key,
                value,
                generators,
            } => self.comprehension(generators, &[key.as_ref(), value.as_ref()], "<dictcomp>"),
            ExprKind::Await(x) | ExprKind::YieldFrom(x) | ExprKind::Starred(x) => self.expr(x),
            ExprKind::Yield(x) => {
                if let Some(x) = x {
                    self.expr(x);
                }
            }
            ExprKind::Compare {
                left, comparators, ..
            } => {
                self.expr(left);
                for c in comparators {
                    self.expr(c);
                }
            }
            ExprKind::Call { func, args } => self.call(func, args),
            ExprKind::Num(_) | ExprKind::Constant(_) => {}
            ExprKind::Str(s) => {
                if let Some((name, occurrence)) = self.str_occ(s) {
                    self.strings.push(ReflectionUse { name, occurrence });
                }
                for part in &s.parts {
                    if let StrPart::Formatted(f) = part {
                        self.felements(&f.elements);
                    }
                }
            }
            ExprKind::Attribute { value, attr } => {
                self.expr(value);
                let recv = self.recv_syntax(value);
                let occ = self.occ(attr.span);
                self.attrs.push(AttrEvent {
                    occ,
                    attr: attr.name.clone(),
                    recv,
                    store: false,
                });
            }
            ExprKind::Subscript { value, slice } => {
                self.expr(value);
                self.expr(slice);
                let dict_like = match &value.kind {
                    ExprKind::Attribute { attr, .. } => attr.name == "__dict__",
                    ExprKind::Call { func, .. } => matches!(func.as_name(), Some(n) if n.name == "vars"),
                    _ => false,
                };
                if dict_like {
                    if let ExprKind::Str(lit) = &slice.kind {
                        if let Some((name, occ)) = self.str_occ(lit) {
                            self.reflection.push(ReflectionUse { name, occurrence: occ });
                        }
                    }
                }
            }
            ExprKind::Slice { lower, upper, step } => {
                for x in [lower, upper, step].into_iter().flatten() {
                    self.expr(x);
                }
            }
        }
    }

    fn call(&mut self, func: &Expr, args: &[CallArg]) {
        self.expr(func);
        let callee = match &func.kind {
            ExprKind::Name(id) => CalleeSyntax::Name(self.occ(id.span), id.name.clone()),
            ExprKind::Attribute { value, attr } => CalleeSyntax::Attr {
                recv: self.recv_syntax(value),
                attr: attr.name.clone(),
            },
            _ => CalleeSyntax::Other,
        };
        let mut keywords = Vec::new();
        let mut str_args = Vec::new();
        let mut other_args = Vec::new();
        let mut position = 0;
        for a in args {
            match a {
                CallArg::Positional(e) => {
                    self.expr(e);
                    match &e.kind {
                        ExprKind::Str(lit) => {
                            if let Some((name, occ)) = self.str_occ(lit) {
                                str_args.push((position, name, occ));
                            }
                        }
                        _ => other_args.push(position),
                    }
                    position += 1;
                }
                CallArg::Starred(e) | CallArg::DoubleStarred(e) => {
                    self.expr(e);
                    other_args.push(position);
                    position += 1;
                }
                CallArg::Keyword { name, value } => {
                    self.expr(value);
                    keywords.push((name.name.clone(), self.occ(name.span)));
                }
            }
        }
        self.calls.push(CallEvent {
            callee,
            keywords,
            str_args,
            other_args,
        });
    }

    fn pattern(&mut self, p: &Pattern) {
        match &p.kind {
            PatternKind::Value(e) => self.expr(e),
            PatternKind::Singleton(_) => {}
            PatternKind::Sequence(ps) | PatternKind::Or(ps) => {
                for x in ps {
                    self.pattern(x);
                }
            }
            PatternKind::Mapping {
                keys,
                patterns,
                rest,
            } => {
                for k in keys {
                    self.expr(k);
                }
                for x in patterns {
                    self.pattern(x);
                }
                if let Some(r) = rest {
                    self.store(r, BindKind::Assign);
                }
            }
            PatternKind::Class {
                cls,
                patterns,
                kwd_attrs,
                kwd_patterns,
            } => {
                self.expr(cls);
                let recv = match &cls.kind {
                    ExprKind::Name(id) => RecvSyntax::CallName(self.occ(id.span)),
                    _ => self.recv_syntax(cls),
                };
                for x in patterns {
                    self.pattern(x);
                }
                for a in kwd_attrs {
                    let occ = self.occ(a.span);
                    self.attrs.push(AttrEvent {
                        occ,
                        attr: a.name.clone(),
                        recv: recv.clone(),
                        store: false,
                    });
                }
                for x in kwd_patterns {
                    self.pattern(x);
                }
            }
            PatternKind::Star(name) => {
                if let Some(n) = name {
                    self.store(n, BindKind::Assign);
                }
            }
            PatternKind::As { pattern, name } => {
                if let Some(x) = pattern {
                    self.pattern(x);
                }
                if let Some(n) = name {
                    self.store(n, BindKind::Assign);
                }
            }
        }
    }
}

// ----- resolution ------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Recv {
    Unit,
    External,
    Unknown,
}

struct BuildBinding {
    name: String,
    scope: ScopeId,
    kind: Option<BindingKind>,
    occurrences: Vec<OccRef>,
    definition: Option<OccRef>,
    defined_in_tests: bool,
    stores: usize,
    instance_stores: usize,
}

struct Resolver {
    w: Walker,
    locals: Vec<HashSet<String>>,
    bindings: Vec<BuildBinding>,
    by_scope_name: HashMap<(ScopeId, String), BindingId>,
    resolution: BTreeMap<OccRef, Resolution>,
    self_params: HashMap<BindingId, ScopeId>,
    def_scopes: HashMap<BindingId, Vec<ScopeId>>,
    callee_of_store: Vec<(BindingId, Option<OccRef>)>,
    demoted: HashMap<BindingId, Demotion>,
    parent: Vec<BindingId>,
}

impl Resolver {
    fn new(w: Walker) -> Self {
        let n = w.scopes.len();
        Resolver {
            w,
            locals: vec![HashSet::new(); n],
            bindings: Vec::new(),
            by_scope_name: HashMap::new(),
            resolution: BTreeMap::new(),
            self_params: HashMap::new(),
            def_scopes: HashMap::new(),
            callee_of_store: Vec::new(),
            demoted: HashMap::new(),
            parent: Vec::new(),
        }
    }

    fn binding(&mut self, scope: ScopeId, name: &str) -> BindingId {
        if let Some(&b) = self.by_scope_name.get(&(scope, name.to_string())) {
            return b;
        }
        let id = self.bindings.len();
        self.bindings.push(BuildBinding {
            name: name.to_string(),
            scope,
            kind: None,
            occurrences: Vec::new(),
            definition: None,
            defined_in_tests: false,
            stores: 0,
            instance_stores: 0,
        });
        self.parent.push(id);
        self.by_scope_name.insert((scope, name.to_string()), id);
        id
    }

    fn find(&mut self, b: BindingId) -> BindingId {
        let mut r = b;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut x = b;
        while self.parent[x] != r {
            let next = self.parent[x];
            self.parent[x] = r;
            x = next;
        }
        r
    }

    fn union(&mut self, a: BindingId, b: BindingId) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            // Smaller id stays representative so groups are stable.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }

    fn demote(&mut self, b: BindingId, why: Demotion) {
        self.demoted.entry(b).or_insert(why);
    }

    fn scope_kind(&self, s: ScopeId) -> ScopeKind {
        self.w.scopes[s].kind
    }

    fn owner(&self, scope: ScopeId, name: &str) -> Option<ScopeId> {
        let sd = &self.w.scopes[scope];
        if sd.globals.contains(name) {
            return self.locals[0].contains(name).then_some(0);
        }
        if sd.nonlocals.contains(name) {
            return self.enclosing_function_local(scope, name);
        }
        if self.locals[scope].contains(name) {
            return Some(scope);
        }
        let mut p = sd.parent;
        while let Some(pid) = p {
            let ps = &self.w.scopes[pid];
            match ps.kind {
                ScopeKind::Class => {}
                ScopeKind::Module => return self.locals[0].contains(name).then_some(0),
                ScopeKind::Function | ScopeKind::Comprehension => {
                    if ps.globals.contains(name) {
                        return self.locals[0].contains(name).then_some(0);
                    }
                    if ps.nonlocals.contains(name) {
                        return self.enclosing_function_local(pid, name);
                    }
                    if self.locals[pid].contains(name) {
                        return Some(pid);
                    }
                }
            }
            p = ps.parent;
        }
        None
    }

    fn enclosing_function_local(&self, scope: ScopeId, name: &str) -> Option<ScopeId> {
        let mut p = self.w.scopes[scope].parent;
        while let Some(pid) = p {
            let ps = &self.w.scopes[pid];
            if matches!(ps.kind, ScopeKind::Function | ScopeKind::Comprehension) {
                if ps.nonlocals.contains(name) {
                    return self.enclosing_function_local(pid, name);
                }
                if self.locals[pid].contains(name) && !ps.globals.contains(name) {
                    return Some(pid);
                }
            }
            p = ps.parent;
        }
        None
    }

    fn kind_for(&self, bk: BindKind, owner: ScopeId) -> BindingKind {
        let sk = self.scope_kind(owner);
        match bk {
            BindKind::Class => BindingKind::Class,
            BindKind::Function => {
                if sk == ScopeKind::Class {
                    BindingKind::Method
                } else {
                    BindingKind::Function
                }
            }
            BindKind::Param => BindingKind::Parameter,
            BindKind::Import => BindingKind::ImportAlias,
            BindKind::CompTarget => BindingKind::ComprehensionVar,
            BindKind::Assign => match sk {
                ScopeKind::Module => BindingKind::GlobalVar,
                ScopeKind::Function => BindingKind::Local,
                ScopeKind::Class => BindingKind::AttributeSlot,
                ScopeKind::Comprehension => BindingKind::ComprehensionVar,
            },
        }
    }

    fn run(mut self) -> Result<ScopeGraph, AnalysisError> {
        // Local name sets.
        for ev in &self.w.names {
            if let Use::Store(_) = ev.use_ {
                let sd = &self.w.scopes[ev.scope];
                if sd.globals.contains(&ev.name) {
                    self.locals[0].insert(ev.name.clone());
                } else if !sd.nonlocals.contains(&ev.name) {
                    self.locals[ev.scope].insert(ev.name.clone());
                }
            }
        }

        // Names.
        let names = std::mem::take(&mut self.w.names);
        for ev in &names {
            let owner = match ev.use_ {
                Use::Global => self.locals[0].contains(&ev.name).then_some(0),
                Use::Nonlocal => {
                    let o = self.enclosing_function_local(ev.scope, &ev.name);
                    if o.is_none() {
                        self.w.part = ev.occ.part;
                        return Err(AnalysisError::NonlocalUnbound {
                            part: ev.occ.part,
                            line: self.w.line(ev.offset),
                            name: ev.name.clone(),
                        });
                    }
                    o
                }
                Use::Load | Use::Store(_) => self.owner(ev.scope, &ev.name),
            };
            let Some(owner) = owner else {
                self.resolution.insert(ev.occ, Resolution::External);
                continue;
            };
            let b = self.binding(owner, &ev.name);
            self.resolution.insert(ev.occ, Resolution::Binding(b));
            self.bindings[b].occurrences.push(ev.occ);
            if let Use::Store(bk) = ev.use_ {
                let kind = self.kind_for(bk, owner);
                let bb = &mut self.bindings[b];
                if bb.kind.is_none() {
                    bb.kind = Some(kind);
                }
                if bb.definition.is_none() {
                    bb.definition = Some(ev.occ);
                }
                if ev.occ.part == Part::Test {
                    bb.defined_in_tests = true;
                }
                bb.stores += 1;
                if let Some(c) = ev.self_of {
                    self.self_params.insert(b, c);
                }
                if let Some(s) = ev.def_scope {
                    self.def_scopes.entry(b).or_default().push(s);
                }
                self.callee_of_store.push((b, ev.value_callee));
            }
        }
        for &o in &self.w.external {
            self.resolution.insert(o, Resolution::External);
        }

        // Members created through the receiver parameter.
        let attrs = std::mem::take(&mut self.w.attrs);
        for a in &attrs {
            if !a.store {
                continue;
            }
            if let RecvSyntax::Name(occ) = a.recv {
                if let Some(Resolution::Binding(p)) = self.resolution.get(&occ).copied() {
                    if let Some(&cls) = self.self_params.get(&p) {
                        let m = self.binding(cls, &a.attr);
                        let bb = &mut self.bindings[m];
                        if bb.kind.is_none() {
                            bb.kind = Some(BindingKind::AttributeSlot);
                        }
                        if bb.definition.is_none() {
                            bb.definition = Some(a.occ);
                        }
                        if a.occ.part == Part::Test {
                            bb.defined_in_tests = true;
                        }
                        bb.stores += 1;
                    }
                }
            }
        }

        // Instances of unit classes held in plain variables.
        let stores = std::mem::take(&mut self.callee_of_store);
        for (b, callee) in &stores {
            let unit = callee
                .and_then(|c| self.resolution.get(&c).copied())
                .is_some_and(|r| matches!(r, Resolution::Binding(cb) if self.is_class(cb)));
            if unit {
                self.bindings[*b].instance_stores += 1;
            }
        }

        // Classes: bases and external derivation.
        let classes = std::mem::take(&mut self.w.classes);
        let class_by_scope: HashMap<ScopeId, usize> =
            classes.iter().enumerate().map(|(i, c)| (c.scope, i)).collect();
        let mut unit_bases: Vec<Vec<ScopeId>> = vec![Vec::new(); classes.len()];
        let mut external: Vec<bool> = vec![false; classes.len()];
        for (i, c) in classes.iter().enumerate() {
            external[i] = c.metaclass;
            for base in &c.bases {
                match base.and_then(|o| self.resolution.get(&o).copied().map(|r| (o, r))) {
                    Some((_, Resolution::Binding(b))) if self.is_class(b) => {
                        unit_bases[i].extend(self.def_scopes[&b].iter().copied());
                    }
                    Some((o, Resolution::External)) if self.occ_name(&names, o) == Some("object") => {}
                    _ => external[i] = true,
                }
            }
        }
        loop {
            let mut changed = false;
            for i in 0..classes.len() {
                if !external[i]
                    && unit_bases[i]
                        .iter()
                        .any(|s| class_by_scope.get(s).is_some_and(|&j| external[j]))
                {
                    external[i] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }

        // Per-binding demotions.
        for b in 0..self.bindings.len() {
            let bb = &self.bindings[b];
            let why = if is_dunder(&bb.name) {
                Some(Demotion::Dunder)
            } else if bb.kind == Some(BindingKind::ImportAlias) {
                Some(Demotion::ImportAlias)
            } else if self.self_params.contains_key(&b) {
                Some(Demotion::Receiver)
            } else if bb.defined_in_tests {
                Some(Demotion::DefinedInTests)
            } else if bb.stores == 0 {
                Some(Demotion::NoDefinition)
            } else if self.scope_kind(bb.scope) == ScopeKind::Class
                && class_by_scope.get(&bb.scope).is_some_and(|&i| external[i])
            {
                Some(Demotion::ExternalBase)
            } else {
                None
            };
            if let Some(why) = why {
                self.demote(b, why);
            }
        }

        // Members with the same name form one group.
        let mut members: BTreeMap<String, Vec<BindingId>> = BTreeMap::new();
        for (b, bb) in self.bindings.iter().enumerate() {
            if self.w.scopes[bb.scope].kind == ScopeKind::Class {
                members.entry(bb.name.clone()).or_default().push(b);
            }
        }
        for ids in members.values() {
            for w in ids.windows(2) {
                self.union(w[0], w[1]);
            }
        }

        // Attribute accesses.
        let ext_attrs = data::external_attrs();
        for a in &attrs {
            let Some(ids) = members.get(&a.attr) else {
                self.resolution.insert(a.occ, Resolution::External);
                continue;
            };
            let recv = self.classify(&a.recv);
            if recv == Recv::External {
                self.demote(ids[0], Demotion::ExternalReceiver);
                self.resolution.insert(a.occ, Resolution::External);
                continue;
            }
            if recv == Recv::Unknown && ext_attrs.contains(a.attr.as_str()) {
                self.demote(ids[0], Demotion::ExternalAttributeName);
            }
            let target = self.receiver_class(&a.recv)
                .and_then(|cls| self.by_scope_name.get(&(cls, a.attr.clone())).copied())
                .unwrap_or(ids[0]);
            self.resolution.insert(a.occ, Resolution::Binding(target));
            self.bindings[target].occurrences.push(a.occ);
        }

        // Calls: keyword arguments and reflection.
        let calls = std::mem::take(&mut self.w.calls);
        let mut reflection = std::mem::take(&mut self.w.reflection);
        let mut dynamic_reflection = false;
        for c in &calls {
            dynamic_reflection |= self.call_reflection(c, &mut reflection);
            if c.keywords.is_empty() {
                continue;
            }
            let target = self.callee_targets(c, &members, &classes, &class_by_scope, &unit_bases);
            for (k, occ) in &c.keywords {
                match &target {
                    Callee::Known { functions, fields } => {
                        let mut params: Vec<BindingId> = functions
                            .iter()
                            .filter_map(|f| self.by_scope_name.get(&(*f, k.clone())).copied())
                            .filter(|b| self.bindings[*b].kind == Some(BindingKind::Parameter))
                            .collect();
                        params.extend(
                            fields
                                .iter()
                                .filter_map(|s| self.by_scope_name.get(&(*s, k.clone())).copied())
                                .filter(|b| self.bindings[*b].kind == Some(BindingKind::AttributeSlot)),
                        );
                        params.sort_unstable();
                        params.dedup();
                        if let Some(&first) = params.first() {
                            for p in &params[1..] {
                                self.union(first, *p);
                            }
                            self.resolution.insert(*occ, Resolution::Binding(first));
                            self.bindings[first].occurrences.push(*occ);
                        } else {
                            self.resolution.insert(*occ, Resolution::External);
                        }
                    }
                    Callee::Unknown => {
                        for b in 0..self.bindings.len() {
                            if self.bindings[b].name == *k
                                && self.bindings[b].kind == Some(BindingKind::Parameter)
                            {
                                self.demote(b, Demotion::UnresolvedKeyword);
                            }
                        }
                        self.resolution.insert(*occ, Resolution::External);
                    }
                    Callee::External => {
                        self.resolution.insert(*occ, Resolution::External);
                    }
                }
            }
        }

        // A computed reflection name can come from any string in the unit.
        if dynamic_reflection {
            let members: HashSet<&str> = self
                .bindings
                .iter()
                .filter(|b| self.w.scopes[b.scope].kind == ScopeKind::Class)
                .map(|b| b.name.as_str())
                .collect();
            let known: HashSet<OccRef> = reflection.iter().map(|r| r.occurrence).collect();
            for st in &self.w.strings {
                if members.contains(st.name.as_str()) && !known.contains(&st.occurrence) {
                    reflection.push(st.clone());
                }
            }
        }

        // Finalize groups and renameability.
        let n = self.bindings.len();
        let group: Vec<BindingId> = (0..n).map(|b| self.find(b)).collect();
        let mut group_demoted: HashSet<BindingId> = HashSet::new();
        for &b in self.demoted.keys() {
            group_demoted.insert(group[b]);
        }
        let bindings: Vec<Binding> = self
            .bindings
            .iter()
            .enumerate()
            .map(|(id, bb)| {
                let own = self.demoted.get(&id).copied();
                let demotion = own.or_else(|| group_demoted.contains(&group[id]).then_some(Demotion::Group));
                let mut occurrences = bb.occurrences.clone();
                occurrences.sort();
                occurrences.dedup();
                Binding {
                    id,
                    name: bb.name.clone(),
                    kind: bb.kind.unwrap_or(match self.w.scopes[bb.scope].kind {
                        ScopeKind::Module => BindingKind::GlobalVar,
                        ScopeKind::Class => BindingKind::AttributeSlot,
                        _ => BindingKind::Local,
                    }),
                    scope_id: bb.scope,
                    renameable: demotion.is_none(),
                    demotion,
                    occurrences,
                    definition: bb.definition,
                    defined_in_tests: bb.defined_in_tests,
                }
            })
            .collect();
        let scopes = self
            .w
            .scopes
            .iter()
            .enumerate()
            .map(|(id, s)| Scope {
                id,
                kind: s.kind,
                parent: s.parent,
                name: s.name.clone(),
            })
            .collect();
        for r in &reflection {
            self.resolution.entry(r.occurrence).or_insert(Resolution::External);
        }
        Ok(ScopeGraph {
            scopes,
            bindings,
            resolution: self.resolution,
            reflection,
            names_in_use: BTreeSet::new(),
            group,
        })
    }

    fn occ_name<'a>(&self, names: &'a [NameEvent], occ: OccRef) -> Option<&'a str> {
        names.iter().find(|e| e.occ == occ).map(|e| e.name.as_str())
    }

    fn is_class(&self, b: BindingId) -> bool {
        self.bindings[b].kind == Some(BindingKind::Class) && self.def_scopes.contains_key(&b)
    }

    fn is_instance_var(&self, b: BindingId) -> bool {
        let bb = &self.bindings[b];
        matches!(bb.kind, Some(BindingKind::Local) | Some(BindingKind::GlobalVar))
            && bb.stores > 0
            && bb.stores == bb.instance_stores
    }

    fn classify(&self, r: &RecvSyntax) -> Recv {
        match r {
            RecvSyntax::Super => Recv::Unit,
            RecvSyntax::Literal => Recv::External,
            RecvSyntax::Other => Recv::Unknown,
            RecvSyntax::Name(occ) => match self.resolution.get(occ) {
                Some(Resolution::Binding(b)) => {
                    let b = *b;
                    if self.bindings[b].kind == Some(BindingKind::ImportAlias) {
                        Recv::External
                    } else if self.is_class(b) || self.self_params.contains_key(&b) || self.is_instance_var(b) {
                        Recv::Unit
                    } else {
                        Recv::Unknown
                    }
                }
                _ => Recv::External,
            },
            RecvSyntax::CallName(occ) => match self.resolution.get(occ) {
                Some(Resolution::Binding(b)) => {
                    if self.bindings[*b].kind == Some(BindingKind::ImportAlias) {
                        Recv::External
                    } else if self.is_class(*b) {
                        Recv::Unit
                    } else {
                        Recv::Unknown
                    }
                }
                _ => Recv::External,
            },
            RecvSyntax::Chain(root) => match self.resolution.get(root) {
                Some(Resolution::Binding(b)) if self.bindings[*b].kind != Some(BindingKind::ImportAlias) => {
                    Recv::Unknown
                }
                _ => Recv::External,
            },
        }
    }

    /// Class scope a receiver is statically known to belong to.
    fn receiver_class(&self, r: &RecvSyntax) -> Option<ScopeId> {
        match r {
            RecvSyntax::Name(occ) => match self.resolution.get(occ) {
                Some(Resolution::Binding(b)) => self.self_params.get(b).copied(),
                _ => None,
            },
            _ => None,
        }
    }

    /// Collects literal names passed to reflection builtins. Returns true
    /// when a name argument is computed at run time.
    fn call_reflection(&self, c: &CallEvent, out: &mut Vec<ReflectionUse>) -> bool {
        let (name, external) = match &c.callee {
            CalleeSyntax::Name(occ, n) => (n.as_str(), !matches!(self.resolution.get(occ), Some(Resolution::Binding(_)))),
            CalleeSyntax::Attr { recv, attr } => (attr.as_str(), self.classify(recv) == Recv::External),
            CalleeSyntax::Other => return false,
        };
        if !external {
            return false;
        }
        let wanted: &[usize] = match name {
            "getattr" | "setattr" | "hasattr" | "delattr" => &[1],
            "attrgetter" => &[0, 1, 2, 3, 4, 5, 6, 7],
            "methodcaller" => &[0],
            _ => return false,
        };
        for (pos, n, occ) in &c.str_args {
            if wanted.contains(pos) {
                out.push(ReflectionUse {
                    name: n.clone(),
                    occurrence: *occ,
                });
            }
        }
        c.other_args.iter().any(|p| wanted.contains(p))
    }

    fn init_targets(
        &self,
        class_scopes: &[ScopeId],
        classes: &[ClassData],
        class_by_scope: &HashMap<ScopeId, usize>,
        unit_bases: &[Vec<ScopeId>],
        functions: &mut Vec<ScopeId>,
        fields: &mut Vec<ScopeId>,
        seen: &mut HashSet<ScopeId>,
    ) {
        for &cs in class_scopes {
            if !seen.insert(cs) {
                continue;
            }
            if let Some(&init) = self.by_scope_name.get(&(cs, "__init__".to_string())) {
                if let Some(fs) = self.def_scopes.get(&init) {
                    functions.extend(fs.iter().copied());
                    continue;
                }
            }
            let Some(&ci) = class_by_scope.get(&cs) else {
                continue;
            };
            if classes[ci].dataclass {
                fields.push(cs);
            }
            self.init_targets(&unit_bases[ci], classes, class_by_scope, unit_bases, functions, fields, seen);
        }
    }

    fn callee_targets(
        &self,
        c: &CallEvent,
        members: &BTreeMap<String, Vec<BindingId>>,
        classes: &[ClassData],
        class_by_scope: &HashMap<ScopeId, usize>,
        unit_bases: &[Vec<ScopeId>],
    ) -> Callee {
        let mut functions = Vec::new();
        let mut fields = Vec::new();
        let mut seen = HashSet::new();
        let mut add_binding = |b: BindingId, functions: &mut Vec<ScopeId>, fields: &mut Vec<ScopeId>| -> bool {
            match self.bindings[b].kind {
                Some(BindingKind::Function) | Some(BindingKind::Method) => {
                    functions.extend(self.def_scopes.get(&b).into_iter().flatten().copied());
                    true
                }
                Some(BindingKind::Class) if self.def_scopes.contains_key(&b) => {
                    self.init_targets(
                        &self.def_scopes[&b],
                        classes,
                        class_by_scope,
                        unit_bases,
                        functions,
                        fields,
                        &mut seen,
                    );
                    true
                }
                _ => false,
            }
        };
        match &c.callee {
            CalleeSyntax::Name(occ, _) => match self.resolution.get(occ) {
                Some(Resolution::Binding(b)) => {
                    if self.bindings[*b].kind == Some(BindingKind::ImportAlias) {
                        Callee::External
                    } else if add_binding(*b, &mut functions, &mut fields) {
                        Callee::Known { functions, fields }
                    } else {
                        Callee::Unknown
                    }
                }
                _ => Callee::External,
            },
            CalleeSyntax::Attr { recv, attr } => {
                let r = self.classify(recv);
                if r == Recv::External {
                    return Callee::External;
                }
                if let Some(ids) = members.get(attr) {
                    let mut all_known = true;
                    for &b in ids {
                        all_known &= add_binding(b, &mut functions, &mut fields);
                    }
                    if all_known {
                        Callee::Known { functions, fields }
                    } else {
                        Callee::Unknown
                    }
                } else if r == Recv::Unknown && data::external_attrs().contains(attr.as_str()) {
                    Callee::External
                } else {
                    Callee::Unknown
                }
            }
            CalleeSyntax::Other => Callee::Unknown,
        }
    }
}

enum Callee {
    Known {
        functions: Vec<ScopeId>,
        fields: Vec<ScopeId>,
    },
    Unknown,
    External,
}

#[cfg(test)]
mod tests;
