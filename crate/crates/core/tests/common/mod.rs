#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use nameobf::datasetio::{ingest, Format};
use nameobf::frontend::{parse, SourceUnit};
use nameobf::rewrite::{Analyzed, RewriteOptions};
use nameobf::scopes::{analyze_unit, renameable_set, OccRef, Part, RenamePolicy, Resolution};
use nameobf::strategies::{stem_disjoint, Lexicon, NameMap, Strategy, StrategyTag};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

pub fn corpus() -> Vec<SourceUnit> {
    ingest(&corpus_dir(), Format::PlainDir).expect("bundled corpus").units
}

pub fn python() -> Option<&'static str> {
    let ok = Command::new("python3")
        .arg("-c")
        .arg("import sys; sys.exit(0 if sys.version_info >= (3, 10) else 1)")
        .status()
        .is_ok_and(|s| s.success());
    ok.then_some("python3")
}

/// Run a Python script with JSON on stdin and parse its JSON stdout.
pub fn run_python(script: &str, input: &serde_json::Value) -> serde_json::Value {
    let mut child = Command::new("python3")
        .arg("-c")
        .arg(script)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn python3");
    child
        .stdin
        .take()
        .unwrap()
        .write_all(input.to_string().as_bytes())
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(
        out.status.success(),
        "python oracle failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("oracle output")
}

/// Every Python 3.10 keyword, hard and soft, spelled out independently.
pub const PY_KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue", "def", "del",
    "elif", "else", "except", "finally", "for", "from", "global", "if", "import", "in", "is", "lambda",
    "nonlocal", "not", "or", "pass", "raise", "return", "try", "while", "with", "yield", "match", "case",
];

pub fn valid_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    let head = chars.next().is_some_and(|c| c == '_' || c.is_ascii_alphabetic());
    head && chars.all(|c| c == '_' || c.is_ascii_alphanumeric()) && !PY_KEYWORDS.contains(&s)
}

// ----- random scope configurations ------------------------------------------

/// Random Python module exercising nested functions, classes, comprehensions,
/// lambdas, `global`, `nonlocal`, shadowed builtins and names that look like
/// generator output. At most one scope-creating construct per line.
pub fn scope_program(seed: u64) -> String {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        out: String::new(),
        pool: name_pool(),
    };
    let n = g.rng.random_range(2..6);
    let mut frame = Frame::default();
    for _ in 0..n {
        g.stmt(&mut frame, 0, Ctx::Module);
    }
    g.out
}

fn name_pool() -> Vec<String> {
    let mut pool: Vec<String> = [
        "a", "b", "n", "x", "y", "item", "total", "value", "data", "count", "result", "key", "len", "sum", "var1",
        "var2", "function1", "class1", "method1", "param1",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for lex in [Lexicon::crossdomain(), Lexicon::misleading()] {
        pool.extend(lex.words().into_iter().take(3).map(str::to_string));
    }
    pool
}

#[derive(Clone, Copy, PartialEq)]
enum Ctx {
    Module,
    Function,
    Class,
}

#[derive(Clone, Default)]
struct Frame {
    /// Names bound so far in this scope.
    bound: Vec<String>,
    /// Names declared global here.
    globals: Vec<String>,
    /// Locals of enclosing function scopes, nearest first.
    enclosing: Vec<Vec<String>>,
}

struct Gen {
    rng: ChaCha8Rng,
    out: String,
    pool: Vec<String>,
}

impl Gen {
    fn pick(&mut self) -> String {
        let i = self.rng.random_range(0..self.pool.len());
        self.pool[i].clone()
    }

    fn line(&mut self, depth: usize, text: &str) {
        for _ in 0..depth {
            self.out.push_str("    ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    /// A name to read: usually something bound, sometimes anything.
    fn read(&mut self, f: &Frame) -> String {
        let visible: Vec<&String> = f.bound.iter().chain(f.enclosing.iter().flatten()).collect();
        if !visible.is_empty() && self.rng.random_bool(0.7) {
            visible[self.rng.random_range(0..visible.len())].clone()
        } else {
            self.pick()
        }
    }

    fn expr(&mut self, f: &Frame) -> String {
        match self.rng.random_range(0..4) {
            0 => self.rng.random_range(0..10).to_string(),
            1 => format!("{} + {}", self.read(f), self.read(f)),
            2 => format!("{}({})", self.read(f), self.read(f)),
            _ => self.read(f),
        }
    }

    fn bind(&mut self, f: &mut Frame, name: &str) {
        if !f.bound.iter().any(|b| b == name) {
            f.bound.push(name.to_string());
        }
    }

    fn target(&mut self, f: &mut Frame) -> String {
        let t = self.pick();
        self.bind(f, &t);
        t
    }

    fn stmt(&mut self, f: &mut Frame, depth: usize, ctx: Ctx) {
        let nested = depth < 3;
        let roll = self.rng.random_range(0..10);
        match roll {
            0 | 1 => {
                let e = self.expr(f);
                let t = self.target(f);
                self.line(depth, &format!("{t} = {e}"));
            }
            2 => {
                let v = self.pick();
                let r = self.read(f);
                let t = self.target(f);
                self.line(depth, &format!("{t} = [{v} + {r} for {v} in range(3) if {v}]"));
            }
            3 => {
                let p = self.pick();
                let r = self.read(f);
                let t = self.target(f);
                self.line(depth, &format!("{t} = lambda {p}: {p} + {r}"));
            }
            4 => {
                let r = self.read(f);
                let v = self.target(f);
                self.line(depth, &format!("for {v} in range({r}):"));
                let e = self.expr(f);
                let t = self.target(f);
                self.line(depth + 1, &format!("{t} = {e}"));
            }
            5 => {
                let e = self.expr(f);
                self.line(depth, "try:");
                let t = self.target(f);
                self.line(depth + 1, &format!("{t} = {e}"));
                let h = self.target(f);
                self.line(depth, &format!("except ValueError as {h}:"));
                let r = self.read(f);
                self.line(depth + 1, &format!("print({h}, {r})"));
            }
            6..=8 if nested => self.function(f, depth, ctx),
            9 if nested && ctx != Ctx::Class => self.class(f, depth, ctx),
            _ => {
                let e = self.expr(f);
                self.line(depth, &format!("print({e})"));
            }
        }
    }

    fn function(&mut self, f: &mut Frame, depth: usize, ctx: Ctx) {
        let name = self.target(f);
        let mut params: Vec<String> = Vec::new();
        if ctx == Ctx::Class {
            params.push("self".into());
        }
        for _ in 0..self.rng.random_range(0..3) {
            let p = self.pick();
            if !params.contains(&p) {
                params.push(p);
            }
        }
        let mut inner = Frame {
            bound: params.clone(),
            globals: Vec::new(),
            enclosing: Vec::new(),
        };
        // Class bodies are not visible from their methods.
        if ctx == Ctx::Function {
            inner.enclosing.push(function_locals(f));
        }
        inner.enclosing.extend(f.enclosing.iter().cloned());
        self.line(depth, &format!("def {name}({}):", params.join(", ")));
        if self.rng.random_bool(0.3) {
            let g = self.pick();
            if !params.contains(&g) {
                self.line(depth + 1, &format!("global {g}"));
                inner.globals.push(g.clone());
                let v = self.rng.random_range(0..5);
                self.line(depth + 1, &format!("{g} = {v}"));
            }
        }
        if let Some(outer) = inner.enclosing.first().filter(|o| !o.is_empty()).cloned() {
            if ctx == Ctx::Function && self.rng.random_bool(0.4) {
                let v = outer[self.rng.random_range(0..outer.len())].clone();
                if !params.contains(&v) && !inner.globals.contains(&v) {
                    self.line(depth + 1, &format!("nonlocal {v}"));
                    self.line(depth + 1, &format!("{v} = {v} + 1"));
                }
            }
        }
        if ctx == Ctx::Class && self.rng.random_bool(0.5) {
            let a = self.pick();
            let e = self.expr(&inner);
            self.line(depth + 1, &format!("self.{a} = {e}"));
        }
        for _ in 0..self.rng.random_range(1..4) {
            self.stmt(&mut inner, depth + 1, Ctx::Function);
        }
        let e = self.expr(&inner);
        self.line(depth + 1, &format!("return {e}"));
    }

    fn class(&mut self, f: &mut Frame, depth: usize, ctx: Ctx) {
        let name = self.target(f);
        self.line(depth, &format!("class {name}:"));
        let mut body = Frame::default();
        if ctx == Ctx::Function {
            body.enclosing.push(function_locals(f));
        }
        body.enclosing.extend(f.enclosing.iter().cloned());
        let e = self.expr(f);
        let t = self.target(&mut body);
        self.line(depth + 1, &format!("{t} = {e}"));
        for _ in 0..self.rng.random_range(1..3) {
            self.function(&mut body, depth + 1, Ctx::Class);
        }
    }
}

fn function_locals(f: &Frame) -> Vec<String> {
    f.bound.iter().filter(|b| !f.globals.contains(b)).cloned().collect()
}

// ----- capture checks -------------------------------------------------------

fn words(source: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut cur = String::new();
    for c in source.chars().chain(std::iter::once(' ')) {
        if c == '_' || c.is_ascii_alphanumeric() {
            cur.push(c);
        } else if !cur.is_empty() {
            if !cur.starts_with(|d: char| d.is_ascii_digit()) {
                out.insert(cur.clone());
            }
            cur.clear();
        }
    }
    out
}

/// Lowercase words of an identifier, split on underscores, digits and humps.
fn name_words(name: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut prev_lower = false;
    for c in name.chars() {
        let boundary = c == '_' || c.is_ascii_digit() || (c.is_ascii_uppercase() && prev_lower);
        if boundary && !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
        if c.is_ascii_alphabetic() {
            cur.push(c.to_ascii_lowercase());
        }
        prev_lower = c.is_ascii_lowercase();
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn shares_word(a: &str, b: &str) -> bool {
    let wb = name_words(b);
    name_words(a).iter().any(|x| {
        wb.iter().any(|y| {
            x == y || (x.len() >= 3 && (*y == format!("{x}s") || *x == format!("{y}s")))
        })
    })
}

pub fn check_map(unit: &SourceUnit, an: &Analyzed, map: &NameMap, tag: StrategyTag) -> Result<(), String> {
    let present = words(&unit.code);
    let renameable: BTreeSet<usize> = renameable_set(&an.graph, map.policy).into_iter().collect();
    let mut by_group: BTreeMap<usize, &str> = BTreeMap::new();
    let mut owner: BTreeMap<&str, usize> = BTreeMap::new();
    for (&b, e) in &map.entries {
        if !renameable.contains(&b) {
            return Err(format!("{} renamed but not renameable", e.original));
        }
        if !valid_identifier(&e.renamed) {
            return Err(format!("{} -> {:?} is not a usable identifier", e.original, e.renamed));
        }
        if present.contains(&e.renamed) {
            return Err(format!("{} -> {} reuses a name already in the program", e.original, e.renamed));
        }
        let g = an.graph.group_of(b);
        if *by_group.entry(g).or_insert(&e.renamed) != e.renamed {
            return Err(format!("group of {} split across names", e.original));
        }
        if *owner.entry(&e.renamed).or_insert(g) != g {
            return Err(format!("{} assigned to two unrelated bindings", e.renamed));
        }
        if tag == StrategyTag::Misleading && (!stem_disjoint(&e.original, &e.renamed) || shares_word(&e.original, &e.renamed)) {
            return Err(format!("misleading {} -> {} shares a stem", e.original, e.renamed));
        }
    }
    for &b in &renameable {
        if !map.entries.contains_key(&b) {
            return Err(format!("{} left unrenamed", an.graph.bindings[b].name));
        }
    }
    Ok(())
}

/// Re-analyze the renamed code: each occurrence must resolve to the binding
/// matching its original, one to one, and unresolved names must be untouched.
pub fn check_reresolution(an: &Analyzed, renamed: &str) -> Result<(), String> {
    let tree = parse(renamed).map_err(|e| format!("renamed code does not parse: {e}"))?;
    let graph = analyze_unit(&tree, None).map_err(|e| e.to_string())?;
    if tree.occurrences.len() != an.code.occurrences.len() {
        return Err("occurrence count changed".into());
    }
    let mut fwd = BTreeMap::new();
    let mut back = BTreeMap::new();
    for (i, (o, n)) in an.code.occurrences.iter().zip(&tree.occurrences).enumerate() {
        let at = OccRef { part: Part::Code, index: i };
        match (an.graph.resolution.get(&at), graph.resolution.get(&at)) {
            (Some(Resolution::Binding(a)), Some(Resolution::Binding(b))) => {
                let (a, b) = (an.graph.group_of(*a), graph.group_of(*b));
                if *fwd.entry(a).or_insert(b) != b || *back.entry(b).or_insert(a) != a {
                    return Err(format!("{} at offset {} resolves elsewhere as {}", o.name, o.span.start, n.name));
                }
            }
            (Some(Resolution::External), Some(Resolution::External)) | (None, None) => {
                if o.name != n.name {
                    return Err(format!("unbound {} became {}", o.name, n.name));
                }
            }
            (a, b) => return Err(format!("{} resolved as {a:?}, {} as {b:?}", o.name, n.name)),
        }
    }
    Ok(())
}

pub fn rename_all(seed: u64) -> Result<Vec<(String, String)>, String> {
    let unit = SourceUnit::new(format!("gen{seed}"), scope_program(seed));
    let an = Analyzed::new(&unit).map_err(|e| format!("{e}\n{}", unit.code))?;
    let mut out = Vec::new();
    for tag in StrategyTag::ALL {
        let map = an
            .build_map(&Strategy::new(tag, seed ^ 0x9e37), RenamePolicy::default())
            .map_err(|e| e.to_string())?;
        check_map(&unit, &an, &map, tag).map_err(|e| format!("{tag}: {e}\n{}", unit.code))?;
        let new = an.rewrite(&map, &RewriteOptions::default()).map_err(|e| e.to_string())?.unit.code;
        check_reresolution(&an, &new).map_err(|e| format!("{tag}: {e}\n{}\n---\n{new}", unit.code))?;
        out.push((unit.code.clone(), new));
    }
    Ok(out)
}

// ----- Python oracles -------------------------------------------------------

/// Resolves every name site of two structurally identical modules through
/// `symtable` and reports whether the renaming is a capture-free bijection.
/// Input: list of {"orig", "new"}; output: list of error strings (or null).
pub const RESOLUTION_ORACLE: &str = r#"
import ast, json, symtable, sys

def scope_tables(src):
    top = symtable.symtable(src, "<unit>", "exec")
    by_line, order, declared = {}, {}, set()
    def walk(t):
        order[t.get_id()] = len(order)
        for s in t.get_symbols():
            if s.is_declared_global() and s.is_assigned():
                declared.add(s.get_name())
        for c in t.get_children():
            by_line.setdefault(c.get_lineno(), []).append(c)
            walk(c)
    walk(top)
    return top, by_line, order, declared

def owns(t, name):
    try:
        s = t.lookup(name)
    except KeyError:
        return False
    return (s.is_local() or s.is_parameter() or s.is_assigned()) and not (s.is_global() or s.is_free())

def bound_at_module(top, declared, name):
    if name in declared:
        return True
    try:
        s = top.lookup(name)
    except KeyError:
        return False
    return s.is_assigned() or s.is_imported() or s.is_namespace()

def sites(src):
    """(name, binding) for every name site, binding keyed by scope position."""
    top, by_line, order, declared = scope_tables(src)
    used, out = {}, []

    def table_for(node):
        k = used.get(node.lineno, 0)
        used[node.lineno] = k + 1
        return by_line[node.lineno][k]

    def resolve(name, chain):
        inner = chain[0]
        s = inner.lookup(name)
        if inner.get_type() == "module" or s.is_global():
            return ("module", bound_at_module(top, declared, name))
        if s.is_free():
            for t in chain[1:]:
                if t.get_type() == "function" and owns(t, name):
                    return ("scope", order[t.get_id()])
            return ("unresolved", None)
        return ("scope", order[inner.get_id()])

    def site(name, chain):
        out.append((name, resolve(name, chain)))

    def visit(node, chain):
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)):
            site(node.name, chain)
            for d in node.decorator_list:
                visit(d, chain)
            if isinstance(node, ast.ClassDef):
                for b in node.bases:
                    visit(b, chain)
            else:
                for d in node.args.defaults + [d for d in node.args.kw_defaults if d is not None]:
                    visit(d, chain)
            inner = [table_for(node)] + chain
            if not isinstance(node, ast.ClassDef):
                for a in node.args.posonlyargs + node.args.args + node.args.kwonlyargs:
                    site(a.arg, inner)
            for s in node.body:
                visit(s, inner)
        elif isinstance(node, ast.Lambda):
            inner = [table_for(node)] + chain
            for a in node.args.args:
                site(a.arg, inner)
            visit(node.body, inner)
        elif isinstance(node, (ast.ListComp, ast.SetComp, ast.GeneratorExp, ast.DictComp)):
            gens = node.generators
            visit(gens[0].iter, chain)
            inner = [table_for(node)] + chain
            for i, g in enumerate(gens):
                visit(g.target, inner)
                if i:
                    visit(g.iter, inner)
                for c in g.ifs:
                    visit(c, inner)
            if isinstance(node, ast.DictComp):
                visit(node.key, inner)
                visit(node.value, inner)
            else:
                visit(node.elt, inner)
        else:
            if isinstance(node, ast.Name):
                site(node.id, chain)
            elif isinstance(node, (ast.Global, ast.Nonlocal)):
                for n in node.names:
                    site(n, chain)
            elif isinstance(node, ast.ExceptHandler) and node.name:
                site(node.name, chain)
            for child in ast.iter_child_nodes(node):
                visit(child, chain)

    for s in ast.parse(src).body:
        visit(s, [top])
    return out

def check(orig, new):
    try:
        compile(new, "<renamed>", "exec")
    except SyntaxError as e:
        return "renamed code does not compile: %s" % e
    a, b = sites(orig), sites(new)
    if len(a) != len(b):
        return "%d name sites became %d" % (len(a), len(b))
    fwd, back = {}, {}
    for (n1, r1), (n2, r2) in zip(a, b):
        if r1 != r2:
            return "%s resolves to %s but %s resolves to %s" % (n1, r1, n2, r2)
        if r1 == ("module", False) and n1 != n2:
            return "external name %s became %s" % (n1, n2)
        k1, k2 = (r1, n1), (r2, n2)
        if fwd.setdefault(k1, k2) != k2:
            return "%s renamed to both %s and %s" % (n1, fwd[k1][1], n2)
        if back.setdefault(k2, k1) != k1:
            return "%s merges %s and %s" % (n2, back[k2][1], n1)
    return None

pairs = json.load(sys.stdin)
print(json.dumps([check(p["orig"], p["new"]) for p in pairs]))
"#;
