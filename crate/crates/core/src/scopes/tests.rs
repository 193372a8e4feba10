use super::*;
use crate::frontend::parse;

fn graph(src: &str) -> (SyntaxTree, ScopeGraph) {
    let t = parse(src).unwrap();
    let g = analyze(&t).unwrap();
    (t, g)
}

fn find<'a>(g: &'a ScopeGraph, name: &str) -> Vec<&'a Binding> {
    g.bindings.iter().filter(|b| b.name == name).collect()
}

fn one<'a>(g: &'a ScopeGraph, name: &str) -> &'a Binding {
    let v = find(g, name);
    assert_eq!(v.len(), 1, "bindings named {name}: {v:?}");
    v[0]
}

fn renamed(g: &ScopeGraph, policy: RenamePolicy) -> BTreeSet<&str> {
    renameable_set(g, policy)
        .into_iter()
        .map(|b| g.bindings[b].name.as_str())
        .collect()
}

fn check_invariants(t: &SyntaxTree, g: &ScopeGraph) {
    assert_eq!(g.scopes.iter().filter(|s| s.parent.is_none()).count(), 1);
    assert_eq!(g.scopes[0].kind, ScopeKind::Module);
    let mut seen = HashSet::new();
    for b in &g.bindings {
        assert!(seen.insert((b.scope_id, b.name.clone())), "duplicate {}", b.name);
        for o in &b.occurrences {
            assert_eq!(t.occurrences[o.index].name, b.name);
        }
    }
    for (i, o) in t.occurrences.iter().enumerate() {
        if matches!(o.role, Role::Definition | Role::Reference) {
            let r = OccRef { part: Part::Code, index: i };
            assert!(g.resolution.contains_key(&r), "unresolved {} at {}", o.name, o.span);
        }
    }
}

use crate::frontend::Role;

#[test]
fn minimal_function() {
    let (t, g) = graph("def f(x): return x\n");
    check_invariants(&t, &g);
    assert_eq!(g.bindings.len(), 2);
    assert_eq!(one(&g, "f").kind, BindingKind::Function);
    let x = one(&g, "x");
    assert_eq!(x.kind, BindingKind::Parameter);
    let use_site = OccRef { part: Part::Code, index: 2 };
    assert_eq!(t.occurrences[2].role, Role::Reference);
    assert_eq!(g.resolve(use_site), Some(x.id));
}

const PALINDROME: &str = "\
def makeSmallestPalindrome(s: str) -> str:
    s = list(s)
    n = len(s)
    for i in range(n):
        c = min(s[i], s[n - 1 - i])
        s[i] = c
        s[n - 1 - i] = c
    return \"\".join(s)
";

#[test]
fn palindrome_listing() {
    let (t, g) = graph(PALINDROME);
    check_invariants(&t, &g);
    assert_eq!(one(&g, "makeSmallestPalindrome").kind, BindingKind::Function);
    assert_eq!(one(&g, "s").kind, BindingKind::Parameter);
    assert_eq!(one(&g, "n").kind, BindingKind::Local);
    assert_eq!(one(&g, "c").kind, BindingKind::Local);
    assert_eq!(one(&g, "i").kind, BindingKind::Local);
    for name in ["list", "len", "range", "min", "str", "join"] {
        assert!(find(&g, name).is_empty(), "{name} bound");
        for (i, o) in t.occurrences.iter().enumerate() {
            if o.name == name {
                let r = OccRef { part: Part::Code, index: i };
                assert_eq!(g.resolution[&r], Resolution::External);
            }
        }
    }
    assert_eq!(
        renamed(&g, RenamePolicy::default()),
        ["c", "i", "makeSmallestPalindrome", "n", "s"].into_iter().collect()
    );
}

const MINESWEEPER: &str = "\
class MinesweeperGame:
    def __init__(self, n, k):
        self.n = n
        self.k = k
        self.minesweeper_map = self.generate_mine_sweeper_map()
        self.player_map = [['-'] * n for _ in range(n)]
        self.score = 0

    def generate_mine_sweeper_map(self):
        return [[0] * self.n for _ in range(self.n)]

    def check_won(self, map):
        for i in range(self.n):
            for j in range(self.n):
                if map[i][j] == '-' and self.minesweeper_map[i][j] != 'X':
                    return False
        return True

    def sweep(self, x, y):
        if self.minesweeper_map[x][y] == 'X':
            return False
        self.player_map[x][y] = self.minesweeper_map[x][y]
        self.score += 1
        if self.check_won(self.player_map):
            return True
        return self.player_map
";

#[test]
fn minesweeper_members() {
    let (t, g) = graph(MINESWEEPER);
    check_invariants(&t, &g);
    let class_scope = g.scopes.iter().find(|s| s.name == "MinesweeperGame").unwrap().id;
    for m in ["sweep", "check_won", "generate_mine_sweeper_map"] {
        let b = one(&g, m);
        assert_eq!(b.kind, BindingKind::Method);
        assert_eq!(b.scope_id, class_scope);
        assert!(b.renameable);
    }
    for a in ["n", "k", "minesweeper_map", "player_map", "score"] {
        let slot = g
            .bindings
            .iter()
            .find(|b| b.name == a && b.scope_id == class_scope)
            .unwrap();
        assert_eq!(slot.kind, BindingKind::AttributeSlot);
    }
    let selves = find(&g, "self");
    assert_eq!(selves.len(), 4);
    assert!(selves.iter().all(|b| !b.renameable && b.demotion == Some(Demotion::Receiver)));
    assert!(!one(&g, "__init__").renameable);
    // Every `self.player_map` access is one slot binding.
    let slot = g
        .bindings
        .iter()
        .find(|b| b.name == "player_map" && b.scope_id == class_scope)
        .unwrap();
    assert_eq!(slot.occurrences.len(), 4);
}

#[test]
fn external_modules() {
    let (t, g) = graph("import math\ndef hyp(a, b):\n    return math.sqrt(a * a + b * b)\n");
    check_invariants(&t, &g);
    let names = renamed(&g, RenamePolicy::default());
    assert!(!names.contains("math"));
    assert!(!names.contains("sqrt"));
    assert_eq!(names, ["a", "b", "hyp"].into_iter().collect());
}

#[test]
fn dunder_excluded_push_included() {
    let src = "\
class Stack:
    def __init__(self):
        self.items = []
    def push(self, item):
        self.items.append(item)
s = Stack()
s.push(1)
";
    let (_, g) = graph(src);
    let names = renamed(&g, RenamePolicy::default());
    assert!(!names.contains("__init__"));
    assert!(names.contains("push"));
    assert!(names.contains("items"));
    assert!(!names.contains("append"));
}

#[test]
fn reflection_policy() {
    let src = format!("{MINESWEEPER}g = MinesweeperGame(3, 1)\nf = getattr(g, \"sweep\")\n");
    let (_, g) = graph(&src);
    assert_eq!(g.reflection.len(), 1);
    let strict = renamed(&g, RenamePolicy::default());
    assert!(!strict.contains("sweep"));
    assert!(strict.contains("check_won"));
    let rewrite = RenamePolicy {
        reflection: ReflectionPolicy::RewriteLiterals,
        rename_attributes: true,
    };
    assert!(renamed(&g, rewrite).contains("sweep"));
    let targets = g.literal_targets(rewrite);
    assert_eq!(targets.len(), 1);
    assert_eq!(g.bindings[targets[0].1].name, "sweep");
    assert!(g.literal_targets(RenamePolicy::default()).is_empty());
}

#[test]
fn computed_reflection_names() {
    let src = "\
class Item:
    def __init__(self, price, label):
        self.price = price
        self.label = label

def show(item, field):
    return getattr(item, field)

print(show(Item(1, 'x'), 'price'), 'label')
";
    let (_, g) = graph(src);
    let names: BTreeSet<&str> = g.reflection.iter().map(|r| r.name.as_str()).collect();
    assert_eq!(names, BTreeSet::from(["label", "price"]));
    let strict = renamed(&g, RenamePolicy::default());
    assert!(!strict.contains("price") && !strict.contains("label"));
    assert!(strict.contains("Item"));

    let literal_only = "class Item:\n    def __init__(self):\n        self.price = 1\n\nx = 'price'\n";
    let (_, g) = graph(literal_only);
    assert!(g.reflection.is_empty());
    assert!(renamed(&g, RenamePolicy::default()).contains("price"));
}

#[test]
fn attribute_policy_flag() {
    let (_, g) = graph(MINESWEEPER);
    let off = RenamePolicy {
        reflection: ReflectionPolicy::Strict,
        rename_attributes: false,
    };
    let names = renamed(&g, off);
    assert!(!names.contains("score"));
    assert!(names.contains("sweep"));
}

#[test]
fn global_and_nonlocal() {
    let src = "\
count = 0
def bump():
    global count
    count += 1
def outer():
    total = 0
    def inner():
        nonlocal total
        total += 1
    inner()
    return total
";
    let (t, g) = graph(src);
    check_invariants(&t, &g);
    let count = one(&g, "count");
    assert_eq!(count.kind, BindingKind::GlobalVar);
    assert_eq!(count.scope_id, 0);
    assert_eq!(count.occurrences.len(), 3);
    let total = one(&g, "total");
    assert_eq!(total.kind, BindingKind::Local);
    assert_eq!(total.occurrences.len(), 4);
    assert!(parse("def f():\n    nonlocal q\n").ok().map(|t| analyze(&t)).unwrap().is_err());
}

#[test]
fn star_import_is_an_error() {
    let t = parse("from os import *\n").unwrap();
    assert!(matches!(analyze(&t), Err(AnalysisError::StarImport { line: 1, .. })));
}

#[test]
fn class_scope_is_skipped_by_methods() {
    let src = "x = 1\nclass A:\n    x = 2\n    def f(self):\n        return x\n";
    let (t, g) = graph(src);
    let idx = t.occurrences.iter().rposition(|o| o.name == "x").unwrap();
    let b = g.resolve(OccRef { part: Part::Code, index: idx }).unwrap();
    assert_eq!(g.bindings[b].scope_id, 0);
}

#[test]
fn comprehension_scopes_and_walrus() {
    let src = "def f(xs):\n    ys = [y for x in xs if (y := x)]\n    return y, [x for x in ys]\n";
    let (t, g) = graph(src);
    check_invariants(&t, &g);
    let y = one(&g, "y");
    assert_eq!(y.kind, BindingKind::Local);
    let xs: Vec<_> = find(&g, "x");
    assert_eq!(xs.len(), 2);
    assert!(xs.iter().all(|b| b.kind == BindingKind::ComprehensionVar));
}

#[test]
fn keyword_arguments_follow_parameters() {
    let src = "\
def area(width, height=1):
    return width * height
class Box:
    def __init__(self, size):
        self.size = size
    def scale(self, factor):
        return self.size * factor
a = area(width=2, height=3)
b = Box(size=2).scale(factor=2)
c = sorted([3, 1], reverse=True)
";
    let (t, g) = graph(src);
    check_invariants(&t, &g);
    for (i, o) in t.occurrences.iter().enumerate() {
        if o.role == Role::KeywordArgument {
            let r = g.resolution[&OccRef { part: Part::Code, index: i }];
            if o.name == "reverse" {
                assert_eq!(r, Resolution::External);
            } else {
                let Resolution::Binding(b) = r else { panic!("{} external", o.name) };
                assert_eq!(g.bindings[b].kind, BindingKind::Parameter);
                assert_eq!(g.bindings[b].name, o.name);
            }
        }
    }
    let names = renamed(&g, RenamePolicy::default());
    for n in ["width", "height", "size", "factor"] {
        assert!(names.contains(n), "{n}");
    }
}

#[test]
fn unknown_callee_demotes_keyword_params() {
    let src = "def f(key):\n    return key\ndef g(h):\n    return h(key=1)\n";
    let (_, g) = graph(src);
    assert_eq!(one(&g, "key").demotion, Some(Demotion::UnresolvedKeyword));
}

#[test]
fn overrides_share_a_group() {
    let src = "\
class Shape:
    def area(self):
        return 0
class Square(Shape):
    def area(self):
        return 4
def total(shapes):
    return sum(s.area() for s in shapes)
";
    let (_, g) = graph(src);
    let areas = find(&g, "area");
    assert_eq!(areas.len(), 2);
    assert_eq!(g.group_of(areas[0].id), g.group_of(areas[1].id));
    assert!(areas.iter().all(|b| b.renameable));
}

#[test]
fn external_bases_and_receivers_demote() {
    let src = "\
class MyList(list):
    def total(self):
        return sum(self)
class Plain:
    def append(self, x):
        self.x = x
    def keys(self):
        return []
    def extend(self, more):
        return more
d = {}
d.keys()
[1].extend([2])
";
    let (_, g) = graph(src);
    assert_eq!(one(&g, "total").demotion, Some(Demotion::ExternalBase));
    assert_eq!(one(&g, "keys").demotion, Some(Demotion::ExternalAttributeName));
    assert_eq!(one(&g, "extend").demotion, Some(Demotion::ExternalReceiver));
    assert!(one(&g, "append").renameable);
}

#[test]
fn tests_share_the_module_scope() {
    let code = parse("def add(a, b):\n    return a + b\n").unwrap();
    let tests = parse("import unittest\nclass T(unittest.TestCase):\n    def test_add(self):\n        self.assertEqual(add(1, 2), 3)\n").unwrap();
    let g = analyze_unit(&code, Some(&tests)).unwrap();
    let add = one(&g, "add");
    assert!(add.renameable);
    assert!(add.occurrences.iter().any(|o| o.part == Part::Test));
    assert!(!one(&g, "test_add").renameable);
    assert!(!one(&g, "T").renameable);
}

#[test]
fn analysis_is_deterministic() {
    let (_, a) = graph(MINESWEEPER);
    let (_, b) = graph(MINESWEEPER);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}
