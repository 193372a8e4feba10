use super::*;
use crate::frontend::ast::Module;
use crate::frontend::{lexer, structurally_equal, EmitOptions};
use crate::scopes::ReflectionPolicy;

const GAME: &str = "\
class MinesweeperGame:
    def __init__(self, n):
        self.n = n
        self.board = [[0] * n for _ in range(n)]

    def sweep(self, x, y):
        self.board[x][y] = 1
        return self.check_won()

    def check_won(self):
        return all(all(c for c in row) for row in self.board)
";
const GAME_TESTS: &str = "\
import unittest
class GameTest(unittest.TestCase):
    def test_sweep(self):
        g = MinesweeperGame(n=1)
        self.assertTrue(g.sweep(0, 0))
";

fn unit() -> SourceUnit {
    SourceUnit::new("game", GAME).with_tests(GAME_TESTS)
}

/// Replace identifiers of `m` using `back` (new name -> old name).
fn unrename(m: &Module, back: &BTreeMap<String, String>) -> Module {
    struct Back<'a>(&'a BTreeMap<String, String>);
    impl VisitMut for Back<'_> {
        fn ident(&mut self, id: &mut Ident, _role: Role) {
            if let Some(o) = self.0.get(&id.name) {
                id.name = o.clone();
            }
        }
    }
    let mut m = m.clone();
    walk_module(&mut Back(back), &mut m);
    m
}

fn identifier_tokens(src: &str) -> Vec<String> {
    lexer::tokenize(src)
        .unwrap()
        .tokens
        .into_iter()
        .filter_map(|t| match t.tok {
            lexer::Tok::Name(n) => Some(n),
            _ => None,
        })
        .collect()
}

#[test]
fn variants_are_alpha_equivalent() {
    let record = obfuscate_all(&unit(), 7).unwrap();
    assert_eq!(record.variants.len(), 4);
    assert!(!record.is_partial());
    let original = parse(GAME).unwrap();
    for (tag, v) in &record.variants {
        assert_eq!(v.name_map.strategy.tag, *tag);
        let back: BTreeMap<String, String> =
            v.name_map.pairs().into_iter().map(|(o, n)| (n, o)).collect();
        assert_eq!(back.len(), v.name_map.pairs().len(), "new names are unique per original");
        let variant = parse(&v.code).unwrap();
        assert!(structurally_equal(&unrename(&variant.module, &back), &original.module), "{tag}");
        let tests = parse(v.test_code.as_deref().unwrap()).unwrap();
        let orig_tests = parse(GAME_TESTS).unwrap();
        assert!(structurally_equal(&unrename(&tests.module, &back), &orig_tests.module), "{tag}");
    }
}

#[test]
fn alpha_variant_renames_methods() {
    let record = obfuscate_all(&unit(), 0).unwrap();
    let alpha = &record.variants[&StrategyTag::Alpha];
    assert!(alpha.code.starts_with("class class1:"));
    assert!(alpha.code.contains("def method1(self, var"));
    assert!(alpha.test_code.as_deref().unwrap().contains("class1(var1=1)"));
    assert!(alpha.test_code.as_deref().unwrap().contains(".method1(0, 0)"));
}

#[test]
fn no_original_renameable_name_survives() {
    let a = Analyzed::new(&unit()).unwrap();
    for tag in StrategyTag::ALL {
        let map = a.build_map(&Strategy::new(tag, 4), RenamePolicy::default()).unwrap();
        let out = a.rewrite(&map, &RewriteOptions::default()).unwrap().unit;
        let renamed: HashSet<&str> = map.entries.values().map(|e| e.original.as_str()).collect();
        // Names also spelled by bindings that keep their name may legitimately remain.
        let kept: HashSet<&str> = a
            .graph
            .bindings
            .iter()
            .filter(|b| !map.entries.contains_key(&b.id))
            .map(|b| b.name.as_str())
            .collect();
        for src in [&out.code, out.test_code.as_ref().unwrap()] {
            for tok in identifier_tokens(src) {
                assert!(
                    !renamed.contains(tok.as_str()) || kept.contains(tok.as_str()),
                    "{tag}: '{tok}' survived in\n{src}"
                );
            }
        }
    }
}

#[test]
fn empty_map_is_identity() {
    let a = Analyzed::new(&unit()).unwrap();
    let map = NameMap::empty("game", Strategy::new(StrategyTag::Alpha, 0), RenamePolicy::default());
    let out = a.rewrite(&map, &RewriteOptions::default()).unwrap().unit;
    assert!(structurally_equal(&parse(&out.code).unwrap().module, &a.code.module));
    // Obfuscating the output again with an empty map changes nothing.
    let full = obfuscate(&unit(), &a.build_map(&Strategy::new(StrategyTag::Ambiguity, 2), RenamePolicy::default()).unwrap()).unwrap();
    let again = obfuscate(&full, &NameMap::empty("game", Strategy::new(StrategyTag::Alpha, 0), RenamePolicy::default())).unwrap();
    assert_eq!(full.code, again.code);
    assert_eq!(full.test_code, again.test_code);
}

#[test]
fn zero_renameable_bindings() {
    let u = SourceUnit::new("noop", "import math\nprint(math.sqrt(len([1, 2])))\n");
    let record = obfuscate_all(&u, 1).unwrap();
    let canonical = emit(&parse(&u.code).unwrap(), EmitOptions::default());
    for v in record.variants.values() {
        assert!(v.name_map.is_empty());
        assert_eq!(v.code, canonical);
    }
}

#[test]
fn stale_maps_are_rejected() {
    let a = Analyzed::new(&unit()).unwrap();
    let map = a.build_map(&Strategy::new(StrategyTag::Alpha, 0), RenamePolicy::default()).unwrap();
    let other = SourceUnit::new("game", "def f(q):\n    return q\n");
    assert!(matches!(obfuscate(&other, &map), Err(RewriteError::StaleMap(_))));
    let renamed_task = SourceUnit::new("other", GAME).with_tests(GAME_TESTS);
    assert!(matches!(obfuscate(&renamed_task, &map), Err(RewriteError::StaleMap(_))));
    let mut tampered = map.clone();
    let (_, e) = tampered.entries.iter_mut().next().unwrap();
    e.original = "nope".into();
    assert!(matches!(obfuscate(&unit(), &tampered), Err(RewriteError::StaleMap(_))));
}

#[test]
fn debug_fields_keep_their_label() {
    let u = SourceUnit::new("dbg", "def show(width):\n    return f'{width=} {width=:>4} {width=!s} {len([])=}'\n");
    let a = Analyzed::new(&u).unwrap();
    let map = a.build_map(&Strategy::new(StrategyTag::Alpha, 0), RenamePolicy::default()).unwrap();
    let out = a.rewrite(&map, &RewriteOptions::default()).unwrap().unit.code;
    assert!(
        out.contains("f'width={var1!r} width={var1:>4} width={var1!s} {len([])=}'"),
        "{out}"
    );
}

#[test]
fn reflection_literals_follow_policy() {
    let code = "class Box:\n    def size(self):\n        return 1\ndef probe(b):\n    return getattr(b, 'size')()\n";
    let u = SourceUnit::new("refl", code);
    let a = Analyzed::new(&u).unwrap();
    let strict = a.build_map(&Strategy::new(StrategyTag::Alpha, 0), RenamePolicy::default()).unwrap();
    assert!(strict.entries.values().all(|e| e.original != "size"));
    let policy = RenamePolicy {
        reflection: ReflectionPolicy::RewriteLiterals,
        rename_attributes: true,
    };
    let map = a.build_map(&Strategy::new(StrategyTag::Alpha, 0), policy).unwrap();
    let out = a.rewrite(&map, &RewriteOptions::default()).unwrap().unit.code;
    assert!(out.contains("def method1(self)") && out.contains("getattr(var1, 'method1')"), "{out}");
}

#[test]
fn fault_injection_leaves_one_test_occurrence() {
    let a = Analyzed::new(&unit()).unwrap();
    let map = a.build_map(&Strategy::new(StrategyTag::Alpha, 0), RenamePolicy::default()).unwrap();
    let opts = RewriteOptions {
        fault: Some(9),
        ..Default::default()
    };
    let r = a.rewrite(&map, &opts).unwrap();
    let s = r.skipped.unwrap();
    assert_eq!(s.part, Part::Test);
    let clean = a.rewrite(&map, &RewriteOptions::default()).unwrap().unit;
    assert_eq!(r.unit.code, clean.code);
    assert_ne!(r.unit.test_code, clean.test_code);
    assert!(r.unit.test_code.unwrap().contains(&s.name));
}

#[test]
fn records_are_deterministic() {
    let a = obfuscate_all(&unit(), 99).unwrap().to_json();
    let b = obfuscate_all(&unit(), 99).unwrap().to_json();
    assert_eq!(a, b);
    assert_ne!(a, obfuscate_all(&unit(), 98).unwrap().to_json());
}
