use super::*;
use crate::scopes::analyze;

fn report(src: &str) -> ComplexityReport {
    cyclomatic(&parse(src).unwrap())
}

fn names(list: &[(&str, BindingKind)]) -> Vec<NamedLength> {
    list.iter()
        .map(|(n, k)| NamedLength {
            name: n.to_string(),
            kind: *k,
            length: n.len(),
        })
        .collect()
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
fn straight_line_and_empty() {
    let r = report("def f(x):\n    y = x + 1\n    return y\n");
    assert_eq!(r.by_name()["f"], 1);
    let r = report("x = 1\nprint(x)\n");
    assert!(r.functions.is_empty());
    assert_eq!((r.unit_cc_max, r.unit_cc_sum), (1, 1));
}

#[test]
fn palindrome_listing() {
    let r = report(PALINDROME);
    assert_eq!(r.by_name()["makeSmallestPalindrome"], 2);
    assert_eq!(r.unit_cc_max, 2);
}

#[test]
fn each_decision_point() {
    let cases = [
        ("def f(a):\n    if a:\n        pass\n    elif a > 1:\n        pass\n    else:\n        pass\n", 3),
        ("def f(a):\n    while a:\n        a -= 1\n    else:\n        pass\n", 2),
        ("def f(a, b, c):\n    return a and b or c\n", 3),
        ("def f(a, b, c):\n    return a and b and c\n", 3),
        ("def f(a):\n    return 1 if a else 2\n", 2),
        ("def f():\n    try:\n        pass\n    except ValueError:\n        pass\n    except Exception:\n        pass\n    finally:\n        pass\n", 3),
        ("def f(xs):\n    return [x for x in xs if x if x > 1]\n", 3),
        ("def f(xs):\n    return {x: y for x in xs for y in xs}\n", 1),
        ("def f(a):\n    g = lambda b: b or a\n    return g\n", 2),
        ("def f(a):\n    return f'{a if a else 0}'\n", 2),
        ("def f(a):\n    with open(a) as h:\n        assert a\n", 1),
    ];
    for (src, cc) in cases {
        assert_eq!(report(src).by_name()["f"], cc, "{src}");
    }
}

#[test]
fn match_cases() {
    let r = report("def f(a):\n    match a:\n        case 1:\n            pass\n        case [x, y]:\n            pass\n        case _:\n            pass\n");
    assert_eq!(r.by_name()["f"], 3);
    let r = report("def f(a):\n    match a:\n        case 1:\n            pass\n        case y if y:\n            pass\n");
    assert_eq!(r.by_name()["f"], 3);
}

#[test]
fn nested_functions_are_separate() {
    let src = "\
class A:
    def m(self, x):
        def inner(y):
            if y:
                return 1
            return 2
        for _ in x:
            pass
        return inner

    class B:
        def n(self):
            return 0
";
    let r = report(src);
    let by = r.by_name();
    assert_eq!(by["A.m"], 2);
    assert_eq!(by["A.m.<locals>.inner"], 2);
    assert_eq!(by["A.B.n"], 1);
    assert_eq!((r.unit_cc_max, r.unit_cc_sum), (2, 5));
    let lines: Vec<usize> = r.functions.iter().map(|f| f.line).collect();
    assert_eq!(lines, vec![2, 3, 12]);
}

#[test]
fn filter_keeps_order() {
    let units = vec![
        SourceUnit::new("a", "def f(a):\n    if a:\n        pass\n"),
        SourceUnit::new("b", "x = 1\n"),
        SourceUnit::new("c", "def g(a):\n    if a:\n        pass\n\ndef h(b):\n    return b or 1\n"),
    ];
    assert_eq!(filter_corpus(&units, 1, Aggregate::Max), units);
    let ids = |v: Vec<SourceUnit>| v.into_iter().map(|u| u.task_id).collect::<Vec<_>>();
    assert_eq!(ids(filter_corpus(&units, 2, Aggregate::Max)), ["a", "c"]);
    assert_eq!(ids(filter_corpus(&units, 3, Aggregate::Max)), Vec::<String>::new());
    assert_eq!(ids(filter_corpus(&units, 4, Aggregate::Sum)), ["c"]);
}

#[test]
fn length_summaries() {
    let s = IdentifierStats::from_names(names(&[
        ("a", BindingKind::Local),
        ("b", BindingKind::Local),
        ("n", BindingKind::Parameter),
    ]));
    assert_eq!(s.summary.median, 1.0);
    // 5, 5, 9, 15: the middle pair averages to 7.
    let s = IdentifierStats::from_names(names(&[
        ("board", BindingKind::AttributeSlot),
        ("sweep", BindingKind::Method),
        ("check_won", BindingKind::Method),
        ("minesweeper_map", BindingKind::AttributeSlot),
    ]));
    assert_eq!(s.summary.median, 7.0);
    assert_eq!(s.summary.mean, 8.5);
    assert!((s.summary.p90 - 13.2).abs() < 1e-9);
    assert_eq!(s.histogram, BTreeMap::from([(5, 2), (9, 1), (15, 1)]));
    assert_eq!(s.by_kind[&BindingKind::Method].median, 7.0);
    assert_eq!(s.histogram_csv(), "length,count\n5,2\n9,1\n15,1\n");
    assert_eq!(LengthSummary::of(&[]).count, 0);
}

#[test]
fn palindrome_identifier_lengths() {
    let g = analyze(&parse(PALINDROME).unwrap()).unwrap();
    let s = identifier_stats(&g);
    let mut got: Vec<(&str, usize)> = s.names.iter().map(|n| (n.name.as_str(), n.length)).collect();
    got.sort();
    assert_eq!(
        got,
        [("c", 1), ("i", 1), ("makeSmallestPalindrome", 22), ("n", 1), ("s", 1)]
    );
    assert_eq!(s.summary.median, 1.0);
    assert_eq!(s.histogram.values().sum::<usize>(), s.names.len());
}
