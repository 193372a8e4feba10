//! Print every binding the scope analysis finds, with why it is kept.
//!
//! cargo run --example scope_graph -- [file.py [tests.py]]

use nameobf::frontend::SourceUnit;
use nameobf::rewrite::Analyzed;
use nameobf::scopes::{renameable_set, RenamePolicy};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let corpus = concat!(env!("CARGO_MANIFEST_DIR"), "/corpus/");
    let code_path = args.first().cloned().unwrap_or_else(|| format!("{corpus}minesweeper.py"));
    let tests_path = args.get(1).cloned().or_else(|| args.is_empty().then(|| format!("{corpus}minesweeper_test.py")));
    let read = |p: &str| std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{p}: {e}"));
    let mut unit = SourceUnit::new("unit", read(&code_path));
    if let Some(t) = &tests_path {
        unit = unit.with_tests(read(t));
    }
    let a = Analyzed::new(&unit).unwrap_or_else(|e| panic!("{e}"));
    let g = &a.graph;
    let renamed = renameable_set(g, RenamePolicy::default());
    println!("{:<4} {:<26} {:<18} {:<28} {:>4}  status", "id", "name", "kind", "scope", "uses");
    for b in &g.bindings {
        let scope = &g.scopes[b.scope_id];
        let status = if renamed.contains(&b.id) {
            "renamed".to_string()
        } else {
            match b.demotion {
                Some(d) => format!("kept: {d:?}"),
                None => "kept: reflection or group".into(),
            }
        };
        println!(
            "{:<4} {:<26} {:<18} {:<28} {:>4}  {status}",
            b.id,
            b.name,
            b.kind.as_str(),
            format!("{:?} {}", scope.kind, scope.name),
            b.occurrences.len()
        );
    }
}
