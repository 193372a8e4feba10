//! Show the four obfuscated variants of a unit side by side with its name maps.
//!
//! cargo run --example obfuscate_variants -- [file.py] [seed]

use nameobf::frontend::SourceUnit;
use nameobf::rewrite::obfuscate_all;

fn main() {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/corpus/minesweeper.py").into());
    let seed = args.next().map_or(42, |s| s.parse().expect("seed is an integer"));
    let code = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    let record = obfuscate_all(&SourceUnit::new("unit", code), seed).unwrap_or_else(|e| panic!("{e}"));
    for (tag, v) in &record.variants {
        println!("==== {tag} ({} names) ====", v.name_map.len());
        for (from, to) in v.name_map.pairs() {
            println!("  {from} -> {to}");
        }
        println!("{}", v.code);
    }
    for (tag, e) in &record.errors {
        println!("{tag} failed: {e}");
    }
}
