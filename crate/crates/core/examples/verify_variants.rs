//! Verify the corpus Minesweeper unit under all strategies, then break one
//! occurrence on purpose and watch verification catch it.
//!
//! cargo run --example verify_variants

use nameobf::frontend::SourceUnit;
use nameobf::rewrite::{obfuscate_all, Analyzed, RewriteOptions};
use nameobf::scopes::RenamePolicy;
use nameobf::strategies::{Strategy, StrategyTag};
use nameobf::verify::{verify_pair, verify_record, Limits, Runner};

fn main() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/corpus/");
    let read = |n: &str| std::fs::read_to_string(format!("{dir}{n}")).expect("corpus file");
    let unit = SourceUnit::new("minesweeper", read("minesweeper.py")).with_tests(read("minesweeper_test.py"));
    let runner = Runner::default();
    if !runner.available() {
        eprintln!("python3 not found; set NAMEOBF_PYTHON");
        std::process::exit(1);
    }
    let limits = Limits::default();
    let mut record = obfuscate_all(&unit, 9).expect("obfuscates");
    verify_record(&mut record, limits, &runner);
    for (tag, v) in &record.verdicts {
        println!("{tag:<12} {:?} ({} tests, {} ms)", v.status, v.variant.len(), v.wall_ms);
    }

    let a = Analyzed::new(&unit).expect("analyzes");
    let map = a.build_map(&Strategy::new(StrategyTag::Ambiguity, 9), RenamePolicy::default()).expect("map");
    for fault in 0..3 {
        let broken = a
            .rewrite(
                &map,
                &RewriteOptions {
                    fault: Some(fault),
                    ..RewriteOptions::default()
                },
            )
            .expect("rewrites");
        let skipped = broken.skipped.expect("one occurrence left alone");
        let v = verify_pair(
            &unit.code,
            unit.test_code.as_deref().unwrap_or(""),
            &broken.unit.code,
            broken.unit.test_code.as_deref().unwrap_or(""),
            limits,
            &runner,
        );
        println!("fault {fault}: left '{}' at {:?}:{} -> {:?}", skipped.name, skipped.part, skipped.offset, v.status);
    }
}
