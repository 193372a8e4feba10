//! Name-length statistics of renameable bindings, before and after
//! obfuscation, with a CSV histogram for plotting.
//!
//! cargo run --example identifier_stats -- [histogram.csv]

use std::path::Path;

use nameobf::datasetio::{ingest, Format};
use nameobf::metrics::{identifier_stats, IdentifierStats};
use nameobf::rewrite::{obfuscate_all, Analyzed};
use nameobf::strategies::StrategyTag;

fn main() {
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus");
    let units = ingest(&corpus, Format::PlainDir).expect("corpus reads").units;
    let mut original = Vec::new();
    let mut by_tag: Vec<(StrategyTag, Vec<IdentifierStats>)> = StrategyTag::ALL.iter().map(|&t| (t, Vec::new())).collect();
    for u in &units {
        original.push(identifier_stats(&Analyzed::new(u).expect("analyzes").graph));
        let record = obfuscate_all(u, 1).expect("obfuscates");
        for (tag, stats) in by_tag.iter_mut() {
            let v = record.variant_unit(*tag).expect("variant");
            stats.push(identifier_stats(&Analyzed::new(&v).expect("variant analyzes").graph));
        }
    }
    let pooled = IdentifierStats::merge(&original);
    let row = |label: &str, s: &IdentifierStats| {
        println!(
            "{label:<12} n={:<4} median={:<5} mean={:<6.2} p90={:.1}",
            s.summary.count, s.summary.median, s.summary.mean, s.summary.p90
        )
    };
    row("original", &pooled);
    for (tag, stats) in &by_tag {
        row(tag.as_str(), &IdentifierStats::merge(stats));
    }
    if let Some(path) = std::env::args().nth(1) {
        std::fs::write(&path, pooled.histogram_csv()).expect("histogram written");
        println!("histogram written to {path}");
    }
}
