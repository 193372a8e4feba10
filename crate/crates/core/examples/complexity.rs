//! Per-function cyclomatic complexity for the bundled corpus, and which
//! units a threshold keeps.
//!
//! cargo run --example complexity -- [threshold]

use std::path::Path;

use nameobf::datasetio::{ingest, Format};
use nameobf::metrics::{filter_corpus, unit_complexity, Aggregate};

fn main() {
    let threshold = std::env::args().nth(1).map_or(6, |s| s.parse().expect("threshold is an integer"));
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus");
    let units = ingest(&corpus, Format::PlainDir).expect("corpus reads").units;
    for u in &units {
        let r = unit_complexity(u).expect("corpus parses");
        println!("{} (max {}, sum {})", u.task_id, r.unit_cc_max, r.unit_cc_sum);
        for f in &r.functions {
            println!("  {:>3}  {} (line {})", f.cc, f.qualname, f.line);
        }
    }
    let kept: Vec<String> = filter_corpus(&units, threshold, Aggregate::Max)
        .into_iter()
        .map(|u| u.task_id)
        .collect();
    println!("max CC >= {threshold}: {kept:?}");
}
