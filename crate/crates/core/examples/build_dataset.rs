//! Obfuscate the bundled corpus, verify every variant and write the dataset.
//!
//! cargo run --example build_dataset -- [out_dir] [seed]

use std::path::{Path, PathBuf};

use nameobf::datasetio::{ingest, Format};
use nameobf::pipeline::{build_dataset, PipelineConfig};
use nameobf::verify::Runner;

fn main() {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "target/obf-dataset".into()));
    let seed = args.next().map_or(42, |s| s.parse().expect("seed is an integer"));
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus");
    let ingested = ingest(&corpus, Format::PlainDir).expect("corpus reads");
    let cfg = PipelineConfig {
        seed,
        ..PipelineConfig::default()
    };
    let result = build_dataset(&ingested.units, &cfg, &Runner::default(), &out.join("dataset.jsonl")).expect("dataset written");
    for (status, n) in &result.summary.counts {
        println!("{status:?}: {n}");
    }
    for s in &result.skipped {
        println!("skipped {}: {}", s.task_id, s.reason);
    }
    let m = result.manifest.expect("manifest");
    println!("{} records, sha256 {}", m.records.len(), m.dataset_sha256);
}
