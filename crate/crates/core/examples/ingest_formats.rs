//! Read a corpus in any supported layout and list what was found.
//!
//! cargo run --example ingest_formats -- PATH [classeval_json|lcb_json|plain_dir]

use std::path::PathBuf;

use nameobf::datasetio::{ingest, Format};

fn main() {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/corpus")), PathBuf::from);
    let format = match args.next() {
        Some(f) => f.parse::<Format>().unwrap_or_else(|e| panic!("{e}")),
        None if path.is_dir() => Format::PlainDir,
        None => Format::LcbJson,
    };
    let got = ingest(&path, format).unwrap_or_else(|e| panic!("{e}"));
    for u in &got.units {
        let tests = u.test_code.as_deref().map_or(0, |t| t.lines().count());
        let probe = got.probes.get(&u.task_id).map(|p| format!("{}({})", p.call.function, p.call.args));
        println!(
            "{:<20} {:>4} code lines {:>4} test lines  {}",
            u.task_id,
            u.code.lines().count(),
            tests,
            probe.unwrap_or_default()
        );
    }
    for w in &got.warnings {
        println!("skipped: {w}");
    }
}
