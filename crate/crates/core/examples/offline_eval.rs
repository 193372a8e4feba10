//! Output-prediction evaluation with no network: a scripted mock model is
//! recorded once, then the run is replayed from the saved fixture.
//!
//! cargo run --example offline_eval -- [fixture.json]

use std::path::Path;

use nameobf::datasetio::{ingest, Format};
use nameobf::evalrunner::endpoint::fenced;
use nameobf::evalrunner::{
    prediction_tasks, run_prediction, Condition, EvalReport, Fixture, MockEndpoint, PredictionTask, PromptTemplate,
    Recorder, ReplayEndpoint,
};
use nameobf::rewrite::obfuscate_all;
use nameobf::verify::{Limits, Runner};

fn main() {
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus");
    let got = ingest(&corpus, Format::PlainDir).expect("corpus reads");
    let runner = Runner::default();
    let mut tasks = Vec::new();
    for u in &got.units {
        let Some(probe) = got.probes.get(&u.task_id) else { continue };
        let record = obfuscate_all(u, 3).expect("obfuscates");
        tasks.extend(
            prediction_tasks(&record, probe, &PromptTemplate::default(), &runner, Limits::default())
                .unwrap_or_else(|e| panic!("{e}")),
        );
    }
    // Right on originals; on variants, recites the old dataset answer when
    // there is one and is right on every other sample otherwise.
    let model = MockEndpoint::new(|t: &PredictionTask, sample| match (t.condition, &t.old_output) {
        (Condition::Orig, _) => fenced(&t.expected_output),
        (_, Some(old)) => fenced(old),
        (_, None) if sample % 2 == 0 => fenced(&t.expected_output),
        _ => "I cannot tell.".into(),
    });
    let recorder = Recorder::new(model);
    let live = EvalReport::from_run(&run_prediction(&tasks, &recorder, 5, 4).unwrap(), &[1, 3]).unwrap();
    let fixture = recorder.into_fixture();
    if let Some(path) = std::env::args().nth(1) {
        fixture.save(Path::new(&path)).expect("fixture written");
    }
    let replayed = EvalReport::from_run(
        &run_prediction(&tasks, &ReplayEndpoint::new(Fixture { ..fixture }), 5, 2).unwrap(),
        &[1, 3],
    )
    .unwrap();
    assert_eq!(live.to_json(), replayed.to_json());
    print!("{}", replayed.to_csv());
    for (k, d) in &replayed.deltas {
        println!("delta pass@{k}: min {:.1} max {:.1} avg {:.1}", d.min, d.max, d.avg);
    }
}
