//! Ask a live chat-completions endpoint to predict one call's output.
//! Needs NAMEOBF_BASE_URL, NAMEOBF_API_KEY and NAMEOBF_MODEL.
//!
//! cargo run --example chat_endpoint -- [fixture-out.json]

use nameobf::evalrunner::{
    extract_answer, Condition, Endpoint, HttpConfig, HttpEndpoint, OutputDomain, PredictionTask, PromptTemplate,
    Recorder,
};

fn main() {
    let config = match HttpConfig::from_env() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
    };
    let code = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/corpus/palindrome.py")).expect("corpus file");
    let task = PredictionTask {
        task_id: "palindrome".into(),
        condition: Condition::Orig,
        prompt: PromptTemplate::default().render(&code, "makeSmallestPalindrome('egcfe')"),
        expected_output: "'efcfe'".into(),
        old_output: None,
        output_domain: OutputDomain::Large,
    };
    let endpoint = Recorder::new(HttpEndpoint::new(config).expect("client builds"));
    match endpoint.complete(&task, 0) {
        Ok(text) => {
            println!("{text}");
            println!("extracted: {:?} (expected {})", extract_answer(&text), task.expected_output);
        }
        Err(e) => eprintln!("request failed: {e}"),
    }
    if let Some(path) = std::env::args().nth(1) {
        endpoint.into_fixture().save(std::path::Path::new(&path)).expect("fixture written");
    }
}
