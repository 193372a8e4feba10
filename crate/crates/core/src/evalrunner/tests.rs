use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use super::answer::float_repr;
use super::endpoint::{fenced, message_content, oracle_endpoint, with_retry};
use super::*;
use crate::frontend::SourceUnit;
use crate::rewrite::obfuscate_all;

/// Fraction of k-subsets of n samples (the first c correct) holding at
/// least one correct sample, by listing every subset.
fn enumerate(n: u32, c: u32, k: u32) -> f64 {
    let (mut hit, mut all) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() != k {
            continue;
        }
        all += 1;
        if mask & ((1 << c) - 1) != 0 {
            hit += 1;
        }
    }
    hit as f64 / all as f64
}

#[test]
fn pass_at_k_examples() {
    assert_eq!(pass_at_k(5, 5, 1).unwrap(), 1.0);
    assert_eq!(pass_at_k(5, 0, 3).unwrap(), 0.0);
    assert!((pass_at_k(5, 2, 3).unwrap() - 0.9).abs() < 1e-12);
    assert!(matches!(pass_at_k(5, 6, 1), Err(EvalError::Domain(_))));
    assert!(matches!(pass_at_k(5, 1, 0), Err(EvalError::Domain(_))));
    assert!(matches!(pass_at_k(5, 1, 6), Err(EvalError::Domain(_))));
}

#[test]
fn pass_at_k_matches_enumeration() {
    for n in 1..=8u32 {
        for c in 0..=n {
            let mut prev = 0.0;
            for k in 1..=n {
                let got = pass_at_k(n as u64, c as u64, k as u64).unwrap();
                let want = enumerate(n, c, k);
                assert!((got - want).abs() <= 1e-12, "n={n} c={c} k={k}: {got} vs {want}");
                assert!(got >= prev);
                prev = got;
            }
        }
    }
}

#[test]
fn judge_normalization() {
    assert_eq!(judge_aggregate(&[[1.0; 5]]).unwrap(), 0.0);
    assert_eq!(judge_aggregate(&[[5.0; 5]]).unwrap(), 100.0);
    assert_eq!(judge_aggregate(&[[5.0, 4.0, 4.0, 3.0, 4.0]]).unwrap(), 75.0);
    assert_eq!(judge_aggregate(&[[1.0; 5], [5.0; 5]]).unwrap(), 50.0);
    assert!(judge_aggregate(&[[0.0, 1.0, 1.0, 1.0, 1.0]]).is_err());
    assert!(judge_aggregate(&[[6.0, 1.0, 1.0, 1.0, 1.0]]).is_err());
    assert!(judge_aggregate(&[]).is_err());
}

fn slice(ids: &[&str], score: f64) -> ScoreSlice {
    ScoreSlice {
        tasks: ids.iter().map(|s| s.to_string()).collect(),
        score,
    }
}

#[test]
fn deltas() {
    let ids = ["a", "b"];
    let one = BTreeMap::from([(StrategyTag::Alpha, slice(&ids, 76.1))]);
    let d = delta_report(&slice(&ids, 85.7), &one).unwrap();
    assert!((d.avg - 9.6).abs() < 1e-9);

    let four: BTreeMap<_, _> = StrategyTag::ALL
        .iter()
        .zip([8.0, 6.0, 4.0, 2.0])
        .map(|(&t, s)| (t, slice(&ids, s)))
        .collect();
    let d = delta_report(&slice(&ids, 10.0), &four).unwrap();
    assert_eq!((d.min, d.max, d.avg), (2.0, 8.0, 5.0));

    let same: BTreeMap<_, _> = StrategyTag::ALL.iter().map(|&t| (t, slice(&ids, 50.0))).collect();
    let d = delta_report(&slice(&ids, 50.0), &same).unwrap();
    assert_eq!((d.min, d.max, d.avg), (0.0, 0.0, 0.0));

    let off = BTreeMap::from([(StrategyTag::Alpha, slice(&["a"], 1.0))]);
    assert!(matches!(
        delta_report(&slice(&ids, 1.0), &off),
        Err(EvalError::MismatchedTaskSets(_))
    ));
}

#[test]
fn answer_extraction() {
    assert_eq!(extract_answer("it is\n```ANSWER\n 'efcfe' \n```\n").as_deref(), Some("'efcfe'"));
    assert_eq!(extract_answer("```answer\n[1,2]\n```\n```ANSWER\n[3,4]\n```").as_deref(), Some("[3, 4]"));
    assert_eq!(extract_answer("```python\n1\n```"), None);
    assert_eq!(extract_answer("```ANSWER\n1\n"), None);
    assert_eq!(extract_answer("no block"), None);
}

#[test]
fn literal_canonical_forms() {
    let cases = [
        ("\"efcfe\"", "'efcfe'"),
        ("'it''s'", "'its'"),
        ("\"it's\"", "\"it's\""),
        ("'a\\x41\\n'", "'aA\\n'"),
        ("r'\\d'", "'\\\\d'"),
        ("{'b': 2,'a':1}", "{'a': 1, 'b': 2}"),
        ("{3, 1, 2}", "{1, 2, 3}"),
        ("set()", "set()"),
        ("(1)", "1"),
        ("(1,)", "(1,)"),
        ("[ -1 , +2 ]", "[-1, 2]"),
        ("0x1F", "31"),
        ("1_000", "1000"),
        ("007.50", "7.5"),
        ("1e16", "1e+16"),
        ("True", "True"),
        ("  some words ", "some words"),
        ("f(x)", "f(x)"),
    ];
    for (input, want) in cases {
        assert_eq!(canonicalize(input), want, "{input}");
    }
}

#[test]
fn float_reprs() {
    let cases = [
        (0.1 + 0.2, "0.30000000000000004"),
        (123.0, "123.0"),
        (1e16, "1e+16"),
        (1.5e-5, "1.5e-05"),
        (0.0001, "0.0001"),
        (-2.5, "-2.5"),
        (9999999999999998.0, "9999999999999998.0"),
    ];
    for (x, want) in cases {
        assert_eq!(float_repr(x), want);
    }
}

fn task(id: &str, cond: Condition, expected: &str, old: Option<&str>) -> PredictionTask {
    PredictionTask {
        task_id: id.into(),
        condition: cond,
        prompt: format!("predict {id}"),
        expected_output: expected.into(),
        old_output: old.map(str::to_string),
        output_domain: OutputDomain::estimate(expected),
    }
}

#[test]
fn mock_runs() {
    let tasks = vec![
        task("t1", Condition::Orig, "[1, 2]", Some("[2, 1]")),
        task("t2", Condition::Orig, "True", Some("False")),
        task("t1", Condition::Obf(StrategyTag::Ambiguity), "[1, 2]", Some("[2, 1]")),
        task("t2", Condition::Obf(StrategyTag::Ambiguity), "True", Some("False")),
    ];
    let run = run_prediction(&tasks, &oracle_endpoint(), 5, 2).unwrap();
    let r = EvalReport::from_run(&run, &[1, 3]).unwrap();
    assert_eq!(r.conditions[&Condition::Orig].pass_at[&1], 100.0);
    assert_eq!(r.deltas[&1].avg, 0.0);

    let parrot = MockEndpoint::new(|t: &PredictionTask, _| fenced(t.old_output.as_deref().unwrap_or("?")));
    let run = run_prediction(&tasks, &parrot, 3, 4).unwrap();
    assert!(run.tasks.iter().all(|t| t.correct.iter().all(|c| !c)));
    assert!(run.tasks.iter().all(|t| t.old_match.iter().all(|&m| m)));
    // t2 answers booleans and is left out.
    let memo = memorization_check(&run);
    assert_eq!(memo[&Condition::Orig], 1);
    assert_eq!(memo[&Condition::Obf(StrategyTag::Ambiguity)], 1);

    let none: Vec<PredictionTask> = tasks.iter().map(|t| PredictionTask { old_output: None, ..t.clone() }).collect();
    let run = run_prediction(&none, &parrot, 1, 1).unwrap();
    assert!(memorization_check(&run).values().all(|&c| c == 0));
}

#[test]
fn invalid_tasks_rejected() {
    let bad = task("t", Condition::Orig, "1", Some("1"));
    assert!(bad.validate().is_err());
    assert!(run_prediction(&[bad], &oracle_endpoint(), 1, 1).is_err());
    assert!(task("t", Condition::Orig, "", None).validate().is_err());
    assert!(run_prediction(&[task("t", Condition::Orig, "1", None)], &oracle_endpoint(), 0, 1).is_err());
}

#[test]
fn endpoint_failures_are_recorded() {
    let tasks = vec![task("t1", Condition::Orig, "1", None), task("t2", Condition::Orig, "2", None)];
    let flaky = MockEndpoint::new(|t: &PredictionTask, _| {
        if t.task_id == "t1" {
            fenced("1")
        } else {
            "I am not sure.".into()
        }
    });
    let run = run_prediction(&tasks, &flaky, 2, 2).unwrap();
    assert_eq!(run.tasks[1].answers, vec![None, None]);
    let replay = ReplayEndpoint::new(Fixture::default());
    let run = run_prediction(&tasks, &replay, 2, 2).unwrap();
    assert!(run.tasks.iter().all(|t| t.error.is_some()));
    let r = EvalReport::from_run(&run, &[1]).unwrap();
    assert_eq!(r.conditions[&Condition::Orig].failed_tasks, 2);
    assert_eq!(r.conditions[&Condition::Orig].pass_at[&1], 0.0);
}

#[test]
fn record_then_replay_is_byte_identical() {
    let mut tasks = Vec::new();
    for i in 0..3 {
        for cond in [Condition::Orig, Condition::Obf(StrategyTag::Misleading)] {
            tasks.push(task(&format!("t{i}"), cond, &format!("{i}"), None));
        }
    }
    let mixed = MockEndpoint::new(|t: &PredictionTask, s| {
        if s % 2 == 0 || t.condition == Condition::Orig {
            fenced(&t.expected_output)
        } else {
            fenced("-1")
        }
    });
    let rec = Recorder::new(mixed);
    let first = EvalReport::from_run(&run_prediction(&tasks, &rec, 5, 4).unwrap(), &[1, 3]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fixture.json");
    rec.into_fixture().save(&path).unwrap();
    let fixture = Fixture::load(&path).unwrap();
    assert_eq!(fixture.responses.len(), 6);
    assert!(fixture.responses.values().all(|v| v.len() == 5));
    let replays: Vec<(String, String)> = (0..2)
        .map(|_| {
            let e = ReplayEndpoint::new(fixture.clone());
            let r = EvalReport::from_run(&run_prediction(&tasks, &e, 5, 3).unwrap(), &[1, 3]).unwrap();
            (r.to_json(), r.to_csv())
        })
        .collect();
    assert_eq!(replays[0], replays[1]);
    assert_eq!(replays[0].0, first.to_json());
    // 3 of 5 samples right: pass@1 = 60, pass@3 = 1 - C(2,3)/C(5,3) = 100.
    let m = &first.conditions[&Condition::Obf(StrategyTag::Misleading)];
    assert!((m.pass_at[&1] - 60.0).abs() < 1e-9);
    assert_eq!(m.pass_at[&3], 100.0);
    assert!((first.deltas[&1].avg - 40.0).abs() < 1e-9);
    let back: EvalReport = serde_json::from_str(&first.to_json()).unwrap();
    assert_eq!(back, first);
    assert!(replays[0].1.starts_with("condition,tasks,pass@1,pass@3,delta@1,delta@3,memorization,failed_tasks\norig,3,"));
}

#[test]
fn retry_policy() {
    let calls = AtomicUsize::new(0);
    let r = with_retry(4, Duration::from_millis(1), || {
        let i = calls.fetch_add(1, Ordering::SeqCst);
        if i < 2 {
            Err(EndpointError::Status { status: 503, body: String::new() })
        } else {
            Ok(i)
        }
    });
    assert_eq!(r.unwrap(), 2);

    calls.store(0, Ordering::SeqCst);
    let r: Result<(), _> = with_retry(3, Duration::from_millis(1), || {
        calls.fetch_add(1, Ordering::SeqCst);
        Err(EndpointError::Transport("refused".into()))
    });
    assert!(matches!(r, Err(EndpointError::RetriesExhausted { attempts: 3, .. })));

    calls.store(0, Ordering::SeqCst);
    let r: Result<(), _> = with_retry(3, Duration::from_millis(1), || {
        calls.fetch_add(1, Ordering::SeqCst);
        Err(EndpointError::Status { status: 401, body: String::new() })
    });
    assert!(matches!(r, Err(EndpointError::Status { status: 401, .. })));
    assert_eq!(calls.load(Ordering::SeqCst), 1);
}

#[test]
fn chat_completion_body() {
    let body = r#"{"choices":[{"message":{"role":"assistant","content":"```ANSWER\n3\n```"}}]}"#;
    assert_eq!(message_content(body).unwrap(), "```ANSWER\n3\n```");
    assert!(message_content("{}").is_err());
    assert!(message_content("not json").is_err());
}

/// Serves canned HTTP responses in order and returns the request bodies.
fn serve(responses: Vec<(u16, String)>) -> (String, std::thread::JoinHandle<Vec<String>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let handle = std::thread::spawn(move || {
        let mut seen = Vec::new();
        for (status, body) in responses {
            let (mut stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            let mut head = String::new();
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                head.push_str(&line);
                if line == "\r\n" {
                    break;
                }
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            seen.push(format!("{head}{}", String::from_utf8(buf).unwrap()));
            write!(
                stream,
                "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
        seen
    });
    (url, handle)
}

#[test]
fn http_endpoint_retries_then_answers() {
    let ok = r#"{"choices":[{"message":{"content":"```ANSWER\n'efcfe'\n```"}}]}"#.to_string();
    let (url, server) = serve(vec![(503, "busy".into()), (200, ok)]);
    let e = HttpEndpoint::new(HttpConfig {
        base_url: url,
        api_key: "k-test".into(),
        model: "m".into(),
        temperature: 0.0,
        request_timeout: Duration::from_secs(10),
        max_attempts: 3,
        backoff: Duration::from_millis(10),
    })
    .unwrap();
    let t = task("p", Condition::Orig, "'efcfe'", None);
    let run = run_prediction(&[t], &e, 1, 1).unwrap();
    assert_eq!(run.tasks[0].correct, vec![true]);
    let seen = server.join().unwrap();
    assert_eq!(seen.len(), 2);
    let req = seen[1].to_ascii_lowercase();
    assert!(req.starts_with("post /v1/chat/completions"));
    assert!(req.contains("authorization: bearer k-test"));
    assert!(seen[1].contains(r#""content":"predict p""#));
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
fn ground_truth_through_variants() {
    let runner = Runner::default();
    if !runner.available() {
        eprintln!("python3 unavailable; skipping");
        return;
    }
    let record = obfuscate_all(&SourceUnit::new("palindrome", PALINDROME), 7).unwrap();
    let probe = Probe {
        call: CallSpec {
            function: "makeSmallestPalindrome".into(),
            args: "'egcfe'".into(),
        },
        old_output: Some("'abcba'".into()),
        output_domain: None,
    };
    let tasks = prediction_tasks(&record, &probe, &PromptTemplate::default(), &runner, Limits::default()).unwrap();
    assert_eq!(tasks.len(), 5);
    assert!(tasks.iter().all(|t| t.expected_output == "'efcfe'"));
    assert!(tasks[0].prompt.contains("makeSmallestPalindrome('egcfe')"));
    for t in &tasks[1..] {
        assert!(!t.prompt.contains("makeSmallestPalindrome"), "{}", t.condition);
    }
    let same = Probe {
        old_output: Some("'efcfe'".into()),
        ..probe
    };
    assert!(prediction_tasks(&record, &same, &PromptTemplate::default(), &runner, Limits::default()).is_err());
}
