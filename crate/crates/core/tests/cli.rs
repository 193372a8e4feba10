use std::process::Command;

fn nameobf(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_nameobf"))
        .args(args)
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .expect("run nameobf");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn obfuscate_single_file() {
    let (code, out) = nameobf(&["obfuscate", "corpus/palindrome.py", "--strategy", "alpha", "--seed", "3"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("def method1(var1"), "{out}");
    assert!(!out.contains("makeSmallestPalindrome"));
    let (_, again) = nameobf(&["obfuscate", "corpus/palindrome.py", "--strategy", "alpha", "--seed", "3"]);
    assert_eq!(out, again);
}

#[test]
fn stats_reports_every_unit() {
    let (code, out) = nameobf(&["stats", "corpus"]);
    assert_eq!(code, 0);
    for id in ["minesweeper", "palindrome", "shapes"] {
        assert!(out.contains(id), "{out}");
    }
}

#[test]
fn bad_input_exits_two() {
    let (code, _) = nameobf(&["obfuscate", "no/such/file.py"]);
    assert_eq!(code, 2);
    let (code, _) = nameobf(&["report", "--ratings", "no/such.csv"]);
    assert_eq!(code, 2);
}
