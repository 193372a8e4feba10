//! Parse a Python file and print its canonical form.
//!
//! cargo run --example canonicalize -- path/to/file.py [--keep-comments] [--keep-docstrings]

use nameobf::frontend::{emit, parse, EmitOptions};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(path) = args.iter().find(|a| !a.starts_with("--")) else {
        eprintln!("usage: canonicalize FILE [--keep-comments] [--keep-docstrings]");
        std::process::exit(2);
    };
    let opts = EmitOptions {
        keep_comments: args.iter().any(|a| a == "--keep-comments"),
        keep_docstrings: args.iter().any(|a| a == "--keep-docstrings"),
    };
    let src = std::fs::read_to_string(path).unwrap_or_else(|e| {
        eprintln!("{path}: {e}");
        std::process::exit(1);
    });
    match parse(&src) {
        Ok(tree) => print!("{}", emit(&tree, opts)),
        Err(e) => {
            eprintln!("{path}: {e}");
            std::process::exit(1);
        }
    }
}
