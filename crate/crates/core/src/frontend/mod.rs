//! Parsing and canonical emission of Python source units.

pub mod ast;
mod emit;
pub mod lexer;
mod parser;
pub mod visit;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use ast::{Ident, Module, Span};
pub use emit::{is_docstring, EmitOptions};
pub use lexer::Comment;
pub use parser::is_hard_keyword;
pub use visit::Role;

use visit::VisitMut;

/// Python language version the grammar follows.
pub const LANGUAGE_VERSION: &str = "3.10";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Classeval,
    Livecodebench,
    #[default]
    Custom,
}

/// A program plus the tests that exercise it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceUnit {
    pub task_id: String,
    pub code: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_code: Option<String>,
    #[serde(default)]
    pub origin: Origin,
    #[serde(default = "default_version")]
    pub language_version: String,
}

fn default_version() -> String {
    LANGUAGE_VERSION.to_string()
}

impl SourceUnit {
    pub fn new(task_id: impl Into<String>, code: impl Into<String>) -> Self {
        SourceUnit {
            task_id: task_id.into(),
            code: code.into(),
            test_code: None,
            origin: Origin::Custom,
            language_version: default_version(),
        }
    }

    pub fn with_tests(mut self, test_code: impl Into<String>) -> Self {
        self.test_code = Some(test_code.into());
        self
    }

    pub fn with_origin(mut self, origin: Origin) -> Self {
        self.origin = origin;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct SyntaxError {
    pub offset: usize,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl SyntaxError {
    pub fn new(offset: usize, message: impl Into<String>) -> Self {
        SyntaxError {
            offset,
            line: 0,
            column: 0,
            message: message.into(),
        }
    }

    /// Fill in 1-based line and column from the source text.
    pub fn locate(mut self, src: &str) -> Self {
        let off = self.offset.min(src.len());
        let before = &src[..off];
        self.line = before.matches('\n').count() + 1;
        let line_start = before.rfind('\n').map_or(0, |i| i + 1);
        self.column = src[line_start..off].chars().count() + 1;
        self
    }
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

/// One identifier occurrence in the source.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Occurrence {
    pub name: String,
    pub span: Span,
    pub role: Role,
}

/// Parsed program with its identifier occurrences and comments.
#[derive(Clone, Debug)]
pub struct SyntaxTree {
    pub module: Module,
    pub source: String,
    pub comments: Vec<Comment>,
    /// Sorted by span start.
    pub occurrences: Vec<Occurrence>,
}

/// Parse a complete module.
pub fn parse(source: &str) -> Result<SyntaxTree, SyntaxError> {
    let module = parse_module(source)?;
    let comments = lexer::tokenize(source).map_err(|e| e.locate(source))?.comments;
    let occurrences = collect_occurrences(&module);
    Ok(SyntaxTree {
        module,
        source: source.to_string(),
        comments,
        occurrences,
    })
}

/// Parse a complete module without collecting occurrences.
pub fn parse_module(source: &str) -> Result<Module, SyntaxError> {
    let lexed = lexer::tokenize(source).map_err(|e| e.locate(source))?;
    parser::Parser::new(lexed.tokens)
        .parse_module()
        .map_err(|e| e.locate(source))
}

/// Parse a single expression (surrounding whitespace allowed).
pub fn parse_expression(source: &str) -> Result<ast::Expr, SyntaxError> {
    let module = parse_module(source)?;
    match module.body.as_slice() {
        [ast::Stmt {
            kind: ast::StmtKind::Expr(e),
            ..
        }] => Ok(e.clone()),
        _ => Err(SyntaxError::new(0, "expected a single expression").locate(source)),
    }
}

/// Emit canonical source for a tree. Comments are only available when the
/// tree came from [`parse`].
pub fn emit(tree: &SyntaxTree, opts: EmitOptions) -> String {
    emit::Emitter::new(opts, &tree.comments).module(&tree.module)
}

pub fn emit_module(module: &Module, opts: EmitOptions) -> String {
    emit::Emitter::new(opts, &[]).module(module)
}

pub fn emit_expression(e: &ast::Expr) -> String {
    emit::Emitter::new(EmitOptions::default(), &[]).expression(e)
}

struct Collect(Vec<Occurrence>);

impl VisitMut for Collect {
    fn ident(&mut self, id: &mut Ident, role: Role) {
        self.0.push(Occurrence {
            name: id.name.clone(),
            span: id.span,
            role,
        });
    }

    fn plain_str(&mut self, s: &mut ast::PlainStr) {
        if let Some((body, off)) = visit::plain_str_body(&s.raw) {
            if is_identifier(body) {
                let start = s.span.start + off;
                self.0.push(Occurrence {
                    name: body.to_string(),
                    span: Span::new(start, start + body.len()),
                    role: Role::StringLiteral,
                });
            }
        }
    }
}

pub fn collect_occurrences(module: &Module) -> Vec<Occurrence> {
    let mut m = module.clone();
    let mut c = Collect(Vec::new());
    visit::walk_module(&mut c, &mut m);
    c.0.sort_by_key(|o| (o.span.start, o.span.end));
    c.0
}

/// Is `s` a valid Python identifier that is not a hard keyword?
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if lexer::is_id_start(c) => {}
        _ => return false,
    }
    chars.all(lexer::is_id_continue) && !is_hard_keyword(s)
}

/// Compare two modules ignoring source positions.
pub fn structurally_equal(a: &Module, b: &Module) -> bool {
    let mut a = a.clone();
    let mut b = b.clone();
    visit::walk_module(&mut visit::ZeroSpans, &mut a);
    visit::walk_module(&mut visit::ZeroSpans, &mut b);
    a == b
}
