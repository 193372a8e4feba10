//! Tokenizer producing logical-line tokens with INDENT/DEDENT.

use super::ast::Span;
use super::SyntaxError;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Name(String),
    Number(String),
    /// Raw string literal text, prefix and quotes included.
    Str(String),
    Op(&'static str),
    Newline,
    Indent,
    Dedent,
    EndOfFile,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Comment {
    pub text: String,
    pub span: Span,
}

// Longest operators first.
const OPERATORS: &[&str] = &[
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "<<", ">>", "<=", ">=", "==", "!=",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@=", "+", "-", "*", "/", "%", "@", "&", "|",
    "^", "~", "<", ">", "(", ")", "[", "]", "{", "}", ",", ":", ".", ";", "=",
];

pub struct Lexed {
    pub tokens: Vec<Token>,
    pub comments: Vec<Comment>,
}

pub fn is_id_start(c: char) -> bool {
    c == '_' || c.is_ascii_alphabetic() || (!c.is_ascii() && c.is_alphabetic())
}

pub fn is_id_continue(c: char) -> bool {
    c == '_' || c.is_ascii_alphanumeric() || (!c.is_ascii() && c.is_alphanumeric())
}

fn is_string_prefix(p: &str) -> bool {
    matches!(
        p.to_ascii_lowercase().as_str(),
        "r" | "u" | "b" | "br" | "rb" | "f" | "fr" | "rf"
    )
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    base: usize,
    depth: usize,
    fragment: bool,
    open: Vec<usize>,
    indents: Vec<usize>,
    tokens: Vec<Token>,
    comments: Vec<Comment>,
    at_line_start: bool,
}

/// Tokenize a whole module.
pub fn tokenize(src: &str) -> Result<Lexed, SyntaxError> {
    let mut lx = Lexer::new(src, 0, 0);
    lx.run()?;
    Ok(Lexed {
        tokens: lx.tokens,
        comments: lx.comments,
    })
}

/// Tokenize an expression fragment (f-string replacement field) as if it
/// were inside brackets. Spans are shifted by `base`.
pub fn tokenize_fragment(fragment: &str, base: usize) -> Result<Vec<Token>, SyntaxError> {
    let mut lx = Lexer::new(fragment, base, 1);
    lx.at_line_start = false;
    lx.run()?;
    Ok(lx.tokens)
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str, base: usize, depth: usize) -> Self {
        Lexer {
            src,
            bytes: src.as_bytes(),
            pos: 0,
            base,
            depth,
            fragment: depth > 0,
            open: Vec::new(),
            indents: vec![0],
            tokens: Vec::new(),
            comments: Vec::new(),
            at_line_start: true,
        }
    }

    fn err(&self, at: usize, msg: impl Into<String>) -> SyntaxError {
        SyntaxError::new(at + self.base, msg)
    }

    fn push(&mut self, tok: Tok, start: usize, end: usize) {
        self.tokens.push(Token {
            tok,
            span: Span::new(start + self.base, end + self.base),
        });
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn last_is_newline(&self) -> bool {
        matches!(
            self.tokens.last().map(|t| &t.tok),
            None | Some(Tok::Newline) | Some(Tok::Indent) | Some(Tok::Dedent)
        )
    }

    fn run(&mut self) -> Result<(), SyntaxError> {
        while self.pos < self.bytes.len() {
            if self.at_line_start && self.depth == 0 {
                self.at_line_start = false;
                if self.handle_indentation()? {
                    continue;
                }
            }
            let c = match self.peek_char() {
                Some(c) => c,
                None => break,
            };
            let start = self.pos;
            match c {
                ' ' | '\t' | '\x0c' => self.pos += 1,
                '\r' | '\n' => {
                    if c == '\r' && self.bytes.get(self.pos + 1) == Some(&b'\n') {
                        self.pos += 2;
                    } else {
                        self.pos += 1;
                    }
                    if self.depth == 0 {
                        if !self.last_is_newline() {
                            self.push(Tok::Newline, start, start);
                        }
                        self.at_line_start = true;
                    }
                }
                '#' => self.comment(),
                '\\' => {
                    let next = self.bytes.get(self.pos + 1);
                    match next {
                        Some(b'\n') => self.pos += 2,
                        Some(b'\r') => {
                            self.pos += 2;
                            if self.bytes.get(self.pos) == Some(&b'\n') {
                                self.pos += 1;
                            }
                        }
                        None => self.pos += 1,
                        _ => return Err(self.err(start, "unexpected character after line continuation")),
                    }
                }
                '"' | '\'' => {
                    let end = self.string_end(self.pos)?;
                    self.push(Tok::Str(self.src[start..end].to_string()), start, end);
                    self.pos = end;
                }
                c if c.is_ascii_digit() => self.number()?,
                '.' if self.bytes.get(self.pos + 1).is_some_and(|b| b.is_ascii_digit()) => {
                    self.number()?
                }
                c if is_id_start(c) => self.name()?,
                _ => self.operator()?,
            }
        }
        if self.depth > 0 && !self.fragment {
            let at = self.open.last().copied().unwrap_or(self.pos);
            return Err(self.err(at, "bracket was never closed"));
        }
        let end = self.pos;
        if !self.last_is_newline() && !self.fragment {
            self.push(Tok::Newline, end, end);
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            self.push(Tok::Dedent, end, end);
        }
        self.push(Tok::EndOfFile, end, end);
        Ok(())
    }

    /// Returns true if the line was blank (and consumed).
    fn handle_indentation(&mut self) -> Result<bool, SyntaxError> {
        let mut col = 0usize;
        let mut p = self.pos;
        while p < self.bytes.len() {
            match self.bytes[p] {
                b' ' => col += 1,
                b'\t' => col = (col / 8 + 1) * 8,
                b'\x0c' => col = 0,
                _ => break,
            }
            p += 1;
        }
        match self.bytes.get(p) {
            None => {
                self.pos = p;
                return Ok(true);
            }
            Some(b'#') => {
                self.pos = p;
                self.comment();
                self.skip_newline();
                self.at_line_start = true;
                return Ok(true);
            }
            Some(b'\n') | Some(b'\r') => {
                self.pos = p;
                self.skip_newline();
                self.at_line_start = true;
                return Ok(true);
            }
            Some(b'\\') => {
                // A continuation at the start of a line: treat as part of the
                // logical line that follows.
            }
            _ => {}
        }
        self.pos = p;
        let current = *self.indents.last().expect("indent stack");
        if col > current {
            self.indents.push(col);
            self.push(Tok::Indent, p, p);
        } else if col < current {
            while col < *self.indents.last().expect("indent stack") {
                self.indents.pop();
                self.push(Tok::Dedent, p, p);
            }
            if col != *self.indents.last().expect("indent stack") {
                return Err(self.err(p, "unindent does not match any outer indentation level"));
            }
        }
        Ok(false)
    }

    fn skip_newline(&mut self) {
        if self.bytes.get(self.pos) == Some(&b'\r') {
            self.pos += 1;
        }
        if self.bytes.get(self.pos) == Some(&b'\n') {
            self.pos += 1;
        }
    }

    fn comment(&mut self) {
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' && self.bytes[self.pos] != b'\r'
        {
            self.pos += 1;
        }
        self.comments.push(Comment {
            text: self.src[start..self.pos].to_string(),
            span: Span::new(start + self.base, self.pos + self.base),
        });
    }

    /// `at` points at the opening quote. Returns the index one past the
    /// closing quote.
    fn string_end(&self, at: usize) -> Result<usize, SyntaxError> {
        let q = self.bytes[at];
        let triple = self.bytes.get(at + 1) == Some(&q) && self.bytes.get(at + 2) == Some(&q);
        let mut p = if triple { at + 3 } else { at + 1 };
        loop {
            match self.bytes.get(p) {
                None => {
                    return Err(self.err(
                        at,
                        if triple {
                            "unterminated triple-quoted string literal"
                        } else {
                            "unterminated string literal"
                        },
                    ))
                }
                Some(b'\\') => p += 2,
                Some(b'\n') if !triple => return Err(self.err(at, "unterminated string literal")),
                Some(&b) if b == q => {
                    if !triple {
                        return Ok(p + 1);
                    }
                    if self.bytes.get(p + 1) == Some(&q) && self.bytes.get(p + 2) == Some(&q) {
                        return Ok(p + 3);
                    }
                    p += 1;
                }
                Some(_) => p += 1,
            }
        }
    }

    fn name(&mut self) -> Result<(), SyntaxError> {
        let start = self.pos;
        while let Some(c) = self.peek_char() {
            if is_id_continue(c) {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        let word = &self.src[start..self.pos];
        if matches!(self.bytes.get(self.pos), Some(b'"') | Some(b'\'')) && is_string_prefix(word) {
            let end = self.string_end(self.pos)?;
            self.push(Tok::Str(self.src[start..end].to_string()), start, end);
            self.pos = end;
        } else {
            self.push(Tok::Name(word.to_string()), start, self.pos);
        }
        Ok(())
    }

    fn digits(&mut self, pred: impl Fn(u8) -> bool) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if pred(b) || (b == b'_' && self.bytes.get(self.pos + 1).is_some_and(|&n| pred(n))) {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self) -> Result<(), SyntaxError> {
        let start = self.pos;
        let b0 = self.bytes[self.pos];
        let b1 = self.bytes.get(self.pos + 1).map(|b| b.to_ascii_lowercase());
        if b0 == b'0' && matches!(b1, Some(b'x') | Some(b'o') | Some(b'b')) {
            self.pos += 2;
            match b1 {
                Some(b'x') => self.digits(|b| b.is_ascii_hexdigit()),
                Some(b'o') => self.digits(|b| (b'0'..=b'7').contains(&b)),
                _ => self.digits(|b| b == b'0' || b == b'1'),
            }
            if self.pos == start + 2 {
                return Err(self.err(start, "invalid number literal"));
            }
        } else {
            self.digits(|b| b.is_ascii_digit());
            if self.bytes.get(self.pos) == Some(&b'.') {
                self.pos += 1;
                self.digits(|b| b.is_ascii_digit());
            }
            if matches!(self.bytes.get(self.pos), Some(b'e') | Some(b'E')) {
                let save = self.pos;
                self.pos += 1;
                if matches!(self.bytes.get(self.pos), Some(b'+') | Some(b'-')) {
                    self.pos += 1;
                }
                if self.bytes.get(self.pos).is_some_and(|b| b.is_ascii_digit()) {
                    self.digits(|b| b.is_ascii_digit());
                } else {
                    self.pos = save;
                }
            }
            if matches!(self.bytes.get(self.pos), Some(b'j') | Some(b'J')) {
                self.pos += 1;
            }
        }
        if self.peek_char().is_some_and(is_id_continue) {
            return Err(self.err(self.pos, "invalid decimal literal"));
        }
        self.push(Tok::Number(self.src[start..self.pos].to_string()), start, self.pos);
        Ok(())
    }

    fn operator(&mut self) -> Result<(), SyntaxError> {
        let rest = &self.src[self.pos..];
        let op = OPERATORS
            .iter()
            .find(|op| rest.starts_with(**op))
            .copied()
            .ok_or_else(|| {
                self.err(
                    self.pos,
                    format!("invalid character '{}'", rest.chars().next().unwrap_or('?')),
                )
            })?;
        let start = self.pos;
        self.pos += op.len();
        match op {
            "(" | "[" | "{" => {
                self.depth += 1;
                self.open.push(start);
            }
            ")" | "]" | "}" => {
                if self.depth == 0 || (self.fragment && self.depth == 1) {
                    return Err(self.err(start, format!("unmatched '{op}'")));
                }
                self.depth -= 1;
                self.open.pop();
            }
            _ => {}
        }
        self.push(Tok::Op(op), start, self.pos);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().tokens.into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn indentation_tokens() {
        let t = toks("if x:\n    y = 1\nz\n");
        assert!(t.contains(&Tok::Indent));
        assert!(t.contains(&Tok::Dedent));
        assert_eq!(t.last(), Some(&Tok::EndOfFile));
    }

    #[test]
    fn brackets_join_lines() {
        let t = toks("f(1,\n  2)\n");
        assert_eq!(t.iter().filter(|t| **t == Tok::Newline).count(), 1);
    }

    #[test]
    fn prefixed_strings_are_single_tokens() {
        let t = toks("x = rb'a\\'b' + f\"{y}\"\n");
        assert!(t.contains(&Tok::Str("rb'a\\'b'".into())));
        assert!(t.contains(&Tok::Str("f\"{y}\"".into())));
    }

    #[test]
    fn numbers() {
        for n in ["0x1f", "1_000", "3.14e-2", "10j", ".5", "0o17", "0b101", "1."] {
            assert_eq!(toks(n)[0], Tok::Number(n.into()), "{n}");
        }
    }

    #[test]
    fn comments_are_collected() {
        let lx = tokenize("# head\nx = 1  # tail\n").unwrap();
        assert_eq!(lx.comments.len(), 2);
        assert_eq!(lx.comments[1].text, "# tail");
    }

    #[test]
    fn bad_dedent_is_an_error() {
        assert!(tokenize("if x:\n    a\n  b\n").is_err());
    }

    #[test]
    fn unterminated_string() {
        assert!(tokenize("x = 'abc\n").is_err());
    }
}
