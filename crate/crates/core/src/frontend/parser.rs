//! Recursive-descent parser for Python 3.10 source.

use super::ast::*;
use super::lexer::{tokenize_fragment, Tok, Token};
use super::SyntaxError;

const HARD_KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue",
    "def", "del", "elif", "else", "except", "finally", "for", "from", "global", "if", "import",
    "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try", "while",
    "with", "yield",
];

pub fn is_hard_keyword(s: &str) -> bool {
    HARD_KEYWORDS.contains(&s)
}

type PResult<T> = Result<T, SyntaxError>;

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    pub(crate) fn new(toks: Vec<Token>) -> Self {
        Parser { toks, pos: 0 }
    }

    // ----- token helpers -------------------------------------------------

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn prev_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.toks[self.pos - 1].span.end
        }
    }

    fn advance(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err_here(&self, msg: impl Into<String>) -> SyntaxError {
        SyntaxError::new(self.span().start, msg)
    }

    fn unexpected(&self) -> SyntaxError {
        let what = match self.peek() {
            Tok::Name(n) => format!("'{n}'"),
            Tok::Number(n) => format!("number {n}"),
            Tok::Str(_) => "string".to_string(),
            Tok::Op(o) => format!("'{o}'"),
            Tok::Newline => "newline".to_string(),
            Tok::Indent => "indent".to_string(),
            Tok::Dedent => "dedent".to_string(),
            Tok::EndOfFile => "end of file".to_string(),
        };
        self.err_here(format!("invalid syntax: unexpected {what}"))
    }

    fn is_op(&self, op: &str) -> bool {
        matches!(self.peek(), Tok::Op(o) if *o == op)
    }

    fn is_op_at(&self, n: usize, op: &str) -> bool {
        matches!(self.peek_at(n), Tok::Op(o) if *o == op)
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.is_op(op) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: &str) -> PResult<Span> {
        if self.is_op(op) {
            Ok(self.advance().span)
        } else {
            Err(self.err_here(format!("expected '{op}'")))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Name(n) if n == kw)
    }

    fn is_kw_at(&self, n: usize, kw: &str) -> bool {
        matches!(self.peek_at(n), Tok::Name(x) if x == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<Span> {
        if self.is_kw(kw) {
            Ok(self.advance().span)
        } else {
            Err(self.err_here(format!("expected '{kw}'")))
        }
    }

    fn is_name(&self) -> bool {
        matches!(self.peek(), Tok::Name(n) if !is_hard_keyword(n))
    }

    fn ident(&mut self) -> PResult<Ident> {
        match self.peek().clone() {
            Tok::Name(n) if !is_hard_keyword(&n) => {
                let sp = self.advance().span;
                Ok(Ident::new(n, sp))
            }
            _ => Err(self.err_here("expected identifier")),
        }
    }

    fn expect_newline(&mut self) -> PResult<()> {
        match self.peek() {
            Tok::Newline => {
                self.advance();
                Ok(())
            }
            Tok::EndOfFile => Ok(()),
            _ => Err(self.unexpected()),
        }
    }

    // ----- module / statements -------------------------------------------

    pub(crate) fn parse_module(&mut self) -> PResult<Module> {
        let mut body = Vec::new();
        while !matches!(self.peek(), Tok::EndOfFile) {
            if matches!(self.peek(), Tok::Newline) {
                self.advance();
                continue;
            }
            if matches!(self.peek(), Tok::Indent) {
                return Err(self.err_here("unexpected indent"));
            }
            body.extend(self.statement()?);
        }
        Ok(Module { body })
    }

    fn statement(&mut self) -> PResult<Vec<Stmt>> {
        if let Some(stmt) = self.compound_statement()? {
            return Ok(vec![stmt]);
        }
        self.simple_statements()
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect_op(":")?;
        if matches!(self.peek(), Tok::Newline) {
            self.advance();
            if !matches!(self.peek(), Tok::Indent) {
                return Err(self.err_here("expected an indented block"));
            }
            self.advance();
            let mut body = Vec::new();
            while !matches!(self.peek(), Tok::Dedent | Tok::EndOfFile) {
                body.extend(self.statement()?);
            }
            if matches!(self.peek(), Tok::Dedent) {
                self.advance();
            }
            Ok(body)
        } else {
            self.simple_statements()
        }
    }

    fn compound_statement(&mut self) -> PResult<Option<Stmt>> {
        let start = self.span().start;
        let name = match self.peek() {
            Tok::Name(n) => n.clone(),
            Tok::Op("@") => return self.decorated().map(Some),
            _ => return Ok(None),
        };
        let stmt = match name.as_str() {
            "if" => self.if_stmt()?,
            "while" => self.while_stmt()?,
            "for" => self.for_stmt(false, start)?,
            "try" => self.try_stmt()?,
            "with" => self.with_stmt(false, start)?,
            "def" => self.funcdef(Vec::new(), false, start)?,
            "class" => self.classdef(Vec::new(), start)?,
            "async" => {
                self.advance();
                if self.is_kw("def") {
                    self.funcdef(Vec::new(), true, start)?
                } else if self.is_kw("for") {
                    self.for_stmt(true, start)?
                } else if self.is_kw("with") {
                    self.with_stmt(true, start)?
                } else {
                    return Err(self.unexpected());
                }
            }
            "match" => {
                let save = self.pos;
                match self.match_stmt() {
                    Ok(Some(s)) => s,
                    Ok(None) => {
                        self.pos = save;
                        return Ok(None);
                    }
                    Err(e) => {
                        // Distinguish a genuinely malformed match statement
                        // from `match` used as an ordinary name.
                        self.pos = save;
                        if self.looks_like_match_header() {
                            return Err(e);
                        }
                        return Ok(None);
                    }
                }
            }
            _ => return Ok(None),
        };
        Ok(Some(stmt))
    }

    fn looks_like_match_header(&self) -> bool {
        // `match <something>:` followed by a newline and an indented `case`.
        let mut i = self.pos + 1;
        let mut depth = 0i32;
        while i < self.toks.len() {
            match &self.toks[i].tok {
                Tok::Op("(") | Tok::Op("[") | Tok::Op("{") => depth += 1,
                Tok::Op(")") | Tok::Op("]") | Tok::Op("}") => depth -= 1,
                Tok::Op(":") if depth == 0 => {
                    return matches!(self.toks.get(i + 1).map(|t| &t.tok), Some(Tok::Newline))
                        && matches!(self.toks.get(i + 2).map(|t| &t.tok), Some(Tok::Indent))
                        && matches!(self.toks.get(i + 3).map(|t| &t.tok), Some(Tok::Name(n)) if n == "case");
                }
                Tok::Newline | Tok::EndOfFile => return false,
                _ => {}
            }
            i += 1;
        }
        false
    }

    fn finish(&self, kind: StmtKind, start: usize) -> Stmt {
        Stmt {
            kind,
            span: Span::new(start, self.prev_end()),
        }
    }

    fn decorated(&mut self) -> PResult<Stmt> {
        let start = self.span().start;
        let mut decorators = Vec::new();
        while self.eat_op("@") {
            decorators.push(self.named_expression()?);
            self.expect_newline()?;
        }
        if self.is_kw("def") {
            self.funcdef(decorators, false, start)
        } else if self.is_kw("async") && self.is_kw_at(1, "def") {
            self.advance();
            self.funcdef(decorators, true, start)
        } else if self.is_kw("class") {
            self.classdef(decorators, start)
        } else {
            Err(self.err_here("expected 'def' or 'class' after decorator"))
        }
    }

    fn funcdef(&mut self, decorators: Vec<Expr>, is_async: bool, start: usize) -> PResult<Stmt> {
        self.expect_kw("def")?;
        let name = self.ident()?;
        self.expect_op("(")?;
        let params = self.parameters(")", true)?;
        self.expect_op(")")?;
        let returns = if self.eat_op("->") {
            Some(Box::new(self.expression()?))
        } else {
            None
        };
        let body = self.block()?;
        Ok(self.finish(
            StmtKind::FunctionDef(FunctionDef {
                is_async,
                decorators,
                name,
                params,
                returns,
                body,
            }),
            start,
        ))
    }

    fn classdef(&mut self, decorators: Vec<Expr>, start: usize) -> PResult<Stmt> {
        self.expect_kw("class")?;
        let name = self.ident()?;
        let bases = if self.eat_op("(") {
            let args = self.call_args()?;
            self.expect_op(")")?;
            args
        } else {
            Vec::new()
        };
        let body = self.block()?;
        Ok(self.finish(
            StmtKind::ClassDef(ClassDef {
                decorators,
                name,
                bases,
                body,
            }),
            start,
        ))
    }

    /// Parameter list up to (not including) `close`.
    fn parameters(&mut self, close: &str, annotations: bool) -> PResult<Parameters> {
        let mut params = Parameters::default();
        let mut seen_star = false;
        let mut seen_default = false;
        while !self.is_op(close) {
            if self.eat_op("/") {
                if seen_star || !params.posonly.is_empty() || params.args.is_empty() {
                    return Err(self.err_here("invalid '/' in parameter list"));
                }
                params.posonly = std::mem::take(&mut params.args);
            } else if self.eat_op("**") {
                params.kwarg = Some(self.param(annotations, false)?);
                self.eat_op(",");
                if !self.is_op(close) {
                    return Err(self.err_here("parameter after '**' parameter"));
                }
                break;
            } else if self.eat_op("*") {
                if seen_star {
                    return Err(self.err_here("duplicate '*' in parameter list"));
                }
                seen_star = true;
                if !self.is_op(",") && !self.is_op(close) {
                    params.vararg = Some(self.param(annotations, false)?);
                }
            } else {
                let p = self.param(annotations, true)?;
                if seen_star {
                    params.kwonly.push(p);
                } else {
                    if p.default.is_some() {
                        seen_default = true;
                    } else if seen_default {
                        return Err(self.err_here("non-default argument follows default argument"));
                    }
                    params.args.push(p);
                }
            }
            if !self.eat_op(",") {
                break;
            }
        }
        Ok(params)
    }

    fn param(&mut self, annotations: bool, allow_default: bool) -> PResult<Param> {
        let name = self.ident()?;
        let annotation = if annotations && self.eat_op(":") {
            Some(Box::new(self.expression()?))
        } else {
            None
        };
        let default = if allow_default && self.eat_op("=") {
            Some(Box::new(self.expression()?))
        } else {
            None
        };
        Ok(Param {
            name,
            annotation,
            default,
        })
    }

    fn if_stmt(&mut self) -> PResult<Stmt> {
        let start = self.span().start;
        self.advance(); // if / elif
        let test = self.named_expression()?;
        let body = self.block()?;
        let orelse = if self.is_kw("elif") {
            vec![self.if_stmt()?]
        } else if self.eat_kw("else") {
            self.block()?
        } else {
            Vec::new()
        };
        Ok(self.finish(StmtKind::If { test, body, orelse }, start))
    }

    fn while_stmt(&mut self) -> PResult<Stmt> {
        let start = self.span().start;
        self.expect_kw("while")?;
        let test = self.named_expression()?;
        let body = self.block()?;
        let orelse = if self.eat_kw("else") {
            self.block()?
        } else {
            Vec::new()
        };
        Ok(self.finish(StmtKind::While { test, body, orelse }, start))
    }

    fn for_stmt(&mut self, is_async: bool, start: usize) -> PResult<Stmt> {
        self.expect_kw("for")?;
        let target = self.target_list()?;
        self.expect_kw("in")?;
        let iter = self.star_expressions()?;
        let body = self.block()?;
        let orelse = if self.eat_kw("else") {
            self.block()?
        } else {
            Vec::new()
        };
        Ok(self.finish(
            StmtKind::For {
                is_async,
                target,
                iter,
                body,
                orelse,
            },
            start,
        ))
    }

    fn try_stmt(&mut self) -> PResult<Stmt> {
        let start = self.span().start;
        self.expect_kw("try")?;
        let body = self.block()?;
        let mut handlers = Vec::new();
        while self.is_kw("except") {
            let hstart = self.advance().span.start;
            let (kind, name) = if self.is_op(":") {
                (None, None)
            } else {
                let e = self.expression()?;
                if self.is_op(",") {
                    return Err(self.err_here("multiple exception types must be parenthesized"));
                }
                let name = if self.eat_kw("as") {
                    Some(self.ident()?)
                } else {
                    None
                };
                (Some(e), name)
            };
            let hbody = self.block()?;
            handlers.push(ExceptHandler {
                kind,
                name,
                body: hbody,
                span: Span::new(hstart, self.prev_end()),
            });
        }
        let orelse = if !handlers.is_empty() && self.eat_kw("else") {
            self.block()?
        } else {
            Vec::new()
        };
        let finalbody = if self.eat_kw("finally") {
            self.block()?
        } else {
            Vec::new()
        };
        if handlers.is_empty() && finalbody.is_empty() {
            return Err(self.err_here("expected 'except' or 'finally' block"));
        }
        Ok(self.finish(
            StmtKind::Try {
                body,
                handlers,
                orelse,
                finalbody,
            },
            start,
        ))
    }

    fn with_stmt(&mut self, is_async: bool, start: usize) -> PResult<Stmt> {
        self.expect_kw("with")?;
        let items = if self.is_op("(") {
            let save = self.pos;
            match self.parenthesized_with_items() {
                Ok(items) => items,
                Err(_) => {
                    self.pos = save;
                    self.with_items()?
                }
            }
        } else {
            self.with_items()?
        };
        let body = self.block()?;
        Ok(self.finish(
            StmtKind::With {
                is_async,
                items,
                body,
            },
            start,
        ))
    }

    fn parenthesized_with_items(&mut self) -> PResult<Vec<WithItem>> {
        self.expect_op("(")?;
        let mut items = Vec::new();
        while !self.is_op(")") {
            items.push(self.with_item()?);
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        if !self.is_op(":") || items.is_empty() {
            return Err(self.err_here("expected ':'"));
        }
        Ok(items)
    }

    fn with_items(&mut self) -> PResult<Vec<WithItem>> {
        let mut items = vec![self.with_item()?];
        while self.eat_op(",") {
            items.push(self.with_item()?);
        }
        Ok(items)
    }

    fn with_item(&mut self) -> PResult<WithItem> {
        let context = self.expression()?;
        let vars = if self.eat_kw("as") {
            Some(self.single_target()?)
        } else {
            None
        };
        Ok(WithItem { context, vars })
    }

    fn match_stmt(&mut self) -> PResult<Option<Stmt>> {
        let start = self.span().start;
        self.advance(); // match
        if matches!(self.peek(), Tok::Newline | Tok::EndOfFile)
            || self.is_op("=")
            || self.is_op(".")
            || self.is_op(":")
        {
            return Ok(None);
        }
        let first = self.star_named_expression()?;
        let subject = if self.is_op(",") {
            let mut elts = vec![first];
            while self.eat_op(",") {
                if self.is_op(":") {
                    break;
                }
                elts.push(self.star_named_expression()?);
            }
            let sp = elts[0].span.to(elts[elts.len() - 1].span);
            Expr::new(ExprKind::Tuple(elts), sp)
        } else {
            first
        };
        if !self.is_op(":") {
            return Ok(None);
        }
        self.advance();
        if !matches!(self.peek(), Tok::Newline) {
            return Ok(None);
        }
        self.advance();
        if !matches!(self.peek(), Tok::Indent) {
            return Ok(None);
        }
        self.advance();
        let mut cases = Vec::new();
        while self.is_kw("case") {
            self.advance();
            let pattern = self.patterns()?;
            let guard = if self.eat_kw("if") {
                Some(self.named_expression()?)
            } else {
                None
            };
            let body = self.block()?;
            cases.push(MatchCase {
                pattern,
                guard,
                body,
            });
        }
        if cases.is_empty() {
            return Err(self.err_here("expected 'case' block"));
        }
        if matches!(self.peek(), Tok::Dedent) {
            self.advance();
        } else if !matches!(self.peek(), Tok::EndOfFile) {
            return Err(self.unexpected());
        }
        Ok(Some(self.finish(StmtKind::Match { subject, cases }, start)))
    }

    fn simple_statements(&mut self) -> PResult<Vec<Stmt>> {
        let mut out = vec![self.simple_statement()?];
        while self.eat_op(";") {
            if matches!(self.peek(), Tok::Newline | Tok::EndOfFile) {
                break;
            }
            out.push(self.simple_statement()?);
        }
        self.expect_newline()?;
        Ok(out)
    }

    fn simple_statement(&mut self) -> PResult<Stmt> {
        let start = self.span().start;
        let kw = match self.peek() {
            Tok::Name(n) => n.clone(),
            _ => String::new(),
        };
        let kind = match kw.as_str() {
            "pass" => {
                self.advance();
                StmtKind::Pass
            }
            "break" => {
                self.advance();
                StmtKind::Break
            }
            "continue" => {
                self.advance();
                StmtKind::Continue
            }
            "return" => {
                self.advance();
                if self.at_stmt_end() {
                    StmtKind::Return(None)
                } else {
                    StmtKind::Return(Some(self.star_expressions()?))
                }
            }
            "raise" => {
                self.advance();
                if self.at_stmt_end() {
                    StmtKind::Raise {
                        exc: None,
                        cause: None,
                    }
                } else {
                    let exc = self.expression()?;
                    let cause = if self.eat_kw("from") {
                        Some(self.expression()?)
                    } else {
                        None
                    };
                    StmtKind::Raise {
                        exc: Some(exc),
                        cause,
                    }
                }
            }
            "global" | "nonlocal" => {
                self.advance();
                let mut names = vec![self.ident()?];
                while self.eat_op(",") {
                    names.push(self.ident()?);
                }
                if kw == "global" {
                    StmtKind::Global(names)
                } else {
                    StmtKind::Nonlocal(names)
                }
            }
            "del" => {
                self.advance();
                let mut targets = vec![self.del_target()?];
                while self.eat_op(",") {
                    if self.at_stmt_end() {
                        break;
                    }
                    targets.push(self.del_target()?);
                }
                StmtKind::Delete(targets)
            }
            "assert" => {
                self.advance();
                let test = self.expression()?;
                let msg = if self.eat_op(",") {
                    Some(self.expression()?)
                } else {
                    None
                };
                StmtKind::Assert { test, msg }
            }
            "import" => {
                self.advance();
                let mut names = vec![self.dotted_as_name()?];
                while self.eat_op(",") {
                    names.push(self.dotted_as_name()?);
                }
                StmtKind::Import(names)
            }
            "from" => self.import_from()?,
            _ => self.expression_statement()?,
        };
        Ok(self.finish(kind, start))
    }

    fn at_stmt_end(&self) -> bool {
        matches!(self.peek(), Tok::Newline | Tok::EndOfFile) || self.is_op(";")
    }

    fn dotted_name(&mut self) -> PResult<Vec<Ident>> {
        let mut parts = vec![self.ident()?];
        while self.eat_op(".") {
            parts.push(self.ident()?);
        }
        Ok(parts)
    }

    fn dotted_as_name(&mut self) -> PResult<Alias> {
        let name = self.dotted_name()?;
        let asname = if self.eat_kw("as") {
            Some(self.ident()?)
        } else {
            None
        };
        Ok(Alias { name, asname })
    }

    fn import_from(&mut self) -> PResult<StmtKind> {
        self.expect_kw("from")?;
        let mut level = 0;
        loop {
            if self.eat_op(".") {
                level += 1;
            } else if self.eat_op("...") {
                level += 3;
            } else {
                break;
            }
        }
        let module = if self.is_kw("import") {
            if level == 0 {
                return Err(self.err_here("expected module name"));
            }
            None
        } else {
            Some(self.dotted_name()?)
        };
        self.expect_kw("import")?;
        if self.eat_op("*") {
            return Ok(StmtKind::ImportFrom {
                module,
                level,
                names: Vec::new(),
                star: true,
            });
        }
        let paren = self.eat_op("(");
        let mut names = Vec::new();
        loop {
            let name = vec![self.ident()?];
            let asname = if self.eat_kw("as") {
                Some(self.ident()?)
            } else {
                None
            };
            names.push(Alias { name, asname });
            if !self.eat_op(",") {
                break;
            }
            if paren && self.is_op(")") {
                break;
            }
        }
        if paren {
            self.expect_op(")")?;
        }
        Ok(StmtKind::ImportFrom {
            module,
            level,
            names,
            star: false,
        })
    }

    fn expression_statement(&mut self) -> PResult<StmtKind> {
        let paren_start = self.is_op("(");
        let first = if self.is_kw("yield") {
            self.yield_expr()?
        } else {
            self.star_expressions()?
        };
        if self.eat_op(":") {
            let annotation = self.expression()?;
            let value = if self.eat_op("=") {
                Some(self.assign_value()?)
            } else {
                None
            };
            check_target(&first, TargetKind::Annotated)?;
            let simple = !paren_start && matches!(first.kind, ExprKind::Name(_));
            return Ok(StmtKind::AnnAssign {
                target: first,
                annotation,
                value,
                simple,
            });
        }
        if let Some(op) = self.aug_op() {
            self.advance();
            check_target(&first, TargetKind::Augmented)?;
            let value = self.assign_value()?;
            return Ok(StmtKind::AugAssign {
                target: first,
                op,
                value,
            });
        }
        if self.is_op("=") {
            let mut targets = vec![first];
            let mut value;
            loop {
                self.expect_op("=")?;
                value = self.assign_value()?;
                if self.is_op("=") {
                    targets.push(value);
                } else {
                    break;
                }
            }
            for t in &targets {
                check_target(t, TargetKind::Assign)?;
            }
            return Ok(StmtKind::Assign { targets, value });
        }
        if let ExprKind::Starred(_) = first.kind {
            return Err(SyntaxError::new(first.span.start, "can't use starred expression here"));
        }
        Ok(StmtKind::Expr(first))
    }

    fn assign_value(&mut self) -> PResult<Expr> {
        if self.is_kw("yield") {
            self.yield_expr()
        } else {
            self.star_expressions()
        }
    }

    fn aug_op(&self) -> Option<BinOp> {
        let op = match self.peek() {
            Tok::Op(o) => *o,
            _ => return None,
        };
        Some(match op {
            "+=" => BinOp::Add,
            "-=" => BinOp::Sub,
            "*=" => BinOp::Mult,
            "@=" => BinOp::MatMult,
            "/=" => BinOp::Div,
            "%=" => BinOp::Mod,
            "**=" => BinOp::Pow,
            "<<=" => BinOp::LShift,
            ">>=" => BinOp::RShift,
            "|=" => BinOp::BitOr,
            "^=" => BinOp::BitXor,
            "&=" => BinOp::BitAnd,
            "//=" => BinOp::FloorDiv,
            _ => return None,
        })
    }

    // ----- targets ---------------------------------------------------------

    /// `for` / comprehension targets: a comma list of star targets.
    fn target_list(&mut self) -> PResult<Expr> {
        let start = self.span().start;
        let first = self.star_target()?;
        if !self.is_op(",") {
            check_target(&first, TargetKind::Assign)?;
            return Ok(first);
        }
        let mut elts = vec![first];
        while self.eat_op(",") {
            if self.is_kw("in") || self.is_op("=") {
                break;
            }
            elts.push(self.star_target()?);
        }
        let e = Expr::new(ExprKind::Tuple(elts), Span::new(start, self.prev_end()));
        check_target(&e, TargetKind::Assign)?;
        Ok(e)
    }

    fn star_target(&mut self) -> PResult<Expr> {
        if self.is_op("*") {
            let start = self.advance().span.start;
            let inner = self.bitwise_or()?;
            return Ok(Expr::new(
                ExprKind::Starred(Box::new(inner)),
                Span::new(start, self.prev_end()),
            ));
        }
        self.bitwise_or()
    }

    fn single_target(&mut self) -> PResult<Expr> {
        let e = self.star_target()?;
        check_target(&e, TargetKind::Assign)?;
        Ok(e)
    }

    fn del_target(&mut self) -> PResult<Expr> {
        let e = self.bitwise_or()?;
        check_target(&e, TargetKind::Delete)?;
        Ok(e)
    }

    // ----- expressions -----------------------------------------------------

    pub(crate) fn star_expressions(&mut self) -> PResult<Expr> {
        let start = self.span().start;
        let first = self.star_expression()?;
        if !self.is_op(",") {
            return Ok(first);
        }
        let mut elts = vec![first];
        while self.eat_op(",") {
            if self.at_expr_list_end() {
                break;
            }
            elts.push(self.star_expression()?);
        }
        Ok(Expr::new(ExprKind::Tuple(elts), Span::new(start, self.prev_end())))
    }

    fn at_expr_list_end(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Newline | Tok::EndOfFile | Tok::Op("=") | Tok::Op(")") | Tok::Op(":") | Tok::Op(";")
                | Tok::Op("]") | Tok::Op("}")
        ) || self.aug_op().is_some()
    }

    fn star_expression(&mut self) -> PResult<Expr> {
        if self.is_op("*") {
            let start = self.advance().span.start;
            let inner = self.bitwise_or()?;
            return Ok(Expr::new(
                ExprKind::Starred(Box::new(inner)),
                Span::new(start, self.prev_end()),
            ));
        }
        self.expression()
    }

    fn star_named_expression(&mut self) -> PResult<Expr> {
        if self.is_op("*") {
            let start = self.advance().span.start;
            let inner = self.bitwise_or()?;
            return Ok(Expr::new(
                ExprKind::Starred(Box::new(inner)),
                Span::new(start, self.prev_end()),
            ));
        }
        self.named_expression()
    }

    fn named_expression(&mut self) -> PResult<Expr> {
        if self.is_name() && self.is_op_at(1, ":=") {
            let target = self.ident()?;
            self.advance();
            let value = self.expression()?;
            let sp = target.span.to(value.span);
            return Ok(Expr::new(
                ExprKind::NamedExpr {
                    target,
                    value: Box::new(value),
                },
                sp,
            ));
        }
        let e = self.expression()?;
        if self.is_op(":=") {
            return Err(self.err_here("cannot use assignment expressions with this target"));
        }
        Ok(e)
    }

    pub(crate) fn expression(&mut self) -> PResult<Expr> {
        if self.is_kw("lambda") {
            return self.lambda();
        }
        let body = self.disjunction()?;
        if self.is_kw("if") {
            self.advance();
            let test = self.disjunction()?;
            self.expect_kw("else")?;
            let orelse = self.expression()?;
            let sp = body.span.to(orelse.span);
            return Ok(Expr::new(
                ExprKind::IfExp {
                    test: Box::new(test),
                    body: Box::new(body),
                    orelse: Box::new(orelse),
                },
                sp,
            ));
        }
        Ok(body)
    }

    fn lambda(&mut self) -> PResult<Expr> {
        let start = self.expect_kw("lambda")?.start;
        let params = self.parameters(":", false)?;
        self.expect_op(":")?;
        let body = self.expression()?;
        let sp = Span::new(start, body.span.end);
        Ok(Expr::new(
            ExprKind::Lambda {
                params: Box::new(params),
                body: Box::new(body),
            },
            sp,
        ))
    }

    fn disjunction(&mut self) -> PResult<Expr> {
        self.bool_chain("or", BoolOp::Or, Self::conjunction)
    }

    fn conjunction(&mut self) -> PResult<Expr> {
        self.bool_chain("and", BoolOp::And, Self::inversion)
    }

    fn bool_chain(
        &mut self,
        kw: &str,
        op: BoolOp,
        next: fn(&mut Self) -> PResult<Expr>,
    ) -> PResult<Expr> {
        let first = next(self)?;
        if !self.is_kw(kw) {
            return Ok(first);
        }
        let mut values = vec![first];
        while self.eat_kw(kw) {
            values.push(next(self)?);
        }
        let sp = values[0].span.to(values[values.len() - 1].span);
        Ok(Expr::new(ExprKind::BoolOp { op, values }, sp))
    }

    fn inversion(&mut self) -> PResult<Expr> {
        if self.is_kw("not") {
            let start = self.advance().span.start;
            let operand = self.inversion()?;
            let sp = Span::new(start, operand.span.end);
            return Ok(Expr::new(
                ExprKind::UnaryOp {
                    op: UnaryOp::Not,
                    operand: Box::new(operand),
                },
                sp,
            ));
        }
        self.comparison()
    }

    fn comp_op(&mut self) -> Option<CmpOp> {
        let op = match self.peek() {
            Tok::Op("==") => CmpOp::Eq,
            Tok::Op("!=") => CmpOp::NotEq,
            Tok::Op("<") => CmpOp::Lt,
            Tok::Op("<=") => CmpOp::LtE,
            Tok::Op(">") => CmpOp::Gt,
            Tok::Op(">=") => CmpOp::GtE,
            Tok::Name(n) if n == "in" => CmpOp::In,
            Tok::Name(n) if n == "is" => {
                if self.is_kw_at(1, "not") {
                    self.advance();
                    CmpOp::IsNot
                } else {
                    CmpOp::Is
                }
            }
            Tok::Name(n) if n == "not" && self.is_kw_at(1, "in") => {
                self.advance();
                CmpOp::NotIn
            }
            _ => return None,
        };
        self.advance();
        Some(op)
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let left = self.bitwise_or()?;
        let mut ops = Vec::new();
        let mut comparators = Vec::new();
        while let Some(op) = self.comp_op() {
            ops.push(op);
            comparators.push(self.bitwise_or()?);
        }
        if ops.is_empty() {
            return Ok(left);
        }
        let sp = left.span.to(comparators[comparators.len() - 1].span);
        Ok(Expr::new(
            ExprKind::Compare {
                left: Box::new(left),
                ops,
                comparators,
            },
            sp,
        ))
    }

    fn binary_level(
        &mut self,
        ops: &[(&str, BinOp)],
        next: fn(&mut Self) -> PResult<Expr>,
    ) -> PResult<Expr> {
        let mut left = next(self)?;
        'outer: loop {
            for (sym, op) in ops {
                if self.is_op(sym) {
                    self.advance();
                    let right = next(self)?;
                    let sp = left.span.to(right.span);
                    left = Expr::new(
                        ExprKind::BinOp {
                            left: Box::new(left),
                            op: *op,
                            right: Box::new(right),
                        },
                        sp,
                    );
                    continue 'outer;
                }
            }
            return Ok(left);
        }
    }

    fn bitwise_or(&mut self) -> PResult<Expr> {
        self.binary_level(&[("|", BinOp::BitOr)], Self::bitwise_xor)
    }

    fn bitwise_xor(&mut self) -> PResult<Expr> {
        self.binary_level(&[("^", BinOp::BitXor)], Self::bitwise_and)
    }

    fn bitwise_and(&mut self) -> PResult<Expr> {
        self.binary_level(&[("&", BinOp::BitAnd)], Self::shift_expr)
    }

    fn shift_expr(&mut self) -> PResult<Expr> {
        self.binary_level(&[("<<", BinOp::LShift), (">>", BinOp::RShift)], Self::sum)
    }

    fn sum(&mut self) -> PResult<Expr> {
        self.binary_level(&[("+", BinOp::Add), ("-", BinOp::Sub)], Self::term)
    }

    fn term(&mut self) -> PResult<Expr> {
        self.binary_level(
            &[
                ("*", BinOp::Mult),
                ("/", BinOp::Div),
                ("//", BinOp::FloorDiv),
                ("%", BinOp::Mod),
                ("@", BinOp::MatMult),
            ],
            Self::factor,
        )
    }

    fn factor(&mut self) -> PResult<Expr> {
        let op = match self.peek() {
            Tok::Op("+") => UnaryOp::UAdd,
            Tok::Op("-") => UnaryOp::USub,
            Tok::Op("~") => UnaryOp::Invert,
            _ => return self.power(),
        };
        let start = self.advance().span.start;
        let operand = self.factor()?;
        let sp = Span::new(start, operand.span.end);
        Ok(Expr::new(
            ExprKind::UnaryOp {
                op,
                operand: Box::new(operand),
            },
            sp,
        ))
    }

    fn power(&mut self) -> PResult<Expr> {
        let base = self.await_primary()?;
        if self.eat_op("**") {
            let exp = self.factor()?;
            let sp = base.span.to(exp.span);
            return Ok(Expr::new(
                ExprKind::BinOp {
                    left: Box::new(base),
                    op: BinOp::Pow,
                    right: Box::new(exp),
                },
                sp,
            ));
        }
        Ok(base)
    }

    fn await_primary(&mut self) -> PResult<Expr> {
        if self.is_kw("await") {
            let start = self.advance().span.start;
            let e = self.primary()?;
            let sp = Span::new(start, e.span.end);
            return Ok(Expr::new(ExprKind::Await(Box::new(e)), sp));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        let mut e = self.atom()?;
        loop {
            if self.is_op(".") {
                self.advance();
                let attr = self.ident()?;
                let sp = e.span.to(attr.span);
                e = Expr::new(
                    ExprKind::Attribute {
                        value: Box::new(e),
                        attr,
                    },
                    sp,
                );
            } else if self.is_op("(") {
                self.advance();
                let args = self.call_args()?;
                let end = self.expect_op(")")?.end;
                let sp = Span::new(e.span.start, end);
                e = Expr::new(
                    ExprKind::Call {
                        func: Box::new(e),
                        args,
                    },
                    sp,
                );
            } else if self.is_op("[") {
                self.advance();
                let slice = self.slices()?;
                let end = self.expect_op("]")?.end;
                let sp = Span::new(e.span.start, end);
                e = Expr::new(
                    ExprKind::Subscript {
                        value: Box::new(e),
                        slice: Box::new(slice),
                    },
                    sp,
                );
            } else {
                return Ok(e);
            }
        }
    }

    fn call_args(&mut self) -> PResult<Vec<CallArg>> {
        let mut args = Vec::new();
        let mut seen_keyword = false;
        while !self.is_op(")") {
            if self.eat_op("**") {
                args.push(CallArg::DoubleStarred(self.expression()?));
                seen_keyword = true;
            } else if self.is_op("*") {
                self.advance();
                args.push(CallArg::Starred(self.expression()?));
            } else if self.is_name() && self.is_op_at(1, "=") {
                let name = self.ident()?;
                self.advance();
                let value = self.expression()?;
                args.push(CallArg::Keyword { name, value });
                seen_keyword = true;
            } else {
                let e = self.named_expression()?;
                if self.is_kw("for") || (self.is_kw("async") && self.is_kw_at(1, "for")) {
                    let generators = self.comprehension_clauses()?;
                    let sp = Span::new(e.span.start, self.prev_end());
                    let g = Expr::new(
                        ExprKind::GeneratorExp {
                            elt: Box::new(e),
                            generators,
                        },
                        sp,
                    );
                    if !args.is_empty() || !self.is_op(")") {
                        return Err(SyntaxError::new(
                            g.span.start,
                            "generator expression must be parenthesized",
                        ));
                    }
                    args.push(CallArg::Positional(g));
                    break;
                }
                if seen_keyword && args.iter().any(|a| matches!(a, CallArg::DoubleStarred(_))) {
                    return Err(SyntaxError::new(
                        e.span.start,
                        "positional argument follows keyword argument unpacking",
                    ));
                }
                if seen_keyword {
                    return Err(SyntaxError::new(
                        e.span.start,
                        "positional argument follows keyword argument",
                    ));
                }
                args.push(CallArg::Positional(e));
            }
            if !self.eat_op(",") {
                break;
            }
        }
        Ok(args)
    }

    fn slices(&mut self) -> PResult<Expr> {
        let start = self.span().start;
        let first = self.slice()?;
        if !self.is_op(",") {
            return Ok(first);
        }
        let mut elts = vec![first];
        while self.eat_op(",") {
            if self.is_op("]") {
                break;
            }
            elts.push(self.slice()?);
        }
        Ok(Expr::new(ExprKind::Tuple(elts), Span::new(start, self.prev_end())))
    }

    fn slice(&mut self) -> PResult<Expr> {
        let start = self.span().start;
        let lower = if self.is_op(":") {
            None
        } else {
            let e = self.named_expression()?;
            if !self.is_op(":") {
                return Ok(e);
            }
            Some(Box::new(e))
        };
        self.expect_op(":")?;
        let upper = if self.is_op(":") || self.is_op("]") || self.is_op(",") {
            None
        } else {
            Some(Box::new(self.expression()?))
        };
        let step = if self.eat_op(":") {
            if self.is_op("]") || self.is_op(",") {
                None
            } else {
                Some(Box::new(self.expression()?))
            }
        } else {
            None
        };
        Ok(Expr::new(
            ExprKind::Slice { lower, upper, step },
            Span::new(start, self.prev_end()),
        ))
    }

    fn atom(&mut self) -> PResult<Expr> {
        let tok = self.peek().clone();
        let sp = self.span();
        match tok {
            Tok::Name(n) => {
                let kind = match n.as_str() {
                    "True" => ExprKind::Constant(Const::True),
                    "False" => ExprKind::Constant(Const::False),
                    "None" => ExprKind::Constant(Const::None),
                    _ if is_hard_keyword(&n) => return Err(self.unexpected()),
                    _ => ExprKind::Name(Ident::new(n, sp)),
                };
                self.advance();
                Ok(Expr::new(kind, sp))
            }
            Tok::Number(n) => {
                self.advance();
                Ok(Expr::new(ExprKind::Num(n), sp))
            }
            Tok::Str(_) => self.strings(),
            Tok::Op("...") => {
                self.advance();
                Ok(Expr::new(ExprKind::Constant(Const::Ellipsis), sp))
            }
            Tok::Op("(") => self.paren_atom(),
            Tok::Op("[") => self.list_atom(),
            Tok::Op("{") => self.brace_atom(),
            _ => Err(self.unexpected()),
        }
    }

    fn paren_atom(&mut self) -> PResult<Expr> {
        let start = self.expect_op("(")?.start;
        if self.is_op(")") {
            let end = self.advance().span.end;
            return Ok(Expr::new(ExprKind::Tuple(Vec::new()), Span::new(start, end)));
        }
        if self.is_kw("yield") {
            let e = self.yield_expr()?;
            self.expect_op(")")?;
            return Ok(e);
        }
        let first = self.star_named_expression()?;
        if self.is_kw("for") || (self.is_kw("async") && self.is_kw_at(1, "for")) {
            let generators = self.comprehension_clauses()?;
            let end = self.expect_op(")")?.end;
            return Ok(Expr::new(
                ExprKind::GeneratorExp {
                    elt: Box::new(first),
                    generators,
                },
                Span::new(start, end),
            ));
        }
        if self.is_op(")") {
            self.advance();
            if matches!(first.kind, ExprKind::Starred(_)) {
                return Err(SyntaxError::new(first.span.start, "can't use starred expression here"));
            }
            return Ok(first);
        }
        let mut elts = vec![first];
        while self.eat_op(",") {
            if self.is_op(")") {
                break;
            }
            elts.push(self.star_named_expression()?);
        }
        let end = self.expect_op(")")?.end;
        Ok(Expr::new(ExprKind::Tuple(elts), Span::new(start, end)))
    }

    fn list_atom(&mut self) -> PResult<Expr> {
        let start = self.expect_op("[")?.start;
        if self.is_op("]") {
            let end = self.advance().span.end;
            return Ok(Expr::new(ExprKind::List(Vec::new()), Span::new(start, end)));
        }
        let first = self.star_named_expression()?;
        if self.is_kw("for") || (self.is_kw("async") && self.is_kw_at(1, "for")) {
            let generators = self.comprehension_clauses()?;
            let end = self.expect_op("]")?.end;
            return Ok(Expr::new(
                ExprKind::ListComp {
                    elt: Box::new(first),
                    generators,
                },
                Span::new(start, end),
            ));
        }
        let mut elts = vec![first];
        while self.eat_op(",") {
            if self.is_op("]") {
                break;
            }
            elts.push(self.star_named_expression()?);
        }
        let end = self.expect_op("]")?.end;
        Ok(Expr::new(ExprKind::List(elts), Span::new(start, end)))
    }

    fn brace_atom(&mut self) -> PResult<Expr> {
        let start = self.expect_op("{")?.start;
        if self.is_op("}") {
            let end = self.advance().span.end;
            return Ok(Expr::new(ExprKind::Dict(Vec::new()), Span::new(start, end)));
        }
        // Dict display or comprehension.
        let first_item = if self.eat_op("**") {
            Some(DictItem::Unpack(self.bitwise_or()?))
        } else {
            None
        };
        let first_item = match first_item {
            Some(item) => item,
            None => {
                let key = self.star_named_expression()?;
                if self.eat_op(":") {
                    let value = self.expression()?;
                    if self.is_kw("for") || (self.is_kw("async") && self.is_kw_at(1, "for")) {
                        let generators = self.comprehension_clauses()?;
                        let end = self.expect_op("}")?.end;
                        return Ok(Expr::new(
                            ExprKind::DictComp {
                                key: Box::new(key),
                                value: Box::new(value),
                                generators,
                            },
                            Span::new(start, end),
                        ));
                    }
                    DictItem::Pair(key, value)
                } else {
                    // Set display or comprehension.
                    if self.is_kw("for") || (self.is_kw("async") && self.is_kw_at(1, "for")) {
                        let generators = self.comprehension_clauses()?;
                        let end = self.expect_op("}")?.end;
                        return Ok(Expr::new(
                            ExprKind::SetComp {
                                elt: Box::new(key),
                                generators,
                            },
                            Span::new(start, end),
                        ));
                    }
                    let mut elts = vec![key];
                    while self.eat_op(",") {
                        if self.is_op("}") {
                            break;
                        }
                        elts.push(self.star_named_expression()?);
                    }
                    let end = self.expect_op("}")?.end;
                    return Ok(Expr::new(ExprKind::Set(elts), Span::new(start, end)));
                }
            }
        };
        let mut items = vec![first_item];
        while self.eat_op(",") {
            if self.is_op("}") {
                break;
            }
            if self.eat_op("**") {
                items.push(DictItem::Unpack(self.bitwise_or()?));
            } else {
                let k = self.expression()?;
                self.expect_op(":")?;
                let v = self.expression()?;
                items.push(DictItem::Pair(k, v));
            }
        }
        let end = self.expect_op("}")?.end;
        Ok(Expr::new(ExprKind::Dict(items), Span::new(start, end)))
    }

    fn comprehension_clauses(&mut self) -> PResult<Vec<Comprehension>> {
        let mut gens = Vec::new();
        loop {
            let is_async = if self.is_kw("async") && self.is_kw_at(1, "for") {
                self.advance();
                true
            } else {
                false
            };
            if !self.eat_kw("for") {
                break;
            }
            let target = self.target_list()?;
            self.expect_kw("in")?;
            let iter = self.disjunction()?;
            let mut ifs = Vec::new();
            while self.eat_kw("if") {
                ifs.push(self.disjunction()?);
            }
            gens.push(Comprehension {
                is_async,
                target,
                iter,
                ifs,
            });
        }
        Ok(gens)
    }

    fn yield_expr(&mut self) -> PResult<Expr> {
        let start = self.expect_kw("yield")?.start;
        if self.eat_kw("from") {
            let e = self.expression()?;
            let sp = Span::new(start, e.span.end);
            return Ok(Expr::new(ExprKind::YieldFrom(Box::new(e)), sp));
        }
        if self.at_stmt_end() || self.is_op(")") || self.is_op("=") || self.is_op("]") || self.is_op("}") {
            return Ok(Expr::new(ExprKind::Yield(None), Span::new(start, self.prev_end())));
        }
        let e = self.star_expressions()?;
        let sp = Span::new(start, e.span.end);
        Ok(Expr::new(ExprKind::Yield(Some(Box::new(e))), sp))
    }

    // ----- strings ---------------------------------------------------------

    fn strings(&mut self) -> PResult<Expr> {
        let start = self.span().start;
        let mut parts = Vec::new();
        let mut kinds = (false, false); // (bytes seen, text seen)
        while let Tok::Str(raw) = self.peek().clone() {
            let sp = self.advance().span;
            let prefix_len = raw.find(['\'', '"']).unwrap_or(0);
            let prefix = raw[..prefix_len].to_ascii_lowercase();
            if prefix.contains('b') {
                kinds.0 = true;
            } else {
                kinds.1 = true;
            }
            if prefix.contains('f') {
                parts.push(StrPart::Formatted(parse_fstring(&raw, sp)?));
            } else {
                parts.push(StrPart::Plain(PlainStr { raw, span: sp }));
            }
        }
        if kinds.0 && kinds.1 {
            return Err(SyntaxError::new(start, "cannot mix bytes and nonbytes literals"));
        }
        Ok(Expr::new(
            ExprKind::Str(StrLit { parts }),
            Span::new(start, self.prev_end()),
        ))
    }

    // ----- match patterns --------------------------------------------------

    fn patterns(&mut self) -> PResult<Pattern> {
        let start = self.span().start;
        let first = self.maybe_star_pattern()?;
        if !self.is_op(",") {
            if matches!(first.kind, PatternKind::Star(_)) {
                return Err(SyntaxError::new(first.span.start, "can't use starred pattern here"));
            }
            return Ok(first);
        }
        let mut pats = vec![first];
        while self.eat_op(",") {
            if self.is_op(":") || self.is_kw("if") {
                break;
            }
            pats.push(self.maybe_star_pattern()?);
        }
        Ok(Pattern {
            kind: PatternKind::Sequence(pats),
            span: Span::new(start, self.prev_end()),
        })
    }

    fn maybe_star_pattern(&mut self) -> PResult<Pattern> {
        if self.is_op("*") {
            let start = self.advance().span.start;
            let name = self.ident()?;
            let name = if name.name == "_" { None } else { Some(name) };
            return Ok(Pattern {
                kind: PatternKind::Star(name),
                span: Span::new(start, self.prev_end()),
            });
        }
        self.pattern()
    }

    fn pattern(&mut self) -> PResult<Pattern> {
        let start = self.span().start;
        let or = self.or_pattern()?;
        if self.eat_kw("as") {
            let name = self.ident()?;
            if name.name == "_" {
                return Err(SyntaxError::new(name.span.start, "cannot use '_' as a target"));
            }
            return Ok(Pattern {
                kind: PatternKind::As {
                    pattern: Some(Box::new(or)),
                    name: Some(name),
                },
                span: Span::new(start, self.prev_end()),
            });
        }
        Ok(or)
    }

    fn or_pattern(&mut self) -> PResult<Pattern> {
        let start = self.span().start;
        let first = self.closed_pattern()?;
        if !self.is_op("|") {
            return Ok(first);
        }
        let mut alts = vec![first];
        while self.eat_op("|") {
            alts.push(self.closed_pattern()?);
        }
        Ok(Pattern {
            kind: PatternKind::Or(alts),
            span: Span::new(start, self.prev_end()),
        })
    }

    fn closed_pattern(&mut self) -> PResult<Pattern> {
        let start = self.span().start;
        let kind = match self.peek().clone() {
            Tok::Number(_) | Tok::Op("-") => PatternKind::Value(self.signed_number_pattern()?),
            Tok::Str(_) => PatternKind::Value(self.strings()?),
            Tok::Name(n) if n == "None" => {
                self.advance();
                PatternKind::Singleton(Const::None)
            }
            Tok::Name(n) if n == "True" => {
                self.advance();
                PatternKind::Singleton(Const::True)
            }
            Tok::Name(n) if n == "False" => {
                self.advance();
                PatternKind::Singleton(Const::False)
            }
            Tok::Name(_) => {
                let first = self.ident()?;
                if self.is_op(".") || self.is_op("(") {
                    let mut e = Expr::new(ExprKind::Name(first.clone()), first.span);
                    while self.eat_op(".") {
                        let attr = self.ident()?;
                        let sp = e.span.to(attr.span);
                        e = Expr::new(
                            ExprKind::Attribute {
                                value: Box::new(e),
                                attr,
                            },
                            sp,
                        );
                    }
                    if self.is_op("(") {
                        return self.class_pattern(e, start);
                    }
                    PatternKind::Value(e)
                } else if first.name == "_" {
                    PatternKind::As {
                        pattern: None,
                        name: None,
                    }
                } else {
                    PatternKind::As {
                        pattern: None,
                        name: Some(first),
                    }
                }
            }
            Tok::Op("(") => {
                self.advance();
                if self.eat_op(")") {
                    PatternKind::Sequence(Vec::new())
                } else {
                    let first = self.maybe_star_pattern()?;
                    if self.eat_op(")") {
                        if matches!(first.kind, PatternKind::Star(_)) {
                            PatternKind::Sequence(vec![first])
                        } else {
                            // Group pattern: the parentheses are not part of the tree.
                            return Ok(first);
                        }
                    } else {
                        let mut pats = vec![first];
                        while self.eat_op(",") {
                            if self.is_op(")") {
                                break;
                            }
                            pats.push(self.maybe_star_pattern()?);
                        }
                        self.expect_op(")")?;
                        PatternKind::Sequence(pats)
                    }
                }
            }
            Tok::Op("[") => {
                self.advance();
                let mut pats = Vec::new();
                while !self.is_op("]") {
                    pats.push(self.maybe_star_pattern()?);
                    if !self.eat_op(",") {
                        break;
                    }
                }
                self.expect_op("]")?;
                PatternKind::Sequence(pats)
            }
            Tok::Op("{") => self.mapping_pattern()?,
            _ => return Err(self.unexpected()),
        };
        Ok(Pattern {
            kind,
            span: Span::new(start, self.prev_end()),
        })
    }

    fn signed_number_pattern(&mut self) -> PResult<Expr> {
        let start = self.span().start;
        let neg = self.eat_op("-");
        let num = match self.peek().clone() {
            Tok::Number(n) => {
                let sp = self.advance().span;
                Expr::new(ExprKind::Num(n), sp)
            }
            _ => return Err(self.err_here("expected number in pattern")),
        };
        let mut e = if neg {
            Expr::new(
                ExprKind::UnaryOp {
                    op: UnaryOp::USub,
                    operand: Box::new(num),
                },
                Span::new(start, self.prev_end()),
            )
        } else {
            num
        };
        if self.is_op("+") || self.is_op("-") {
            let op = if self.eat_op("+") {
                BinOp::Add
            } else {
                self.advance();
                BinOp::Sub
            };
            let imag = match self.peek().clone() {
                Tok::Number(n) => {
                    let sp = self.advance().span;
                    Expr::new(ExprKind::Num(n), sp)
                }
                _ => return Err(self.err_here("expected imaginary number")),
            };
            let sp = Span::new(start, self.prev_end());
            e = Expr::new(
                ExprKind::BinOp {
                    left: Box::new(e),
                    op,
                    right: Box::new(imag),
                },
                sp,
            );
        }
        Ok(e)
    }

    fn class_pattern(&mut self, cls: Expr, start: usize) -> PResult<Pattern> {
        self.expect_op("(")?;
        let mut patterns = Vec::new();
        let mut kwd_attrs = Vec::new();
        let mut kwd_patterns = Vec::new();
        while !self.is_op(")") {
            if self.is_name() && self.is_op_at(1, "=") {
                kwd_attrs.push(self.ident()?);
                self.advance();
                kwd_patterns.push(self.pattern()?);
            } else {
                if !kwd_attrs.is_empty() {
                    return Err(self.err_here("positional patterns follow keyword patterns"));
                }
                patterns.push(self.pattern()?);
            }
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        Ok(Pattern {
            kind: PatternKind::Class {
                cls,
                patterns,
                kwd_attrs,
                kwd_patterns,
            },
            span: Span::new(start, self.prev_end()),
        })
    }

    fn mapping_pattern(&mut self) -> PResult<PatternKind> {
        self.expect_op("{")?;
        let mut keys = Vec::new();
        let mut patterns = Vec::new();
        let mut rest = None;
        while !self.is_op("}") {
            if self.eat_op("**") {
                rest = Some(self.ident()?);
                self.eat_op(",");
                break;
            }
            let key = match self.peek().clone() {
                Tok::Number(_) | Tok::Op("-") => self.signed_number_pattern()?,
                Tok::Str(_) => self.strings()?,
                Tok::Name(n) if n == "None" || n == "True" || n == "False" => self.atom()?,
                Tok::Name(_) => {
                    let first = self.ident()?;
                    let mut e = Expr::new(ExprKind::Name(first.clone()), first.span);
                    if !self.is_op(".") {
                        return Err(SyntaxError::new(first.span.start, "mapping pattern keys must be literals or dotted names"));
                    }
                    while self.eat_op(".") {
                        let attr = self.ident()?;
                        let sp = e.span.to(attr.span);
                        e = Expr::new(
                            ExprKind::Attribute {
                                value: Box::new(e),
                                attr,
                            },
                            sp,
                        );
                    }
                    e
                }
                _ => return Err(self.unexpected()),
            };
            self.expect_op(":")?;
            keys.push(key);
            patterns.push(self.pattern()?);
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op("}")?;
        Ok(PatternKind::Mapping {
            keys,
            patterns,
            rest,
        })
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum TargetKind {
    Assign,
    Augmented,
    Annotated,
    Delete,
}

fn check_target(e: &Expr, kind: TargetKind) -> PResult<()> {
    let bad = |what: &str| {
        Err(SyntaxError::new(
            e.span.start,
            format!("cannot assign to {what}"),
        ))
    };
    match &e.kind {
        ExprKind::Name(_) | ExprKind::Attribute { .. } | ExprKind::Subscript { .. } => Ok(()),
        ExprKind::Tuple(elts) | ExprKind::List(elts) => {
            if matches!(kind, TargetKind::Augmented | TargetKind::Annotated) {
                return bad("tuple or list here");
            }
            let mut stars = 0;
            for elt in elts {
                if let ExprKind::Starred(inner) = &elt.kind {
                    if kind == TargetKind::Delete {
                        return bad("starred");
                    }
                    stars += 1;
                    check_target(inner, kind)?;
                } else {
                    check_target(elt, kind)?;
                }
            }
            if stars > 1 {
                return Err(SyntaxError::new(
                    e.span.start,
                    "multiple starred expressions in assignment",
                ));
            }
            Ok(())
        }
        ExprKind::Starred(_) => Err(SyntaxError::new(
            e.span.start,
            "starred assignment target must be in a list or tuple",
        )),
        ExprKind::Call { .. } => bad("function call"),
        ExprKind::Constant(_) | ExprKind::Num(_) | ExprKind::Str(_) => bad("literal"),
        _ => bad("expression"),
    }
}

// ----- f-strings -----------------------------------------------------------

/// Split an f-string token into literal text and replacement fields, parsing
/// each field's expression with absolute spans.
fn parse_fstring(raw: &str, span: Span) -> PResult<FString> {
    let prefix_len = raw.find(['\'', '"']).expect("string token has a quote");
    let prefix = raw[..prefix_len].to_string();
    let rest = &raw[prefix_len..];
    let q = &rest[..1];
    let quote = if rest.len() >= 6 && rest[..3].chars().all(|c| c.to_string() == q) {
        rest[..3].to_string()
    } else {
        q.to_string()
    };
    let body_start = prefix_len + quote.len();
    let body_end = raw.len() - quote.len();
    let body = &raw[body_start..body_end];
    let base = span.start + body_start;
    let mut fp = FStringParser {
        body,
        base,
        pos: 0,
    };
    let elements = fp.elements(false)?;
    Ok(FString {
        prefix,
        quote,
        elements,
        span,
    })
}

struct FStringParser<'a> {
    body: &'a str,
    base: usize,
    pos: usize,
}

impl FStringParser<'_> {
    fn err(&self, at: usize, msg: &str) -> SyntaxError {
        SyntaxError::new(self.base + at, format!("f-string: {msg}"))
    }

    /// Parse literal text and fields until the end of the body, or until an
    /// unmatched `}` when inside a format spec.
    fn elements(&mut self, in_spec: bool) -> PResult<Vec<FElement>> {
        let bytes = self.body.as_bytes();
        let mut out = Vec::new();
        let mut lit_start = self.pos;
        while self.pos < bytes.len() {
            match bytes[self.pos] {
                b'{' if !in_spec && bytes.get(self.pos + 1) == Some(&b'{') => self.pos += 2,
                b'}' if !in_spec && bytes.get(self.pos + 1) == Some(&b'}') => self.pos += 2,
                b'{' => {
                    if lit_start < self.pos {
                        out.push(FElement::Literal(self.body[lit_start..self.pos].to_string()));
                    }
                    self.pos += 1;
                    out.push(FElement::Field(self.field()?));
                    lit_start = self.pos;
                }
                b'}' => {
                    if in_spec {
                        break;
                    }
                    return Err(self.err(self.pos, "single '}' is not allowed"));
                }
                b'\\' => self.pos += 2,
                _ => self.pos += 1,
            }
        }
        let end = self.pos.min(bytes.len());
        if lit_start < end {
            out.push(FElement::Literal(self.body[lit_start..end].to_string()));
        }
        Ok(out)
    }

    /// Called just after `{`; consumes through the matching `}`.
    fn field(&mut self) -> PResult<FField> {
        let bytes = self.body.as_bytes();
        let expr_start = self.pos;
        let mut depth = 0i32;
        let mut quote: Option<u8> = None;
        let mut expr_end = None;
        let mut debug_end = None;
        while self.pos < bytes.len() {
            let b = bytes[self.pos];
            if let Some(q) = quote {
                if b == q {
                    quote = None;
                }
                self.pos += 1;
                continue;
            }
            match b {
                b'\\' => return Err(self.err(self.pos, "expression part cannot include a backslash")),
                b'\'' | b'"' => quote = Some(b),
                b'(' | b'[' | b'{' => depth += 1,
                b')' | b']' => depth -= 1,
                b'}' if depth > 0 => depth -= 1,
                b'#' => return Err(self.err(self.pos, "expression part cannot include '#'")),
                b'!' if depth == 0 && bytes.get(self.pos + 1) != Some(&b'=') => {
                    expr_end = Some(self.pos);
                    break;
                }
                b'!' | b'<' | b'>' | b'=' if depth == 0 && bytes.get(self.pos + 1) == Some(&b'=') => {
                    self.pos += 2;
                    continue;
                }
                b'=' if depth == 0 => {
                    let mut p = self.pos + 1;
                    while p < bytes.len() && (bytes[p] == b' ' || bytes[p] == b'\t') {
                        p += 1;
                    }
                    if matches!(bytes.get(p), Some(b'}') | Some(b'!') | Some(b':')) {
                        expr_end = Some(self.pos);
                        debug_end = Some(p);
                        self.pos = p;
                        break;
                    }
                }
                b':' | b'}' if depth == 0 => {
                    expr_end = Some(self.pos);
                    break;
                }
                _ => {}
            }
            self.pos += 1;
        }
        let expr_end = expr_end.ok_or_else(|| self.err(expr_start, "expecting '}'"))?;
        let text = &self.body[expr_start..expr_end];
        if text.trim().is_empty() {
            return Err(self.err(expr_start, "empty expression not allowed"));
        }
        let toks = tokenize_fragment(text, self.base + expr_start)?;
        let mut parser = Parser::new(toks);
        let expr = if parser.is_kw("yield") {
            parser.yield_expr()?
        } else {
            parser.star_expressions()?
        };
        if !matches!(parser.peek(), Tok::EndOfFile) {
            return Err(parser.unexpected());
        }
        let debug_text = debug_end.map(|e| self.body[expr_start..e].to_string());
        let mut conversion = None;
        if bytes.get(self.pos) == Some(&b'!') {
            let c = bytes.get(self.pos + 1).copied();
            match c {
                Some(b's') | Some(b'r') | Some(b'a') => conversion = Some(c.unwrap() as char),
                _ => return Err(self.err(self.pos, "invalid conversion character")),
            }
            self.pos += 2;
        }
        let mut format_spec = None;
        if bytes.get(self.pos) == Some(&b':') {
            self.pos += 1;
            format_spec = Some(self.elements(true)?);
        }
        if bytes.get(self.pos) != Some(&b'}') {
            return Err(self.err(self.pos, "expecting '}'"));
        }
        self.pos += 1;
        Ok(FField {
            expr: Box::new(expr),
            debug_text,
            conversion,
            format_spec,
        })
    }
}
