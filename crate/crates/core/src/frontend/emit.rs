//! Canonical source emission.

use super::ast::*;
use super::lexer::Comment;

/// Options controlling what non-semantic text survives emission.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EmitOptions {
    pub keep_comments: bool,
    pub keep_docstrings: bool,
}

// Binding strength, loosest first.
const P_NAMED: u8 = 1;
const P_TUPLE: u8 = 2;
const P_YIELD: u8 = 3;
const P_TEST: u8 = 4;
const P_OR: u8 = 5;
const P_AND: u8 = 6;
const P_NOT: u8 = 7;
const P_CMP: u8 = 8;
const P_BOR: u8 = 9;
const P_BXOR: u8 = 10;
const P_BAND: u8 = 11;
const P_SHIFT: u8 = 12;
const P_ARITH: u8 = 13;
const P_TERM: u8 = 14;
const P_FACTOR: u8 = 15;
const P_POWER: u8 = 16;
const P_AWAIT: u8 = 17;
const P_ATOM: u8 = 18;

fn binop_prec(op: BinOp) -> u8 {
    match op {
        BinOp::BitOr => P_BOR,
        BinOp::BitXor => P_BXOR,
        BinOp::BitAnd => P_BAND,
        BinOp::LShift | BinOp::RShift => P_SHIFT,
        BinOp::Add | BinOp::Sub => P_ARITH,
        BinOp::Mult | BinOp::MatMult | BinOp::Div | BinOp::Mod | BinOp::FloorDiv => P_TERM,
        BinOp::Pow => P_POWER,
    }
}

fn prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::NamedExpr { .. } => P_NAMED,
        ExprKind::Tuple(elts) if !elts.is_empty() => P_TUPLE,
        ExprKind::Yield(_) | ExprKind::YieldFrom(_) => P_YIELD,
        ExprKind::Lambda { .. } | ExprKind::IfExp { .. } => P_TEST,
        ExprKind::BoolOp { op: BoolOp::Or, .. } => P_OR,
        ExprKind::BoolOp { op: BoolOp::And, .. } => P_AND,
        ExprKind::UnaryOp { op: UnaryOp::Not, .. } => P_NOT,
        ExprKind::UnaryOp { .. } => P_FACTOR,
        ExprKind::Compare { .. } => P_CMP,
        ExprKind::BinOp { op, .. } => binop_prec(*op),
        ExprKind::Await(_) => P_AWAIT,
        ExprKind::Starred(_) => P_BOR,
        _ => P_ATOM,
    }
}

/// Is the statement a docstring candidate (a bare plain string literal)?
pub fn is_docstring(s: &Stmt) -> bool {
    match &s.kind {
        StmtKind::Expr(Expr {
            kind: ExprKind::Str(lit),
            ..
        }) => lit.parts.iter().all(|p| match p {
            StrPart::Plain(p) => {
                let q = p.raw.find(['\'', '"']).unwrap_or(0);
                !p.raw[..q].to_ascii_lowercase().contains('b')
            }
            StrPart::Formatted(_) => false,
        }),
        _ => false,
    }
}

pub(crate) struct Emitter<'a> {
    out: String,
    indent: usize,
    opts: EmitOptions,
    comments: &'a [Comment],
    next_comment: usize,
}

impl<'a> Emitter<'a> {
    pub(crate) fn new(opts: EmitOptions, comments: &'a [Comment]) -> Self {
        Emitter {
            out: String::new(),
            indent: 0,
            opts,
            comments,
            next_comment: 0,
        }
    }

    pub(crate) fn module(mut self, m: &Module) -> String {
        self.body(&m.body, false);
        if self.opts.keep_comments {
            self.flush_comments(usize::MAX);
        }
        self.out
    }

    pub(crate) fn expression(mut self, e: &Expr) -> String {
        self.top(e);
        self.out
    }

    fn line_start(&mut self) {
        for _ in 0..self.indent {
            self.out.push_str("    ");
        }
    }

    fn flush_comments(&mut self, before: usize) {
        while self.next_comment < self.comments.len() && self.comments[self.next_comment].span.start < before {
            let text = self.comments[self.next_comment].text.clone();
            self.line_start();
            self.out.push_str(&text);
            self.out.push('\n');
            self.next_comment += 1;
        }
    }

    /// Emit a statement list; `nested` bodies must not end up empty.
    fn body(&mut self, body: &[Stmt], nested: bool) {
        let skip = usize::from(!self.opts.keep_docstrings && body.first().is_some_and(is_docstring));
        let mut emitted = false;
        for s in &body[skip..] {
            self.stmt(s);
            emitted = true;
        }
        if nested && !emitted {
            self.line_start();
            self.out.push_str("pass\n");
        }
    }

    fn block(&mut self, body: &[Stmt]) {
        self.out.push_str(":\n");
        self.indent += 1;
        self.body(body, true);
        self.indent -= 1;
    }

    fn stmt(&mut self, s: &Stmt) {
        if self.opts.keep_comments {
            self.flush_comments(s.span.start);
        }
        match &s.kind {
            StmtKind::FunctionDef(f) => {
                for d in &f.decorators {
                    self.line_start();
                    self.out.push('@');
                    self.expr(d, P_NAMED);
                    self.out.push('\n');
                }
                self.line_start();
                if f.is_async {
                    self.out.push_str("async ");
                }
                self.out.push_str("def ");
                self.out.push_str(&f.name.name);
                self.out.push('(');
                self.params(&f.params);
                self.out.push(')');
                if let Some(r) = &f.returns {
                    self.out.push_str(" -> ");
                    self.expr(r, P_TEST);
                }
                self.block(&f.body);
            }
            StmtKind::ClassDef(c) => {
                for d in &c.decorators {
                    self.line_start();
                    self.out.push('@');
                    self.expr(d, P_NAMED);
                    self.out.push('\n');
                }
                self.line_start();
                self.out.push_str("class ");
                self.out.push_str(&c.name.name);
                if !c.bases.is_empty() {
                    self.out.push('(');
                    self.args(&c.bases);
                    self.out.push(')');
                }
                self.block(&c.body);
            }
            StmtKind::If { test, body, orelse } => {
                self.line_start();
                self.out.push_str("if ");
                self.expr(test, P_NAMED);
                self.block(body);
                self.orelse_chain(orelse);
            }
            StmtKind::While { test, body, orelse } => {
                self.line_start();
                self.out.push_str("while ");
                self.expr(test, P_NAMED);
                self.block(body);
                self.else_block(orelse);
            }
            StmtKind::For {
                is_async,
                target,
                iter,
                body,
                orelse,
            } => {
                self.line_start();
                if *is_async {
                    self.out.push_str("async ");
                }
                self.out.push_str("for ");
                self.top(target);
                self.out.push_str(" in ");
                self.top(iter);
                self.block(body);
                self.else_block(orelse);
            }
            StmtKind::With {
                is_async,
                items,
                body,
            } => {
                self.line_start();
                if *is_async {
                    self.out.push_str("async ");
                }
                self.out.push_str("with ");
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        self.out.push_str(", ");
                    }
                    self.expr(&it.context, P_TEST);
                    if let Some(v) = &it.vars {
                        self.out.push_str(" as ");
                        self.expr(v, P_BOR);
                    }
                }
                self.block(body);
            }
            StmtKind::Match { subject, cases } => {
                self.line_start();
                self.out.push_str("match ");
                self.top(subject);
                self.out.push_str(":\n");
                self.indent += 1;
                for c in cases {
                    if self.opts.keep_comments {
                        self.flush_comments(c.pattern.span.start);
                    }
                    self.line_start();
                    self.out.push_str("case ");
                    self.pattern_top(&c.pattern);
                    if let Some(g) = &c.guard {
                        self.out.push_str(" if ");
                        self.expr(g, P_NAMED);
                    }
                    self.block(&c.body);
                }
                self.indent -= 1;
            }
            StmtKind::Try {
                body,
                handlers,
                orelse,
                finalbody,
            } => {
                self.line_start();
                self.out.push_str("try");
                self.block(body);
                for h in handlers {
                    if self.opts.keep_comments {
                        self.flush_comments(h.span.start);
                    }
                    self.line_start();
                    self.out.push_str("except");
                    if let Some(k) = &h.kind {
                        self.out.push(' ');
                        self.expr(k, P_TEST);
                        if let Some(n) = &h.name {
                            self.out.push_str(" as ");
                            self.out.push_str(&n.name);
                        }
                    }
                    self.block(&h.body);
                }
                self.else_block(orelse);
                if !finalbody.is_empty() {
                    self.line_start();
                    self.out.push_str("finally");
                    self.block(finalbody);
                }
            }
            _ => {
                self.line_start();
                self.simple(s);
                self.out.push('\n');
            }
        }
    }

    fn orelse_chain(&mut self, orelse: &[Stmt]) {
        if let [Stmt {
            kind: StmtKind::If { test, body, orelse },
            span,
        }] = orelse
        {
            if self.opts.keep_comments {
                self.flush_comments(span.start);
            }
            self.line_start();
            self.out.push_str("elif ");
            self.expr(test, P_NAMED);
            self.block(body);
            self.orelse_chain(orelse);
        } else {
            self.else_block(orelse);
        }
    }

    fn else_block(&mut self, orelse: &[Stmt]) {
        if !orelse.is_empty() {
            self.line_start();
            self.out.push_str("else");
            self.block(orelse);
        }
    }

    fn simple(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Return(v) => {
                self.out.push_str("return");
                if let Some(v) = v {
                    self.out.push(' ');
                    self.top(v);
                }
            }
            StmtKind::Delete(ts) => {
                self.out.push_str("del ");
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        self.out.push_str(", ");
                    }
                    self.expr(t, P_BOR);
                }
            }
            StmtKind::Assign { targets, value } => {
                for t in targets {
                    self.top(t);
                    self.out.push_str(" = ");
                }
                self.top_min(value, P_YIELD);
            }
            StmtKind::AugAssign { target, op, value } => {
                self.expr(target, P_BOR);
                self.out.push(' ');
                self.out.push_str(op.symbol());
                self.out.push_str("= ");
                self.top_min(value, P_YIELD);
            }
            StmtKind::AnnAssign {
                target,
                annotation,
                value,
                simple,
            } => {
                if !*simple && matches!(target.kind, ExprKind::Name(_)) {
                    self.out.push('(');
                    self.expr(target, P_BOR);
                    self.out.push(')');
                } else {
                    self.expr(target, P_BOR);
                }
                self.out.push_str(": ");
                self.expr(annotation, P_TEST);
                if let Some(v) = value {
                    self.out.push_str(" = ");
                    self.top_min(v, P_YIELD);
                }
            }
            StmtKind::Raise { exc, cause } => {
                self.out.push_str("raise");
                if let Some(e) = exc {
                    self.out.push(' ');
                    self.expr(e, P_TEST);
                }
                if let Some(c) = cause {
                    self.out.push_str(" from ");
                    self.expr(c, P_TEST);
                }
            }
            StmtKind::Assert { test, msg } => {
                self.out.push_str("assert ");
                self.expr(test, P_TEST);
                if let Some(m) = msg {
                    self.out.push_str(", ");
                    self.expr(m, P_TEST);
                }
            }
            StmtKind::Import(aliases) => {
                self.out.push_str("import ");
                self.aliases(aliases);
            }
            StmtKind::ImportFrom {
                module,
                level,
                names,
                star,
            } => {
                self.out.push_str("from ");
                for _ in 0..*level {
                    self.out.push('.');
                }
                if let Some(m) = module {
                    self.dotted(m);
                }
                self.out.push_str(" import ");
                if *star {
                    self.out.push('*');
                } else {
                    self.aliases(names);
                }
            }
            StmtKind::Global(names) | StmtKind::Nonlocal(names) => {
                self.out.push_str(if matches!(s.kind, StmtKind::Global(_)) {
                    "global "
                } else {
                    "nonlocal "
                });
                for (i, n) in names.iter().enumerate() {
                    if i > 0 {
                        self.out.push_str(", ");
                    }
                    self.out.push_str(&n.name);
                }
            }
            StmtKind::Expr(e) => self.top_min(e, P_YIELD),
            StmtKind::Pass => self.out.push_str("pass"),
            StmtKind::Break => self.out.push_str("break"),
            StmtKind::Continue => self.out.push_str("continue"),
            _ => unreachable!("compound statement in simple position"),
        }
    }

    fn dotted(&mut self, parts: &[Ident]) {
        for (i, p) in parts.iter().enumerate() {
            if i > 0 {
                self.out.push('.');
            }
            self.out.push_str(&p.name);
        }
    }

    fn aliases(&mut self, aliases: &[Alias]) {
        for (i, a) in aliases.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            self.dotted(&a.name);
            if let Some(n) = &a.asname {
                self.out.push_str(" as ");
                self.out.push_str(&n.name);
            }
        }
    }

    fn params(&mut self, p: &Parameters) {
        let mut first = true;
        let mut sep = |out: &mut String| {
            if !first {
                out.push_str(", ");
            }
            first = false;
        };
        for x in &p.posonly {
            sep(&mut self.out);
            self.param(x);
        }
        if !p.posonly.is_empty() {
            sep(&mut self.out);
            self.out.push('/');
        }
        for x in &p.args {
            sep(&mut self.out);
            self.param(x);
        }
        if let Some(v) = &p.vararg {
            sep(&mut self.out);
            self.out.push('*');
            self.param(v);
        } else if !p.kwonly.is_empty() {
            sep(&mut self.out);
            self.out.push('*');
        }
        for x in &p.kwonly {
            sep(&mut self.out);
            self.param(x);
        }
        if let Some(k) = &p.kwarg {
            sep(&mut self.out);
            self.out.push_str("**");
            self.param(k);
        }
    }

    fn param(&mut self, p: &Param) {
        self.out.push_str(&p.name.name);
        if let Some(a) = &p.annotation {
            self.out.push_str(": ");
            self.expr(a, P_TEST);
        }
        if let Some(d) = &p.default {
            self.out.push_str(if p.annotation.is_some() { " = " } else { "=" });
            self.expr(d, P_TEST);
        }
    }

    fn args(&mut self, args: &[CallArg]) {
        for (i, a) in args.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            match a {
                CallArg::Positional(e) => {
                    // A sole generator argument keeps its own parentheses.
                    self.expr(e, P_TEST)
                }
                CallArg::Starred(e) => {
                    self.out.push('*');
                    self.expr(e, P_TEST);
                }
                CallArg::Keyword { name, value } => {
                    self.out.push_str(&name.name);
                    self.out.push('=');
                    self.expr(value, P_TEST);
                }
                CallArg::DoubleStarred(e) => {
                    self.out.push_str("**");
                    self.expr(e, P_TEST);
                }
            }
        }
    }

    /// Expression where an unparenthesized tuple is allowed.
    fn top(&mut self, e: &Expr) {
        self.top_min(e, P_TEST);
    }

    fn top_min(&mut self, e: &Expr, min: u8) {
        match &e.kind {
            ExprKind::Tuple(elts) if !elts.is_empty() => self.elts(elts, true),
            _ => self.expr(e, min),
        }
    }

    fn elts(&mut self, elts: &[Expr], trailing_single: bool) {
        for (i, x) in elts.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            self.expr(x, P_TEST);
        }
        if trailing_single && elts.len() == 1 {
            self.out.push(',');
        }
    }

    pub(crate) fn expr(&mut self, e: &Expr, min: u8) {
        let p = prec(e);
        let paren = p < min;
        if paren {
            self.out.push('(');
        }
        self.expr_inner(e);
        if paren {
            self.out.push(')');
        }
    }

    fn comps(&mut self, gens: &[Comprehension]) {
        for g in gens {
            self.out.push_str(if g.is_async { " async for " } else { " for " });
            self.top(&g.target);
            self.out.push_str(" in ");
            self.expr(&g.iter, P_OR);
            for c in &g.ifs {
                self.out.push_str(" if ");
                self.expr(c, P_OR);
            }
        }
    }

    fn expr_inner(&mut self, e: &Expr) {
        match &e.kind {
            ExprKind::BoolOp { op, values } => {
                let (sym, p) = match op {
                    BoolOp::Or => (" or ", P_OR),
                    BoolOp::And => (" and ", P_AND),
                };
                for (i, v) in values.iter().enumerate() {
                    if i > 0 {
                        self.out.push_str(sym);
                    }
                    self.expr(v, p + 1);
                }
            }
            ExprKind::NamedExpr { target, value } => {
                self.out.push_str(&target.name);
                self.out.push_str(" := ");
                self.expr(value, P_TEST);
            }
            ExprKind::BinOp { left, op, right } => {
                let p = binop_prec(*op);
                if *op == BinOp::Pow {
                    self.expr(left, P_AWAIT);
                    self.out.push_str(" ** ");
                    self.expr(right, P_FACTOR);
                } else {
                    self.expr(left, p);
                    self.out.push(' ');
                    self.out.push_str(op.symbol());
                    self.out.push(' ');
                    self.expr(right, p + 1);
                }
            }
            ExprKind::UnaryOp { op, operand } => match op {
                UnaryOp::Not => {
                    self.out.push_str("not ");
                    self.expr(operand, P_NOT);
                }
                _ => {
                    self.out.push(match op {
                        UnaryOp::UAdd => '+',
                        UnaryOp::USub => '-',
                        _ => '~',
                    });
                    self.expr(operand, P_FACTOR);
                }
            },
            ExprKind::Lambda { params, body } => {
                self.out.push_str("lambda");
                if !params.is_empty() {
                    self.out.push(' ');
                    self.params(params);
                }
                self.out.push_str(": ");
                self.expr(body, P_TEST);
            }
            ExprKind::IfExp { test, body, orelse } => {
                self.expr(body, P_OR);
                self.out.push_str(" if ");
                self.expr(test, P_OR);
                self.out.push_str(" else ");
                self.expr(orelse, P_TEST);
            }
            ExprKind::Dict(items) => {
                self.out.push('{');
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        self.out.push_str(", ");
                    }
                    match it {
                        DictItem::Pair(k, v) => {
                            self.expr(k, P_TEST);
                            self.out.push_str(": ");
                            self.expr(v, P_TEST);
                        }
                        DictItem::Unpack(v) => {
                            self.out.push_str("**");
                            self.expr(v, P_BOR);
                        }
                    }
                }
                self.out.push('}');
            }
            ExprKind::Set(elts) => {
                self.out.push('{');
                self.elts(elts, false);
                self.out.push('}');
            }
            ExprKind::ListComp { elt, generators } => {
                self.out.push('[');
                self.expr(elt, P_TEST);
                self.comps(generators);
                self.out.push(']');
            }
            ExprKind::SetComp { elt, generators } => {
                self.out.push('{');
                self.expr(elt, P_TEST);
                self.comps(generators);
                self.out.push('}');
            }
            ExprKind::DictComp {
                key,
                value,
                generators,
            } => {
                self.out.push('{');
                self.expr(key, P_TEST);
                self.out.push_str(": ");
                self.expr(value, P_TEST);
                self.comps(generators);
                self.out.push('}');
            }
            ExprKind::GeneratorExp { elt, generators } => {
                self.out.push('(');
                self.expr(elt, P_TEST);
                self.comps(generators);
                self.out.push(')');
            }
            ExprKind::Await(v) => {
                self.out.push_str("await ");
                self.expr(v, P_ATOM);
            }
            ExprKind::Yield(v) => {
                self.out.push_str("yield");
                if let Some(v) = v {
                    self.out.push(' ');
                    self.top(v);
                }
            }
            ExprKind::YieldFrom(v) => {
                self.out.push_str("yield from ");
                self.expr(v, P_TEST);
            }
            ExprKind::Compare {
                left,
                ops,
                comparators,
            } => {
                self.expr(left, P_BOR);
                for (op, c) in ops.iter().zip(comparators) {
                    self.out.push(' ');
                    self.out.push_str(op.symbol());
                    self.out.push(' ');
                    self.expr(c, P_BOR);
                }
            }
            ExprKind::Call { func, args } => {
                self.expr(func, P_ATOM);
                self.out.push('(');
                if let [CallArg::Positional(g @ Expr {
                    kind: ExprKind::GeneratorExp { elt, generators },
                    ..
                })] = args.as_slice()
                {
                    let _ = g;
                    self.expr(elt, P_TEST);
                    self.comps(generators);
                } else {
                    self.args(args);
                }
                self.out.push(')');
            }
            ExprKind::Num(n) => self.out.push_str(n),
            ExprKind::Str(s) => self.string(s),
            ExprKind::Constant(c) => self.out.push_str(match c {
                Const::True => "True",
                Const::False => "False",
                Const::None => "None",
                Const::Ellipsis => "...",
            }),
            ExprKind::Attribute { value, attr } => {
                let int_lit = matches!(&value.kind, ExprKind::Num(n) if n.bytes().all(|b| b.is_ascii_digit() || b == b'_'));
                if int_lit {
                    self.out.push('(');
                    self.expr_inner(value);
                    self.out.push(')');
                } else {
                    self.expr(value, P_ATOM);
                }
                self.out.push('.');
                self.out.push_str(&attr.name);
            }
            ExprKind::Subscript { value, slice } => {
                self.expr(value, P_ATOM);
                self.out.push('[');
                match &slice.kind {
                    ExprKind::Tuple(elts) if !elts.is_empty() => {
                        for (i, x) in elts.iter().enumerate() {
                            if i > 0 {
                                self.out.push_str(", ");
                            }
                            self.slice_elt(x);
                        }
                        if elts.len() == 1 {
                            self.out.push(',');
                        }
                    }
                    _ => self.slice_elt(slice),
                }
                self.out.push(']');
            }
            ExprKind::Starred(v) => {
                self.out.push('*');
                self.expr(v, P_BOR);
            }
            ExprKind::Name(n) => self.out.push_str(&n.name),
            ExprKind::List(elts) => {
                self.out.push('[');
                self.elts(elts, false);
                self.out.push(']');
            }
            ExprKind::Tuple(elts) => {
                self.out.push('(');
                self.elts(elts, true);
                self.out.push(')');
            }
            ExprKind::Slice { .. } => self.slice_elt(e),
        }
    }

    fn slice_elt(&mut self, e: &Expr) {
        if let ExprKind::Slice { lower, upper, step } = &e.kind {
            if let Some(l) = lower {
                self.expr(l, P_TEST);
            }
            self.out.push(':');
            if let Some(u) = upper {
                self.expr(u, P_TEST);
            }
            if let Some(s) = step {
                self.out.push(':');
                self.expr(s, P_TEST);
            }
        } else {
            self.expr(e, P_NAMED);
        }
    }

    fn string(&mut self, s: &StrLit) {
        for (i, part) in s.parts.iter().enumerate() {
            if i > 0 {
                self.out.push(' ');
            }
            match part {
                StrPart::Plain(p) => self.out.push_str(&p.raw),
                StrPart::Formatted(f) => {
                    self.out.push_str(&f.prefix);
                    self.out.push_str(&f.quote);
                    self.felements(&f.elements);
                    self.out.push_str(&f.quote);
                }
            }
        }
    }

    fn felements(&mut self, els: &[FElement]) {
        for el in els {
            match el {
                FElement::Literal(t) => self.out.push_str(t),
                FElement::Field(f) => {
                    self.out.push('{');
                    if let Some(d) = &f.debug_text {
                        self.out.push_str(d);
                    } else {
                        let mut sub = Emitter::new(self.opts, &[]);
                        let needs_paren = matches!(
                            f.expr.kind,
                            ExprKind::Lambda { .. } | ExprKind::NamedExpr { .. }
                        );
                        if needs_paren {
                            sub.out.push('(');
                            sub.expr_inner(&f.expr);
                            sub.out.push(')');
                        } else {
                            sub.top_min(&f.expr, P_TEST);
                        }
                        if sub.out.starts_with('{') {
                            self.out.push(' ');
                        }
                        self.out.push_str(&sub.out);
                    }
                    if let Some(c) = f.conversion {
                        self.out.push('!');
                        self.out.push(c);
                    }
                    if let Some(spec) = &f.format_spec {
                        self.out.push(':');
                        self.felements(spec);
                    }
                    self.out.push('}');
                }
            }
        }
    }

    fn pattern_top(&mut self, p: &Pattern) {
        match &p.kind {
            PatternKind::Sequence(ps) if !ps.is_empty() => {
                for (i, x) in ps.iter().enumerate() {
                    if i > 0 {
                        self.out.push_str(", ");
                    }
                    self.pattern(x);
                }
                if ps.len() == 1 {
                    self.out.push(',');
                }
            }
            _ => self.pattern(p),
        }
    }

    fn pattern(&mut self, p: &Pattern) {
        match &p.kind {
            PatternKind::Value(e) => self.expr(e, P_ATOM.min(prec(e))),
            PatternKind::Singleton(c) => self.out.push_str(match c {
                Const::True => "True",
                Const::False => "False",
                _ => "None",
            }),
            PatternKind::Sequence(ps) => {
                self.out.push('[');
                for (i, x) in ps.iter().enumerate() {
                    if i > 0 {
                        self.out.push_str(", ");
                    }
                    self.pattern(x);
                }
                self.out.push(']');
            }
            PatternKind::Mapping {
                keys,
                patterns,
                rest,
            } => {
                self.out.push('{');
                let mut first = true;
                for (k, v) in keys.iter().zip(patterns) {
                    if !first {
                        self.out.push_str(", ");
                    }
                    first = false;
                    self.expr(k, P_ATOM.min(prec(k)));
                    self.out.push_str(": ");
                    self.pattern(v);
                }
                if let Some(r) = rest {
                    if !first {
                        self.out.push_str(", ");
                    }
                    self.out.push_str("**");
                    self.out.push_str(&r.name);
                }
                self.out.push('}');
            }
            PatternKind::Class {
                cls,
                patterns,
                kwd_attrs,
                kwd_patterns,
            } => {
                self.expr(cls, P_ATOM);
                self.out.push('(');
                let mut first = true;
                for x in patterns {
                    if !first {
                        self.out.push_str(", ");
                    }
                    first = false;
                    self.pattern(x);
                }
                for (a, x) in kwd_attrs.iter().zip(kwd_patterns) {
                    if !first {
                        self.out.push_str(", ");
                    }
                    first = false;
                    self.out.push_str(&a.name);
                    self.out.push('=');
                    self.pattern(x);
                }
                self.out.push(')');
            }
            PatternKind::Star(n) => {
                self.out.push('*');
                self.out.push_str(n.as_ref().map_or("_", |n| n.name.as_str()));
            }
            PatternKind::As { pattern, name } => match (pattern, name) {
                (None, None) => self.out.push('_'),
                (None, Some(n)) => self.out.push_str(&n.name),
                (Some(inner), n) => {
                    let grouped = matches!(inner.kind, PatternKind::Or(_) | PatternKind::As { pattern: Some(_), .. });
                    if grouped {
                        self.out.push('(');
                    }
                    self.pattern(inner);
                    if grouped {
                        self.out.push(')');
                    }
                    self.out.push_str(" as ");
                    self.out.push_str(n.as_ref().map_or("_", |n| n.name.as_str()));
                }
            },
            PatternKind::Or(alts) => {
                for (i, x) in alts.iter().enumerate() {
                    if i > 0 {
                        self.out.push_str(" | ");
                    }
                    let grouped = matches!(x.kind, PatternKind::Or(_) | PatternKind::As { pattern: Some(_), .. });
                    if grouped {
                        self.out.push('(');
                    }
                    self.pattern(x);
                    if grouped {
                        self.out.push(')');
                    }
                }
            }
        }
    }
}
