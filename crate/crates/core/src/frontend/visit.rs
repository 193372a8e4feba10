//! Mutable traversal over every identifier, span and string literal.

use super::ast::*;

/// How an identifier occurrence is used.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Definition,
    Reference,
    Attribute,
    KeywordArgument,
    ImportAlias,
    StringLiteral,
}

/// Callbacks for [`walk_module`]. All methods default to no-ops.
pub trait VisitMut {
    fn ident(&mut self, _id: &mut Ident, _role: Role) {}
    fn span(&mut self, _span: &mut Span) {}
    fn plain_str(&mut self, _s: &mut PlainStr) {}
    fn field(&mut self, _f: &mut FField) {}
    fn fstring(&mut self, _f: &mut FString) {}
}

pub fn walk_module<V: VisitMut>(v: &mut V, m: &mut Module) {
    walk_body(v, &mut m.body);
}

pub fn walk_body<V: VisitMut>(v: &mut V, body: &mut [Stmt]) {
    for s in body {
        walk_stmt(v, s);
    }
}

fn id<V: VisitMut>(v: &mut V, ident: &mut Ident, role: Role) {
    v.span(&mut ident.span);
    v.ident(ident, role);
}

pub fn walk_stmt<V: VisitMut>(v: &mut V, s: &mut Stmt) {
    v.span(&mut s.span);
    match &mut s.kind {
        StmtKind::FunctionDef(f) => {
            for d in &mut f.decorators {
                walk_expr(v, d);
            }
            id(v, &mut f.name, Role::Definition);
            walk_params(v, &mut f.params);
            if let Some(r) = &mut f.returns {
                walk_expr(v, r);
            }
            walk_body(v, &mut f.body);
        }
        StmtKind::ClassDef(c) => {
            for d in &mut c.decorators {
                walk_expr(v, d);
            }
            id(v, &mut c.name, Role::Definition);
            for b in &mut c.bases {
                walk_arg(v, b);
            }
            walk_body(v, &mut c.body);
        }
        StmtKind::Return(e) => {
            if let Some(e) = e {
                walk_expr(v, e);
            }
        }
        StmtKind::Delete(ts) => {
            for t in ts {
                walk_target(v, t);
            }
        }
        StmtKind::Assign { targets, value } => {
            for t in targets {
                walk_target(v, t);
            }
            walk_expr(v, value);
        }
        StmtKind::AugAssign { target, value, .. } => {
            walk_target(v, target);
            walk_expr(v, value);
        }
        StmtKind::AnnAssign {
            target,
            annotation,
            value,
            ..
        } => {
            walk_target(v, target);
            walk_expr(v, annotation);
            if let Some(e) = value {
                walk_expr(v, e);
            }
        }
        StmtKind::For {
            target,
            iter,
            body,
            orelse,
            ..
        } => {
            walk_target(v, target);
            walk_expr(v, iter);
            walk_body(v, body);
            walk_body(v, orelse);
        }
        StmtKind::While { test, body, orelse } | StmtKind::If { test, body, orelse } => {
            walk_expr(v, test);
            walk_body(v, body);
            walk_body(v, orelse);
        }
        StmtKind::With { items, body, .. } => {
            for it in items {
                walk_expr(v, &mut it.context);
                if let Some(t) = &mut it.vars {
                    walk_target(v, t);
                }
            }
            walk_body(v, body);
        }
        StmtKind::Match { subject, cases } => {
            walk_expr(v, subject);
            for c in cases {
                walk_pattern(v, &mut c.pattern);
                if let Some(g) = &mut c.guard {
                    walk_expr(v, g);
                }
                walk_body(v, &mut c.body);
            }
        }
        StmtKind::Raise { exc, cause } => {
            if let Some(e) = exc {
                walk_expr(v, e);
            }
            if let Some(e) = cause {
                walk_expr(v, e);
            }
        }
        StmtKind::Try {
            body,
            handlers,
            orelse,
            finalbody,
        } => {
            walk_body(v, body);
            for h in handlers {
                v.span(&mut h.span);
                if let Some(k) = &mut h.kind {
                    walk_expr(v, k);
                }
                if let Some(n) = &mut h.name {
                    id(v, n, Role::Definition);
                }
                walk_body(v, &mut h.body);
            }
            walk_body(v, orelse);
            walk_body(v, finalbody);
        }
        StmtKind::Assert { test, msg } => {
            walk_expr(v, test);
            if let Some(m) = msg {
                walk_expr(v, m);
            }
        }
        StmtKind::Import(aliases) => {
            for a in aliases {
                walk_alias(v, a);
            }
        }
        StmtKind::ImportFrom { module, names, .. } => {
            if let Some(parts) = module {
                for p in parts {
                    id(v, p, Role::ImportAlias);
                }
            }
            for a in names {
                walk_alias(v, a);
            }
        }
        StmtKind::Global(names) | StmtKind::Nonlocal(names) => {
            for n in names {
                id(v, n, Role::Reference);
            }
        }
        StmtKind::Expr(e) => walk_expr(v, e),
        StmtKind::Pass | StmtKind::Break | StmtKind::Continue => {}
    }
}

fn walk_alias<V: VisitMut>(v: &mut V, a: &mut Alias) {
    for p in &mut a.name {
        id(v, p, Role::ImportAlias);
    }
    if let Some(n) = &mut a.asname {
        id(v, n, Role::ImportAlias);
    }
}

pub fn walk_params<V: VisitMut>(v: &mut V, p: &mut Parameters) {
    for param in p.iter_mut() {
        id(v, &mut param.name, Role::Definition);
        if let Some(a) = &mut param.annotation {
            walk_expr(v, a);
        }
        if let Some(d) = &mut param.default {
            walk_expr(v, d);
        }
    }
}

fn walk_arg<V: VisitMut>(v: &mut V, a: &mut CallArg) {
    match a {
        CallArg::Positional(e) | CallArg::Starred(e) | CallArg::DoubleStarred(e) => walk_expr(v, e),
        CallArg::Keyword { name, value } => {
            id(v, name, Role::KeywordArgument);
            walk_expr(v, value);
        }
    }
}

/// Walk an expression in store (or delete) position.
pub fn walk_target<V: VisitMut>(v: &mut V, e: &mut Expr) {
    match &mut e.kind {
        ExprKind::Name(n) => {
            v.span(&mut e.span);
            id(v, n, Role::Definition);
        }
        ExprKind::Tuple(elts) | ExprKind::List(elts) => {
            v.span(&mut e.span);
            for elt in elts {
                walk_target(v, elt);
            }
        }
        ExprKind::Starred(inner) => {
            v.span(&mut e.span);
            walk_target(v, inner);
        }
        _ => walk_expr(v, e),
    }
}

fn walk_comps<V: VisitMut>(v: &mut V, gens: &mut [Comprehension]) {
    for g in gens {
        walk_target(v, &mut g.target);
        walk_expr(v, &mut g.iter);
        for c in &mut g.ifs {
            walk_expr(v, c);
        }
    }
}

fn walk_felements<V: VisitMut>(v: &mut V, els: &mut [FElement]) {
    for el in els {
        if let FElement::Field(f) = el {
            v.field(f);
            walk_expr(v, &mut f.expr);
            if let Some(spec) = &mut f.format_spec {
                walk_felements(v, spec);
            }
        }
    }
}

pub fn walk_expr<V: VisitMut>(v: &mut V, e: &mut Expr) {
    v.span(&mut e.span);
    match &mut e.kind {
        ExprKind::BoolOp { values, .. } => {
            for x in values {
                walk_expr(v, x);
            }
        }
        ExprKind::NamedExpr { target, value } => {
            id(v, target, Role::Definition);
            walk_expr(v, value);
        }
        ExprKind::BinOp { left, right, .. } => {
            walk_expr(v, left);
            walk_expr(v, right);
        }
        ExprKind::UnaryOp { operand, .. } => walk_expr(v, operand),
        ExprKind::Lambda { params, body } => {
            walk_params(v, params);
            walk_expr(v, body);
        }
        ExprKind::IfExp { test, body, orelse } => {
            walk_expr(v, body);
            walk_expr(v, test);
            walk_expr(v, orelse);
        }
        ExprKind::Dict(items) => {
            for it in items {
                match it {
                    DictItem::Pair(k, val) => {
                        walk_expr(v, k);
                        walk_expr(v, val);
                    }
                    DictItem::Unpack(x) => walk_expr(v, x),
                }
            }
        }
        ExprKind::Set(elts) | ExprKind::List(elts) | ExprKind::Tuple(elts) => {
            for x in elts {
                walk_expr(v, x);
            }
        }
        ExprKind::ListComp { elt, generators }
        | ExprKind::SetComp { elt, generators }
        | ExprKind::GeneratorExp { elt, generators } => {
            walk_expr(v, elt);
            walk_comps(v, generators);
        }
        ExprKind::DictComp {
            key,
            value,
            generators,
        } => {
            walk_expr(v, key);
            walk_expr(v, value);
            walk_comps(v, generators);
        }
        ExprKind::Await(x) | ExprKind::YieldFrom(x) | ExprKind::Starred(x) => walk_expr(v, x),
        ExprKind::Yield(x) => {
            if let Some(x) = x {
                walk_expr(v, x);
            }
        }
        ExprKind::Compare {
            left, comparators, ..
        } => {
            walk_expr(v, left);
            for c in comparators {
                walk_expr(v, c);
            }
        }
        ExprKind::Call { func, args } => {
            walk_expr(v, func);
            for a in args {
                walk_arg(v, a);
            }
        }
        ExprKind::Num(_) | ExprKind::Constant(_) => {}
        ExprKind::Str(s) => {
            for part in &mut s.parts {
                match part {
                    StrPart::Plain(p) => {
                        v.span(&mut p.span);
                        v.plain_str(p);
                    }
                    StrPart::Formatted(f) => {
                        v.span(&mut f.span);
                        v.fstring(f);
                        walk_felements(v, &mut f.elements);
                    }
                }
            }
        }
        ExprKind::Attribute { value, attr } => {
            walk_expr(v, value);
            id(v, attr, Role::Attribute);
        }
        ExprKind::Subscript { value, slice } => {
            walk_expr(v, value);
            walk_expr(v, slice);
        }
        ExprKind::Name(n) => id(v, n, Role::Reference),
        ExprKind::Slice { lower, upper, step } => {
            for x in [lower, upper, step].into_iter().flatten() {
                walk_expr(v, x);
            }
        }
    }
}

pub fn walk_pattern<V: VisitMut>(v: &mut V, p: &mut Pattern) {
    v.span(&mut p.span);
    match &mut p.kind {
        PatternKind::Value(e) => walk_expr(v, e),
        PatternKind::Singleton(_) => {}
        PatternKind::Sequence(ps) | PatternKind::Or(ps) => {
            for x in ps {
                walk_pattern(v, x);
            }
        }
        PatternKind::Mapping {
            keys,
            patterns,
            rest,
        } => {
            for k in keys {
                walk_expr(v, k);
            }
            for x in patterns {
                walk_pattern(v, x);
            }
            if let Some(r) = rest {
                id(v, r, Role::Definition);
            }
        }
        PatternKind::Class {
            cls,
            patterns,
            kwd_attrs,
            kwd_patterns,
        } => {
            walk_expr(v, cls);
            for x in patterns {
                walk_pattern(v, x);
            }
            for a in kwd_attrs {
                id(v, a, Role::Attribute);
            }
            for x in kwd_patterns {
                walk_pattern(v, x);
            }
        }
        PatternKind::Star(name) => {
            if let Some(n) = name {
                id(v, n, Role::Definition);
            }
        }
        PatternKind::As { pattern, name } => {
            if let Some(x) = pattern {
                walk_pattern(v, x);
            }
            if let Some(n) = name {
                id(v, n, Role::Definition);
            }
        }
    }
}

/// Body of a plain, non-bytes, single-quoted-or-triple string literal if it
/// contains no escapes, together with the byte offset of the body in `raw`.
pub fn plain_str_body(raw: &str) -> Option<(&str, usize)> {
    let q = raw.find(['\'', '"'])?;
    let prefix = raw[..q].to_ascii_lowercase();
    if prefix.contains('b') || prefix.contains('f') {
        return None;
    }
    let rest = &raw[q..];
    let ql = if rest.len() >= 6 && (rest.starts_with("'''") || rest.starts_with("\"\"\"")) {
        3
    } else {
        1
    };
    let body = &raw[q + ql..raw.len() - ql];
    if body.contains('\\') {
        return None;
    }
    Some((body, q + ql))
}

pub(crate) struct ZeroSpans;

impl VisitMut for ZeroSpans {
    fn span(&mut self, span: &mut Span) {
        *span = Span::default();
    }
}
