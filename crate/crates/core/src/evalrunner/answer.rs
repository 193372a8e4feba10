//! Pulling the answer out of a model response and normalizing literals so
//! that `[1,2]` and `[1, 2]` compare equal.

use crate::frontend::ast::{Const, DictItem, Expr, ExprKind, StrPart, UnaryOp};
use crate::frontend::parse_expression;

pub const ANSWER_LABEL: &str = "ANSWER";

/// Contents of the last fenced block labeled `ANSWER`, canonicalized.
pub fn extract_answer(response: &str) -> Option<String> {
    let mut found = None;
    let mut lines = response.lines();
    while let Some(line) = lines.next() {
        let t = line.trim();
        let Some(label) = t.strip_prefix("```") else { continue };
        if !label.trim().eq_ignore_ascii_case(ANSWER_LABEL) {
            continue;
        }
        let mut body = Vec::new();
        let mut closed = false;
        for l in lines.by_ref() {
            if l.trim() == "```" {
                closed = true;
                break;
            }
            body.push(l);
        }
        if closed {
            found = Some(body.join("\n"));
        }
    }
    found.map(|b| canonicalize(&b))
}

/// Trimmed text, re-rendered in canonical form when it is a Python literal.
pub fn canonicalize(text: &str) -> String {
    let t = text.trim();
    parse_expression(t)
        .ok()
        .and_then(|e| literal(&e))
        .unwrap_or_else(|| t.to_string())
}

/// Canonical repr of a literal expression: the runner's rendering, where
/// dict items and set elements are sorted by their own canonical text.
pub fn literal(e: &Expr) -> Option<String> {
    Some(match &e.kind {
        ExprKind::Constant(c) => match c {
            Const::True => "True",
            Const::False => "False",
            Const::None => "None",
            Const::Ellipsis => "Ellipsis",
        }
        .to_string(),
        ExprKind::Num(n) => number(n)?,
        ExprKind::UnaryOp { op, operand } if matches!(operand.kind, ExprKind::Num(_)) => match op {
            UnaryOp::USub => format!("-{}", literal(operand)?),
            UnaryOp::UAdd => literal(operand)?,
            _ => return None,
        },
        ExprKind::Str(s) => {
            let mut text = String::new();
            for p in &s.parts {
                match p {
                    StrPart::Plain(p) => text.push_str(&decode(&p.raw)?),
                    StrPart::Formatted(_) => return None,
                }
            }
            py_repr(&text)
        }
        ExprKind::List(xs) => format!("[{}]", items(xs)?.join(", ")),
        ExprKind::Tuple(xs) if xs.len() == 1 => format!("({},)", literal(&xs[0])?),
        ExprKind::Tuple(xs) => format!("({})", items(xs)?.join(", ")),
        ExprKind::Set(xs) => {
            let mut v = items(xs)?;
            v.sort();
            format!("{{{}}}", v.join(", "))
        }
        ExprKind::Call { func, args } if args.is_empty() && matches!(&func.kind, ExprKind::Name(n) if n.name == "set") => {
            "set()".to_string()
        }
        ExprKind::Dict(pairs) => {
            let mut v = Vec::with_capacity(pairs.len());
            for p in pairs {
                match p {
                    DictItem::Pair(k, x) => v.push((literal(k)?, literal(x)?)),
                    DictItem::Unpack(_) => return None,
                }
            }
            v.sort();
            let body: Vec<String> = v.into_iter().map(|(k, x)| format!("{k}: {x}")).collect();
            format!("{{{}}}", body.join(", "))
        }
        _ => return None,
    })
}

fn items(xs: &[Expr]) -> Option<Vec<String>> {
    xs.iter().map(literal).collect()
}

fn number(raw: &str) -> Option<String> {
    let n = raw.replace('_', "").to_ascii_lowercase();
    if n.ends_with('j') {
        return Some(n);
    }
    for (prefix, radix) in [("0x", 16), ("0o", 8), ("0b", 2)] {
        if let Some(digits) = n.strip_prefix(prefix) {
            return u128::from_str_radix(digits, radix).ok().map(|v| v.to_string());
        }
    }
    if n.contains(['.', 'e']) {
        return n.parse::<f64>().ok().map(float_repr);
    }
    let trimmed = n.trim_start_matches('0');
    Some(if trimmed.is_empty() { "0".into() } else { trimmed.into() })
}

/// Python's `repr` for a float: shortest round-trip digits, positional
/// between 1e-4 and 1e16, scientific otherwise.
pub fn float_repr(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0.0" } else { "0.0" }.into();
    }
    let sci = format!("{:e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..16).contains(&exp) {
        let s = format!("{}", x);
        if s.contains('.') {
            s
        } else {
            format!("{s}.0")
        }
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    }
}

/// Value of a plain (non-bytes) string literal from its source text.
fn decode(raw: &str) -> Option<String> {
    let prefix_len = raw.find(['\'', '"'])?;
    let prefix = raw[..prefix_len].to_ascii_lowercase();
    if prefix.contains('b') {
        return None;
    }
    let rest = &raw[prefix_len..];
    let q = if rest.starts_with("'''") || rest.starts_with("\"\"\"") { 3 } else { 1 };
    let body = rest.get(q..rest.len().checked_sub(q)?)?;
    if prefix.contains('r') {
        return Some(body.to_string());
    }
    let mut out = String::new();
    let mut chars = body.chars().peekable();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        let Some(e) = chars.next() else {
            out.push('\\');
            break;
        };
        match e {
            '\n' => {}
            '\\' | '\'' | '"' => out.push(e),
            'n' => out.push('\n'),
            't' => out.push('\t'),
            'r' => out.push('\r'),
            'a' => out.push('\x07'),
            'b' => out.push('\x08'),
            'f' => out.push('\x0c'),
            'v' => out.push('\x0b'),
            '0'..='7' => {
                let mut v = e.to_digit(8)?;
                for _ in 0..2 {
                    match chars.peek().and_then(|d| d.to_digit(8)) {
                        Some(d) => {
                            v = v * 8 + d;
                            chars.next();
                        }
                        None => break,
                    }
                }
                out.push(char::from_u32(v)?);
            }
            'x' | 'u' | 'U' => {
                let width = match e {
                    'x' => 2,
                    'u' => 4,
                    _ => 8,
                };
                let hex: String = (0..width).filter_map(|_| chars.next()).collect();
                if hex.len() != width {
                    return None;
                }
                out.push(char::from_u32(u32::from_str_radix(&hex, 16).ok()?)?);
            }
            'N' => return None,
            other => {
                out.push('\\');
                out.push(other);
            }
        }
    }
    Some(out)
}

/// Python's `repr` for a str.
pub fn py_repr(s: &str) -> String {
    let quote = if s.contains('\'') && !s.contains('"') { '"' } else { '\'' };
    let mut out = String::with_capacity(s.len() + 2);
    out.push(quote);
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if c == quote => {
                out.push('\\');
                out.push(c);
            }
            c if (c as u32) < 0x20 || c as u32 == 0x7f => out.push_str(&format!("\\x{:02x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push(quote);
    out
}
