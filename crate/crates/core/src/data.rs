//! Name lists shipped with the crate.

use std::collections::HashSet;
use std::sync::LazyLock;

static BUILTINS_TXT: &str = include_str!("../data/builtins.txt");
static EXTERNAL_ATTRS_TXT: &str = include_str!("../data/external_attrs.txt");

/// Non-empty, non-comment lines of a data file, trimmed.
pub fn entries(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
}

static BUILTINS: LazyLock<HashSet<&'static str>> = LazyLock::new(|| entries(BUILTINS_TXT).collect());
static EXTERNAL_ATTRS: LazyLock<HashSet<&'static str>> =
    LazyLock::new(|| entries(EXTERNAL_ATTRS_TXT).collect());

/// Names bound in the `builtins` module.
pub fn builtins() -> &'static HashSet<&'static str> {
    &BUILTINS
}

/// Attribute names found on builtin and standard-library objects.
pub fn external_attrs() -> &'static HashSet<&'static str> {
    &EXTERNAL_ATTRS
}

pub const SOFT_KEYWORDS: &[&str] = &["match", "case", "_"];
