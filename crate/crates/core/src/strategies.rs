//! Fresh-name generators and per-unit name maps.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data;
use crate::frontend::{is_hard_keyword, is_identifier};
use crate::scopes::{is_dunder, renameable_set, BindingId, BindingKind, RenamePolicy, ScopeGraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyTag {
    Alpha,
    Ambiguity,
    Crossdomain,
    Misleading,
}

impl StrategyTag {
    pub const ALL: [StrategyTag; 4] = [
        StrategyTag::Alpha,
        StrategyTag::Ambiguity,
        StrategyTag::Crossdomain,
        StrategyTag::Misleading,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyTag::Alpha => "alpha",
            StrategyTag::Ambiguity => "ambiguity",
            StrategyTag::Crossdomain => "crossdomain",
            StrategyTag::Misleading => "misleading",
        }
    }
}

impl fmt::Display for StrategyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        StrategyTag::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown strategy '{s}' (expected alpha, ambiguity, crossdomain or misleading)"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Strategy {
    pub tag: StrategyTag,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lexicon_version: Option<String>,
    /// Let ambiguous names use the digit `1` after the first character.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub ambiguity_digits: bool,
}

impl Strategy {
    /// Strategy using the bundled lexicons.
    pub fn new(tag: StrategyTag, seed: u64) -> Self {
        let lexicon_version = match tag {
            StrategyTag::Crossdomain => Some(Lexicon::crossdomain().version.clone()),
            StrategyTag::Misleading => Some(Lexicon::misleading().version.clone()),
            _ => None,
        };
        Strategy {
            tag,
            seed,
            lexicon_version,
            ambiguity_digits: false,
        }
    }

    fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.tag as u64);
        rng
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StrategyError {
    #[error("lexicon is empty")]
    EmptyLexicon,
    #[error("no lexicon entry of kind '{kind}' is stem-disjoint from '{name}'")]
    ExhaustedLexicon { name: String, kind: String },
    #[error("map asks for lexicon {wanted} but {bundled} is bundled")]
    LexiconVersion { wanted: String, bundled: String },
    #[error("lexicon line {line}: '{entry}' is not a usable name")]
    BadEntry { line: usize, entry: String },
    #[error("{0} generator ran out of fresh names")]
    NameSpace(StrategyTag),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapEntry {
    pub original: String,
    pub renamed: String,
    pub kind: BindingKind,
}

/// Renaming of one unit's bindings under one strategy.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NameMap {
    pub task_id: String,
    pub strategy: Strategy,
    pub policy: RenamePolicy,
    pub entries: BTreeMap<BindingId, MapEntry>,
}

impl NameMap {
    pub fn empty(task_id: impl Into<String>, strategy: Strategy, policy: RenamePolicy) -> Self {
        NameMap {
            task_id: task_id.into(),
            strategy,
            policy,
            entries: BTreeMap::new(),
        }
    }

    pub fn with_task(mut self, task_id: impl Into<String>) -> Self {
        self.task_id = task_id.into();
        self
    }

    pub fn renamed(&self, b: BindingId) -> Option<&str> {
        self.entries.get(&b).map(|e| e.renamed.as_str())
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Distinct `(original, renamed)` pairs, sorted.
    pub fn pairs(&self) -> Vec<(String, String)> {
        let set: BTreeSet<(String, String)> = self
            .entries
            .values()
            .map(|e| (e.original.clone(), e.renamed.clone()))
            .collect();
        set.into_iter().collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("name map serializes")
    }
}

// ----- alpha -----------------------------------------------------------------

/// Placeholder family a binding kind is numbered in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Placeholder {
    Class,
    Method,
    Var,
}

impl Placeholder {
    pub fn of(kind: BindingKind) -> Self {
        match kind {
            BindingKind::Class => Placeholder::Class,
            BindingKind::Function | BindingKind::Method => Placeholder::Method,
            _ => Placeholder::Var,
        }
    }

    fn prefix(self) -> &'static str {
        match self {
            Placeholder::Class => "class",
            Placeholder::Method => "method",
            Placeholder::Var => "var",
        }
    }
}

/// Role-preserving placeholder: `class1`, `method2`, `var3`.
pub fn gen_alpha(kind: BindingKind, ordinal: u64) -> String {
    assert!(ordinal >= 1, "ordinals are 1-based");
    format!("{}{}", Placeholder::of(kind).prefix(), ordinal)
}

// ----- ambiguity -------------------------------------------------------------

pub const AMBIGUOUS_MIN_LEN: u32 = 6;
pub const AMBIGUOUS_MAX_LEN: u32 = 14;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Seeded affine permutation of `0..n`.
#[derive(Clone, Debug)]
struct Affine {
    a: u64,
    b: u64,
    n: u64,
}

impl Affine {
    fn new(rng: &mut ChaCha8Rng, n: u64) -> Self {
        assert!(n > 0);
        let a = if n == 1 {
            1
        } else {
            loop {
                let a = rng.random_range(1..n);
                if gcd(a, n) == 1 {
                    break a;
                }
            }
        };
        let b = rng.random_range(0..n);
        Affine { a, b, n }
    }

    fn apply(&self, k: u64) -> u64 {
        ((self.a as u128 * (k % self.n) as u128 + self.b as u128) % self.n as u128) as u64
    }
}

/// Names over `{l, I}` (and `1` when enabled), one per ordinal.
#[derive(Clone, Debug)]
pub struct AmbiguousGen {
    digits: bool,
    perm: Affine,
}

impl AmbiguousGen {
    pub fn new(seed: u64, digits: bool) -> Self {
        let mut s = Strategy::new(StrategyTag::Ambiguity, seed);
        s.ambiguity_digits = digits;
        Self::from_rng(&mut s.rng(), digits)
    }

    fn from_rng(rng: &mut ChaCha8Rng, digits: bool) -> Self {
        let n = (AMBIGUOUS_MIN_LEN..=AMBIGUOUS_MAX_LEN).map(|l| Self::count(digits, l)).sum();
        AmbiguousGen {
            digits,
            perm: Affine::new(rng, n),
        }
    }

    fn count(digits: bool, len: u32) -> u64 {
        2 * (if digits { 3u64 } else { 2 }).pow(len - 1)
    }

    /// Number of distinct names available.
    pub fn capacity(&self) -> u64 {
        self.perm.n
    }

    /// Name for a 1-based ordinal; distinct for ordinals up to the capacity.
    pub fn name(&self, ordinal: u64) -> String {
        let mut idx = self.perm.apply(ordinal - 1);
        let mut len = AMBIGUOUS_MIN_LEN;
        loop {
            let c = Self::count(self.digits, len);
            if idx < c {
                break;
            }
            idx -= c;
            len += 1;
        }
        let radix = if self.digits { 3 } else { 2 };
        let mut tail = Vec::with_capacity(len as usize);
        for _ in 1..len {
            tail.push(['l', 'I', '1'][(idx % radix) as usize]);
            idx /= radix;
        }
        let mut out = String::with_capacity(len as usize);
        out.push(['l', 'I'][idx as usize]);
        out.extend(tail.into_iter().rev());
        out
    }
}

pub fn gen_ambiguous(seed: u64, ordinal: u64) -> String {
    AmbiguousGen::new(seed, false).name(ordinal)
}

// ----- lexicons --------------------------------------------------------------

static CROSSDOMAIN_TXT: &str = include_str!("../lexicons/crossdomain.txt");
static MISLEADING_TXT: &str = include_str!("../lexicons/misleading.txt");

static CROSSDOMAIN: LazyLock<Lexicon> =
    LazyLock::new(|| Lexicon::parse("crossdomain", CROSSDOMAIN_TXT).expect("bundled lexicon parses"));
static MISLEADING: LazyLock<Lexicon> =
    LazyLock::new(|| Lexicon::parse("misleading", MISLEADING_TXT).expect("bundled lexicon parses"));

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexiconEntry {
    pub kind: Option<String>,
    pub name: String,
}

/// Word list, optionally `kind:`-tagged, identified by name and content hash.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lexicon {
    pub version: String,
    pub entries: Vec<LexiconEntry>,
}

impl Lexicon {
    pub fn parse(name: &str, text: &str) -> Result<Lexicon, StrategyError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (kind, word) = match line.split_once(':') {
                Some((k, w)) => (Some(k.trim().to_string()), w.trim()),
                None => (None, line),
            };
            if !is_identifier(word) || is_dunder(word) {
                return Err(StrategyError::BadEntry {
                    line: i + 1,
                    entry: word.to_string(),
                });
            }
            entries.push(LexiconEntry {
                kind,
                name: word.to_string(),
            });
        }
        let digest = Sha256::digest(text.as_bytes());
        let version = format!("{name}-{}", &hex::encode(digest)[..12]);
        Ok(Lexicon { version, entries })
    }

    pub fn crossdomain() -> &'static Lexicon {
        &CROSSDOMAIN
    }

    pub fn misleading() -> &'static Lexicon {
        &MISLEADING
    }

    pub fn words(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.name.as_str()).collect()
    }

    pub fn tagged(&self, kind: &str) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|e| e.kind.as_deref() == Some(kind))
            .map(|e| e.name.as_str())
            .collect()
    }
}

// ----- crossdomain -----------------------------------------------------------

const SUFFIX_ALPHABET: &[u8; 36] = b"abcdefghijklmnopqrstuvwxyz0123456789";
const SUFFIXES: u64 = 36 * 36;

/// `word_xy` names: a permuted lexicon word plus a two-character suffix.
/// Two ordinals below `lcm(words, 1296)` never give the same name.
#[derive(Clone, Debug)]
pub struct CrossdomainGen {
    words: Vec<String>,
    word_perm: Affine,
    suffix_perm: Affine,
}

impl CrossdomainGen {
    pub fn new(seed: u64, words: &[&str]) -> Result<Self, StrategyError> {
        Self::from_rng(&mut Strategy::new(StrategyTag::Crossdomain, seed).rng(), words)
    }

    fn from_rng(rng: &mut ChaCha8Rng, words: &[&str]) -> Result<Self, StrategyError> {
        if words.is_empty() {
            return Err(StrategyError::EmptyLexicon);
        }
        let words: Vec<String> = words.iter().map(|w| w.to_lowercase()).collect();
        Ok(CrossdomainGen {
            word_perm: Affine::new(rng, words.len() as u64),
            suffix_perm: Affine::new(rng, SUFFIXES),
            words,
        })
    }

    pub fn capacity(&self) -> u64 {
        let w = self.words.len() as u64;
        w / gcd(w, SUFFIXES) * SUFFIXES
    }

    pub fn name(&self, ordinal: u64) -> String {
        let k = ordinal - 1;
        let word = &self.words[self.word_perm.apply(k) as usize];
        let s = self.suffix_perm.apply(k);
        let a = SUFFIX_ALPHABET[(s / 36) as usize] as char;
        let b = SUFFIX_ALPHABET[(s % 36) as usize] as char;
        format!("{word}_{a}{b}")
    }
}

pub fn gen_crossdomain(seed: u64, ordinal: u64, lexicon: &[&str]) -> Result<String, StrategyError> {
    Ok(CrossdomainGen::new(seed, lexicon)?.name(ordinal))
}

// ----- misleading ------------------------------------------------------------

/// Lowercased word stems of an identifier, split on `_`, case changes and digits.
pub fn stems(name: &str) -> BTreeSet<String> {
    let mut words: Vec<String> = Vec::new();
    let mut cur = String::new();
    let chars: Vec<char> = name.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        let boundary = c == '_'
            || c.is_ascii_digit()
            || (c.is_uppercase()
                && i > 0
                && (chars[i - 1].is_lowercase()
                    || chars.get(i + 1).is_some_and(|n| n.is_lowercase()) && chars[i - 1].is_uppercase()));
        if boundary && !cur.is_empty() {
            words.push(std::mem::take(&mut cur));
        }
        if c != '_' && !c.is_ascii_digit() {
            cur.extend(c.to_lowercase());
        }
    }
    if !cur.is_empty() {
        words.push(cur);
    }
    words.into_iter().map(|w| stem(&w)).collect()
}

fn stem(word: &str) -> String {
    for (suffix, repl) in [("ies", "y"), ("ing", ""), ("ed", ""), ("s", "")] {
        if let Some(base) = word.strip_suffix(suffix) {
            if base.chars().count() >= 3 && !base.ends_with('s') {
                return format!("{base}{repl}");
            }
        }
    }
    word.to_string()
}

pub fn stem_disjoint(a: &str, b: &str) -> bool {
    stems(a).is_disjoint(&stems(b))
}

/// Lexicon tag used for a binding kind.
pub fn misleading_tag(kind: BindingKind) -> &'static str {
    match kind {
        BindingKind::Class => "class",
        BindingKind::Function | BindingKind::Method => "function",
        _ => "value",
    }
}

/// Draws behavior-implying names; repeated draws of one entry get `_2`, `_3`, ...
#[derive(Clone, Debug)]
pub struct MisleadingGen<'a> {
    rng: ChaCha8Rng,
    lexicon: &'a Lexicon,
    used: HashSet<String>,
}

impl<'a> MisleadingGen<'a> {
    pub fn new(seed: u64, lexicon: &'a Lexicon) -> Self {
        Self::from_rng(Strategy::new(StrategyTag::Misleading, seed).rng(), lexicon)
    }

    fn from_rng(rng: ChaCha8Rng, lexicon: &'a Lexicon) -> Self {
        MisleadingGen {
            rng,
            lexicon,
            used: HashSet::new(),
        }
    }

    pub fn draw(
        &mut self,
        original: &str,
        kind: BindingKind,
        taken: impl Fn(&str) -> bool,
    ) -> Result<String, StrategyError> {
        let tag = misleading_tag(kind);
        let candidates: Vec<&str> = self
            .lexicon
            .tagged(tag)
            .into_iter()
            .filter(|c| stem_disjoint(c, original))
            .collect();
        if candidates.is_empty() {
            return Err(StrategyError::ExhaustedLexicon {
                name: original.to_string(),
                kind: tag.to_string(),
            });
        }
        let pick = candidates[self.rng.random_range(0..candidates.len())];
        let mut name = pick.to_string();
        let mut n = 2;
        while self.used.contains(&name) || taken(&name) {
            name = format!("{pick}_{n}");
            n += 1;
        }
        self.used.insert(name.clone());
        Ok(name)
    }
}

pub fn gen_misleading(
    seed: u64,
    original: &str,
    kind: BindingKind,
    lexicon: &Lexicon,
) -> Result<String, StrategyError> {
    MisleadingGen::new(seed, lexicon).draw(original, kind, |_| false)
}

// ----- name maps -------------------------------------------------------------

/// Names a fresh name must avoid regardless of the unit.
pub fn reserved(name: &str) -> bool {
    is_hard_keyword(name) || data::SOFT_KEYWORDS.contains(&name) || data::builtins().contains(name) || is_dunder(name)
}

fn check_version(strategy: &Strategy, lexicon: &Lexicon) -> Result<(), StrategyError> {
    match &strategy.lexicon_version {
        Some(v) if *v != lexicon.version => Err(StrategyError::LexiconVersion {
            wanted: v.clone(),
            bundled: lexicon.version.clone(),
        }),
        _ => Ok(()),
    }
}

enum Generator<'a> {
    Alpha(BTreeMap<&'static str, u64>),
    Ambiguity(AmbiguousGen, u64),
    Crossdomain(CrossdomainGen, u64),
    Misleading(MisleadingGen<'a>),
}

/// Assign fresh names to every renameable binding. Bindings in one rename
/// group share a name; names are distinct across groups and never reuse an
/// identifier already present in the unit.
pub fn build_map(graph: &ScopeGraph, strategy: &Strategy, policy: RenamePolicy) -> Result<NameMap, StrategyError> {
    let mut rng = strategy.rng();
    let mut gen = match strategy.tag {
        StrategyTag::Alpha => Generator::Alpha(BTreeMap::new()),
        StrategyTag::Ambiguity => Generator::Ambiguity(AmbiguousGen::from_rng(&mut rng, strategy.ambiguity_digits), 0),
        StrategyTag::Crossdomain => {
            let lex = Lexicon::crossdomain();
            check_version(strategy, lex)?;
            Generator::Crossdomain(CrossdomainGen::from_rng(&mut rng, &lex.words())?, 0)
        }
        StrategyTag::Misleading => {
            let lex = Lexicon::misleading();
            check_version(strategy, lex)?;
            Generator::Misleading(MisleadingGen::from_rng(rng, lex))
        }
    };

    let mut groups: BTreeMap<BindingId, Vec<BindingId>> = BTreeMap::new();
    for b in renameable_set(graph, policy) {
        groups.entry(graph.group_of(b)).or_default().push(b);
    }
    let mut ordered: Vec<Vec<BindingId>> = groups.into_values().collect();
    ordered.sort_by_key(|members| {
        members
            .iter()
            .map(|&b| (graph.bindings[b].definition, b))
            .min()
            .expect("groups are non-empty")
    });

    let mut taken: HashSet<String> = graph.names_in_use.iter().cloned().collect();
    let mut map = NameMap::empty("", strategy.clone(), policy);
    for members in ordered {
        let first = members
            .iter()
            .copied()
            .min_by_key(|&b| (graph.bindings[b].definition, b))
            .unwrap();
        let binding = &graph.bindings[first];
        let private = binding.name.starts_with("__");
        let prefix = if private { "__" } else { "" };
        let usable = |n: &str, taken: &HashSet<String>| is_identifier(n) && !reserved(n) && !taken.contains(n);
        let fresh = match &mut gen {
            Generator::Alpha(counters) => loop {
                let family = Placeholder::of(binding.kind).prefix();
                let c = counters.entry(family).or_insert(0);
                *c += 1;
                let n = format!("{prefix}{}", gen_alpha(binding.kind, *c));
                if usable(&n, &taken) {
                    break n;
                }
            },
            Generator::Ambiguity(g, ord) => loop {
                *ord += 1;
                if *ord > g.capacity() {
                    return Err(StrategyError::NameSpace(strategy.tag));
                }
                let n = format!("{prefix}{}", g.name(*ord));
                if usable(&n, &taken) {
                    break n;
                }
            },
            Generator::Crossdomain(g, ord) => loop {
                *ord += 1;
                if *ord > g.capacity() {
                    return Err(StrategyError::NameSpace(strategy.tag));
                }
                let n = format!("{prefix}{}", g.name(*ord));
                if usable(&n, &taken) {
                    break n;
                }
            },
            Generator::Misleading(g) => {
                let base = binding.name.trim_start_matches('_');
                let n = g.draw(base, binding.kind, |c| !usable(&format!("{prefix}{c}"), &taken))?;
                format!("{prefix}{n}")
            }
        };
        taken.insert(fresh.clone());
        for b in members {
            let bb = &graph.bindings[b];
            map.entries.insert(
                b,
                MapEntry {
                    original: bb.name.clone(),
                    renamed: fresh.clone(),
                    kind: bb.kind,
                },
            );
        }
    }
    Ok(map)
}
