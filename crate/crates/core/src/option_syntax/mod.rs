//! Container-launch options and their formal value grammar.
//!
//! Every option in the catalog carries a [`ValueSyntax`] that describes a
//! finite value space. Candidate strings are checked against it with
//! [`validate_value`], random members are drawn with [`sample_value`], and
//! typed values are turned back into command-line fragments with
//! [`render_flag`].

mod catalog;
mod grammar;

pub use catalog::{OptionCatalog, DEFAULT_CATALOG};
pub use grammar::parse_syntax;

use std::fmt;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Signal names accepted by `<Signals>`.
pub const SIGNALS: [&str; 31] = [
    "SIGHUP", "SIGINT", "SIGQUIT", "SIGILL", "SIGTRAP", "SIGABRT", "SIGBUS", "SIGFPE", "SIGKILL",
    "SIGUSR1", "SIGSEGV", "SIGUSR2", "SIGPIPE", "SIGALRM", "SIGTERM", "SIGSTKFLT", "SIGCHLD",
    "SIGCONT", "SIGSTOP", "SIGTSTP", "SIGTTIN", "SIGTTOU", "SIGURG", "SIGXCPU", "SIGXFSZ",
    "SIGVTALRM", "SIGPROF", "SIGWINCH", "SIGIO", "SIGPWR", "SIGSYS",
];

/// Catalog categories (the declared-type column).
pub const CATEGORIES: [&str; 5] = ["list", "bool", "string", "int", "bytes"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OptionError {
    #[error("option `{option}`: cannot parse syntax `{expression}`: {reason}")]
    Syntax {
        option: String,
        expression: String,
        reason: String,
    },
    #[error("option `{0}` is defined more than once")]
    Duplicate(String),
    #[error("catalog line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("`{option}`: value {value} out of range, legal bounds are [{min}, {max}]")]
    Range {
        option: String,
        value: String,
        min: i128,
        max: i128,
    },
    #[error("`{option}`: unit suffix `{suffix}` is not one of `{allowed}`")]
    Unit {
        option: String,
        suffix: char,
        allowed: String,
    },
    #[error("`{option}`: `{value}` does not match the option grammar")]
    Mismatch { option: String, value: String },
    #[error("unknown option `{0}`")]
    Unknown(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    Host,
    Container,
}

/// One element of a [`ValueSyntax::Compound`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Part {
    Literal(String),
    Value(ValueSyntax),
    Optional(Vec<Part>),
}

/// The value space of an option.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValueSyntax {
    BoolFlag,
    /// `[0, 2^bits)`
    UnsignedInt { bits: u32 },
    /// `[-2^(bits-1), 2^(bits-1))`
    SignedInt { bits: u32 },
    /// `[lo, hi)`
    ContinuousRange { lo: i64, hi: i64 },
    Enum(Vec<String>),
    /// `[0, 2^bits)` with a single-character unit suffix.
    BytesWithUnit {
        bits: u32,
        units: Vec<char>,
        unit_optional: bool,
    },
    /// Absolute path, sampled from a configured pool.
    Path(PathKind),
    /// One or more comma-separated elements.
    ListOf(Box<ValueSyntax>),
    Compound(Vec<Part>),
    Choice(Vec<ValueSyntax>),
}

impl ValueSyntax {
    pub(crate) fn check_well_formed(&self) -> Result<(), String> {
        match self {
            ValueSyntax::Enum(choices) => {
                if choices.is_empty() {
                    return Err("enum without choices".into());
                }
                let mut seen = std::collections::BTreeSet::new();
                for c in choices {
                    if !seen.insert(c) {
                        return Err(format!("duplicate enum choice `{c}`"));
                    }
                }
                Ok(())
            }
            ValueSyntax::BytesWithUnit { units, .. } if units.is_empty() => {
                Err("unit list is empty".into())
            }
            ValueSyntax::ListOf(inner) => inner.check_well_formed(),
            ValueSyntax::Choice(alts) => alts.iter().try_for_each(|a| a.check_well_formed()),
            ValueSyntax::Compound(parts) => check_parts(parts),
            _ => Ok(()),
        }
    }

    /// Inclusive integer bounds for integer-valued syntaxes.
    ///
    /// A [`ValueSyntax::Choice`] reports the hull over its integer branches,
    /// so `"-1" | <U22>` yields `[0, 2^22 - 1]`.
    pub fn integer_bounds(&self) -> Option<(i128, i128)> {
        match self {
            ValueSyntax::UnsignedInt { bits } | ValueSyntax::BytesWithUnit { bits, .. } => {
                Some((0, (1i128 << bits) - 1))
            }
            ValueSyntax::SignedInt { bits } => {
                let half = 1i128 << (bits - 1);
                Some((-half, half - 1))
            }
            ValueSyntax::ContinuousRange { lo, hi } => Some((*lo as i128, *hi as i128 - 1)),
            ValueSyntax::Choice(alts) => alts
                .iter()
                .filter_map(|a| a.integer_bounds())
                .reduce(|(a, b), (c, d)| (a.min(c), b.max(d))),
            _ => None,
        }
    }
}

fn check_parts(parts: &[Part]) -> Result<(), String> {
    parts.iter().try_for_each(|p| match p {
        Part::Literal(_) => Ok(()),
        Part::Value(v) => v.check_well_formed(),
        Part::Optional(inner) => check_parts(inner),
    })
}

/// One catalog entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptionSpec {
    pub name: String,
    pub category: String,
    pub syntax: ValueSyntax,
    /// The syntax expression as written in the catalog.
    pub expression: String,
}

impl OptionSpec {
    pub fn new(name: &str, category: &str, expression: &str) -> Result<Self, OptionError> {
        let syntax = parse_syntax(expression).map_err(|reason| OptionError::Syntax {
            option: name.to_owned(),
            expression: expression.to_owned(),
            reason,
        })?;
        Ok(Self {
            name: name.to_owned(),
            category: category.to_owned(),
            syntax,
            expression: expression.to_owned(),
        })
    }

    /// Shorthand for validating the decimal rendering of `v`.
    pub fn value_from_integer(&self, v: i128) -> Result<OptionValue, OptionError> {
        validate_value(self, &v.to_string())
    }
}

/// Typed value matching some [`ValueSyntax`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Payload {
    Flag(bool),
    Int(i128),
    /// An enum choice or a path.
    Text(String),
    Bytes { magnitude: u64, unit: Option<char> },
    List(Vec<Payload>),
    /// Compound value, one entry per part (literals included).
    Seq(Vec<Payload>),
    Literal(String),
    /// An optional compound group; `None` when omitted.
    Opt(Option<Vec<Payload>>),
    Alt { index: usize, value: Box<Payload> },
}

impl Payload {
    /// Textual value as it appears after `--name=`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_into(&mut out);
        out
    }

    fn render_into(&self, out: &mut String) {
        match self {
            Payload::Flag(b) => out.push_str(if *b { "true" } else { "false" }),
            Payload::Int(v) => out.push_str(&v.to_string()),
            Payload::Text(t) | Payload::Literal(t) => out.push_str(t),
            Payload::Bytes { magnitude, unit } => {
                out.push_str(&magnitude.to_string());
                if let Some(u) = unit {
                    out.push(*u);
                }
            }
            Payload::List(items) => {
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    item.render_into(out);
                }
            }
            Payload::Seq(parts) => parts.iter().for_each(|p| p.render_into(out)),
            Payload::Opt(Some(parts)) => parts.iter().for_each(|p| p.render_into(out)),
            Payload::Opt(None) => {}
            Payload::Alt { value, .. } => value.render_into(out),
        }
    }

    /// Integer reading of the payload: byte values are scaled by their unit.
    pub fn as_integer(&self) -> Option<i128> {
        match self {
            Payload::Int(v) => Some(*v),
            Payload::Bytes { magnitude, unit } => {
                let scale: i128 = match unit {
                    None | Some('b') | Some('n') => 1,
                    Some('k') => 1 << 10,
                    Some('m') => 1 << 20,
                    Some('g') => 1 << 30,
                    Some(_) => return None,
                };
                Some(*magnitude as i128 * scale)
            }
            Payload::Text(t) | Payload::Literal(t) => t.parse().ok(),
            Payload::Alt { value, .. } => value.as_integer(),
            _ => None,
        }
    }
}

/// A validated value for a named option.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OptionValue {
    pub spec_name: String,
    pub payload: Payload,
}

impl OptionValue {
    pub fn as_integer(&self) -> Option<i128> {
        self.payload.as_integer()
    }

    /// The value text without the flag prefix; booleans render `true`/`false`.
    pub fn value_text(&self) -> String {
        self.payload.render()
    }

    /// One `--name=value` argument per list element, for runners that
    /// expect repeated flags.
    pub fn render_args(&self) -> Vec<String> {
        match &self.payload {
            Payload::List(items) => items
                .iter()
                .map(|i| format!("--{}={}", self.spec_name, i.render()))
                .collect(),
            _ => vec![render_flag(self)],
        }
    }
}

impl fmt::Display for OptionValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_flag(self))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Diagnostic {
    Range { value: String, min: i128, max: i128 },
    Unit { suffix: char, allowed: String },
}

struct Matcher<'a> {
    input: &'a [u8],
    text: &'a str,
    diagnostics: Vec<Diagnostic>,
}

impl<'a> Matcher<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            input: text.as_bytes(),
            text,
            diagnostics: Vec::new(),
        }
    }

    fn digits_end(&self, pos: usize) -> usize {
        let mut end = pos;
        while end < self.input.len() && self.input[end].is_ascii_digit() {
            end += 1;
        }
        end
    }

    fn integer(&mut self, pos: usize, signed: bool, min: i128, max: i128) -> Option<(usize, i128)> {
        let mut start = pos;
        if signed && self.input.get(pos) == Some(&b'-') {
            start += 1;
        }
        let end = self.digits_end(start);
        if end == start || end - start > 30 {
            return None;
        }
        let text = &self.text[pos..end];
        let value: i128 = text.parse().ok()?;
        if value < min || value > max {
            self.diagnostics.push(Diagnostic::Range {
                value: text.to_owned(),
                min,
                max,
            });
            return None;
        }
        Some((end, value))
    }

    /// Every way `syntax` can match a prefix of `input[pos..]`, as
    /// `(end, payload)` pairs in preference order.
    fn matches(&mut self, syntax: &ValueSyntax, pos: usize) -> Vec<(usize, Payload)> {
        match syntax {
            ValueSyntax::BoolFlag => {
                let rest = &self.text[pos..];
                let mut out = Vec::new();
                if rest.starts_with("true") {
                    out.push((pos + 4, Payload::Flag(true)));
                }
                if rest.starts_with("false") {
                    out.push((pos + 5, Payload::Flag(false)));
                }
                out.push((pos, Payload::Flag(true)));
                out
            }
            ValueSyntax::UnsignedInt { bits } => {
                let max = (1i128 << bits) - 1;
                self.integer(pos, false, 0, max)
                    .map(|(e, v)| vec![(e, Payload::Int(v))])
                    .unwrap_or_default()
            }
            ValueSyntax::SignedInt { bits } => {
                let half = 1i128 << (bits - 1);
                self.integer(pos, true, -half, half - 1)
                    .map(|(e, v)| vec![(e, Payload::Int(v))])
                    .unwrap_or_default()
            }
            ValueSyntax::ContinuousRange { lo, hi } => self
                .integer(pos, *lo < 0, *lo as i128, *hi as i128 - 1)
                .map(|(e, v)| vec![(e, Payload::Int(v))])
                .unwrap_or_default(),
            ValueSyntax::Enum(choices) => choices
                .iter()
                .filter(|c| self.text[pos..].starts_with(c.as_str()))
                .map(|c| (pos + c.len(), Payload::Text(c.clone())))
                .collect(),
            ValueSyntax::BytesWithUnit {
                bits,
                units,
                unit_optional,
            } => {
                let Some((end, magnitude)) = self.integer(pos, false, 0, (1i128 << bits) - 1)
                else {
                    return Vec::new();
                };
                let magnitude = magnitude as u64;
                let mut out = Vec::new();
                match self.text[end..].chars().next() {
                    Some(c) if units.contains(&c) => out.push((
                        end + c.len_utf8(),
                        Payload::Bytes {
                            magnitude,
                            unit: Some(c),
                        },
                    )),
                    Some(c) if c.is_ascii_alphabetic() => self.diagnostics.push(Diagnostic::Unit {
                        suffix: c,
                        allowed: units.iter().collect(),
                    }),
                    _ => {}
                }
                if *unit_optional {
                    out.push((
                        end,
                        Payload::Bytes {
                            magnitude,
                            unit: None,
                        },
                    ));
                }
                out
            }
            ValueSyntax::Path(_) => {
                if self.input.get(pos) != Some(&b'/') {
                    return Vec::new();
                }
                let mut end = pos + 1;
                while end < self.input.len()
                    && !matches!(self.input[end], b':' | b',')
                    && !self.input[end].is_ascii_whitespace()
                {
                    end += 1;
                }
                vec![(end, Payload::Text(self.text[pos..end].to_owned()))]
            }
            ValueSyntax::ListOf(elem) => {
                let mut out = Vec::new();
                let mut frontier: Vec<(usize, Vec<Payload>)> = vec![(pos, Vec::new())];
                while let Some((at, items)) = frontier.pop() {
                    for (end, p) in self.matches(elem, at) {
                        let mut next = items.clone();
                        next.push(p);
                        if self.input.get(end) == Some(&b',') {
                            frontier.push((end + 1, next.clone()));
                        }
                        out.push((end, Payload::List(next)));
                    }
                }
                out.sort_by_key(|p| std::cmp::Reverse(p.0));
                out
            }
            ValueSyntax::Compound(parts) => self
                .sequence(parts, pos)
                .into_iter()
                .map(|(e, ps)| (e, Payload::Seq(ps)))
                .collect(),
            ValueSyntax::Choice(alts) => {
                let mut out = Vec::new();
                for (index, alt) in alts.iter().enumerate() {
                    for (e, p) in self.matches(alt, pos) {
                        out.push((
                            e,
                            Payload::Alt {
                                index,
                                value: Box::new(p),
                            },
                        ));
                    }
                }
                out
            }
        }
    }

    fn sequence(&mut self, parts: &[Part], pos: usize) -> Vec<(usize, Vec<Payload>)> {
        let Some((first, rest)) = parts.split_first() else {
            return vec![(pos, Vec::new())];
        };
        let heads: Vec<(usize, Payload)> = match first {
            Part::Literal(l) => {
                if self.text[pos..].starts_with(l.as_str()) {
                    vec![(pos + l.len(), Payload::Literal(l.clone()))]
                } else {
                    Vec::new()
                }
            }
            Part::Value(v) => self.matches(v, pos),
            Part::Optional(inner) => {
                let mut hs: Vec<(usize, Payload)> = self
                    .sequence(inner, pos)
                    .into_iter()
                    .filter(|(e, _)| *e > pos)
                    .map(|(e, ps)| (e, Payload::Opt(Some(ps))))
                    .collect();
                hs.push((pos, Payload::Opt(None)));
                hs
            }
        };
        let mut out = Vec::new();
        for (end, head) in heads {
            for (tail_end, mut tail) in self.sequence(rest, end) {
                tail.insert(0, head.clone());
                out.push((tail_end, tail));
            }
        }
        out
    }
}

/// Checks `candidate` against the option's grammar and returns the typed value.
///
/// The candidate is the value text only (what follows `--name=`). For
/// boolean flags the empty string means "present".
pub fn validate_value(spec: &OptionSpec, candidate: &str) -> Result<OptionValue, OptionError> {
    let mut m = Matcher::new(candidate);
    let full = m
        .matches(&spec.syntax, 0)
        .into_iter()
        .find(|(end, _)| *end == candidate.len());
    if let Some((_, payload)) = full {
        return Ok(OptionValue {
            spec_name: spec.name.clone(),
            payload,
        });
    }
    let option = spec.name.clone();
    match m.diagnostics.into_iter().next() {
        Some(Diagnostic::Range { value, min, max }) => Err(OptionError::Range {
            option,
            value,
            min,
            max,
        }),
        Some(Diagnostic::Unit { suffix, allowed }) => Err(OptionError::Unit {
            option,
            suffix,
            allowed,
        }),
        None => Err(OptionError::Mismatch {
            option,
            value: candidate.to_owned(),
        }),
    }
}

/// Knobs for [`sample_value`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleConfig {
    /// Lists get a length drawn uniformly from `1..=list_cap`.
    pub list_cap: usize,
    pub host_paths: Vec<String>,
    pub container_paths: Vec<String>,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            list_cap: 4,
            host_paths: vec![
                "/srv/beacon/data".into(),
                "/srv/beacon/config".into(),
                "/tmp/beacon".into(),
            ],
            container_paths: vec!["/data".into(), "/etc/app".into(), "/var/lib/app".into()],
        }
    }
}

/// Draws a value from the option's value space; a pure function of
/// `(spec, seed)` under the default [`SampleConfig`].
pub fn sample_value(spec: &OptionSpec, seed: u64) -> OptionValue {
    sample_value_with(spec, seed, &SampleConfig::default())
}

pub fn sample_value_with(spec: &OptionSpec, seed: u64, config: &SampleConfig) -> OptionValue {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    OptionValue {
        spec_name: spec.name.clone(),
        payload: sample_syntax(&spec.syntax, &mut rng, config),
    }
}

fn sample_syntax<R: Rng>(syntax: &ValueSyntax, rng: &mut R, config: &SampleConfig) -> Payload {
    match syntax {
        ValueSyntax::BoolFlag => Payload::Flag(rng.random_bool(0.5)),
        ValueSyntax::UnsignedInt { .. }
        | ValueSyntax::SignedInt { .. }
        | ValueSyntax::ContinuousRange { .. } => {
            let (lo, hi) = syntax.integer_bounds().expect("integer syntax");
            Payload::Int(rng.random_range(lo..=hi))
        }
        ValueSyntax::Enum(choices) => {
            Payload::Text(choices.choose(rng).expect("non-empty enum").clone())
        }
        ValueSyntax::BytesWithUnit {
            bits,
            units,
            unit_optional,
        } => {
            let magnitude = rng.random_range(0..=((1u128 << bits) - 1)) as u64;
            let unit = if *unit_optional {
                // absent counts as one more choice
                let i = rng.random_range(0..=units.len());
                units.get(i).copied()
            } else {
                units.choose(rng).copied()
            };
            Payload::Bytes { magnitude, unit }
        }
        ValueSyntax::Path(kind) => {
            let pool = match kind {
                PathKind::Host => &config.host_paths,
                PathKind::Container => &config.container_paths,
            };
            Payload::Text(pool.choose(rng).cloned().unwrap_or_else(|| "/".into()))
        }
        ValueSyntax::ListOf(elem) => {
            let len = rng.random_range(1..=config.list_cap.max(1));
            Payload::List((0..len).map(|_| sample_syntax(elem, rng, config)).collect())
        }
        ValueSyntax::Compound(parts) => Payload::Seq(sample_parts(parts, rng, config)),
        ValueSyntax::Choice(alts) => {
            let index = rng.random_range(0..alts.len());
            Payload::Alt {
                index,
                value: Box::new(sample_syntax(&alts[index], rng, config)),
            }
        }
    }
}

fn sample_parts<R: Rng>(parts: &[Part], rng: &mut R, config: &SampleConfig) -> Vec<Payload> {
    parts
        .iter()
        .map(|p| match p {
            Part::Literal(l) => Payload::Literal(l.clone()),
            Part::Value(v) => sample_syntax(v, rng, config),
            Part::Optional(inner) => {
                if rng.random_bool(0.5) {
                    Payload::Opt(Some(sample_parts(inner, rng, config)))
                } else {
                    Payload::Opt(None)
                }
            }
        })
        .collect()
}

/// Canonical command-line fragment: `--name` for a present flag,
/// `--name=false` for an absent one, `--name=value` otherwise.
pub fn render_flag(value: &OptionValue) -> String {
    match &value.payload {
        Payload::Flag(true) => format!("--{}", value.spec_name),
        Payload::Flag(false) => format!("--{}=false", value.spec_name),
        other => format!("--{}={}", value.spec_name, other.render()),
    }
}

/// Strips the `--name` / `--name=` prefix produced by [`render_flag`].
pub fn strip_flag_prefix<'a>(fragment: &'a str, name: &str) -> Option<&'a str> {
    let rest = fragment.strip_prefix("--")?.strip_prefix(name)?;
    if rest.is_empty() {
        Some("")
    } else {
        rest.strip_prefix('=')
    }
}

/// Parses a `--name[=value]` fragment against the catalog.
pub fn parse_flag(catalog: &OptionCatalog, fragment: &str) -> Result<OptionValue, OptionError> {
    let body = fragment.trim().trim_start_matches("--");
    let (name, value) = body.split_once('=').unwrap_or((body, ""));
    let spec = catalog
        .get(name)
        .ok_or_else(|| OptionError::Unknown(name.to_owned()))?;
    validate_value(spec, value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(name: &str, expr: &str) -> OptionSpec {
        OptionSpec::new(name, "int", expr).unwrap()
    }

    #[test]
    fn cpu_shares_bounds() {
        let s = spec("cpu-shares", "<U18>");
        assert_eq!(validate_value(&s, "131072").unwrap().payload, Payload::Int(131072));
        assert_eq!(validate_value(&s, "262143").unwrap().payload, Payload::Int(262143));
        match validate_value(&s, "262144") {
            Err(OptionError::Range { min, max, .. }) => {
                assert_eq!((min, max), (0, 262143));
            }
            other => panic!("expected range error, got {other:?}"),
        }
    }

    #[test]
    fn memory_units() {
        let s = spec("memory", r#"<U32> [("b" | "k" | "m" | "g")]"#);
        let v = validate_value(&s, "512m").unwrap();
        assert_eq!(
            v.payload,
            Payload::Bytes {
                magnitude: 512,
                unit: Some('m')
            }
        );
        assert_eq!(render_flag(&v), "--memory=512m");
        assert!(validate_value(&s, "512").is_ok());
        assert!(matches!(
            validate_value(&s, "512x"),
            Err(OptionError::Unit { suffix: 'x', .. })
        ));
        assert!(matches!(validate_value(&s, "4294967296"), Err(OptionError::Range { .. })));
    }

    #[test]
    fn bool_flag_forms() {
        let s = spec("detach", "<Bool>");
        let present = validate_value(&s, "").unwrap();
        assert_eq!(render_flag(&present), "--detach");
        let absent = validate_value(&s, "false").unwrap();
        assert_eq!(render_flag(&absent), "--detach=false");
        assert!(validate_value(&s, "yes").is_err());
    }

    #[test]
    fn publish_renders_canonically() {
        let s = spec(
            "publish",
            r#"<List>:(<Continuous_range>:(0, U16) ":" <Continuous_range>:(0, U16) ["/"("tcp" | "udp")])"#,
        );
        let v = validate_value(&s, "8080:80/tcp").unwrap();
        assert_eq!(render_flag(&v), "--publish=8080:80/tcp");
        assert!(validate_value(&s, "8080:80").is_ok());
        assert!(validate_value(&s, "8080:80/sctp").is_err());
        assert!(validate_value(&s, "65536:80").is_err());
        let two = validate_value(&s, "1:2,3:4/udp").unwrap();
        assert_eq!(
            two.render_args(),
            vec!["--publish=1:2".to_string(), "--publish=3:4/udp".to_string()]
        );
    }

    #[test]
    fn volume_paths() {
        let s = spec("volume", r#"<List>:([<HVPath> ":"] <CVPath>[":"["ro" | "rw"]])"#);
        for ok in ["/data", "/host:/data", "/host:/data:ro", "/data:"] {
            assert!(validate_value(&s, ok).is_ok(), "{ok}");
        }
        for bad in ["data", "/host:/data:rx", ""] {
            assert!(validate_value(&s, bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn pids_limit_choice() {
        let s = spec("pids-limit", r#""-1" | <U22>"#);
        assert!(validate_value(&s, "-1").is_ok());
        assert!(validate_value(&s, "4194303").is_ok());
        assert!(validate_value(&s, "-2").is_err());
        assert_eq!(s.syntax.integer_bounds(), Some((0, (1 << 22) - 1)));
    }

    #[test]
    fn signed_and_range() {
        let s = spec("oom-score-adj", "<I11>");
        assert!(validate_value(&s, "-1024").is_ok());
        assert!(validate_value(&s, "1023").is_ok());
        assert!(validate_value(&s, "1024").is_err());
        let r = spec("cpu-period", "(1000, 1000000)");
        assert!(validate_value(&r, "1000").is_ok());
        assert!(validate_value(&r, "999999").is_ok());
        assert!(matches!(validate_value(&r, "1000000"), Err(OptionError::Range { .. })));
        assert!(matches!(validate_value(&r, "999"), Err(OptionError::Range { .. })));
    }

    #[test]
    fn sampling_is_deterministic_and_bounded() {
        let s = spec("cpu-shares", "<U18>");
        for seed in 0..200 {
            let a = sample_value(&s, seed);
            assert_eq!(a, sample_value(&s, seed));
            let v = a.as_integer().unwrap();
            assert!((0..262144).contains(&v));
        }
    }

    #[test]
    fn enum_sampling_stays_in_set() {
        let s = spec("proto", r#""tcp" | "udp""#);
        for seed in 0..50 {
            let v = sample_value(&s, seed);
            assert!(matches!(&v.payload, Payload::Text(t) if t == "tcp" || t == "udp"));
        }
    }

    #[test]
    fn list_sampling_respects_cap() {
        let s = spec("attach", r#"<List>:( "stdin" | "stdout" | "stderr")"#);
        let cfg = SampleConfig {
            list_cap: 2,
            ..SampleConfig::default()
        };
        for seed in 0..100 {
            let Payload::List(items) = sample_value_with(&s, seed, &cfg).payload else {
                panic!("not a list")
            };
            assert!((1..=2).contains(&items.len()));
        }
    }

    #[test]
    fn flag_prefix_stripping() {
        assert_eq!(strip_flag_prefix("--detach", "detach"), Some(""));
        assert_eq!(strip_flag_prefix("--memory=5m", "memory"), Some("5m"));
        assert_eq!(strip_flag_prefix("--memoryx=5m", "memory"), None);
    }
}
