//! Parser for the catalog's syntax-expression notation.
//!
//! ```text
//! expr  := seq ('|' seq)*
//! seq   := item+
//! item  := '<List>' ':' item
//!        | '<Continuous_range>' ':' range
//!        | '<Bool>' | '<Signals>' | '<HVPath>' | '<CVPath>' | '<U' N '>' | '<I' N '>'
//!        | '"' literal '"'
//!        | '[' expr ']'
//!        | range
//!        | '(' expr ')'
//! range := '(' INT ',' (INT | 'U' N) ')'
//! ```

use super::{Part, PathKind, ValueSyntax, SIGNALS};

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Tag(String),
    Str(String),
    Int(i128),
    Ident(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Pipe,
    Colon,
    Comma,
}

fn tokenize(input: &str) -> Result<Vec<Token>, String> {
    let chars: Vec<char> = input.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '(' => {
                out.push(Token::LParen);
                i += 1;
            }
            ')' => {
                out.push(Token::RParen);
                i += 1;
            }
            '[' => {
                out.push(Token::LBracket);
                i += 1;
            }
            ']' => {
                out.push(Token::RBracket);
                i += 1;
            }
            '|' => {
                out.push(Token::Pipe);
                i += 1;
            }
            ':' => {
                out.push(Token::Colon);
                i += 1;
            }
            ',' => {
                out.push(Token::Comma);
                i += 1;
            }
            '<' => {
                let end = chars[i..]
                    .iter()
                    .position(|&ch| ch == '>')
                    .ok_or_else(|| format!("unterminated tag at offset {i}"))?;
                let tag: String = chars[i + 1..i + end].iter().collect();
                if tag.is_empty() {
                    return Err(format!("empty tag at offset {i}"));
                }
                out.push(Token::Tag(tag));
                i += end + 1;
            }
            '"' => {
                let end = chars[i + 1..]
                    .iter()
                    .position(|&ch| ch == '"')
                    .ok_or_else(|| format!("unterminated literal at offset {i}"))?;
                let lit: String = chars[i + 1..i + 1 + end].iter().collect();
                if lit.is_empty() {
                    return Err(format!("empty literal at offset {i}"));
                }
                out.push(Token::Str(lit));
                i += end + 2;
            }
            c if c.is_ascii_digit() || c == '-' => {
                let start = i;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let n = text
                    .parse::<i128>()
                    .map_err(|_| format!("bad integer `{text}`"))?;
                out.push(Token::Int(n));
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Token::Ident(chars[start..i].iter().collect()));
            }
            other => return Err(format!("unexpected character `{other}`")),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, off: usize) -> Option<&Token> {
        self.tokens.get(self.pos + off)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Token) -> Result<(), String> {
        match self.next() {
            Some(t) if t == want => Ok(()),
            Some(t) => Err(format!("expected {want:?}, found {t:?}")),
            None => Err(format!("expected {want:?}, found end of input")),
        }
    }

    fn expr(&mut self) -> Result<ValueSyntax, String> {
        let mut alternatives = vec![self.seq()?];
        while self.peek() == Some(&Token::Pipe) {
            self.pos += 1;
            alternatives.push(self.seq()?);
        }
        let syntaxes: Vec<ValueSyntax> = alternatives.into_iter().map(normalize_seq).collect();
        if syntaxes.len() == 1 {
            return Ok(syntaxes.into_iter().next().unwrap());
        }
        if syntaxes.iter().all(|s| matches!(s, ValueSyntax::Enum(_))) {
            let mut choices = Vec::new();
            for s in syntaxes {
                if let ValueSyntax::Enum(c) = s {
                    choices.extend(c);
                }
            }
            return Ok(ValueSyntax::Enum(choices));
        }
        Ok(ValueSyntax::Choice(syntaxes))
    }

    fn seq(&mut self) -> Result<Vec<Part>, String> {
        let mut parts = Vec::new();
        while let Some(t) = self.peek() {
            if matches!(t, Token::RParen | Token::RBracket | Token::Pipe) {
                break;
            }
            parts.push(self.item()?);
        }
        if parts.is_empty() {
            return Err("empty alternative".into());
        }
        Ok(parts)
    }

    fn looks_like_range(&self) -> bool {
        matches!(self.peek(), Some(Token::LParen))
            && matches!(self.peek_at(1), Some(Token::Int(_)))
            && matches!(self.peek_at(2), Some(Token::Comma))
    }

    fn range(&mut self) -> Result<ValueSyntax, String> {
        self.expect(Token::LParen)?;
        let lo = match self.next() {
            Some(Token::Int(n)) => n,
            other => return Err(format!("expected range lower bound, found {other:?}")),
        };
        self.expect(Token::Comma)?;
        let hi = match self.next() {
            Some(Token::Int(n)) => n,
            Some(Token::Ident(id)) => power_of_two_bound(&id)?,
            other => return Err(format!("expected range upper bound, found {other:?}")),
        };
        self.expect(Token::RParen)?;
        if lo >= hi {
            return Err(format!("empty range ({lo}, {hi})"));
        }
        Ok(ValueSyntax::ContinuousRange {
            lo: lo as i64,
            hi: hi as i64,
        })
    }

    fn item(&mut self) -> Result<Part, String> {
        match self.peek().cloned() {
            Some(Token::Str(s)) => {
                self.pos += 1;
                Ok(Part::Literal(s))
            }
            Some(Token::LBracket) => {
                self.pos += 1;
                let inner = self.expr_parts()?;
                self.expect(Token::RBracket)?;
                Ok(Part::Optional(inner))
            }
            Some(Token::LParen) if self.looks_like_range() => Ok(Part::Value(self.range()?)),
            Some(Token::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(Part::Value(inner))
            }
            Some(Token::Tag(tag)) => {
                self.pos += 1;
                self.tagged(&tag).map(Part::Value)
            }
            Some(t) => Err(format!("unexpected token {t:?}")),
            None => Err("unexpected end of expression".into()),
        }
    }

    /// Contents of `[...]`: a single sequence keeps its parts, an
    /// alternation becomes one value part.
    fn expr_parts(&mut self) -> Result<Vec<Part>, String> {
        let first = self.seq()?;
        if self.peek() != Some(&Token::Pipe) {
            return Ok(first);
        }
        let mut alternatives = vec![normalize_seq(first)];
        while self.peek() == Some(&Token::Pipe) {
            self.pos += 1;
            alternatives.push(normalize_seq(self.seq()?));
        }
        let merged = if alternatives.iter().all(|s| matches!(s, ValueSyntax::Enum(_))) {
            ValueSyntax::Enum(
                alternatives
                    .into_iter()
                    .flat_map(|s| match s {
                        ValueSyntax::Enum(c) => c,
                        _ => unreachable!(),
                    })
                    .collect(),
            )
        } else {
            ValueSyntax::Choice(alternatives)
        };
        Ok(vec![Part::Value(merged)])
    }

    fn tagged(&mut self, tag: &str) -> Result<ValueSyntax, String> {
        match tag {
            "Bool" => Ok(ValueSyntax::BoolFlag),
            "Signals" => Ok(ValueSyntax::Enum(
                SIGNALS.iter().map(|s| s.to_string()).collect(),
            )),
            "HVPath" => Ok(ValueSyntax::Path(PathKind::Host)),
            "CVPath" => Ok(ValueSyntax::Path(PathKind::Container)),
            "List" => {
                self.expect(Token::Colon)?;
                match self.item()? {
                    Part::Value(v) => Ok(ValueSyntax::ListOf(Box::new(v))),
                    Part::Literal(l) => Ok(ValueSyntax::ListOf(Box::new(ValueSyntax::Enum(vec![l])))),
                    Part::Optional(_) => Err("list element cannot be optional".into()),
                }
            }
            "Continuous_range" => {
                self.expect(Token::Colon)?;
                if !self.looks_like_range() {
                    return Err("<Continuous_range> must be followed by `(lo, hi)`".into());
                }
                self.range()
            }
            t => {
                let (kind, digits) = t.split_at(1);
                let bits: u32 = digits
                    .parse()
                    .map_err(|_| format!("unknown tag <{t}>"))?;
                if !(1..=64).contains(&bits) {
                    return Err(format!("bit width {bits} outside 1..=64"));
                }
                match kind {
                    "U" => Ok(ValueSyntax::UnsignedInt { bits }),
                    "I" => Ok(ValueSyntax::SignedInt { bits }),
                    _ => Err(format!("unknown tag <{t}>")),
                }
            }
        }
    }
}

fn power_of_two_bound(id: &str) -> Result<i128, String> {
    let bits: u32 = id
        .strip_prefix('U')
        .and_then(|d| d.parse().ok())
        .ok_or_else(|| format!("bad range bound `{id}`"))?;
    if !(1..=62).contains(&bits) {
        return Err(format!("range bound U{bits} too wide"));
    }
    Ok(1i128 << bits)
}

/// Collapses a parsed sequence into the most specific syntax variant.
fn normalize_seq(parts: Vec<Part>) -> ValueSyntax {
    match parts.as_slice() {
        [Part::Value(_)] => match parts.into_iter().next() {
            Some(Part::Value(v)) => v,
            _ => unreachable!(),
        },
        [Part::Literal(l)] => ValueSyntax::Enum(vec![l.clone()]),
        [Part::Value(ValueSyntax::UnsignedInt { bits }), Part::Optional(opt)] => {
            match single_char_units(opt) {
                Some(units) => ValueSyntax::BytesWithUnit {
                    bits: *bits,
                    units,
                    unit_optional: true,
                },
                None => ValueSyntax::Compound(parts),
            }
        }
        [Part::Value(ValueSyntax::UnsignedInt { bits }), Part::Value(ValueSyntax::Enum(choices))] => {
            match chars_of(choices) {
                Some(units) => ValueSyntax::BytesWithUnit {
                    bits: *bits,
                    units,
                    unit_optional: false,
                },
                None => ValueSyntax::Compound(parts),
            }
        }
        _ => ValueSyntax::Compound(parts),
    }
}

fn single_char_units(parts: &[Part]) -> Option<Vec<char>> {
    match parts {
        [Part::Value(ValueSyntax::Enum(choices))] => chars_of(choices),
        _ => None,
    }
}

fn chars_of(choices: &[String]) -> Option<Vec<char>> {
    choices
        .iter()
        .map(|c| {
            let mut it = c.chars();
            match (it.next(), it.next()) {
                (Some(ch), None) if ch.is_ascii_alphabetic() => Some(ch),
                _ => None,
            }
        })
        .collect()
}

/// Parses a syntax expression into a [`ValueSyntax`].
pub fn parse_syntax(expression: &str) -> Result<ValueSyntax, String> {
    let tokens = tokenize(expression)?;
    if tokens.is_empty() {
        return Err("empty expression".into());
    }
    let mut parser = Parser { tokens, pos: 0 };
    let syntax = parser.expr()?;
    if let Some(t) = parser.peek() {
        return Err(format!("trailing token {t:?}"));
    }
    syntax.check_well_formed()?;
    Ok(syntax)
}
