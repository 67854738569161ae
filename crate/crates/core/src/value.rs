//! Typed values over the eight supported parameter domains, plus their
//! literal (prover) and JSON renderings.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde_json::{Map, Number, Value as Json};

/// The parameter types a task signature may declare.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ValueType {
    Int,
    Nat,
    ListInt,
    ArrayInt,
    ListNat,
    ArrayNat,
    ListChar,
    String,
}

impl ValueType {
    pub const ALL: [ValueType; 8] = [
        ValueType::Int,
        ValueType::Nat,
        ValueType::ListInt,
        ValueType::ArrayInt,
        ValueType::ListNat,
        ValueType::ArrayNat,
        ValueType::ListChar,
        ValueType::String,
    ];

    /// Prover-facing type name, e.g. `List Nat`.
    pub fn name(self) -> &'static str {
        match self {
            ValueType::Int => "Int",
            ValueType::Nat => "Nat",
            ValueType::ListInt => "List Int",
            ValueType::ArrayInt => "Array Int",
            ValueType::ListNat => "List Nat",
            ValueType::ArrayNat => "Array Nat",
            ValueType::ListChar => "List Char",
            ValueType::String => "String",
        }
    }

    /// Parses a type name. Interior whitespace is normalised and one level of
    /// surrounding parentheses is accepted.
    pub fn from_name(name: &str) -> Option<Self> {
        let trimmed = name.trim();
        let inner = trimmed
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .unwrap_or(trimmed);
        let normalized: Vec<&str> = inner.split_whitespace().collect();
        match normalized.as_slice() {
            ["Int"] => Some(ValueType::Int),
            ["Nat"] => Some(ValueType::Nat),
            ["List", "Int"] => Some(ValueType::ListInt),
            ["Array", "Int"] => Some(ValueType::ArrayInt),
            ["List", "Nat"] => Some(ValueType::ListNat),
            ["Array", "Nat"] => Some(ValueType::ArrayNat),
            ["List", "Char"] => Some(ValueType::ListChar),
            ["String"] => Some(ValueType::String),
            _ => None,
        }
    }

    pub fn is_scalar(self) -> bool {
        matches!(self, ValueType::Int | ValueType::Nat)
    }

    pub fn is_sequence(self) -> bool {
        !self.is_scalar()
    }

    pub fn is_array(self) -> bool {
        matches!(self, ValueType::ArrayInt | ValueType::ArrayNat)
    }
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A well-typed value. List and array variants with equal elements are
/// distinct values.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(i64),
    Nat(u64),
    ListInt(Vec<i64>),
    ArrayInt(Vec<i64>),
    ListNat(Vec<u64>),
    ArrayNat(Vec<u64>),
    ListChar(Vec<char>),
    String(String),
}

/// Characters every string or character-list payload is restricted to:
/// printable ASCII plus newline and tab.
pub fn is_allowed_char(c: char) -> bool {
    matches!(c, ' '..='~' | '\n' | '\t')
}

/// Rendering style for [`Value::render`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RenderStyle {
    /// Literal form embeddable in verifier probes, e.g. `#[1, 2]` or `['a']`.
    Prover,
    /// Untagged JSON payload with canonical spacing.
    Json,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ValueError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("type mismatch: expected {expected}, {message}")]
    TypeMismatch {
        expected: ValueType,
        message: String,
    },
}

impl Value {
    pub fn value_type(&self) -> ValueType {
        match self {
            Value::Int(_) => ValueType::Int,
            Value::Nat(_) => ValueType::Nat,
            Value::ListInt(_) => ValueType::ListInt,
            Value::ArrayInt(_) => ValueType::ArrayInt,
            Value::ListNat(_) => ValueType::ListNat,
            Value::ArrayNat(_) => ValueType::ArrayNat,
            Value::ListChar(_) => ValueType::ListChar,
            Value::String(_) => ValueType::String,
        }
    }

    /// Sequence length, `None` for scalars. Strings count characters.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> Option<usize> {
        match self {
            Value::Int(_) | Value::Nat(_) => None,
            Value::ListInt(v) | Value::ArrayInt(v) => Some(v.len()),
            Value::ListNat(v) | Value::ArrayNat(v) => Some(v.len()),
            Value::ListChar(v) => Some(v.len()),
            Value::String(s) => Some(s.chars().count()),
        }
    }

    /// Checks the payload invariants that the type system cannot express
    /// (the character alphabet).
    pub fn validate(&self) -> Result<(), ValueError> {
        let bad = match self {
            Value::ListChar(cs) => cs.iter().copied().find(|c| !is_allowed_char(*c)),
            Value::String(s) => s.chars().find(|c| !is_allowed_char(*c)),
            _ => None,
        };
        match bad {
            Some(c) => Err(ValueError::TypeMismatch {
                expected: self.value_type(),
                message: format!("character {c:?} is outside the allowed alphabet"),
            }),
            None => Ok(()),
        }
    }

    pub fn render(&self, style: RenderStyle) -> String {
        let mut out = String::new();
        match (self, style) {
            (Value::Int(x), _) => out.push_str(&x.to_string()),
            (Value::Nat(x), _) => out.push_str(&x.to_string()),
            (Value::ListInt(xs), _) => push_seq(&mut out, "[", xs.iter()),
            (Value::ListNat(xs), _) => push_seq(&mut out, "[", xs.iter()),
            (Value::ArrayInt(xs), RenderStyle::Prover) => push_seq(&mut out, "#[", xs.iter()),
            (Value::ArrayNat(xs), RenderStyle::Prover) => push_seq(&mut out, "#[", xs.iter()),
            (Value::ArrayInt(xs), RenderStyle::Json) => push_seq(&mut out, "[", xs.iter()),
            (Value::ArrayNat(xs), RenderStyle::Json) => push_seq(&mut out, "[", xs.iter()),
            (Value::ListChar(cs), style) => {
                let quote = if style == RenderStyle::Prover { '\'' } else { '"' };
                out.push('[');
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    out.push(quote);
                    push_escaped(&mut out, *c, quote);
                    out.push(quote);
                }
                out.push(']');
            }
            (Value::String(s), _) => {
                out.push('"');
                for c in s.chars() {
                    push_escaped(&mut out, c, '"');
                }
                out.push('"');
            }
        }
        out
    }

    /// Parses a literal in either rendering style against an expected type.
    pub fn parse(text: &str, expected: ValueType) -> Result<Value, ValueError> {
        let mut p = LiteralParser {
            src: text,
            pos: 0,
            expected,
        };
        p.skip_ws();
        let v = p.value()?;
        p.skip_ws();
        if p.pos != text.len() {
            return Err(p.syntax("trailing input after literal"));
        }
        Ok(v)
    }

    /// Untagged JSON payload.
    pub fn to_json_payload(&self) -> Json {
        fn ints<T: Copy + Into<Number>>(xs: &[T]) -> Json {
            Json::Array(xs.iter().map(|x| Json::Number((*x).into())).collect())
        }
        match self {
            Value::Int(x) => Json::Number((*x).into()),
            Value::Nat(x) => Json::Number((*x).into()),
            Value::ListInt(xs) | Value::ArrayInt(xs) => ints(xs),
            Value::ListNat(xs) | Value::ArrayNat(xs) => ints(xs),
            Value::ListChar(cs) => Json::Array(
                cs.iter()
                    .map(|c| Json::String(c.to_string()))
                    .collect(),
            ),
            Value::String(s) => Json::String(s.clone()),
        }
    }

    /// Tagged form `{"type": ..., "value": ...}` used in suite files.
    pub fn to_tagged_json(&self) -> Json {
        let mut m = Map::new();
        m.insert("type".into(), Json::String(self.value_type().name().into()));
        m.insert("value".into(), self.to_json_payload());
        Json::Object(m)
    }

    /// Decodes an untagged payload against `expected`.
    pub fn from_json_payload(json: &Json, expected: ValueType) -> Result<Value, ValueError> {
        let mismatch = |message: String| ValueError::TypeMismatch { expected, message };
        let int = |j: &Json| -> Result<i64, ValueError> {
            j.as_i64()
                .ok_or_else(|| mismatch(format!("`{j}` is not a 64-bit integer")))
        };
        let nat = |j: &Json| -> Result<u64, ValueError> {
            if let Some(x) = j.as_u64() {
                Ok(x)
            } else if j.as_i64().is_some() {
                Err(mismatch(format!("`{j}` is negative")))
            } else {
                Err(mismatch(format!("`{j}` is not a natural number")))
            }
        };
        fn array(j: &Json, expected: ValueType) -> Result<&Vec<Json>, ValueError> {
            j.as_array().ok_or_else(|| ValueError::TypeMismatch {
                expected,
                message: format!("`{j}` is not an array"),
            })
        }
        let v = match expected {
            ValueType::Int => Value::Int(int(json)?),
            ValueType::Nat => Value::Nat(nat(json)?),
            ValueType::ListInt => Value::ListInt(array(json, expected)?.iter().map(int).collect::<Result<_, _>>()?),
            ValueType::ArrayInt => Value::ArrayInt(array(json, expected)?.iter().map(int).collect::<Result<_, _>>()?),
            ValueType::ListNat => Value::ListNat(array(json, expected)?.iter().map(nat).collect::<Result<_, _>>()?),
            ValueType::ArrayNat => Value::ArrayNat(array(json, expected)?.iter().map(nat).collect::<Result<_, _>>()?),
            ValueType::ListChar => {
                let mut cs = Vec::new();
                for j in array(json, expected)? {
                    let s = j
                        .as_str()
                        .ok_or_else(|| mismatch(format!("`{j}` is not a character")))?;
                    let mut it = s.chars();
                    match (it.next(), it.next()) {
                        (Some(c), None) => cs.push(c),
                        _ => return Err(mismatch(format!("`{j}` is not a 1-length string"))),
                    }
                }
                Value::ListChar(cs)
            }
            ValueType::String => Value::String(
                json.as_str()
                    .ok_or_else(|| mismatch(format!("`{json}` is not a string")))?
                    .into(),
            ),
        };
        v.validate()?;
        Ok(v)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(RenderStyle::Prover))
    }
}

fn push_seq<T: fmt::Display>(out: &mut String, open: &str, items: impl Iterator<Item = T>) {
    out.push_str(open);
    for (i, x) in items.enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&x.to_string());
    }
    out.push(']');
}

fn push_escaped(out: &mut String, c: char, quote: char) {
    match c {
        '\n' => out.push_str("\\n"),
        '\t' => out.push_str("\\t"),
        '\\' => out.push_str("\\\\"),
        c if c == quote => {
            out.push('\\');
            out.push(c);
        }
        c => out.push(c),
    }
}

/// Writes JSON with `", "` and `": "` separators on one line. Used wherever
/// JSON is shown to people or models rather than stored.
pub fn canonical_json(json: &Json) -> String {
    let mut out = String::new();
    write_canonical(&mut out, json);
    out
}

fn write_canonical(out: &mut String, json: &Json) {
    match json {
        Json::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_canonical(out, item);
            }
            out.push(']');
        }
        Json::Object(map) => {
            out.push('{');
            for (i, (k, v)) in map.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&Json::String(k.clone()).to_string());
                out.push_str(": ");
                write_canonical(out, v);
            }
            out.push('}');
        }
        other => out.push_str(&other.to_string()),
    }
}

struct LiteralParser<'a> {
    src: &'a str,
    pos: usize,
    expected: ValueType,
}

impl LiteralParser<'_> {
    fn syntax(&self, message: &str) -> ValueError {
        ValueError::Syntax {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn mismatch(&self, message: impl Into<String>) -> ValueError {
        ValueError::TypeMismatch {
            expected: self.expected,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn value(&mut self) -> Result<Value, ValueError> {
        match self.expected {
            ValueType::Int => self.int().map(Value::Int),
            ValueType::Nat => self.nat().map(Value::Nat),
            ValueType::ListInt => self.seq(false, Self::int).map(Value::ListInt),
            ValueType::ArrayInt => self.seq(true, Self::int).map(Value::ArrayInt),
            ValueType::ListNat => self.seq(false, Self::nat).map(Value::ListNat),
            ValueType::ArrayNat => self.seq(true, Self::nat).map(Value::ArrayNat),
            ValueType::ListChar => self.seq(false, Self::char_lit).map(Value::ListChar),
            ValueType::String => {
                if self.peek() != Some('"') {
                    return Err(self.mismatch("expected a string literal"));
                }
                self.quoted('"').map(Value::String)
            }
        }
    }

    fn digits(&mut self) -> Result<&str, ValueError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.bump();
        }
        if start == self.pos {
            return Err(self.syntax("expected digits"));
        }
        Ok(&self.src[start..self.pos])
    }

    fn int(&mut self) -> Result<i64, ValueError> {
        let start = self.pos;
        let negative = self.eat('-');
        self.skip_ws();
        let digits = self.digits()?;
        let magnitude: i128 = digits
            .parse()
            .map_err(|_| self.mismatch(format!("`{}` is out of range", &self.src[start..self.pos])))?;
        let value = if negative { -magnitude } else { magnitude };
        i64::try_from(value).map_err(|_| self.mismatch(format!("`{value}` is out of range")))
    }

    fn nat(&mut self) -> Result<u64, ValueError> {
        if self.peek() == Some('-') {
            return Err(self.mismatch("negative literal for a natural number"));
        }
        let digits = self.digits()?.to_string();
        digits
            .parse()
            .map_err(|_| self.mismatch(format!("`{digits}` is out of range")))
    }

    fn seq<T>(
        &mut self,
        array: bool,
        mut elem: impl FnMut(&mut Self) -> Result<T, ValueError>,
    ) -> Result<Vec<T>, ValueError> {
        if self.eat('#') && !array {
            return Err(self.mismatch("array literal given for a list"));
        }
        if !self.eat('[') {
            return Err(self.mismatch("expected `[`"));
        }
        let mut items = Vec::new();
        self.skip_ws();
        if self.eat(']') {
            return Ok(items);
        }
        loop {
            self.skip_ws();
            items.push(elem(self)?);
            self.skip_ws();
            if self.eat(',') {
                continue;
            }
            if self.eat(']') {
                return Ok(items);
            }
            return Err(self.syntax("expected `,` or `]`"));
        }
    }

    fn char_lit(&mut self) -> Result<char, ValueError> {
        let quote = match self.peek() {
            Some(q @ ('\'' | '"')) => q,
            _ => return Err(self.mismatch("expected a character literal")),
        };
        let s = self.quoted(quote)?;
        let mut it = s.chars();
        match (it.next(), it.next()) {
            (Some(c), None) => Ok(c),
            _ => Err(self.mismatch("character literal must hold exactly one character")),
        }
    }

    fn quoted(&mut self, quote: char) -> Result<String, ValueError> {
        self.bump();
        let mut out = String::new();
        loop {
            let c = self.bump().ok_or_else(|| self.syntax("unterminated literal"))?;
            let c = match c {
                c if c == quote => break,
                '\\' => match self.bump() {
                    Some('n') => '\n',
                    Some('t') => '\t',
                    Some('\\') => '\\',
                    Some('"') => '"',
                    Some('\'') => '\'',
                    Some('u') => self.unicode_escape()?,
                    _ => return Err(self.syntax("unknown escape sequence")),
                },
                c => c,
            };
            if !is_allowed_char(c) {
                return Err(self.mismatch(format!("character {c:?} is outside the allowed alphabet")));
            }
            out.push(c);
        }
        Ok(out)
    }

    fn unicode_escape(&mut self) -> Result<char, ValueError> {
        let braced = self.eat('{');
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_hexdigit()) && self.pos - start < 6 {
            self.bump();
        }
        let hex = &self.src[start..self.pos];
        if braced && !self.eat('}') {
            return Err(self.syntax("unterminated unicode escape"));
        }
        if hex.is_empty() || (!braced && hex.len() != 4) {
            return Err(self.syntax("malformed unicode escape"));
        }
        u32::from_str_radix(hex, 16)
            .ok()
            .and_then(char::from_u32)
            .ok_or_else(|| self.syntax("invalid unicode scalar"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn parses_figure_literals() {
        assert_eq!(
            Value::parse("[1, 2, 1]", ValueType::ListNat).unwrap(),
            Value::ListNat(vec![1, 2, 1])
        );
        assert_eq!(Value::parse("[]", ValueType::ListInt).unwrap(), Value::ListInt(vec![]));
        assert!(matches!(
            Value::parse("-3", ValueType::Nat),
            Err(ValueError::TypeMismatch { .. })
        ));
    }

    #[test]
    fn renders_both_styles() {
        let v = Value::ListInt(vec![0, -1, -2, -3, -4]);
        assert_eq!(v.render(RenderStyle::Prover), "[0, -1, -2, -3, -4]");
        assert_eq!(Value::String(String::new()).render(RenderStyle::Json), "\"\"");
        assert_eq!(Value::ListNat(vec![1, 2, 1]).render(RenderStyle::Json), "[1, 2, 1]");
        assert_eq!(Value::ArrayNat(vec![1]).render(RenderStyle::Prover), "#[1]");
        assert_eq!(Value::ArrayNat(vec![1]).render(RenderStyle::Json), "[1]");
        assert_eq!(
            Value::ListChar(vec!['a', '\'']).render(RenderStyle::Prover),
            "['a', '\\'']"
        );
        assert_eq!(
            Value::ListChar(vec!['a', '"']).render(RenderStyle::Json),
            "[\"a\", \"\\\"\"]"
        );
    }

    #[test]
    fn rejects_malformed() {
        assert!(matches!(Value::parse("[1, 2", ValueType::ListInt), Err(ValueError::Syntax { .. })));
        assert!(matches!(Value::parse("1 2", ValueType::Int), Err(ValueError::Syntax { .. })));
        assert!(Value::parse("#[1]", ValueType::ListInt).is_err());
        assert!(Value::parse("\"\u{e9}\"", ValueType::String).is_err());
        assert!(Value::parse("99999999999999999999", ValueType::Int).is_err());
        assert_eq!(
            Value::parse("-9223372036854775808", ValueType::Int).unwrap(),
            Value::Int(i64::MIN)
        );
    }

    #[test]
    fn list_and_array_are_distinct() {
        assert_ne!(Value::ListInt(vec![1]), Value::ArrayInt(vec![1]));
    }

    #[test]
    fn type_names_round_trip() {
        for ty in ValueType::ALL {
            assert_eq!(ValueType::from_name(ty.name()), Some(ty));
        }
        assert_eq!(ValueType::from_name(" (List   Nat) "), Some(ValueType::ListNat));
        assert_eq!(ValueType::from_name("Bool"), None);
    }

    #[test]
    fn json_payload_checks_shape() {
        let j: Json = serde_json::from_str("[1, -2]").unwrap();
        assert!(Value::from_json_payload(&j, ValueType::ListNat).is_err());
        assert_eq!(
            Value::from_json_payload(&j, ValueType::ArrayInt).unwrap(),
            Value::ArrayInt(vec![1, -2])
        );
        let s: Json = serde_json::from_str("\"abc\"").unwrap();
        assert!(Value::from_json_payload(&s, ValueType::ListNat).is_err());
        let cs: Json = serde_json::from_str("[\"a\", \"bc\"]").unwrap();
        assert!(Value::from_json_payload(&cs, ValueType::ListChar).is_err());
    }
}
