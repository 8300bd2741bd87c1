use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::model::SemanticType;

/// A token value bound to a value field.
#[derive(Debug, Clone, PartialEq)]
pub enum TypedValue {
    /// 64-bit signed.
    Integer(i64),
    /// 64-bit binary floating point.
    Real(f64),
    Boolean(bool),
    String(String),
    Character(char),
}

impl TypedValue {
    pub fn ty(&self) -> SemanticType {
        match self {
            TypedValue::Integer(_) => SemanticType::Integer,
            TypedValue::Real(_) => SemanticType::Real,
            TypedValue::Boolean(_) => SemanticType::Boolean,
            TypedValue::String(_) => SemanticType::String,
            TypedValue::Character(_) => SemanticType::Character,
        }
    }

    /// Numeric value as a real, for integers and reals.
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            TypedValue::Integer(n) => Some(n as f64),
            TypedValue::Real(x) => Some(x),
            _ => None,
        }
    }
}

impl fmt::Display for TypedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypedValue::Integer(n) => write!(f, "{n}"),
            TypedValue::Real(x) => write!(f, "{x:?}"),
            TypedValue::Boolean(b) => write!(f, "{b}"),
            TypedValue::String(s) => write!(f, "{s:?}"),
            TypedValue::Character(c) => write!(f, "{c:?}"),
        }
    }
}

impl Serialize for TypedValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            TypedValue::Integer(n) => serializer.serialize_i64(*n),
            TypedValue::Real(x) => serializer.serialize_f64(*x),
            TypedValue::Boolean(b) => serializer.serialize_bool(*b),
            TypedValue::String(s) => serializer.serialize_str(s),
            TypedValue::Character(c) => serializer.serialize_char(*c),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot convert {text:?} to {}: {reason}", .ty.name())]
pub struct ValueRangeError {
    pub text: String,
    pub ty: SemanticType,
    pub reason: String,
}

/// Converts matched token text to a value of type `ty`. `pattern` is the
/// pattern that matched the text; when it starts and ends with a literal
/// quote, the outermost quote pair is stripped from string and character
/// values.
pub fn convert_value(text: &str, ty: SemanticType, pattern: Option<&str>) -> Result<TypedValue, ValueRangeError> {
    let fail = |reason: &str| ValueRangeError { text: text.to_string(), ty, reason: reason.to_string() };
    match ty {
        SemanticType::Integer => text.parse::<i64>().map(TypedValue::Integer).map_err(|e| {
            fail(match e.kind() {
                std::num::IntErrorKind::PosOverflow | std::num::IntErrorKind::NegOverflow => {
                    "outside the 64-bit signed range"
                }
                _ => "not a decimal integer",
            })
        }),
        SemanticType::Real => text
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .map(TypedValue::Real)
            .ok_or_else(|| fail("not a finite decimal number")),
        SemanticType::Boolean => match text {
            "true" => Ok(TypedValue::Boolean(true)),
            "false" => Ok(TypedValue::Boolean(false)),
            _ => Err(fail("expected `true` or `false`")),
        },
        SemanticType::String => Ok(TypedValue::String(strip_quotes(text, pattern).to_string())),
        SemanticType::Character => {
            let inner = strip_quotes(text, pattern);
            let mut chars = inner.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => Ok(TypedValue::Character(c)),
                _ => Err(fail("expected exactly one character")),
            }
        }
    }
}

fn is_quote(c: char) -> bool {
    c == '"' || c == '\''
}

/// Whether a pattern begins and ends with a literal quote character.
fn quoted_pattern(pattern: &str) -> bool {
    let begins = {
        let p = pattern.strip_prefix('\\').unwrap_or(pattern);
        p.chars().next().is_some_and(is_quote)
    };
    begins && pattern.len() >= 2 && pattern.chars().last().is_some_and(is_quote)
}

fn strip_quotes<'t>(text: &'t str, pattern: Option<&str>) -> &'t str {
    if !pattern.is_some_and(quoted_pattern) {
        return text;
    }
    let mut chars = text.chars();
    match (chars.next(), chars.next_back()) {
        (Some(a), Some(b)) if is_quote(a) && is_quote(b) => chars.as_str(),
        _ => text,
    }
}
