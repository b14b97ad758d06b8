//! Runtime values and their text and word encodings.

use std::fmt;
use std::sync::Arc;

use crate::syntax::kernel::Literal;
use crate::types::{default_value, TypeExpr};

/// A runtime value. Pointer types ride along for decoding but never take
/// part in equality.
#[derive(Clone, Debug)]
pub enum Value {
    Unit,
    UInt(u64),
    Bool(bool),
    Pair(Box<Value>, Box<Value>),
    Null(Arc<TypeExpr>),
    Ptr(Arc<TypeExpr>, u64),
}

impl PartialEq for Value {
    fn eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Unit, Value::Unit) => true,
            (Value::UInt(a), Value::UInt(b)) => a == b,
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Pair(a1, a2), Value::Pair(b1, b2)) => a1 == b1 && a2 == b2,
            (Value::Null(_), Value::Null(_)) => true,
            (Value::Ptr(_, a), Value::Ptr(_, b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Value {}

impl Value {
    pub fn pair(a: Value, b: Value) -> Value {
        Value::Pair(Box::new(a), Box::new(b))
    }

    /// Address value: `null` for 0.
    pub fn addr(ty: &TypeExpr, a: u64) -> Value {
        let ty = Arc::new(ty.clone());
        if a == 0 {
            Value::Null(ty)
        } else {
            Value::Ptr(ty, a)
        }
    }

    pub fn from_literal(l: &Literal) -> Value {
        match l {
            Literal::Unit => Value::Unit,
            Literal::Num(n) => Value::UInt(*n),
            Literal::Bool(b) => Value::Bool(*b),
            Literal::Null(t) => Value::Null(Arc::new(t.clone())),
            Literal::Pair(a, b) => Value::pair(Value::from_literal(a), Value::from_literal(b)),
            Literal::Default(t) => default_value(&t.fill_holes()),
        }
    }

    pub fn type_of(&self) -> TypeExpr {
        match self {
            Value::Unit => TypeExpr::Unit,
            Value::UInt(_) => TypeExpr::UInt,
            Value::Bool(_) => TypeExpr::Bool,
            Value::Pair(a, b) => TypeExpr::pair(a.type_of(), b.type_of()),
            Value::Null(t) | Value::Ptr(t, _) => TypeExpr::ptr((**t).clone()),
        }
    }

    pub fn as_uint(&self) -> Option<u64> {
        match self {
            Value::UInt(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    /// Address held by a pointer value; 0 for `null`.
    pub fn as_addr(&self) -> Option<u64> {
        match self {
            Value::Null(_) => Some(0),
            Value::Ptr(_, a) => Some(*a),
            _ => None,
        }
    }

    /// Pointee type of a pointer value.
    pub fn pointee(&self) -> Option<&TypeExpr> {
        match self {
            Value::Null(t) | Value::Ptr(t, _) => Some(t),
            _ => None,
        }
    }

    pub fn fst(&self) -> Option<&Value> {
        match self {
            Value::Pair(a, _) => Some(a),
            _ => None,
        }
    }

    pub fn snd(&self) -> Option<&Value> {
        match self {
            Value::Pair(_, b) => Some(b),
            _ => None,
        }
    }

    /// True when every word is zero.
    pub fn is_zero(&self) -> bool {
        self.to_words().iter().all(|w| *w == 0)
    }

    /// Flatten to machine words, left to right. Bools are 0 or 1.
    pub fn to_words(&self) -> Vec<u64> {
        let mut out = Vec::new();
        self.push_words(&mut out);
        out
    }

    fn push_words(&self, out: &mut Vec<u64>) {
        match self {
            Value::Unit => {}
            Value::UInt(n) => out.push(*n),
            Value::Bool(b) => out.push(*b as u64),
            Value::Pair(a, b) => {
                a.push_words(out);
                b.push_words(out);
            }
            Value::Null(_) => out.push(0),
            Value::Ptr(_, a) => out.push(*a),
        }
    }

    /// Rebuild a value of type `ty` from words. Missing words read as zero.
    pub fn from_words(ty: &TypeExpr, words: &[u64]) -> Value {
        let mut pos = 0;
        Value::read_words(ty, words, &mut pos)
    }

    fn read_words(ty: &TypeExpr, words: &[u64], pos: &mut usize) -> Value {
        let mut next = || {
            let w = words.get(*pos).copied().unwrap_or(0);
            *pos += 1;
            w
        };
        match ty {
            TypeExpr::Unit | TypeExpr::Var(_) | TypeExpr::Hole(_) => Value::Unit,
            TypeExpr::UInt => Value::UInt(next()),
            TypeExpr::Bool => Value::Bool(next() & 1 == 1),
            TypeExpr::Ptr(t) => Value::addr(t, next()),
            TypeExpr::Pair(a, b) => {
                let va = Value::read_words(a, words, pos);
                let vb = Value::read_words(b, words, pos);
                Value::pair(va, vb)
            }
            TypeExpr::Ind(..) => Value::read_words(&ty.whnf(), words, pos),
        }
    }

    /// Parse the text notation against an expected type.
    pub fn parse(text: &str, ty: &TypeExpr) -> Result<Value, ValueParseError> {
        let mut p = TextParser { s: text.as_bytes(), pos: 0 };
        let v = p.value(ty)?;
        p.ws();
        if p.pos != p.s.len() {
            return Err(p.err("trailing input"));
        }
        Ok(v)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Unit => write!(f, "()"),
            Value::UInt(n) => write!(f, "{n}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Pair(a, b) => write!(f, "({a}, {b})"),
            Value::Null(_) => write!(f, "null"),
            Value::Ptr(_, a) => write!(f, "ptr:{a}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("bad value at offset {offset}: {message}")]
pub struct ValueParseError {
    pub offset: usize,
    pub message: String,
}

struct TextParser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl TextParser<'_> {
    fn err(&self, m: &str) -> ValueParseError {
        ValueParseError { offset: self.pos, message: m.to_string() }
    }

    fn ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, t: &str) -> bool {
        self.ws();
        if self.s[self.pos..].starts_with(t.as_bytes()) {
            self.pos += t.len();
            true
        } else {
            false
        }
    }

    fn number(&mut self) -> Result<u64, ValueParseError> {
        self.ws();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.s[start..self.pos])
            .ok()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| self.err("expected a number"))
    }

    fn value(&mut self, ty: &TypeExpr) -> Result<Value, ValueParseError> {
        match ty.whnf() {
            TypeExpr::Unit => {
                if self.eat("()") {
                    Ok(Value::Unit)
                } else {
                    Err(self.err("expected `()`"))
                }
            }
            TypeExpr::UInt => Ok(Value::UInt(self.number()?)),
            TypeExpr::Bool => {
                if self.eat("true") {
                    Ok(Value::Bool(true))
                } else if self.eat("false") {
                    Ok(Value::Bool(false))
                } else {
                    Err(self.err("expected `true` or `false`"))
                }
            }
            TypeExpr::Ptr(t) => {
                if self.eat("null") {
                    Ok(Value::Null(Arc::new(*t)))
                } else if self.eat("ptr:") {
                    let a = self.number()?;
                    Ok(Value::addr(&t, a))
                } else {
                    Err(self.err("expected `null` or `ptr:<addr>`"))
                }
            }
            TypeExpr::Pair(a, b) => {
                if !self.eat("(") {
                    return Err(self.err("expected `(`"));
                }
                let va = self.value(&a)?;
                if !self.eat(",") {
                    return Err(self.err("expected `,`"));
                }
                let vb = self.value(&b)?;
                if !self.eat(")") {
                    return Err(self.err("expected `)`"));
                }
                Ok(Value::pair(va, vb))
            }
            other => Err(self.err(&format!("cannot read a value of type `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::WordKind;

    #[test]
    fn words_round_trip() {
        let ty = TypeExpr::list();
        let v = Value::pair(Value::UInt(3), Value::addr(&ty, 5));
        assert_eq!(v.to_words(), vec![3, 5]);
        assert_eq!(Value::from_words(&ty, &[3, 5]), v);
    }

    #[test]
    fn text_round_trip() {
        let ty = TypeExpr::pair(TypeExpr::Bool, TypeExpr::pair(TypeExpr::UInt, TypeExpr::ptr(TypeExpr::list())));
        let v = Value::parse("(true, (7, ptr:3))", &ty).unwrap();
        assert_eq!(v.to_string(), "(true, (7, ptr:3))");
        assert_eq!(Value::parse(&v.to_string(), &ty).unwrap(), v);
    }

    #[test]
    fn null_types_do_not_affect_equality() {
        assert_eq!(Value::Null(Arc::new(TypeExpr::UInt)), Value::Null(Arc::new(TypeExpr::list())));
    }

    #[test]
    fn word_kinds_match_layout() {
        let ty = TypeExpr::pair(TypeExpr::Bool, TypeExpr::UInt);
        assert_eq!(ty.layout(), vec![WordKind::Bit, WordKind::Word]);
        assert_eq!(Value::from_words(&ty, &[1, 9]), Value::pair(Value::Bool(true), Value::UInt(9)));
    }
}
