//! Command-line value notation, with heap structures written inline.
//!
//! ```text
//! 5  true  ()  (1, false)  null  ptr:3
//! [1,2,3]        a list: pointer to a chain of (value, next) nodes
//! [1..4]         the list [1,2,3,4]
//! &(4, null)     one freshly allocated node holding the value
//! ```

use std::collections::BTreeSet;

use crate::boson::{Heap, HeapError};
use crate::interp::Value;
use crate::types::{type_equiv, TypeExpr};

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("input `{text}` at offset {offset}: {message}")]
    Syntax { text: String, offset: usize, message: String },
    #[error(transparent)]
    Heap(#[from] HeapError),
}

/// Element type of a list-shaped node type `(τ, ptr<self>)`.
fn list_elem(node: &TypeExpr) -> Option<TypeExpr> {
    match node.whnf() {
        TypeExpr::Pair(a, b) => match b.whnf() {
            TypeExpr::Ptr(next) if type_equiv(&next, node) => Some(*a),
            _ => None,
        },
        _ => None,
    }
}

struct Reader<'a, 'h> {
    text: &'a str,
    pos: usize,
    heap: &'h mut Heap,
}

impl Reader<'_, '_> {
    fn err(&self, message: impl Into<String>) -> InputError {
        InputError::Syntax { text: self.text.to_string(), offset: self.pos, message: message.into() }
    }

    fn ws(&mut self) {
        let rest = &self.text[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn eat(&mut self, t: &str) -> bool {
        self.ws();
        if self.text[self.pos..].starts_with(t) {
            self.pos += t.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &str) -> Result<(), InputError> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{t}`")))
        }
    }

    fn number(&mut self) -> Result<u64, InputError> {
        self.ws();
        let digits = self.text[self.pos..].chars().take_while(|c| c.is_ascii_digit()).count();
        let n = self.text[self.pos..self.pos + digits].parse().map_err(|_| self.err("expected a number"))?;
        self.pos += digits;
        Ok(n)
    }

    fn node(&mut self, node_ty: &TypeExpr, words: &[u64]) -> Result<u64, InputError> {
        let section = self.heap.section_for(node_ty)?;
        let a = self.heap.alloc(section)?;
        let block = self.heap.block_mut(a).expect("allocated block");
        block[..words.len()].copy_from_slice(words);
        Ok(a)
    }

    fn value(&mut self, ty: &TypeExpr) -> Result<Value, InputError> {
        let m = if self.heap.k >= 64 { u64::MAX } else { (1 << self.heap.k) - 1 };
        match ty.whnf() {
            TypeExpr::Unit => self.expect("()").map(|_| Value::Unit),
            TypeExpr::UInt => {
                let n = self.number()?;
                if n > m {
                    return Err(self.err(format!("{n} does not fit in {} bits", self.heap.k)));
                }
                Ok(Value::UInt(n))
            }
            TypeExpr::Bool => {
                if self.eat("true") {
                    Ok(Value::Bool(true))
                } else if self.eat("false") {
                    Ok(Value::Bool(false))
                } else {
                    Err(self.err("expected `true` or `false`"))
                }
            }
            TypeExpr::Pair(a, b) => {
                self.expect("(")?;
                let va = self.value(&a)?;
                self.expect(",")?;
                let vb = self.value(&b)?;
                self.expect(")")?;
                Ok(Value::pair(va, vb))
            }
            TypeExpr::Ptr(t) => {
                if self.eat("null") {
                    Ok(Value::addr(&t, 0))
                } else if self.eat("ptr:") {
                    Ok(Value::addr(&t, self.number()?))
                } else if self.eat("&") {
                    let v = self.value(&t)?;
                    Ok(Value::addr(&t, self.node(&t, &v.to_words())?))
                } else if self.eat("[") {
                    let elem = list_elem(&t).ok_or_else(|| self.err(format!("`[...]` needs a list type, not `{t}`")))?;
                    let mut items = Vec::new();
                    if !self.eat("]") {
                        loop {
                            let v = self.value(&elem)?;
                            if let (Value::UInt(lo), true) = (&v, self.eat("..")) {
                                let hi = self.number()?;
                                items.extend((*lo..=hi.min(m)).map(Value::UInt));
                            } else {
                                items.push(v);
                            }
                            if self.eat("]") {
                                break;
                            }
                            self.expect(",")?;
                        }
                    }
                    let addrs = items.iter().map(|_| self.node(&t, &[])).collect::<Result<Vec<_>, _>>()?;
                    for (i, (v, &a)) in items.iter().zip(&addrs).enumerate() {
                        let next = addrs.get(i + 1).copied().unwrap_or(0);
                        let words = Value::pair(v.clone(), Value::addr(&t, next)).to_words();
                        let block = self.heap.block_mut(a).expect("allocated block");
                        block[..words.len()].copy_from_slice(&words);
                    }
                    Ok(Value::addr(&t, addrs.first().copied().unwrap_or(0)))
                } else {
                    Err(self.err("expected `null`, `ptr:N`, `&value` or `[...]`"))
                }
            }
            other => Err(self.err(format!("cannot read a value of type `{other}`"))),
        }
    }
}

/// Read `text` as a value of type `ty`, allocating any structures in `heap`.
pub fn read_value(text: &str, ty: &TypeExpr, heap: &mut Heap) -> Result<Value, InputError> {
    let mut r = Reader { text, pos: 0, heap };
    let v = r.value(ty)?;
    r.ws();
    if r.pos != text.len() {
        return Err(r.err("trailing input"));
    }
    Ok(v)
}

/// Print `v`, following pointers into `heap`.
pub fn show_value(v: &Value, heap: &Heap) -> String {
    let mut seen = BTreeSet::new();
    show(v, heap, &mut seen)
}

fn show(v: &Value, heap: &Heap, seen: &mut BTreeSet<u64>) -> String {
    match v {
        Value::Pair(a, b) => format!("({}, {})", show(a, heap, seen), show(b, heap, seen)),
        Value::Null(t) if list_elem(t).is_some() => "[]".to_string(),
        Value::Ptr(t, a) => {
            if list_elem(t).is_some() {
                let mut items = Vec::new();
                let mut a = *a;
                while a != 0 {
                    let Some(block) = heap.block(a).filter(|_| seen.insert(a)) else {
                        items.push(format!("ptr:{a}..."));
                        break;
                    };
                    match Value::from_words(t, block) {
                        Value::Pair(x, next) => {
                            items.push(show(&x, heap, seen));
                            a = next.as_addr().unwrap_or(0);
                        }
                        _ => break,
                    }
                }
                return format!("[{}]", items.join(","));
            }
            match heap.block(*a).filter(|_| seen.insert(*a)) {
                Some(block) => format!("&{}", show(&Value::from_words(t, block), heap, seen)),
                None => format!("ptr:{a}"),
            }
        }
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boson::{PermutationSource, SectionSpec};

    fn heap() -> Heap {
        let s = [SectionSpec { block_words: 2, count: 6 }, SectionSpec { block_words: 4, count: 4 }];
        Heap::new(8, &s, &PermutationSource::Identity).unwrap()
    }

    #[test]
    fn lists_round_trip() {
        let mut h = heap();
        let ty = TypeExpr::ptr(TypeExpr::list());
        let v = read_value("[1, 2,3]", &ty, &mut h).unwrap();
        assert_eq!(show_value(&v, &h), "[1,2,3]");
        assert_eq!(h.allocated().len(), 3);
        let r = read_value("[2..4]", &ty, &mut h).unwrap();
        assert_eq!(show_value(&r, &h), "[2,3,4]");
        let e = read_value("[]", &ty, &mut h).unwrap();
        assert_eq!(show_value(&e, &h), "[]");
    }

    #[test]
    fn single_nodes_and_words() {
        let mut h = heap();
        let ty = TypeExpr::pair(TypeExpr::UInt, TypeExpr::ptr(TypeExpr::pair(TypeExpr::UInt, TypeExpr::Bool)));
        let v = read_value("(7, &(3, true))", &ty, &mut h).unwrap();
        assert_eq!(show_value(&v, &h), "(7, &(3, true))");
        assert!(read_value("(300, null)", &ty, &mut h).is_err());
        assert!(read_value("(1, null) x", &ty, &mut h).is_err());
    }
}
