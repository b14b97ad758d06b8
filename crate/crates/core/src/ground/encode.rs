//! Abstract values to heap layouts and back.
//!
//! Node layouts, word by word:
//! - `list`: value, next
//! - `rnode`: prefix, bit, left, right (leaves: key, 0, null, null)
//! - `hnode`: key, value, next
//! - `tree`: value, left, right
//!
//! Nodes are allocated through the heap's free lists in a fixed order
//! (list order, chain order, or preorder), so layouts follow the initial
//! permutation the same way a program's allocations would.

use std::collections::BTreeSet;

use super::model::{str_bits, Bst};
use super::{Abstract, Kind};
use crate::boson::{Heap, HeapError};
use crate::interp::Value;
use crate::types::TypeExpr;

#[derive(Debug, thiserror::Error)]
pub enum EncodeError {
    #[error("expected a {expected:?} value, got {got}")]
    Kind { expected: Kind, got: String },
    #[error("value does not fit the `{0}` layout")]
    Shape(String),
    #[error("malformed {kind:?} at address {addr}: {why}")]
    Layout { kind: Kind, addr: u64, why: String },
    #[error(transparent)]
    Heap(#[from] HeapError),
}

fn mask(k: u32) -> u64 {
    if k >= 64 {
        u64::MAX
    } else {
        (1 << k) - 1
    }
}

/// Pointee of the first pointer inside `ty`.
fn pointee(ty: &TypeExpr) -> Result<TypeExpr, EncodeError> {
    match ty.whnf() {
        TypeExpr::Ptr(t) => Ok(*t),
        TypeExpr::Pair(a, _) => pointee(&a),
        t => Err(EncodeError::Shape(format!("{t:?}"))),
    }
}

struct Writer<'h> {
    heap: &'h mut Heap,
    section: usize,
}

impl Writer<'_> {
    fn node(&mut self) -> Result<u64, EncodeError> {
        Ok(self.heap.alloc(self.section)?)
    }

    fn write(&mut self, addr: u64, words: &[u64]) {
        let block = self.heap.block_mut(addr).expect("allocated block");
        block[..words.len()].copy_from_slice(words);
    }

    fn list(&mut self, xs: &[u64]) -> Result<u64, EncodeError> {
        let addrs = xs.iter().map(|_| self.node()).collect::<Result<Vec<_>, _>>()?;
        for (i, (&a, &x)) in addrs.iter().zip(xs).enumerate() {
            let next = addrs.get(i + 1).copied().unwrap_or(0);
            self.write(a, &[x, next]);
        }
        Ok(addrs.first().copied().unwrap_or(0))
    }

    fn patricia(&mut self, keys: &[u64]) -> Result<u64, EncodeError> {
        let Some(&first) = keys.first() else { return Ok(0) };
        let a = self.node()?;
        if keys.len() == 1 {
            self.write(a, &[first, 0, 0, 0]);
            return Ok(a);
        }
        let diff = keys.iter().fold(0, |acc, &x| acc | (x ^ first));
        let b = diff & diff.wrapping_neg();
        let (left, right): (Vec<u64>, Vec<u64>) = keys.iter().partition(|&&x| x & b == 0);
        let l = self.patricia(&left)?;
        let r = self.patricia(&right)?;
        self.write(a, &[first & (b - 1), b, l, r]);
        Ok(a)
    }

    fn chain(&mut self, entries: &[(u64, u64)]) -> Result<u64, EncodeError> {
        let addrs = entries.iter().map(|_| self.node()).collect::<Result<Vec<_>, _>>()?;
        for (i, (&a, &(key, val))) in addrs.iter().zip(entries).enumerate() {
            let next = addrs.get(i + 1).copied().unwrap_or(0);
            self.write(a, &[key, val, next]);
        }
        Ok(addrs.first().copied().unwrap_or(0))
    }

    fn tree(&mut self, t: &Bst) -> Result<u64, EncodeError> {
        match t {
            Bst::Empty => Ok(0),
            Bst::Node(v, l, r) => {
                let a = self.node()?;
                let la = self.tree(l)?;
                let ra = self.tree(r)?;
                self.write(a, &[*v, la, ra]);
                Ok(a)
            }
        }
    }
}

/// Build the runtime value of `v` as a parameter of type `ty`, allocating
/// any nodes in `heap`.
pub fn encode(kind: Kind, v: &Abstract, ty: &TypeExpr, heap: &mut Heap) -> Result<Value, EncodeError> {
    let m = mask(heap.k);
    let wrong = || EncodeError::Kind { expected: kind, got: v.to_string() };
    let words: Vec<u64> = match (kind, v) {
        (Kind::Unit, Abstract::Unit) => vec![],
        (Kind::Word, Abstract::Word(n)) => vec![n & m],
        (Kind::Bool, Abstract::Bool(b)) => vec![*b as u64],
        (Kind::Str, Abstract::Str(s)) => {
            if s.len() > heap.k as usize {
                return Err(EncodeError::Shape(format!("string of length {} at k={}", s.len(), heap.k)));
            }
            vec![s.len() as u64, str_bits(s)]
        }
        (Kind::List | Kind::SortedSet | Kind::Radix | Kind::Map | Kind::Tree, _) => {
            let section = heap.section_for(&pointee(ty)?)?;
            let mut w = Writer { heap, section };
            match (kind, v) {
                (Kind::List, Abstract::List(xs)) => vec![w.list(&xs.iter().map(|x| x & m).collect::<Vec<_>>())?],
                (Kind::SortedSet, Abstract::Set(s)) => vec![w.list(&s.iter().copied().collect::<Vec<_>>())?],
                (Kind::Radix, Abstract::Set(s)) => vec![w.patricia(&s.iter().copied().collect::<Vec<_>>())?],
                (Kind::Map, Abstract::Map(chains)) => vec![w.chain(&chains[0])?, w.chain(&chains[1])?],
                (Kind::Tree, Abstract::Tree(t)) => vec![w.tree(t)?],
                _ => return Err(wrong()),
            }
        }
        _ => return Err(wrong()),
    };
    Ok(Value::from_words(ty, &words))
}

struct Reader<'h> {
    heap: &'h Heap,
    kind: Kind,
    seen: BTreeSet<u64>,
}

impl Reader<'_> {
    fn block(&mut self, addr: u64) -> Result<Vec<u64>, EncodeError> {
        let bad = |why: &str| EncodeError::Layout { kind: self.kind, addr, why: why.to_string() };
        if self.heap.is_free(addr) {
            return Err(bad("block is on a free list"));
        }
        let b = self.heap.block(addr).ok_or_else(|| bad("address outside the heap"))?.to_vec();
        if !self.seen.insert(addr) {
            return Err(bad("block reached twice"));
        }
        Ok(b)
    }

    fn bad(&self, addr: u64, why: impl Into<String>) -> EncodeError {
        EncodeError::Layout { kind: self.kind, addr, why: why.into() }
    }

    fn list(&mut self, mut a: u64) -> Result<Vec<u64>, EncodeError> {
        let mut out = Vec::new();
        while a != 0 {
            let b = self.block(a)?;
            out.push(b[0]);
            a = b[1];
        }
        Ok(out)
    }

    /// Keys below a Patricia node, checking the canonical shape.
    fn patricia(&mut self, a: u64, out: &mut Vec<u64>) -> Result<(), EncodeError> {
        let b = self.block(a)?;
        let (p, bit, l, r) = (b[0], b[1], b[2], b[3]);
        if bit == 0 {
            if l != 0 || r != 0 {
                return Err(self.bad(a, "leaf with children"));
            }
            out.push(p);
            return Ok(());
        }
        if !bit.is_power_of_two() || p & !(bit - 1) != 0 {
            return Err(self.bad(a, "bad branch bit or prefix"));
        }
        if l == 0 || r == 0 {
            return Err(self.bad(a, "inner node with a missing child"));
        }
        let start = out.len();
        self.patricia(l, out)?;
        let mid = out.len();
        self.patricia(r, out)?;
        let ok = out[start..].iter().all(|x| x & (bit - 1) == p)
            && out[start..mid].iter().all(|x| x & bit == 0)
            && out[mid..].iter().all(|x| x & bit != 0);
        if ok {
            Ok(())
        } else {
            Err(self.bad(a, "keys disagree with the node prefix"))
        }
    }

    fn chain(&mut self, mut a: u64) -> Result<Vec<(u64, u64)>, EncodeError> {
        let mut out = Vec::new();
        while a != 0 {
            let b = self.block(a)?;
            out.push((b[0], b[1]));
            a = b[2];
        }
        Ok(out)
    }

    fn tree(&mut self, a: u64) -> Result<Bst, EncodeError> {
        if a == 0 {
            return Ok(Bst::Empty);
        }
        let b = self.block(a)?;
        Ok(Bst::Node(b[0], Box::new(self.tree(b[1])?), Box::new(self.tree(b[2])?)))
    }
}

/// Read the abstract value of `v` back from `heap`.
pub fn decode(kind: Kind, v: &Value, heap: &Heap) -> Result<Abstract, EncodeError> {
    let w = v.to_words();
    let word = |i: usize| w.get(i).copied().unwrap_or(0);
    let mut r = Reader { heap, kind, seen: BTreeSet::new() };
    Ok(match kind {
        Kind::Unit => Abstract::Unit,
        Kind::Word => Abstract::Word(word(0)),
        Kind::Bool => Abstract::Bool(word(0) == 1),
        Kind::Str => {
            let (len, bits) = (word(0), word(1));
            if len > heap.k as u64 || (len < 64 && bits >> len != 0) {
                return Err(EncodeError::Shape(format!("string ({len}, {bits})")));
            }
            Abstract::Str((0..len).map(|i| bits >> i & 1 == 1).collect())
        }
        Kind::List => Abstract::List(r.list(word(0))?),
        Kind::SortedSet => {
            let xs = r.list(word(0))?;
            if xs.windows(2).any(|p| p[0] >= p[1]) {
                return Err(r.bad(word(0), "list is not strictly ascending"));
            }
            Abstract::Set(xs.into_iter().collect())
        }
        Kind::Radix => {
            let mut keys = Vec::new();
            if word(0) != 0 {
                r.patricia(word(0), &mut keys)?;
            }
            Abstract::Set(keys.into_iter().collect())
        }
        Kind::Map => Abstract::Map([r.chain(word(0))?, r.chain(word(1))?]),
        Kind::Tree => Abstract::Tree(r.tree(word(0))?),
    })
}

/// Heap fingerprint followed by the words of the given roots.
pub fn fingerprint_with_roots(heap: &Heap, roots: &[&Value]) -> Vec<u8> {
    let mut out = heap.fingerprint();
    for v in roots {
        for w in v.to_words() {
            out.extend_from_slice(&w.to_le_bytes());
        }
    }
    out
}
