//! Reference models of every corpus operation over abstract values.

use std::fmt;

use super::Abstract;

/// Binary search tree, unbalanced, built by insertion.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum Bst {
    #[default]
    Empty,
    Node(u64, Box<Bst>, Box<Bst>),
}

impl Bst {
    pub fn from_keys(keys: &[u64]) -> Bst {
        let mut t = Bst::Empty;
        for &k in keys {
            t.insert(k);
        }
        t
    }

    pub fn insert(&mut self, key: u64) {
        match self {
            Bst::Empty => *self = Bst::Node(key, Box::default(), Box::default()),
            Bst::Node(v, l, r) => {
                if key < *v {
                    l.insert(key)
                } else if key > *v {
                    r.insert(key)
                }
            }
        }
    }

    pub fn contains(&self, key: u64) -> bool {
        match self {
            Bst::Empty => false,
            Bst::Node(v, l, r) => key == *v || if key > *v { r.contains(key) } else { l.contains(key) },
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Bst::Empty => 0,
            Bst::Node(_, l, r) => 1 + l.size() + r.size(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Bst::Empty => 0,
            Bst::Node(_, l, r) => 1 + l.depth().max(r.depth()),
        }
    }
}

impl fmt::Display for Bst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bst::Empty => write!(f, "."),
            Bst::Node(v, l, r) => write!(f, "({l} {v} {r})"),
        }
    }
}

/// Bucket of `key` under multiplicative hashing with constant `hc`.
pub fn hash_bucket(key: u64, hc: u64, k: u32) -> usize {
    let m = mask(k);
    (((key.wrapping_mul(hc) & m) >> 1) & 1) as usize
}

fn mask(k: u32) -> u64 {
    if k >= 64 {
        u64::MAX
    } else {
        (1 << k) - 1
    }
}

fn bits(s: &[bool]) -> u64 {
    s.iter().enumerate().fold(0, |acc, (i, &c)| acc | ((c as u64) << i))
}

fn matching(a: &[bool], b: &[bool]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

/// Expected result and arguments after the call, or `None` when the
/// arguments violate the operation's precondition.
pub fn reference(op: &str, args: &[Abstract], k: u32, hc: u64) -> Option<(Abstract, Vec<Abstract>)> {
    use Abstract as A;
    let m = mask(k);
    let same = |r: Abstract| Some((r, args.to_vec()));
    match (op, args) {
        ("list.length" | "list.length_exp", [A::List(l)]) => same(A::Word(l.len() as u64 & m)),
        ("list.sum", [A::List(l)]) => same(A::Word(l.iter().fold(0, |a, x| (a + x) & m))),
        ("list.find_pos", [A::List(l), A::Word(x)]) => {
            same(A::Word(l.iter().position(|y| y == x).unwrap_or(l.len()) as u64))
        }
        ("list.remove", [A::List(l), A::Word(x)]) => {
            let p = l.iter().position(|y| y == x)?;
            let mut l = l.clone();
            l.remove(p);
            Some((A::Word(p as u64), vec![A::List(l), A::Word(*x)]))
        }
        ("stack.push_front", [A::List(l), A::Word(x)]) => {
            let mut v = vec![*x];
            v.extend(l);
            Some((A::Unit, vec![A::List(v), A::Word(*x)]))
        }
        ("queue.push_back", [A::List(l), A::Word(x)]) => {
            let mut v = l.clone();
            v.push(*x);
            Some((A::Unit, vec![A::List(v), A::Word(*x)]))
        }
        ("stack.pop_front" | "queue.pop_front", [A::List(l)]) => {
            let (h, t) = l.split_first()?;
            Some((A::Word(*h), vec![A::List(t.to_vec())]))
        }
        ("string.is_empty", [A::Str(s)]) => same(A::Bool(s.is_empty())),
        ("string.length", [A::Str(s)]) => same(A::Word(s.len() as u64)),
        ("string.get_prefix", [A::Str(s), A::Word(i)]) => same(A::Str(s[..(*i as usize).min(s.len())].to_vec())),
        ("string.get_substring", [A::Str(s), A::Word(i)]) => same(A::Str(s[(*i as usize).min(s.len())..].to_vec())),
        ("string.get", [A::Str(s), A::Word(i)]) => same(A::Word(s.get(*i as usize).map_or(0, |&c| c as u64))),
        ("string.equal", [A::Str(a), A::Str(b)]) => same(A::Bool(a == b)),
        ("string.concat", [A::Str(a), A::Str(b)]) => {
            if a.len() + b.len() > k as usize {
                return None;
            }
            same(A::Str([a.as_slice(), b.as_slice()].concat()))
        }
        ("string.num_matching", [A::Str(a), A::Str(b)]) => same(A::Word(matching(a, b) as u64)),
        ("string.is_prefix", [A::Str(a), A::Str(b)]) => same(A::Bool(b.starts_with(a))),
        ("string.compare", [A::Str(a), A::Str(b)]) => same(A::Bool(a <= b)),
        ("radix.insert" | "lset.insert", [A::Set(s), A::Word(x)]) => {
            let mut s2 = s.clone();
            let present = !s2.insert(*x);
            Some((A::Bool(present), vec![A::Set(s2), A::Word(*x)]))
        }
        ("radix.contains" | "lset.contains", [A::Set(s), A::Word(x)]) => same(A::Bool(s.contains(x))),
        ("hash.insert", [A::Map(chains), A::Word(key), A::Word(val)]) => {
            if *val == 0 {
                return None;
            }
            let mut chains = chains.clone();
            let chain = &mut chains[hash_bucket(*key, hc, k)];
            let old = match chain.iter_mut().find(|(k2, _)| k2 == key) {
                Some(e) => std::mem::replace(&mut e.1, *val),
                None => {
                    chain.push((*key, *val));
                    0
                }
            };
            Some((A::Word(old), vec![A::Map(chains), A::Word(*key), A::Word(*val)]))
        }
        ("hash.contains", [A::Map(chains), A::Word(key)]) => {
            same(A::Bool(chains[hash_bucket(*key, hc, k)].iter().any(|(k2, _)| k2 == key)))
        }
        ("tree.contains1" | "tree.contains2", [A::Tree(t), A::Word(x)]) => same(A::Bool(t.contains(*x))),
        _ => None,
    }
}

/// Character bits of a string, as stored in its second word.
pub(super) fn str_bits(s: &[bool]) -> u64 {
    bits(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn remove_needs_member() {
        let l = Abstract::List(vec![4, 7, 9]);
        assert_eq!(reference("list.remove", &[l.clone(), Abstract::Word(5)], 8, 157), None);
        let (r, after) = reference("list.remove", &[l, Abstract::Word(7)], 8, 157).unwrap();
        assert_eq!(r, Abstract::Word(1));
        assert_eq!(after[0], Abstract::List(vec![4, 9]));
    }

    #[test]
    fn string_order_is_lexicographic() {
        let s = |v: &[u8]| Abstract::Str(v.iter().map(|&c| c == 1).collect());
        let cmp = |a, b| reference("string.compare", &[a, b], 8, 157).unwrap().0;
        assert_eq!(cmp(s(&[0, 1]), s(&[0, 1, 0])), Abstract::Bool(true));
        assert_eq!(cmp(s(&[1]), s(&[0, 1])), Abstract::Bool(false));
        assert_eq!(cmp(s(&[]), s(&[])), Abstract::Bool(true));
    }

    #[test]
    fn hash_insert_returns_old_value() {
        let m = Abstract::Map([vec![], vec![]]);
        let (r, after) = reference("hash.insert", &[m, Abstract::Word(3), Abstract::Word(5)], 8, 157).unwrap();
        assert_eq!(r, Abstract::Word(0));
        let (r, _) = reference("hash.insert", &[after[0].clone(), Abstract::Word(3), Abstract::Word(6)], 8, 157).unwrap();
        assert_eq!(r, Abstract::Word(5));
    }

    #[test]
    fn bst_shape() {
        let t = Bst::from_keys(&[5, 2, 8, 1]);
        assert_eq!(t.to_string(), "(((. 1 .) 2 .) 5 (. 8 .))");
        assert_eq!(t.depth(), 3);
        assert!(t.contains(8) && !t.contains(3));
    }
}
