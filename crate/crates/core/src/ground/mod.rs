//! Ground: a corpus of data-structure operations written in Tower, with
//! reference models, heap encoders and a measurement harness.

mod encode;
mod fit;
mod gen;
mod harness;
mod model;

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::boson::HeapError;
use crate::circuit::{CompileError, SimError};
use crate::interp::StepError;
use crate::pipeline::PipelineError;

pub use encode::{decode, encode, fingerprint_with_roots, EncodeError};
pub use fit::{classify, exact_fit, Fit};
pub use gen::sample_args;
pub use harness::{
    bound_for, check_circuit, check_model, check_round_trip, cost_at, encode_args, main_source, prepare, run_corpus_op,
    cost_sweep, hi_check, run_history, run_inverse, run_prepared, step_sweep, sweep_args, sweep_var, HiReport, OpRun, Prepared,
    Setup, SweepVar,
};
pub use model::{hash_bucket, reference, Bst};

pub const LIST_SRC: &str = include_str!("../../corpus/list.twr");
pub const STACK_SRC: &str = include_str!("../../corpus/stack.twr");
pub const QUEUE_SRC: &str = include_str!("../../corpus/queue.twr");
pub const STRING_SRC: &str = include_str!("../../corpus/string.twr");
pub const RADIX_SRC: &str = include_str!("../../corpus/radix.twr");
pub const HASH_SRC: &str = include_str!("../../corpus/hash.twr");
pub const LSET_SRC: &str = include_str!("../../corpus/lset.twr");
pub const TREE_SRC: &str = include_str!("../../corpus/tree.twr");

/// Library sources by file stem, for `--lib` style lookups.
pub const LIBRARIES: &[(&str, &str)] = &[
    ("list", LIST_SRC),
    ("stack", STACK_SRC),
    ("queue", QUEUE_SRC),
    ("string", STRING_SRC),
    ("radix", RADIX_SRC),
    ("hash", HASH_SRC),
    ("lset", LSET_SRC),
    ("tree", TREE_SRC),
];

/// Shape of an abstract argument or result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Kind {
    Unit,
    Word,
    Bool,
    /// `ptr<list>`
    List,
    /// `ptr<list>` kept in ascending order without duplicates
    SortedSet,
    /// `(uint, uint)` as (length, bits)
    Str,
    /// `ptr<rnode>`
    Radix,
    /// `(ptr<hnode>, ptr<hnode>)`
    Map,
    /// `ptr<tree>`
    Tree,
}

impl Kind {
    pub fn is_structure(self) -> bool {
        matches!(self, Kind::List | Kind::SortedSet | Kind::Radix | Kind::Map | Kind::Tree)
    }
}

/// How the recursion bound of an operation is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BoundRule {
    /// No recursion.
    None,
    /// Size of the first structure argument plus one.
    SizePlusOne,
    /// Word size plus one.
    WordPlusOne,
}

/// Growth class of a cost measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Growth {
    Constant,
    Affine,
    /// Polynomial of degree at most two.
    Quadratic,
    Exponential,
}

/// One corpus operation.
#[derive(Debug, Serialize)]
pub struct Op {
    /// `structure.operation`
    pub name: &'static str,
    #[serde(skip)]
    pub source: &'static str,
    /// Entry point; `{B}` is the bound and `{HC}` the hash constant.
    #[serde(skip)]
    pub main: &'static str,
    pub args: &'static [Kind],
    pub result: Kind,
    pub bound: BoundRule,
    pub mutates: bool,
    /// Expected growth of gates and qubits, in `n` for `SizePlusOne` and in
    /// `k` for `WordPlusOne`.
    pub gates: Growth,
    pub qubits: Growth,
    /// Structure allocations are history independent.
    pub hi: bool,
}

use BoundRule::*;
use Growth::*;
use Kind::*;

pub static OPS: &[Op] = &[
    Op {
        name: "list.length",
        source: LIST_SRC,
        main: "fun main(l: ptr<list>) -> uint { let acc <- 0; let out <- length[{B}](l, acc); let acc -> 0; return out; }",
        args: &[List],
        result: Word,
        bound: SizePlusOne,
        mutates: false,
        gates: Affine,
        qubits: Affine,
        hi: true,
    },
    Op {
        name: "list.length_exp",
        source: LIST_SRC,
        main: "fun main(l: ptr<list>) -> uint { let out <- length_exp[{B}](l); return out; }",
        args: &[List],
        result: Word,
        bound: SizePlusOne,
        mutates: false,
        gates: Exponential,
        qubits: Affine,
        hi: true,
    },
    Op {
        name: "list.sum",
        source: LIST_SRC,
        main: "fun main(l: ptr<list>) -> uint { let acc <- 0; let out <- sum[{B}](l, acc); let acc -> 0; return out; }",
        args: &[List],
        result: Word,
        bound: SizePlusOne,
        mutates: false,
        gates: Affine,
        qubits: Affine,
        hi: true,
    },
    Op {
        name: "list.find_pos",
        source: LIST_SRC,
        main: "fun main(l: ptr<list>, x: uint) -> uint { let acc <- 0; let out <- find_pos[{B}](l, x, acc); let acc -> 0; return out; }",
        args: &[List, Word],
        result: Word,
        bound: SizePlusOne,
        mutates: false,
        gates: Affine,
        qubits: Affine,
        hi: true,
    },
    Op {
        name: "list.remove",
        source: LIST_SRC,
        main: "fun main(l: ptr<list>, x: uint) -> uint { let acc <- 0; let out <- remove[{B}](l, x, acc); let acc -> 0; return out; }",
        args: &[List, Word],
        result: Word,
        bound: SizePlusOne,
        mutates: true,
        gates: Affine,
        qubits: Affine,
        hi: true,
    },
    Op {
        name: "stack.push_front",
        source: STACK_SRC,
        main: "fun main(l: ptr<list>, x: uint) { let () <- push_front(l, x); return (); }",
        args: &[List, Word],
        result: Unit,
        bound: None,
        mutates: true,
        gates: Constant,
        qubits: Constant,
        hi: true,
    },
    Op {
        name: "stack.pop_front",
        source: STACK_SRC,
        main: "fun main(l: ptr<list>) -> uint { let out <- pop_front(l); return out; }",
        args: &[List],
        result: Word,
        bound: None,
        mutates: true,
        gates: Constant,
        qubits: Constant,
        hi: true,
    },
    Op {
        name: "queue.push_back",
        source: QUEUE_SRC,
        main: "fun main(l: ptr<list>, x: uint) { let () <- push_back[{B}](l, x); return (); }",
        args: &[List, Word],
        result: Unit,
        bound: SizePlusOne,
        mutates: true,
        gates: Affine,
        qubits: Affine,
        hi: true,
    },
    Op {
        name: "queue.pop_front",
        source: QUEUE_SRC,
        main: "fun main(l: ptr<list>) -> uint { let out <- pop_front(l); return out; }",
        args: &[List],
        result: Word,
        bound: None,
        mutates: true,
        gates: Constant,
        qubits: Constant,
        hi: true,
    },
    Op {
        name: "string.is_empty",
        source: STRING_SRC,
        main: "fun main(s: str) -> bool { let out <- is_empty(s); return out; }",
        args: &[Str],
        result: Bool,
        bound: None,
        mutates: false,
        gates: Constant,
        qubits: Quadratic,
        hi: true,
    },
    Op {
        name: "string.length",
        source: STRING_SRC,
        main: "fun main(s: str) -> uint { let out <- length(s); return out; }",
        args: &[Str],
        result: Word,
        bound: None,
        mutates: false,
        gates: Constant,
        qubits: Quadratic,
        hi: true,
    },
    Op {
        name: "string.get_prefix",
        source: STRING_SRC,
        main: "fun main(s: str, i: uint) -> str { let out <- get_prefix(s, i); return out; }",
        args: &[Str, Word],
        result: Str,
        bound: None,
        mutates: false,
        gates: Constant,
        qubits: Quadratic,
        hi: true,
    },
    Op {
        name: "string.get_substring",
        source: STRING_SRC,
        main: "fun main(s: str, i: uint) -> str { let out <- get_substring(s, i); return out; }",
        args: &[Str, Word],
        result: Str,
        bound: None,
        mutates: false,
        gates: Constant,
        qubits: Quadratic,
        hi: true,
    },
    Op {
        name: "string.get",
        source: STRING_SRC,
        main: "fun main(s: str, i: uint) -> uint { let out <- get(s, i); return out; }",
        args: &[Str, Word],
        result: Word,
        bound: None,
        mutates: false,
        gates: Constant,
        qubits: Quadratic,
        hi: true,
    },
    Op {
        name: "string.equal",
        source: STRING_SRC,
        main: "fun main(s1: str, s2: str) -> bool { let out <- equal(s1, s2); return out; }",
        args: &[Str, Str],
        result: Bool,
        bound: None,
        mutates: false,
        gates: Constant,
        qubits: Quadratic,
        hi: true,
    },
    Op {
        name: "string.concat",
        source: STRING_SRC,
        main: "fun main(s1: str, s2: str) -> str { let out <- concat(s1, s2); return out; }",
        args: &[Str, Str],
        result: Str,
        bound: None,
        mutates: false,
        gates: Constant,
        qubits: Quadratic,
        hi: true,
    },
    Op {
        name: "string.num_matching",
        source: STRING_SRC,
        main: "fun main(s1: str, s2: str) -> uint { let out <- num_matching[{B}](s1, s2); return out; }",
        args: &[Str, Str],
        result: Word,
        bound: WordPlusOne,
        mutates: false,
        gates: Quadratic,
        qubits: Quadratic,
        hi: true,
    },
    Op {
        name: "string.is_prefix",
        source: STRING_SRC,
        main: "fun main(s1: str, s2: str) -> bool { let out <- is_prefix[{B}](s1, s2); return out; }",
        args: &[Str, Str],
        result: Bool,
        bound: WordPlusOne,
        mutates: false,
        gates: Quadratic,
        qubits: Quadratic,
        hi: true,
    },
    Op {
        name: "string.compare",
        source: STRING_SRC,
        main: "fun main(s1: str, s2: str) -> bool { let out <- compare[{B}](s1, s2); return out; }",
        args: &[Str, Str],
        result: Bool,
        bound: WordPlusOne,
        mutates: false,
        gates: Quadratic,
        qubits: Quadratic,
        hi: true,
    },
    Op {
        name: "radix.insert",
        source: RADIX_SRC,
        main: "fun main(t: ptr<rnode>, key: uint) -> bool { let out <- insert[{B}](t, key); return out; }",
        args: &[Radix, Word],
        result: Bool,
        bound: WordPlusOne,
        mutates: true,
        gates: Quadratic,
        qubits: Quadratic,
        hi: true,
    },
    Op {
        name: "radix.contains",
        source: RADIX_SRC,
        main: "fun main(t: ptr<rnode>, key: uint) -> bool { let out <- contains[{B}](t, key); return out; }",
        args: &[Radix, Word],
        result: Bool,
        bound: WordPlusOne,
        mutates: false,
        gates: Quadratic,
        qubits: Quadratic,
        hi: true,
    },
    Op {
        name: "hash.insert",
        source: HASH_SRC,
        main: "fun main(m: table, key: uint, val: uint) -> uint { let hc <- {HC}; let out <- insert[{B}](m, key, val, hc); let hc -> {HC}; return out; }",
        args: &[Map, Word, Word],
        result: Word,
        bound: SizePlusOne,
        mutates: true,
        gates: Affine,
        qubits: Affine,
        hi: false,
    },
    Op {
        name: "hash.contains",
        source: HASH_SRC,
        main: "fun main(m: table, key: uint) -> bool { let hc <- {HC}; let out <- contains[{B}](m, key, hc); let hc -> {HC}; return out; }",
        args: &[Map, Word],
        result: Bool,
        bound: SizePlusOne,
        mutates: false,
        gates: Affine,
        qubits: Affine,
        hi: false,
    },
    Op {
        name: "lset.insert",
        source: LSET_SRC,
        main: "fun main(l: ptr<list>, x: uint) -> bool { let out <- insert[{B}](l, x); return out; }",
        args: &[SortedSet, Word],
        result: Bool,
        bound: SizePlusOne,
        mutates: true,
        gates: Affine,
        qubits: Affine,
        hi: true,
    },
    Op {
        name: "lset.contains",
        source: LSET_SRC,
        main: "fun main(l: ptr<list>, x: uint) -> bool { let out <- contains[{B}](l, x); return out; }",
        args: &[SortedSet, Word],
        result: Bool,
        bound: SizePlusOne,
        mutates: false,
        gates: Affine,
        qubits: Affine,
        hi: true,
    },
    Op {
        name: "tree.contains1",
        source: TREE_SRC,
        main: "fun main(t: ptr<tree>, key: uint) -> bool { let out <- contains1[{B}](t, key); return out; }",
        args: &[Tree, Word],
        result: Bool,
        bound: SizePlusOne,
        mutates: false,
        gates: Affine,
        qubits: Affine,
        hi: true,
    },
    Op {
        name: "tree.contains2",
        source: TREE_SRC,
        main: "fun main(t: ptr<tree>, key: uint) -> bool { let out <- contains2[{B}](t, key); return out; }",
        args: &[Tree, Word],
        result: Bool,
        bound: SizePlusOne,
        mutates: false,
        gates: Exponential,
        qubits: Affine,
        hi: true,
    },
];

/// Look an operation up by its `structure.operation` name.
pub fn op(name: &str) -> Option<&'static Op> {
    OPS.iter().find(|o| o.name == name)
}

/// An abstract value: what a data structure means, independent of layout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Abstract {
    Unit,
    Word(u64),
    Bool(bool),
    List(Vec<u64>),
    /// Characters as bits.
    Str(Vec<bool>),
    Set(BTreeSet<u64>),
    /// Chains of the two buckets, in chain order.
    Map([Vec<(u64, u64)>; 2]),
    Tree(Bst),
}

impl Abstract {
    /// Element count, for bound selection and sweeps.
    pub fn size(&self) -> usize {
        match self {
            Abstract::List(v) => v.len(),
            Abstract::Str(s) => s.len(),
            Abstract::Set(s) => s.len(),
            Abstract::Map(m) => m[0].len() + m[1].len(),
            Abstract::Tree(t) => t.size(),
            _ => 0,
        }
    }
}

impl fmt::Display for Abstract {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn join<T: fmt::Display>(it: impl IntoIterator<Item = T>) -> String {
            it.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        }
        match self {
            Abstract::Unit => write!(f, "()"),
            Abstract::Word(n) => write!(f, "{n}"),
            Abstract::Bool(b) => write!(f, "{b}"),
            Abstract::List(v) => write!(f, "[{}]", join(v)),
            Abstract::Str(s) => write!(f, "\"{}\"", s.iter().map(|&c| if c { '1' } else { '0' }).collect::<String>()),
            Abstract::Set(s) => write!(f, "{{{}}}", join(s)),
            Abstract::Map(m) => {
                let chain = |c: &Vec<(u64, u64)>| join(c.iter().map(|(k, v)| format!("{k}:{v}")));
                write!(f, "[{}] [{}]", chain(&m[0]), chain(&m[1]))
            }
            Abstract::Tree(t) => write!(f, "{t}"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GroundError {
    #[error("unknown operation `{0}`")]
    UnknownOp(String),
    #[error("{op}: {source}")]
    Pipeline {
        op: String,
        #[source]
        source: PipelineError,
    },
    #[error("{op}: {source}")]
    Run {
        op: String,
        #[source]
        source: StepError,
    },
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Heap(#[from] HeapError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{op} on {args}: inputs violate the precondition")]
    Precondition { op: String, args: String },
    #[error("{op} on {args}: expected {expected}, got {got}")]
    Mismatch { op: String, args: String, expected: String, got: String },
    #[error("{op} on {args}: inverse run did not restore the initial state ({what})")]
    NotRestored { op: String, args: String, what: String },
}

#[cfg(test)]
mod tests;
