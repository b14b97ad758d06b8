//! Running corpus operations on encoded inputs and measuring them.

use std::sync::Arc;

use serde::Serialize;

use super::encode::{decode, encode, fingerprint_with_roots};
use super::model::reference;
use super::{Abstract, BoundRule, GroundError, Kind, Op};
use crate::boson::{all_permutations, hi_over, Heap, HiVerdict, PermutationSource, SectionSpec};
use crate::circuit::{compile, cost_report, expand, simulate, BasisState, CostReport};
use crate::config::{Config, ConfigError};
use crate::interp::{run_core, run_core_inverse, FinalState, RunOptions, Value};
use crate::pipeline::{core_source, Checked};
use crate::transform::CoreProgram;

/// Word size, heap shape and limits for corpus runs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Setup {
    pub k: u32,
    pub sections: Vec<SectionSpec>,
    pub permutation: PermutationSource,
    pub hash_constant: u64,
    pub max_steps: u64,
    pub check_validity: bool,
}

impl Setup {
    /// Twelve two-word and twelve four-word blocks.
    pub fn corpus(k: u32) -> Setup {
        Setup::with_blocks(k, 12)
    }

    /// `per_section` blocks in each of the two-word and four-word sections.
    pub fn with_blocks(k: u32, per_section: usize) -> Setup {
        Setup::with_sections(k, per_section, per_section)
    }

    pub fn with_sections(k: u32, two_word: usize, four_word: usize) -> Setup {
        Setup {
            k,
            sections: vec![
                SectionSpec { block_words: 2, count: two_word },
                SectionSpec { block_words: 4, count: four_word },
            ],
            permutation: PermutationSource::Identity,
            hash_constant: 157,
            max_steps: 50_000_000,
            check_validity: false,
        }
    }

    pub fn from_config(cfg: &Config) -> Result<Setup, ConfigError> {
        cfg.validate()?;
        Ok(Setup {
            k: cfg.k,
            sections: cfg.heap.sections.clone(),
            permutation: cfg.permutation_source()?,
            hash_constant: cfg.hash_constant,
            max_steps: cfg.max_steps,
            check_validity: false,
        })
    }

    pub fn heap(&self) -> Result<Heap, GroundError> {
        Ok(Heap::new(self.k, &self.sections, &self.permutation)?)
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions { k: self.k, max_steps: self.max_steps, check_validity: self.check_validity }
    }

    /// The hash constant reduced to a word and forced odd.
    pub fn hash_word(&self) -> u64 {
        let m = if self.k >= 64 { u64::MAX } else { (1 << self.k) - 1 };
        (self.hash_constant & m) | 1
    }
}

/// A corpus operation compiled at one bound and word size.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub op: &'static Op,
    pub bound: Option<u64>,
    pub k: u32,
    pub hash_constant: u64,
    pub source: String,
    pub checked: Checked,
    pub core: Arc<CoreProgram>,
}

/// Bound needed for `args`: structure size plus one, or word size plus one.
pub fn bound_for(op: &Op, args: &[Abstract], k: u32) -> Option<u64> {
    match op.bound {
        BoundRule::None => None,
        BoundRule::WordPlusOne => Some(k as u64 + 1),
        BoundRule::SizePlusOne => {
            let size = op.args.iter().zip(args).find(|(kind, _)| kind.is_structure()).map_or(0, |(_, a)| a.size());
            Some(size as u64 + 1)
        }
    }
}

/// The entry point of `op` with its bound filled in.
pub fn main_source(op: &Op, bound: Option<u64>, hc: u64) -> String {
    op.main.replace("{B}", &bound.unwrap_or(0).to_string()).replace("{HC}", &hc.to_string())
}

pub fn prepare(op: &'static Op, bound: Option<u64>, setup: &Setup) -> Result<Prepared, GroundError> {
    let hc = setup.hash_word();
    let source = main_source(op, bound, hc);
    let (checked, core) = core_source(&[op.source], &source, setup.k)
        .map_err(|source| GroundError::Pipeline { op: op.name.to_string(), source })?;
    Ok(Prepared { op, bound, k: setup.k, hash_constant: hc, source, checked, core })
}

/// A finished forward run with its inputs and decoded results.
#[derive(Clone, Debug)]
pub struct OpRun {
    pub inputs: Vec<Value>,
    pub initial: Heap,
    pub state: FinalState,
    pub result: Abstract,
    /// Arguments as they stand after the call.
    pub args_after: Vec<Abstract>,
}

fn show(args: &[Abstract]) -> String {
    args.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" ")
}

/// Encode `args` into `heap` as the parameters of `prep`.
pub fn encode_args(prep: &Prepared, args: &[Abstract], heap: &mut Heap) -> Result<Vec<Value>, GroundError> {
    let params = &prep.core.params;
    if params.len() != args.len() {
        return Err(GroundError::Precondition { op: prep.op.name.to_string(), args: show(args) });
    }
    let mut out = Vec::new();
    for ((kind, a), p) in prep.op.args.iter().zip(args).zip(params) {
        out.push(encode(*kind, a, &p.ty, heap)?);
    }
    Ok(out)
}

/// Run `prep` forwards on `args` encoded into `heap`.
pub fn run_prepared(prep: &Prepared, args: &[Abstract], mut heap: Heap, setup: &Setup) -> Result<OpRun, GroundError> {
    let inputs = encode_args(prep, args, &mut heap)?;
    let initial = heap.clone();
    let state = run_core(&prep.core, inputs.clone(), heap, &setup.run_options())
        .map_err(|source| GroundError::Run { op: prep.op.name.to_string(), source })?;
    let result = decode(prep.op.result, &state.output, &state.heap)?;
    let args_after = prep
        .op
        .args
        .iter()
        .zip(&state.params)
        .map(|(kind, v)| decode(*kind, v, &state.heap))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(OpRun { inputs, initial, state, result, args_after })
}

/// Prepare at the bound `args` need and run on a fresh heap.
pub fn run_corpus_op(op: &'static Op, args: &[Abstract], setup: &Setup) -> Result<OpRun, GroundError> {
    let prep = prepare(op, bound_for(op, args, setup.k), setup)?;
    run_prepared(&prep, args, setup.heap()?, setup)
}

/// Compare a run with the reference model.
pub fn check_model(op: &Op, args: &[Abstract], run: &OpRun, setup: &Setup) -> Result<(), GroundError> {
    let (want, want_args) = reference(op.name, args, setup.k, setup.hash_word())
        .ok_or_else(|| GroundError::Precondition { op: op.name.to_string(), args: show(args) })?;
    if run.result != want || run.args_after != want_args {
        return Err(GroundError::Mismatch {
            op: op.name.to_string(),
            args: show(args),
            expected: format!("{want} / {}", show(&want_args)),
            got: format!("{} / {}", run.result, show(&run.args_after)),
        });
    }
    Ok(())
}

/// Run the inverted program forwards from the end state of `run`.
pub fn run_inverse(prep: &Prepared, run: &OpRun, setup: &Setup) -> Result<FinalState, GroundError> {
    run_core_inverse(&prep.core, run.state.params.clone(), run.state.output.clone(), run.state.heap.clone(), &setup.run_options())
        .map_err(|source| GroundError::Run { op: format!("{} (inverse)", prep.op.name), source })
}

/// The inverse run must restore the inputs and the heap exactly.
pub fn check_round_trip(prep: &Prepared, args: &[Abstract], run: &OpRun, setup: &Setup) -> Result<(), GroundError> {
    let back = run_inverse(prep, run, setup)?;
    let fail = |what: &str| GroundError::NotRestored { op: prep.op.name.to_string(), args: show(args), what: what.to_string() };
    if back.params != run.inputs {
        return Err(fail("registers"));
    }
    if back.heap != run.initial {
        return Err(fail("heap"));
    }
    Ok(())
}

/// Compile `prep`, simulate it at gate level on the encoded `args` and
/// compare registers and memory with the interpreter.
pub fn check_circuit(prep: &Prepared, args: &[Abstract], setup: &Setup) -> Result<(), GroundError> {
    let heap = setup.heap()?;
    let run = run_prepared(prep, args, heap, setup)?;
    let gates = expand(&compile(&prep.core, &run.initial)?);
    let start = BasisState::encode(&gates.header, &run.inputs, &run.initial)?;
    let end = simulate(&gates, &start)?;
    let outs = end.decode_outputs(&gates.header);
    let mut want = run.state.params.clone();
    want.push(run.state.output.clone());
    let mismatch = |what: String| GroundError::Mismatch {
        op: format!("{} (circuit)", prep.op.name),
        args: show(args),
        expected: "interpreter state".to_string(),
        got: what,
    };
    if outs != want {
        return Err(mismatch(format!("registers {}", outs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "))));
    }
    if end.decode_heap(&gates.header, &run.initial) != run.state.heap {
        return Err(mismatch("different memory".to_string()));
    }
    Ok(())
}

/// Apply `prep` once per entry of `calls`, threading the first argument
/// through, starting from `init`. Returns the fingerprint of the final heap
/// and structure root.
pub fn run_history(prep: &Prepared, init: &Abstract, calls: &[Vec<Abstract>], setup: &Setup) -> Result<Vec<u8>, GroundError> {
    let mut heap = setup.heap()?;
    let params = &prep.core.params;
    let mut root = encode(prep.op.args[0], init, &params[0].ty, &mut heap)?;
    for rest in calls {
        let mut inputs = vec![root];
        for ((kind, a), p) in prep.op.args[1..].iter().zip(rest).zip(&params[1..]) {
            inputs.push(encode(*kind, a, &p.ty, &mut heap)?);
        }
        let st = run_core(&prep.core, inputs, heap, &setup.run_options())
            .map_err(|source| GroundError::Run { op: prep.op.name.to_string(), source })?;
        heap = st.heap;
        root = st.params.into_iter().next().expect("structure parameter");
    }
    Ok(fingerprint_with_roots(&heap, &[&root]))
}

/// Canonical arguments of size `n` for sweeps: elements `1..=n`, probing
/// for the last one.
pub fn sweep_args(op: &Op, n: usize) -> Vec<Abstract> {
    let elems: Vec<u64> = (1..=n as u64).collect();
    let last = elems.last().copied().unwrap_or(0);
    op.args
        .iter()
        .enumerate()
        .map(|(i, kind)| match kind {
            Kind::List => Abstract::List(elems.clone()),
            Kind::SortedSet | Kind::Radix => Abstract::Set(elems.iter().copied().collect()),
            Kind::Map => Abstract::Map([elems.iter().map(|&x| (x, 1)).collect(), Vec::new()]),
            Kind::Tree => Abstract::Tree(super::Bst::from_keys(&elems)),
            Kind::Str => Abstract::Str(vec![true; n]),
            Kind::Word if i == 2 => Abstract::Word(1),
            Kind::Word => Abstract::Word(last),
            Kind::Bool => Abstract::Bool(false),
            Kind::Unit => Abstract::Unit,
        })
        .collect()
}

/// Interpreter steps of `op` on sweep inputs of each size.
pub fn step_sweep(op: &'static Op, sizes: &[usize], setup: &Setup) -> Result<Vec<(usize, u64)>, GroundError> {
    sizes
        .iter()
        .map(|&n| {
            let args = sweep_args(op, n);
            let run = run_corpus_op(op, &args, setup)?;
            Ok((n, run.state.stats.steps))
        })
        .collect()
}

/// Cost of `op` compiled at `bound` with the heap shape of `setup`.
pub fn cost_at(op: &'static Op, bound: Option<u64>, setup: &Setup) -> Result<CostReport, GroundError> {
    let prep = prepare(op, bound, setup)?;
    let net = compile(&prep.core, &setup.heap()?)?;
    Ok(cost_report(&net))
}

/// Variable a cost sweep runs over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SweepVar {
    /// Structure size, at a fixed word size.
    N,
    /// Word size.
    K,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            SweepVar::N => "n",
            SweepVar::K => "k",
        }
    }

    pub fn default_range(self) -> Vec<u64> {
        match self {
            SweepVar::N => (1..=6).collect(),
            SweepVar::K => (4..=12).collect(),
        }
    }
}

/// Word-string and radix operations are measured in `k`, the rest in `n`.
pub fn sweep_var(op: &Op) -> SweepVar {
    if op.bound == BoundRule::WordPlusOne || op.args.contains(&Kind::Str) {
        SweepVar::K
    } else {
        SweepVar::N
    }
}

/// Compiled cost of `op` at each point of a sweep. Sweeps in `n` compile at
/// bound `n + 1` with the word size of `base`; sweeps in `k` use a small
/// heap that every word size from 4 can address.
pub fn cost_sweep(op: &'static Op, xs: &[u64], base: &Setup) -> Result<Vec<(u64, CostReport)>, GroundError> {
    xs.iter()
        .map(|&x| {
            let (setup, bound) = match sweep_var(op) {
                SweepVar::N => (base.clone(), (op.bound != BoundRule::None).then_some(x + 1)),
                SweepVar::K => {
                    let s = Setup { k: x as u32, ..Setup::with_sections(x as u32, 3, 5) };
                    let s = Setup { hash_constant: base.hash_constant, ..s };
                    (s, (op.bound != BoundRule::None).then_some(x + 1))
                }
            };
            Ok((x, cost_at(op, bound, &setup)?))
        })
        .collect()
}

/// Outcome of comparing two insertion histories over initial permutations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HiReport {
    pub verdict: HiVerdict,
    pub permutations: usize,
    /// Permutations under which both histories give identical bits.
    pub identical: usize,
}

fn empty_structure(kind: Kind) -> Option<Abstract> {
    match kind {
        Kind::List => Some(Abstract::List(Vec::new())),
        Kind::SortedSet | Kind::Radix => Some(Abstract::Set(Default::default())),
        Kind::Map => Some(Abstract::Map([Vec::new(), Vec::new()])),
        Kind::Tree => Some(Abstract::Tree(super::Bst::Empty)),
        _ => None,
    }
}

/// Insert the keys of `a` and of `b`, in order, into an empty structure on
/// a heap of `blocks` node blocks, once per initial permutation in `perms`
/// (all `blocks!` of them by default), and compare the fingerprints.
pub fn hi_check(
    op: &'static Op,
    a: &[u64],
    b: &[u64],
    blocks: usize,
    k: u32,
    perms: Option<&[Vec<usize>]>,
) -> Result<HiReport, GroundError> {
    let init = empty_structure(op.args[0]).ok_or_else(|| GroundError::UnknownOp(format!("{} is not an insertion", op.name)))?;
    let block_words = match op.args[0] {
        Kind::List | Kind::SortedSet => 2,
        _ => 4,
    };
    let mut setup = Setup::with_sections(k, 0, 0);
    setup.sections = vec![SectionSpec { block_words, count: blocks }];
    let bound = match op.bound {
        BoundRule::None => None,
        BoundRule::SizePlusOne => Some(a.len().max(b.len()) as u64 + 1),
        BoundRule::WordPlusOne => Some(k as u64 + 1),
    };
    let prep = prepare(op, bound, &setup)?;
    let calls = |keys: &[u64]| -> Vec<Vec<Abstract>> {
        keys.iter()
            .map(|&x| {
                let mut c = vec![Abstract::Word(x)];
                if op.args.len() == 3 {
                    c.push(Abstract::Word(1));
                }
                c
            })
            .collect()
    };
    let (ca, cb) = (calls(a), calls(b));
    let all;
    let perms = match perms {
        Some(p) => p,
        None => {
            all = all_permutations(blocks);
            &all
        }
    };
    let mut fa = Vec::with_capacity(perms.len());
    let mut fb = Vec::with_capacity(perms.len());
    for p in perms {
        let s = Setup { permutation: PermutationSource::Explicit(vec![p.clone()]), ..setup.clone() };
        fa.push(run_history(&prep, &init, &ca, &s)?);
        fb.push(run_history(&prep, &init, &cb, &s)?);
    }
    let (mut ia, mut ib) = (fa.iter().cloned(), fb.iter().cloned());
    let verdict = hi_over(perms, &mut |_| ia.next().unwrap_or_default(), &mut |_| ib.next().unwrap_or_default());
    let identical = fa.iter().zip(&fb).filter(|(x, y)| x == y).count();
    Ok(HiReport { verdict, permutations: perms.len(), identical })
}
