//! Acceptance checks. Each criterion prints one `PASS` or `FAIL` line; the
//! process exits non-zero when any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tower::boson::{alloc_hi_oracle, hi_over, run_alloc_ops, AllocOp, Heap, HiVerdict, PermutationSource, SectionSpec};
use tower::ground::{
    self, bound_for, check_circuit, check_model, check_round_trip, classify, cost_at, cost_sweep, exact_fit, hi_check, prepare,
    run_prepared, sample_args, step_sweep, sweep_var, Growth, Setup, OPS,
};
use tower::interp::{run_core, Direction, Machine, RunOptions, StepError};
use tower::pipeline::{check_source, core_source, PipelineError};
use tower::syntax::kernel::{BinOp, Expr, Literal, Stmt, StmtKind, UnOp};
use tower::syntax::parse_and_desugar;
use tower::types::{check_program, check_stmt_in, CheckOptions, Context, FunctionContext};
use tower::{TypeExpr, Value};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn op(name: &str) -> &'static ground::Op {
    ground::op(name).unwrap_or_else(|| panic!("no corpus op {name}"))
}

// Round trips

const ROUND_TRIP_INPUTS: usize = 20;
const ROUND_TRIP_LIMIT: Duration = Duration::from_secs(60);

fn round_trips() -> Outcome {
    let start = Instant::now();
    let setup = Setup::corpus(8);
    let blocks: usize = setup.sections.iter().map(|s| s.count).sum();
    if blocks > 24 {
        return Err(format!("heap has {blocks} blocks"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut runs = 0;
    for op in OPS {
        for _ in 0..ROUND_TRIP_INPUTS {
            let args = sample_args(op, &mut rng, 8, 5, setup.hash_word());
            let prep = prepare(op, bound_for(op, &args, 8), &setup).map_err(|e| format!("{}: {e}", op.name))?;
            let heap = setup.heap().map_err(|e| e.to_string())?;
            let run = run_prepared(&prep, &args, heap, &setup).map_err(|e| format!("{} on {args:?}: {e}", op.name))?;
            check_model(op, &args, &run, &setup).map_err(|e| format!("{} on {args:?}: {e}", op.name))?;
            check_round_trip(&prep, &args, &run, &setup).map_err(|e| format!("{} on {args:?}: {e}", op.name))?;
            runs += 1;
        }
    }
    let took = start.elapsed();
    if OPS.len() < 25 {
        return Err(format!("only {} operations", OPS.len()));
    }
    if took > ROUND_TRIP_LIMIT {
        return Err(format!("{runs} round trips took {took:.1?}"));
    }
    Ok(format!("{} ops x {ROUND_TRIP_INPUTS} inputs, k=8, {blocks} blocks, {took:.1?}", OPS.len()))
}

// Circuits against the interpreter

fn circuits() -> Outcome {
    let setup = Setup::with_sections(4, 3, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let names = ["stack.push_front", "stack.pop_front", "list.length", "list.find_pos", "radix.insert", "radix.contains"];
    let mut cases = 0;
    for name in names {
        let op = op(name);
        for _ in 0..6 {
            let args = sample_args(op, &mut rng, 4, 2, setup.hash_word());
            let prep = prepare(op, bound_for(op, &args, 4), &setup).map_err(|e| format!("{name}: {e}"))?;
            check_circuit(&prep, &args, &setup).map_err(|e| format!("{name} on {args:?}: {e}"))?;
            cases += 1;
        }
    }
    Ok(format!("{cases} cases over {} ops, k=4, 8 blocks", names.len()))
}

// History independence

fn history_independence() -> Outcome {
    use AllocOp::*;
    let a = [Alloc("x".into()), Alloc("y".into()), Dealloc("x".into()), Dealloc("y".into())];
    let b = [Alloc("x".into()), Alloc("y".into()), Dealloc("y".into()), Dealloc("x".into())];
    if alloc_hi_oracle(&a, &b, 4) != HiVerdict::Equal {
        return Err("allocator dealloc-order pair differs over 4!".into());
    }
    let c = [Alloc("x".into()), Dealloc("x".into()), Alloc("y".into())];
    let d = [Alloc("y".into())];
    if alloc_hi_oracle(&c, &d, 5) != HiVerdict::Equal {
        return Err("allocator alloc/dealloc pair differs over 5!".into());
    }
    let identity = vec![(1..=4).collect::<Vec<usize>>()];
    let fp = |ops: &[AllocOp], p: &[usize]| run_alloc_ops(ops, 4, p).map(|h| h.fingerprint()).unwrap_or_default();
    if hi_over(&identity, &mut |p| fp(&a, p), &mut |p| fp(&b, p)) == HiVerdict::Equal {
        return Err("identity permutation alone hides the dealloc order".into());
    }
    let lset = hi_check(op("lset.insert"), &[1, 2, 3], &[3, 2, 1], 3, 8, None).map_err(|e| e.to_string())?;
    if lset.verdict != HiVerdict::Equal {
        return Err(format!("lset insertion order visible: {lset:?}"));
    }
    let lset6 = hi_check(op("lset.insert"), &[1, 2, 3, 4, 5, 6], &[6, 4, 2, 5, 3, 1], 6, 8, None).map_err(|e| e.to_string())?;
    if lset6.verdict != HiVerdict::Equal || lset6.permutations != 720 {
        return Err(format!("lset over 6! differs: {lset6:?}"));
    }
    let radix = hi_check(op("radix.insert"), &[1, 2, 3], &[3, 2, 1], 5, 4, None).map_err(|e| e.to_string())?;
    if radix.verdict != HiVerdict::Equal {
        return Err(format!("radix insertion order visible: {radix:?}"));
    }
    let id5 = vec![(1..=5).collect::<Vec<usize>>()];
    let radix_id = hi_check(op("radix.insert"), &[1, 2, 3], &[3, 2, 1], 5, 4, Some(&id5)).map_err(|e| e.to_string())?;
    if radix_id.verdict == HiVerdict::Equal {
        return Err("radix under the identity permutation alone looks independent".into());
    }
    Ok(format!(
        "allocator pairs equal, lset equal over {} and {}, radix equal over {}, identity-only differs",
        lset.permutations, lset6.permutations, radix.permutations
    ))
}

fn hash_not_independent() -> Outcome {
    let r = hi_check(op("hash.insert"), &[1, 2, 3], &[3, 2, 1], 3, 8, None).map_err(|e| e.to_string())?;
    match r.verdict {
        HiVerdict::Counterexample { perm } => {
            Ok(format!("distributions differ over {} permutations, first at {perm:?}", r.permutations))
        }
        HiVerdict::Equal => Err("hash.insert order pair gave equal distributions".into()),
    }
}

// Growth of the two length functions

fn length_growth() -> Outcome {
    let setup = Setup::corpus(8);
    let sizes: Vec<usize> = (4..=8).collect();
    let exp = step_sweep(op("list.length_exp"), &sizes, &setup).map_err(|e| e.to_string())?;
    let ratios: Vec<f64> = exp.windows(2).map(|w| w[1].1 as f64 / w[0].1 as f64).collect();
    if let Some(r) = ratios.iter().find(|r| !(1.8..=2.2).contains(*r)) {
        return Err(format!("length_exp step ratio {r:.3} outside [1.8, 2.2]: {exp:?}"));
    }
    let lin = step_sweep(op("list.length"), &sizes, &setup).map_err(|e| e.to_string())?;
    let xs: Vec<u64> = lin.iter().map(|p| p.0 as u64).collect();
    let ys: Vec<u64> = lin.iter().map(|p| p.1).collect();
    let fit = exact_fit(&xs, &ys, 1).filter(|f| f.degree == 1).ok_or(format!("length steps not affine: {lin:?}"))?;
    let gates = |name: &str| -> Result<Vec<u64>, String> {
        xs.iter()
            .map(|&n| cost_at(op(name), Some(n + 1), &setup).map(|c| c.gates as u64).map_err(|e| e.to_string()))
            .collect()
    };
    let (ge, gl) = (gates("list.length_exp")?, gates("list.length")?);
    if classify(&xs, &ge) != Some(Growth::Exponential) {
        return Err(format!("length_exp gates {ge:?} not exponential"));
    }
    if classify(&xs, &gl) != Some(Growth::Affine) {
        return Err(format!("length gates {gl:?} not affine"));
    }
    let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.2}")).collect();
    Ok(format!("length_exp step ratios [{}], length steps {}", shown.join(", "), fit.show("n")))
}

fn tree_growth() -> Outcome {
    let setup = Setup::corpus(8);
    let bounds: Vec<u64> = (1..=6).collect();
    let gates = |name: &str| -> Result<Vec<u64>, String> {
        bounds
            .iter()
            .map(|&b| cost_at(op(name), Some(b), &setup).map(|c| c.gates as u64).map_err(|e| e.to_string()))
            .collect()
    };
    let g2 = gates("tree.contains2")?;
    if let Some(w) = g2.windows(2).find(|w| (w[1] as f64) < 1.9 * w[0] as f64) {
        return Err(format!("contains2 gates grow {} -> {}: {g2:?}", w[0], w[1]));
    }
    let g1 = gates("tree.contains1")?;
    let fit = exact_fit(&bounds, &g1, 1).filter(|f| f.degree == 1).ok_or(format!("contains1 gates not affine: {g1:?}"))?;
    Ok(format!("contains2 gates {g2:?}, contains1 gates {}", fit.show("b")))
}

fn table_forms() -> Outcome {
    let base = Setup::corpus(8);
    let mut bad = Vec::new();
    for op in OPS {
        let xs = sweep_var(op).default_range();
        let sweep = cost_sweep(op, &xs, &base).map_err(|e| format!("{}: {e}", op.name))?;
        let g: Vec<u64> = sweep.iter().map(|(_, c)| c.gates as u64).collect();
        let q: Vec<u64> = sweep.iter().map(|(_, c)| c.qubits as u64).collect();
        let (mg, mq) = (classify(&xs, &g), classify(&xs, &q));
        if !mg.is_some_and(|m| op.gates.admits(m)) {
            bad.push(format!("{} gates {g:?} measured {mg:?}, expected {:?}", op.name, op.gates));
        }
        if !mq.is_some_and(|m| op.qubits.admits(m)) {
            bad.push(format!("{} qubits {q:?} measured {mq:?}, expected {:?}", op.name, op.qubits));
        }
    }
    if bad.is_empty() {
        Ok(format!("{} ops match their gate and qubit classes", OPS.len()))
    } else {
        Err(bad.join("; "))
    }
}

// Runtime diagnostics

const WRONG_UNASSIGN: &str = include_str!("../../../programs/wrong_unassign.twr");
const LEAK: &str = include_str!("../../../programs/leak.twr");

fn diagnostics() -> Outcome {
    let heap = || Heap::new(8, &[SectionSpec { block_words: 1, count: 4 }], &PermutationSource::Identity).unwrap();
    let opts = RunOptions::default();
    let (_, core) = core_source(&[], WRONG_UNASSIGN, 8).map_err(|e| e.to_string())?;
    let stuck = match run_core(&core, vec![Value::UInt(3)], heap(), &opts) {
        Err(e @ StepError::StuckUnAssign { span, .. }) if span.line > 0 => e.to_string(),
        other => return Err(format!("wrong_unassign: {other:?}")),
    };
    let (_, core) = core_source(&[], LEAK, 8).map_err(|e| e.to_string())?;
    let leak = match run_core(&core, vec![Value::UInt(3)], heap(), &opts) {
        Err(e @ StepError::Leak { .. }) => match &e {
            StepError::Leak { sites, .. } if sites.iter().any(|s| s.line > 0) => e.to_string(),
            _ => return Err(format!("leak without location: {e}")),
        },
        other => return Err(format!("leak: {other:?}")),
    };
    Ok(format!("{stuck} | {leak}"))
}

// Typing

const NEGATIVE: &[(&str, &str)] = &[
    ("TV-Var", "fun main(x: uint) -> uint { let y <- z; return y; }"),
    ("TV-Num", "fun main(x: uint) -> uint { let y <- 300; let y -> 300; let r <- x; return r; }"),
    ("TE-Proj", "fun main(x: uint) -> uint { let y <- x.1; return y; }"),
    ("TE-Not", "fun main(x: uint) -> bool { let b <- not x; return b; }"),
    ("TE-Test", "fun main(c: bool) -> bool { let b <- test c; return b; }"),
    ("TE-Lop", "fun main(x: uint, c: bool) -> bool { let b <- x && c; return b; }"),
    ("TE-Lop", "fun main(x: uint, c: bool) -> bool { let b <- c || x; return b; }"),
    ("TE-Aop", "fun main(x: uint, c: bool) -> uint { let y <- x + c; return y; }"),
    ("TE-Aop", "fun main(x: uint, c: bool) -> uint { let y <- c * x; return y; }"),
    ("TE-Bit", "fun main(x: uint, c: bool) -> uint { let y <- x ^ c; return y; }"),
    ("TE-Bit", "fun main(x: uint, c: bool) -> uint { let y <- c << x; return y; }"),
    ("TE-Cmp", "fun main(x: uint, c: bool) -> bool { let b <- x < c; return b; }"),
    ("TE-Cmp", "fun main(x: uint, c: bool) -> bool { let b <- x == c; return b; }"),
    ("TE-Cmp", "fun main(x: uint) -> bool { let p <- (x, x); let q <- (x, x); let b <- p == q; return b; }"),
    ("TE-Call", "fun main(x: uint) -> uint { let y <- nowhere(x); return y; }"),
    ("TE-CallUnbounded", "fun g(a: uint) -> uint { let r <- a; return r; }\nfun main(x: uint) -> uint { let y <- g[3](x); return y; }"),
    ("TE-CallUnbounded", "fun g(a: uint, b: uint) -> uint { let r <- a + b; return r; }\nfun main(x: uint) -> uint { let y <- g(x, x); return y; }"),
    ("TE-CallUnbounded", "fun g(a: uint) -> uint { let r <- a; return r; }\nfun main(c: bool) -> uint { let y <- g(c); return y; }"),
    ("TE-CallBounded", "fun f[n](a: uint) -> uint { let r <- a; return r; }\nfun main(x: uint) -> uint { let y <- f(x); return y; }"),
    ("TE-CallBounded", "fun f[n](a: uint) -> uint { let r <- a; return r; }\nfun main(x: uint, z: uint) -> uint { let y <- f[2](x, z); return y; }"),
    ("TE-CallBounded", "fun f[n](a: uint) -> uint { let r <- a; return r; }\nfun main(c: bool) -> uint { let y <- f[2](c); return y; }"),
    ("TE-CallBounded", "fun f[n](a: uint) -> uint { let r <- a; return r; }\nfun main(x: uint) -> uint { let y <- f[m](x); return y; }"),
    ("TE-CallSelf", "fun f(a: uint) -> uint { let r <- f(a); return r; }\nfun main(x: uint) -> uint { let y <- f(x); return y; }"),
    ("TE-CallSelf", "fun f[n](a: uint) -> uint { let r <- f[n](a); return r; }\nfun main(x: uint) -> uint { let y <- f[2](x); return y; }"),
    ("S-Assign", "fun main(x: uint) -> uint { let y <- x; let y <- x; return y; }"),
    ("S-Assign", "fun main(x: uint, x: uint) -> uint { let y <- x; return y; }"),
    ("S-UnAssign", "fun main(x: uint) -> uint { let z -> x; let y <- x; return y; }"),
    ("S-UnAssign", "fun main(x: uint) -> uint { let y <- x; let y -> y; let r <- x; return r; }"),
    ("S-UnAssign", "fun main(x: uint) -> uint { let y <- x; let y -> true; let r <- x; return r; }"),
    ("S-Swap", "fun main(x: uint, c: bool) -> uint { x <-> c; let r <- x; return r; }"),
    ("S-Swap", "fun main(x: uint) -> uint { x <-> w; let r <- x; return r; }"),
    ("S-MemSwap", "fun main(x: uint, y: uint) -> uint { *x <-> y; let r <- x; return r; }"),
    ("S-MemSwap", "type list = (uint, ptr<list>);\nfun main(l: ptr<list>, x: uint) -> uint { *l <-> x; let r <- x; return r; }"),
    ("S-If", "fun main(x: uint, y: uint) -> uint { if x { x <-> y; } let r <- x; return r; }"),
    ("S-If", "fun main(c: bool, d: bool) -> bool { if c { c <-> d; } let r <- c; return r; }"),
    ("S-If", "fun main(c: bool, x: uint) -> uint { if c { let y <- x; } let r <- x; return r; }"),
    ("S-Return", "fun main(x: uint) -> uint { return x; }"),
    ("S-Return", "fun main(x: uint) -> uint { let y <- x; let z <- x; return y; }"),
    ("S-Return", "fun main(x: uint) -> bool { let y <- x; return y; }"),
    ("S-Return", "fun main(x: uint, y: uint) -> uint { let z <- x; let y -> x; return z; }"),
    ("P-Fun", "fun g(a: uint) -> uint { let r <- a; return r; }\nfun g(a: uint) -> uint { let r <- a; return r; }\nfun main(x: uint) -> uint { let y <- x; return y; }"),
    ("P-Main", "fun main(x: uint) -> uint { let y <- x; return y; }\nfun g(a: uint) -> uint { let r <- a; return r; }"),
    ("P-Main", "fun main[n](x: uint) -> uint { let y <- x; return y; }"),
    ("P-Main", "fun g(a: uint) -> uint { let r <- a; return r; }"),
    ("TypOk-Ind", "type t = (uint, t);\nfun main(x: uint) -> uint { let y <- x; return y; }"),
    ("TypOk-Ind", "type t = (ptr<t>, (uint, t));\nfun main(x: uint) -> uint { let y <- x; return y; }"),
];

fn first_rule(src: &str) -> String {
    match check_source(&[], src, 8) {
        Ok(_) => "accepted".into(),
        Err(PipelineError::Type(errs)) => errs.first().map(|e| e.rule.to_string()).unwrap_or_default(),
        Err(PipelineError::Front(e)) => e.rule().to_string(),
        Err(e) => format!("other: {e}"),
    }
}

fn typing() -> Outcome {
    let mut bad = Vec::new();
    for (rule, src) in NEGATIVE {
        let got = first_rule(src);
        if got != *rule {
            bad.push(format!("expected {rule}, got {got} for `{src}`"));
        }
    }
    // Type names are resolved before checking, so an unbound type variable
    // can only reach the checker through a kernel program.
    let mut kernel = parse_and_desugar("fun main(p: ptr<uint>) -> uint { let y <- 1; return y; }").map_err(|e| e.to_string())?;
    kernel.funcs[0].params[0].ty = TypeExpr::ptr(TypeExpr::Var("q".into()));
    match check_program(&kernel, CheckOptions { k: 8 }) {
        Err(errs) if errs.first().is_some_and(|e| e.rule == "TypOk-Var") => {}
        other => bad.push(format!("expected TypOk-Var for an unbound type variable, got {other:?}")),
    }
    let mut rules: BTreeSet<&str> = NEGATIVE.iter().map(|(r, _)| *r).collect();
    rules.insert("TypOk-Var");
    let setup = Setup::corpus(8);
    for op in OPS {
        if let Err(e) = prepare(op, bound_for(op, &[], 8).map(|_| 3), &setup) {
            bad.push(format!("{} rejected: {e}", op.name));
        }
    }
    if NEGATIVE.len() + 1 < 30 {
        bad.push(format!("only {} negative programs", NEGATIVE.len()));
    }
    if bad.is_empty() {
        Ok(format!("{} rejected programs citing {} rules; {} corpus ops accepted", NEGATIVE.len() + 1, rules.len(), OPS.len()))
    } else {
        Err(bad.join("; "))
    }
}

// Random Core statements

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Ty {
    U,
    B,
    P,
    N,
}

impl Ty {
    fn expr(self) -> TypeExpr {
        match self {
            Ty::U => TypeExpr::UInt,
            Ty::B => TypeExpr::Bool,
            Ty::P => TypeExpr::ptr(TypeExpr::list()),
            Ty::N => TypeExpr::list(),
        }
    }
}

struct Gen {
    rng: ChaCha8Rng,
    vars: BTreeMap<String, Ty>,
    nonnull: BTreeSet<String>,
    defs: BTreeMap<String, Expr>,
    fresh: usize,
    allocs: usize,
}

impl Gen {
    fn pick(&mut self, ty: Ty, avoid: &BTreeSet<String>) -> Option<String> {
        let c: Vec<&String> = self.vars.iter().filter(|(x, t)| **t == ty && !avoid.contains(*x)).map(|(x, _)| x).collect();
        if c.is_empty() {
            None
        } else {
            Some(c[self.rng.gen_range(0..c.len())].clone())
        }
    }

    fn fresh(&mut self) -> String {
        self.fresh += 1;
        format!("v{}", self.fresh)
    }

    fn expr(&mut self, ty: Ty, avoid: &BTreeSet<String>, allow_alloc: bool) -> Expr {
        let null = || Literal::Null(TypeExpr::list());
        let choice = self.rng.gen_range(0..4);
        let fallback = match ty {
            Ty::U => Expr::Lit(Literal::Num(self.rng.gen_range(0..256))),
            Ty::B => Expr::Lit(Literal::Bool(self.rng.gen())),
            Ty::P => Expr::Lit(null()),
            Ty::N => Expr::Lit(Literal::Pair(Box::new(Literal::Num(self.rng.gen_range(0..256))), Box::new(null()))),
        };
        let e = match (ty, choice) {
            (_, 0) => None,
            (Ty::U, 1) => self.pick(Ty::U, avoid).map(Expr::Var),
            (Ty::U, 2) => {
                const OPS: [BinOp; 8] =
                    [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::BitAnd, BinOp::BitOr, BinOp::BitXor, BinOp::Shl, BinOp::Shr];
                let op = OPS[self.rng.gen_range(0..OPS.len())];
                self.pick(Ty::U, avoid).zip(self.pick(Ty::U, avoid)).map(|(a, b)| Expr::Binary(op, a, b))
            }
            (Ty::U, _) => self.pick(Ty::N, avoid).map(|n| Expr::Proj(1, n)),
            (Ty::B, 1) => {
                let t = if self.rng.gen() { Ty::U } else { Ty::P };
                self.pick(t, avoid).map(|x| Expr::Unary(UnOp::Test, x))
            }
            (Ty::B, 2) => {
                const OPS: [BinOp; 6] = [BinOp::Eq, BinOp::Ne, BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge];
                let op = OPS[self.rng.gen_range(0..OPS.len())];
                self.pick(Ty::U, avoid).zip(self.pick(Ty::U, avoid)).map(|(a, b)| Expr::Binary(op, a, b))
            }
            (Ty::B, _) => {
                if self.rng.gen() {
                    self.pick(Ty::B, avoid).map(|x| Expr::Unary(UnOp::Not, x))
                } else {
                    let op = if self.rng.gen() { BinOp::And } else { BinOp::Or };
                    self.pick(Ty::B, avoid).zip(self.pick(Ty::B, avoid)).map(|(a, b)| Expr::Binary(op, a, b))
                }
            }
            (Ty::P, 1) => self.pick(Ty::P, avoid).map(Expr::Var),
            (Ty::P, 2) => self.pick(Ty::N, avoid).map(|n| Expr::Proj(2, n)),
            (Ty::P, _) => (allow_alloc && self.allocs > 0).then(|| Expr::Alloc(TypeExpr::list())),
            (Ty::N, 1) => self.pick(Ty::N, avoid).map(Expr::Var),
            (Ty::N, _) => self.pick(Ty::U, avoid).zip(self.pick(Ty::P, avoid)).map(|(a, b)| Expr::Pair(a, b)),
        };
        e.unwrap_or(fallback)
    }

    fn invalidate(&mut self, x: &str) {
        self.defs.retain(|y, e| y != x && !e.vars().contains(&x));
    }

    fn random_ty(&mut self) -> Ty {
        [Ty::U, Ty::U, Ty::B, Ty::P, Ty::N][self.rng.gen_range(0..5)]
    }

    fn stmt(&mut self, depth: usize) -> Stmt {
        let none = BTreeSet::new();
        match self.rng.gen_range(0..10) {
            0..=3 => {
                let ty = self.random_ty();
                let e = self.expr(ty, &none, true);
                let x = self.fresh();
                if matches!(e, Expr::Alloc(_)) {
                    self.allocs -= 1;
                    self.nonnull.insert(x.clone());
                } else if let Expr::Var(y) = &e {
                    if self.nonnull.contains(y) {
                        self.nonnull.insert(x.clone());
                    }
                }
                if !matches!(e, Expr::Alloc(_)) {
                    self.defs.insert(x.clone(), e.clone());
                }
                self.vars.insert(x.clone(), ty);
                Stmt::assign(x, e)
            }
            4..=5 => {
                let candidates: Vec<String> = self.vars.keys().filter(|x| !self.nonnull.contains(*x)).cloned().collect();
                if candidates.len() < 3 {
                    return Stmt::skip();
                }
                let x = candidates[self.rng.gen_range(0..candidates.len())].clone();
                let ty = self.vars[&x];
                let e = match self.defs.get(&x) {
                    Some(d) if self.rng.gen_bool(0.7) => d.clone(),
                    _ => self.expr(ty, &BTreeSet::from([x.clone()]), false),
                };
                self.vars.remove(&x);
                self.invalidate(&x);
                Stmt::unassign(x, e)
            }
            6 => {
                let ty = self.random_ty();
                match (self.pick(ty, &none), self.pick(ty, &none)) {
                    (Some(a), Some(b)) if a != b => {
                        let (na, nb) = (self.nonnull.remove(&a), self.nonnull.remove(&b));
                        if na {
                            self.nonnull.insert(b.clone());
                        }
                        if nb {
                            self.nonnull.insert(a.clone());
                        }
                        self.invalidate(&a);
                        self.invalidate(&b);
                        Stmt::swap(a, b)
                    }
                    _ => Stmt::skip(),
                }
            }
            7 => {
                let ptrs: Vec<String> = self.nonnull.iter().cloned().collect();
                match (ptrs.is_empty(), self.pick(Ty::N, &none)) {
                    (false, Some(n)) => {
                        let p = ptrs[self.rng.gen_range(0..ptrs.len())].clone();
                        self.invalidate(&n);
                        Stmt::memswap(p, n)
                    }
                    _ => Stmt::skip(),
                }
            }
            _ if depth < 2 => match self.pick(Ty::B, &none) {
                Some(c) => {
                    let body = self.branch(&BTreeSet::from([c.clone()]), depth + 1);
                    self.invalidate(&c);
                    Stmt::if_(c, body)
                }
                None => Stmt::skip(),
            },
            _ => Stmt::skip(),
        }
    }

    /// A body that leaves the context as it found it and never writes any
    /// variable in `conds`.
    fn branch(&mut self, conds: &BTreeSet<String>, depth: usize) -> Stmt {
        let mut items = Vec::new();
        for _ in 0..self.rng.gen_range(1..4) {
            match self.rng.gen_range(0..4) {
                0 => {
                    let ty = self.random_ty();
                    if let (Some(a), Some(b)) = (self.pick(ty, conds), self.pick(ty, conds)) {
                        let (na, nb) = (self.nonnull.remove(&a), self.nonnull.remove(&b));
                        if na {
                            self.nonnull.insert(b.clone());
                        }
                        if nb {
                            self.nonnull.insert(a.clone());
                        }
                        self.invalidate(&a);
                        self.invalidate(&b);
                        items.push(Stmt::swap(a, b));
                    }
                }
                1 => {
                    let ptrs: Vec<String> = self.nonnull.iter().cloned().collect();
                    if let (false, Some(n)) = (ptrs.is_empty(), self.pick(Ty::N, &BTreeSet::new())) {
                        let p = ptrs[self.rng.gen_range(0..ptrs.len())].clone();
                        self.invalidate(&n);
                        items.push(Stmt::memswap(p, n));
                    }
                }
                2 if depth < 2 => {
                    if let Some(d) = self.pick(Ty::B, conds) {
                        let mut inner_conds = conds.clone();
                        inner_conds.insert(d.clone());
                        let inner = self.branch(&inner_conds, depth + 1);
                        self.invalidate(&d);
                        items.push(Stmt::if_(d, inner));
                    }
                }
                _ => {
                    let ty = self.random_ty();
                    let e = self.expr(ty, &BTreeSet::new(), false);
                    let y = self.fresh();
                    items.push(Stmt::assign(y.clone(), e.clone()));
                    let mut keep = conds.clone();
                    keep.insert(y.clone());
                    keep.extend(e.vars().iter().map(|s| s.to_string()));
                    let ty2 = self.random_ty();
                    if let (Some(a), Some(b)) = (self.pick(ty2, &keep), self.pick(ty2, &keep)) {
                        let (na, nb) = (self.nonnull.remove(&a), self.nonnull.remove(&b));
                        if na {
                            self.nonnull.insert(b.clone());
                        }
                        if nb {
                            self.nonnull.insert(a.clone());
                        }
                        self.invalidate(&a);
                        self.invalidate(&b);
                        items.push(Stmt::swap(a, b));
                    }
                    items.push(Stmt::unassign(y, e));
                }
            }
        }
        Stmt::seq(items)
    }
}

const FUZZ_STATEMENTS: usize = 10_000;

fn is_skip(s: &Stmt) -> bool {
    match &s.kind {
        StmtKind::Skip => true,
        StmtKind::Seq(v) => v.iter().all(is_skip),
        _ => false,
    }
}

fn random_core() -> Outcome {
    let list = TypeExpr::list();
    let init: Vec<(&str, Ty, Value)> = vec![
        ("u0", Ty::U, Value::UInt(3)),
        ("u1", Ty::U, Value::UInt(200)),
        ("b0", Ty::B, Value::Bool(true)),
        ("b1", Ty::B, Value::Bool(false)),
        ("p0", Ty::P, Value::addr(&list, 0)),
        ("n0", Ty::N, Value::pair(Value::UInt(9), Value::addr(&list, 0))),
    ];
    let gamma: Context = init.iter().map(|(x, t, _)| (x.to_string(), t.expr())).collect();
    let phi = FunctionContext::new();
    let (mut accepted, mut rejected, mut finished, mut stuck, mut seed) = (0, 0, 0, 0, 0u64);
    while accepted < FUZZ_STATEMENTS {
        seed += 1;
        let mut g = Gen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            vars: init.iter().map(|(x, t, _)| (x.to_string(), *t)).collect(),
            nonnull: BTreeSet::new(),
            defs: BTreeMap::new(),
            fresh: 0,
            allocs: 6,
        };
        let len = g.rng.gen_range(1..16);
        let s = Stmt::seq((0..len).map(|_| g.stmt(0)).collect());
        let out = match check_stmt_in(&phi, &gamma, None, &s, 8) {
            Ok(out) => out,
            Err(_) => {
                rejected += 1;
                continue;
            }
        };
        accepted += 1;
        let regs = init.iter().map(|(x, _, v)| (x.to_string(), v.clone())).collect();
        let heap = Heap::new(8, &[SectionSpec { block_words: 2, count: 8 }], &PermutationSource::Seeded(seed))
            .map_err(|e| e.to_string())?;
        let opts = RunOptions { k: 8, max_steps: 100_000, check_validity: true };
        let mut m = Machine::new(&s, Direction::Forward, regs, heap, opts).expect_final(out.keys().cloned().collect());
        if let Err(e) = m.check_validity() {
            return Err(format!("seed {seed}: initial state invalid: {e}"));
        }
        match m.run() {
            Ok(()) if m.is_done() && is_skip(&m.residual()) => finished += 1,
            Ok(()) => return Err(format!("seed {seed}: halted with residual {:?}", m.residual())),
            Err(StepError::StuckUnAssign { .. }) => stuck += 1,
            Err(e) => return Err(format!("seed {seed}: {e}")),
        }
    }
    if rejected * 10 > accepted {
        return Err(format!("generator produced {rejected} ill-typed statements for {accepted} well-typed"));
    }
    Ok(format!("{accepted} statements: {finished} reached skip, {stuck} Stuck-UnAssign ({rejected} ill-typed discarded)"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("1 round trips", round_trips),
        ("2 circuit matches interpreter", circuits),
        ("3 history independence", history_independence),
        ("4 hash set is not history independent", hash_not_independent),
        ("5 length growth", length_growth),
        ("6 tree contains growth", tree_growth),
        ("7 complexity classes", table_forms),
        ("8 runtime diagnostics", diagnostics),
        ("9 typing", typing),
        ("10 random core statements", random_core),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let took = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS criterion {name} ({took:.1?}): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name} ({took:.1?}): {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
