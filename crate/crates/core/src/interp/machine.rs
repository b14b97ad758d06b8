//! Small-step execution of kernel statements, forwards and backwards.
//!
//! The residual statement is kept as a stack of frames over shared code.
//! A frame marked `rev` runs its items right to left with every atomic
//! statement reversed, which is how both the reverse rules and reverse
//! calls are realised.

use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;
use std::sync::Arc;

use super::Value;
use crate::boson::{Heap, HeapError};
use crate::syntax::kernel::{BinOp, Call, Expr, KernelProgram, Stmt, StmtKind, UnOp};
use crate::syntax::Span;
use crate::transform::{call_prefix, expand_call, invert, CoreProgram, Expansion};
use crate::types::{check_stmt_in, default_value, Context, FunctionContext, TypeExpr};

pub type Regs = BTreeMap<String, Value>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Reverse,
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub k: u32,
    pub max_steps: u64,
    /// Type-check the residual statement against the registers after every step.
    pub check_validity: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { k: 8, max_steps: 50_000_000, check_validity: false }
    }
}

/// Per-kind step counts and resource peaks.
#[derive(Clone, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct Stats {
    pub steps: u64,
    pub skip: u64,
    pub assign: u64,
    pub unassign: u64,
    pub swap: u64,
    pub memswap: u64,
    pub branch: u64,
    pub allocs: u64,
    pub deallocs: u64,
    pub calls: u64,
    pub peak_regs: usize,
}

/// Non-fatal runtime observation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub span: Span,
    pub message: String,
}

#[derive(Clone, Debug, thiserror::Error)]
pub enum StepError {
    #[error("{span}: Stuck-UnAssign: `{var}` holds {held} but the expression evaluates to {expected}")]
    StuckUnAssign { var: String, expected: Value, held: Value, span: Span },
    #[error("Leak: {}", leak_message(vars, blocks, sites))]
    Leak { vars: Vec<String>, blocks: Vec<u64>, sites: Vec<Span> },
    #[error("{span}: OutOfMemory: no free {block_words}-word block")]
    OutOfMemory { block_words: usize, span: Span },
    #[error("{span}: {source}")]
    Heap { source: HeapError, span: Span },
    #[error("StepLimitExceeded: more than {0} steps")]
    StepLimit(u64),
    #[error("{span}: invalid machine state: {message}")]
    Invalid { message: String, span: Span },
}

fn leak_message(vars: &[String], blocks: &[u64], sites: &[Span]) -> String {
    let mut parts = Vec::new();
    if !vars.is_empty() {
        parts.push(format!("registers still bound: {}", vars.join(", ")));
    }
    if !blocks.is_empty() {
        let b: Vec<String> = blocks
            .iter()
            .zip(sites.iter().map(Some).chain(std::iter::repeat(None)))
            .map(|(a, s)| match s {
                Some(s) => format!("ptr:{a} (allocated at {s})"),
                None => format!("ptr:{a}"),
            })
            .collect();
        parts.push(format!("unreachable heap blocks: {}", b.join(", ")));
    }
    parts.join("; ")
}

impl StepError {
    pub fn kind(&self) -> &'static str {
        match self {
            StepError::StuckUnAssign { .. } => "Stuck-UnAssign",
            StepError::Leak { .. } => "Leak",
            StepError::OutOfMemory { .. } => "OutOfMemory",
            StepError::Heap { source: HeapError::DeallocNonZero { .. }, .. } => "DeallocNonZero",
            StepError::Heap { .. } => "Heap",
            StepError::StepLimit(_) => "StepLimitExceeded",
            StepError::Invalid { .. } => "Invalid",
        }
    }

    pub fn span(&self) -> Option<Span> {
        match self {
            StepError::StuckUnAssign { span, .. }
            | StepError::OutOfMemory { span, .. }
            | StepError::Heap { span, .. }
            | StepError::Invalid { span, .. } => Some(*span),
            _ => None,
        }
    }
}

/// Code shared between frames: sequences flattened, `if` bodies pre-built.
#[derive(Clone, Debug)]
enum Code {
    Atom(Stmt),
    If { cond: String, body: Rc<[Code]>, stmt: Rc<Stmt> },
}

fn compile(s: &Stmt, out: &mut Vec<Code>) {
    match &s.kind {
        StmtKind::Seq(v) => v.iter().for_each(|s| compile(s, out)),
        StmtKind::If(c, body) => {
            let mut inner = Vec::new();
            compile(body, &mut inner);
            out.push(Code::If { cond: c.clone(), body: inner.into(), stmt: Rc::new(s.clone()) });
        }
        _ => out.push(Code::Atom(s.clone())),
    }
}

fn compile_all(items: &[Stmt]) -> Rc<[Code]> {
    let mut out = Vec::new();
    for s in items {
        compile(s, &mut out);
    }
    out.into()
}

#[derive(Clone, Debug)]
struct Frame {
    items: Rc<[Code]>,
    /// Forward: next index to run. Reverse: one past the next index.
    pos: usize,
    rev: bool,
    /// Name prefix for calls made from this frame.
    prefix: Rc<str>,
}

/// A machine state: residual statement, registers, heap.
#[derive(Clone, Debug)]
pub struct Machine<'p> {
    pub regs: Regs,
    pub heap: Heap,
    pub stats: Stats,
    pub diagnostics: Vec<Diagnostic>,
    frames: Vec<Frame>,
    program: Option<&'p KernelProgram>,
    opts: RunOptions,
    mask: u64,
    sites: usize,
    /// Where each currently allocated block was handed out.
    alloc_sites: BTreeMap<u64, Span>,
    /// Variables the residual statement must leave bound.
    expect_final: Option<BTreeSet<String>>,
}

fn invalid(message: impl Into<String>, span: Span) -> StepError {
    StepError::Invalid { message: message.into(), span }
}

impl<'p> Machine<'p> {
    pub fn new(stmt: &Stmt, dir: Direction, regs: Regs, heap: Heap, opts: RunOptions) -> Machine<'p> {
        let items = compile_all(std::slice::from_ref(stmt));
        let rev = dir == Direction::Reverse;
        let pos = if rev { items.len() } else { 0 };
        let mask = if opts.k >= 64 { u64::MAX } else { (1u64 << opts.k) - 1 };
        let mut m = Machine {
            regs,
            heap,
            stats: Stats::default(),
            diagnostics: Vec::new(),
            frames: vec![Frame { items, pos, rev, prefix: Rc::from("") }],
            program: None,
            opts,
            mask,
            sites: 0,
            alloc_sites: BTreeMap::new(),
            expect_final: None,
        };
        m.stats.peak_regs = m.regs.len();
        m
    }

    /// Allow calls, expanding them against `p` as they are reached.
    pub fn with_program(mut self, p: &'p KernelProgram) -> Machine<'p> {
        self.program = Some(p);
        self
    }

    /// Record which variables must remain once the statement has run, for validity checks.
    pub fn expect_final(mut self, vars: BTreeSet<String>) -> Machine<'p> {
        self.expect_final = Some(vars);
        self
    }

    pub fn is_done(&self) -> bool {
        self.frames.iter().all(|f| if f.rev { f.pos == 0 } else { f.pos == f.items.len() })
    }

    /// The residual statement, written in forward form.
    pub fn residual(&self) -> Stmt {
        fn code_stmt(c: &Code) -> Stmt {
            match c {
                Code::Atom(s) => s.clone(),
                Code::If { stmt, .. } => (**stmt).clone(),
            }
        }
        let mut out = Vec::new();
        for f in self.frames.iter().rev() {
            if f.rev {
                out.extend(f.items[..f.pos].iter().rev().map(|c| invert(&code_stmt(c))));
            } else {
                out.extend(f.items[f.pos..].iter().map(code_stmt));
            }
        }
        if out.is_empty() {
            Stmt::skip()
        } else {
            Stmt::seq(out)
        }
    }

    /// Run one atomic step. Returns `false` once the statement is exhausted.
    pub fn step(&mut self) -> Result<bool, StepError> {
        loop {
            let top = match self.frames.last_mut() {
                Some(t) => t,
                None => return Ok(false),
            };
            let code = if top.rev {
                if top.pos == 0 {
                    None
                } else {
                    top.pos -= 1;
                    Some(top.items[top.pos].clone())
                }
            } else if top.pos == top.items.len() {
                None
            } else {
                top.pos += 1;
                Some(top.items[top.pos - 1].clone())
            };
            let rev = top.rev;
            let prefix = top.prefix.clone();
            match code {
                None => {
                    if self.frames.len() == 1 {
                        return Ok(false);
                    }
                    self.frames.pop();
                }
                Some(Code::If { cond, body, stmt }) => {
                    let c = self.bool_of(&cond, stmt.span)?;
                    self.count(|s| s.branch += 1)?;
                    if c {
                        let pos = if rev { body.len() } else { 0 };
                        self.frames.push(Frame { items: body, pos, rev, prefix });
                    }
                    return self.after_step();
                }
                Some(Code::Atom(s)) => {
                    let counted = self.exec(&s, rev, &prefix)?;
                    if counted {
                        return self.after_step();
                    }
                }
            }
        }
    }

    fn count(&mut self, f: impl FnOnce(&mut Stats)) -> Result<(), StepError> {
        self.stats.steps += 1;
        f(&mut self.stats);
        if self.stats.steps > self.opts.max_steps {
            return Err(StepError::StepLimit(self.opts.max_steps));
        }
        Ok(())
    }

    fn after_step(&mut self) -> Result<bool, StepError> {
        self.stats.peak_regs = self.stats.peak_regs.max(self.regs.len());
        if self.opts.check_validity {
            self.check_validity()?;
        }
        Ok(true)
    }

    /// Validity: the residual statement type-checks under the register types
    /// and ends with the expected registers, and the free lists are intact.
    pub fn check_validity(&self) -> Result<(), StepError> {
        let gamma: Context = self.regs.iter().map(|(x, v)| (x.clone(), v.type_of())).collect();
        let phi = FunctionContext::new();
        let residual = self.residual();
        let out = check_stmt_in(&phi, &gamma, None, &residual, self.opts.k)
            .map_err(|e| invalid(format!("residual statement does not check: {e}"), e.span))?;
        if let Some(want) = &self.expect_final {
            let got: BTreeSet<String> = out.keys().cloned().collect();
            if &got != want {
                return Err(invalid(
                    format!("residual statement would leave {:?}, expected {:?}", got, want),
                    Span::default(),
                ));
            }
        }
        self.heap.check_free_lists().map_err(|m| invalid(m, Span::default()))
    }

    /// Run to completion.
    pub fn run(&mut self) -> Result<(), StepError> {
        while self.step()? {}
        Ok(())
    }

    fn get(&self, x: &str, span: Span) -> Result<&Value, StepError> {
        self.regs.get(x).ok_or_else(|| invalid(format!("`{x}` is not bound"), span))
    }

    fn bool_of(&self, x: &str, span: Span) -> Result<bool, StepError> {
        self.get(x, span)?.as_bool().ok_or_else(|| invalid(format!("`{x}` is not a bool"), span))
    }

    fn uint_of(&self, x: &str, span: Span) -> Result<u64, StepError> {
        self.get(x, span)?.as_uint().ok_or_else(|| invalid(format!("`{x}` is not a uint"), span))
    }

    /// Forward evaluation of a non-call, non-alloc expression.
    pub fn eval(&self, e: &Expr, span: Span) -> Result<Value, StepError> {
        let k = self.opts.k;
        Ok(match e {
            Expr::Lit(l) => Value::from_literal(l),
            Expr::Var(x) => self.get(x, span)?.clone(),
            Expr::Pair(a, b) => Value::pair(self.get(a, span)?.clone(), self.get(b, span)?.clone()),
            Expr::Proj(i, x) => {
                let v = self.get(x, span)?;
                let part = if *i == 1 { v.fst() } else { v.snd() };
                part.cloned().ok_or_else(|| invalid(format!("`{x}` is not a pair"), span))?
            }
            Expr::Unary(UnOp::Not, x) => Value::Bool(!self.bool_of(x, span)?),
            Expr::Unary(UnOp::Test, x) => match self.get(x, span)? {
                Value::UInt(n) => Value::Bool(*n == 0),
                Value::Null(_) => Value::Bool(true),
                Value::Ptr(..) => Value::Bool(false),
                _ => return Err(invalid(format!("`test {x}` needs a uint or pointer"), span)),
            },
            Expr::Binary(op, a, b) => match op {
                BinOp::And => Value::Bool(self.bool_of(a, span)? && self.bool_of(b, span)?),
                BinOp::Or => Value::Bool(self.bool_of(a, span)? || self.bool_of(b, span)?),
                BinOp::Eq => Value::Bool(self.get(a, span)? == self.get(b, span)?),
                BinOp::Ne => Value::Bool(self.get(a, span)? != self.get(b, span)?),
                _ => {
                    let x = self.uint_of(a, span)?;
                    let y = self.uint_of(b, span)?;
                    let m = self.mask;
                    match op {
                        BinOp::Add => Value::UInt(x.wrapping_add(y) & m),
                        BinOp::Sub => Value::UInt(x.wrapping_sub(y) & m),
                        BinOp::Mul => Value::UInt(x.wrapping_mul(y) & m),
                        BinOp::BitAnd => Value::UInt(x & y),
                        BinOp::BitOr => Value::UInt(x | y),
                        BinOp::BitXor => Value::UInt(x ^ y),
                        BinOp::Shl => Value::UInt(if y >= k as u64 { 0 } else { (x << y) & m }),
                        BinOp::Shr => Value::UInt(if y >= k as u64 { 0 } else { x >> y }),
                        BinOp::Lt => Value::Bool(x < y),
                        BinOp::Le => Value::Bool(x <= y),
                        BinOp::Gt => Value::Bool(x > y),
                        BinOp::Ge => Value::Bool(x >= y),
                        BinOp::And | BinOp::Or | BinOp::Eq | BinOp::Ne => unreachable!(),
                    }
                }
            },
            Expr::Alloc(_) | Expr::Call(_) => return Err(invalid("allocation or call evaluated as a value", span)),
        })
    }

    /// Execute one atomic statement. Returns whether it counts as a step.
    fn exec(&mut self, s: &Stmt, rev: bool, prefix: &Rc<str>) -> Result<bool, StepError> {
        let span = s.span;
        let (assign, x, e) = match &s.kind {
            StmtKind::Assign(x, e) => (!rev, x, e),
            StmtKind::UnAssign(x, e) => (rev, x, e),
            StmtKind::Skip => {
                self.count(|s| s.skip += 1)?;
                return Ok(true);
            }
            StmtKind::Swap(a, b) => {
                self.get(a, span)?;
                self.get(b, span)?;
                if a != b {
                    let va = self.regs.remove(a).expect("checked");
                    let vb = self.regs.insert(b.clone(), va).expect("checked");
                    self.regs.insert(a.clone(), vb);
                }
                self.count(|s| s.swap += 1)?;
                return Ok(true);
            }
            StmtKind::MemSwap(p, y) => {
                self.memswap(p, y, span)?;
                self.count(|s| s.memswap += 1)?;
                return Ok(true);
            }
            StmtKind::Return(_) => return Err(invalid("`return` inside a statement", span)),
            StmtKind::Seq(_) | StmtKind::If(..) => unreachable!("compiled away"),
        };
        if let Expr::Call(call) = e {
            return self.call(x, call, assign, prefix, span);
        }
        if assign {
            if self.regs.contains_key(x) {
                return Err(invalid(format!("`{x}` is already bound"), span));
            }
            let v = match e {
                Expr::Alloc(t) => {
                    let sec = self.heap.section_for(t).map_err(|source| StepError::Heap { source, span })?;
                    let a = self.heap.alloc(sec).map_err(|source| match source {
                        HeapError::OutOfMemory { block_words } => StepError::OutOfMemory { block_words, span },
                        source => StepError::Heap { source, span },
                    })?;
                    self.stats.allocs += 1;
                    self.alloc_sites.insert(a, span);
                    Value::Ptr(Arc::new(t.clone()), a)
                }
                _ => self.eval(e, span)?,
            };
            self.regs.insert(x.clone(), v);
            self.count(|s| s.assign += 1)?;
        } else {
            let held = self.get(x, span)?.clone();
            match e {
                Expr::Alloc(t) => {
                    let sec = self.heap.section_for(t).map_err(|source| StepError::Heap { source, span })?;
                    let a = held.as_addr().ok_or_else(|| invalid(format!("`{x}` is not a pointer"), span))?;
                    self.heap.dealloc(sec, a).map_err(|source| StepError::Heap { source, span })?;
                    self.stats.deallocs += 1;
                    self.alloc_sites.remove(&a);
                }
                _ => {
                    let expected = self.eval(e, span)?;
                    if expected != held {
                        return Err(StepError::StuckUnAssign { var: x.clone(), expected, held, span });
                    }
                }
            }
            self.regs.remove(x);
            self.count(|s| s.unassign += 1)?;
        }
        Ok(true)
    }

    fn memswap(&mut self, p: &str, y: &str, span: Span) -> Result<(), StepError> {
        let addr = self.get(p, span)?.as_addr().ok_or_else(|| invalid(format!("`{p}` is not a pointer"), span))?;
        let yv = self.get(y, span)?.clone();
        if addr == 0 {
            self.diagnostics.push(Diagnostic { span, message: format!("memory swap through null `{p}` ignored") });
            return Ok(());
        }
        if self.heap.section_of(addr).is_none() {
            self.diagnostics.push(Diagnostic { span, message: format!("memory swap at unbacked address {addr} ignored") });
            return Ok(());
        }
        if self.heap.is_free(addr) {
            self.diagnostics.push(Diagnostic { span, message: format!("memory swap at free block {addr}") });
        }
        let words = yv.to_words();
        let block = self.heap.block_mut(addr).expect("backed address");
        if words.len() > block.len() {
            return Err(invalid(
                format!("`{y}` has {} words but block {addr} holds {}", words.len(), block.len()),
                span,
            ));
        }
        let old: Vec<u64> = block[..words.len()].to_vec();
        block[..words.len()].copy_from_slice(&words);
        let ty = yv.type_of();
        self.regs.insert(y.to_string(), Value::from_words(&ty, &old));
        Ok(())
    }

    fn call(&mut self, x: &str, call: &Call, assign: bool, prefix: &Rc<str>, span: Span) -> Result<bool, StepError> {
        let p = self.program.ok_or_else(|| invalid(format!("call to `{}` in a call-free statement", call.func), span))?;
        self.sites += 1;
        let inner = call_prefix(prefix, &call.func, self.sites);
        let exp = expand_call(p, call, x, &inner).map_err(|e| invalid(e.to_string(), span))?;
        self.stats.calls += 1;
        match exp {
            Expansion::Default(l) => {
                let s = if assign {
                    Stmt::at(StmtKind::Assign(x.to_string(), Expr::Lit(l)), span)
                } else {
                    Stmt::at(StmtKind::UnAssign(x.to_string(), Expr::Lit(l)), span)
                };
                self.exec(&s, false, prefix)
            }
            Expansion::Body(items) => {
                if assign && self.regs.contains_key(x) {
                    return Err(invalid(format!("`{x}` is already bound"), span));
                }
                let items = compile_all(&items);
                let rev = !assign;
                let pos = if rev { items.len() } else { 0 };
                self.frames.push(Frame { items, pos, rev, prefix: Rc::from(inner.as_str()) });
                Ok(false)
            }
        }
    }
}

/// Result of running a program to completion.
#[derive(Clone, Debug)]
pub struct FinalState {
    pub output: Value,
    /// Parameters after the run.
    pub params: Vec<Value>,
    pub heap: Heap,
    pub stats: Stats,
    pub diagnostics: Vec<Diagnostic>,
}

/// Heap blocks reachable from the given values.
pub fn reachable(heap: &Heap, roots: &[&Value]) -> BTreeSet<u64> {
    fn visit(heap: &Heap, v: &Value, seen: &mut BTreeSet<u64>) {
        match v {
            Value::Pair(a, b) => {
                visit(heap, a, seen);
                visit(heap, b, seen);
            }
            Value::Ptr(t, a)
                if seen.insert(*a) => {
                    if let Some(block) = heap.block(*a) {
                        let inner = Value::from_words(t, block);
                        visit(heap, &inner, seen);
                    }
                }
            _ => {}
        }
    }
    let mut seen = BTreeSet::new();
    for v in roots {
        visit(heap, v, &mut seen);
    }
    seen
}

/// Leak check: exactly `keep` remain bound and every allocated block is reachable from them.
pub fn check_leaks(regs: &Regs, heap: &Heap, keep: &BTreeSet<String>) -> Result<(), StepError> {
    let extra: Vec<String> = regs.keys().filter(|x| !keep.contains(*x)).cloned().collect();
    let roots: Vec<&Value> = regs.values().collect();
    let live = reachable(heap, &roots);
    let lost: Vec<u64> = heap.allocated().into_iter().filter(|a| !live.contains(a)).collect();
    if extra.is_empty() && lost.is_empty() {
        Ok(())
    } else {
        Err(StepError::Leak { vars: extra, blocks: lost, sites: Vec::new() })
    }
}

fn bind_params(params: &[crate::syntax::kernel::Param], inputs: Vec<Value>) -> Result<Regs, StepError> {
    if params.len() != inputs.len() {
        return Err(invalid(format!("expected {} inputs, got {}", params.len(), inputs.len()), Span::default()));
    }
    Ok(params.iter().map(|p| p.name.clone()).zip(inputs).collect())
}

fn finish(m: Machine<'_>, params: &[crate::syntax::kernel::Param], output: Option<&str>) -> Result<FinalState, StepError> {
    let mut keep: BTreeSet<String> = params.iter().map(|p| p.name.clone()).collect();
    if let Some(o) = output {
        keep.insert(o.to_string());
    }
    check_leaks(&m.regs, &m.heap, &keep).map_err(|e| match e {
        StepError::Leak { vars, blocks, .. } => {
            let sites = blocks.iter().map(|a| m.alloc_sites.get(a).copied().unwrap_or_default()).collect();
            StepError::Leak { vars, blocks, sites }
        }
        e => e,
    })?;
    let mut regs = m.regs;
    let out = match output {
        Some(o) => regs.remove(o).ok_or_else(|| invalid(format!("output `{o}` is not bound"), Span::default()))?,
        None => Value::Unit,
    };
    let params = params.iter().map(|p| regs.remove(&p.name).expect("kept")).collect();
    Ok(FinalState { output: out, params, heap: m.heap, stats: m.stats, diagnostics: m.diagnostics })
}

/// Run a Core program forwards.
pub fn run_core(core: &CoreProgram, inputs: Vec<Value>, heap: Heap, opts: &RunOptions) -> Result<FinalState, StepError> {
    let regs = bind_params(&core.params, inputs)?;
    let mut keep: BTreeSet<String> = core.params.iter().map(|p| p.name.clone()).collect();
    keep.insert(core.output.clone());
    let mut m = Machine::new(&core.body, Direction::Forward, regs, heap, opts.clone()).expect_final(keep);
    if opts.check_validity {
        m.check_validity()?;
    }
    m.run()?;
    finish(m, &core.params, Some(&core.output))
}

/// Run a Core program backwards from its final parameters and output.
pub fn run_core_reverse(
    core: &CoreProgram,
    params: Vec<Value>,
    output: Value,
    heap: Heap,
    opts: &RunOptions,
) -> Result<FinalState, StepError> {
    let mut regs = bind_params(&core.params, params)?;
    if regs.insert(core.output.clone(), output).is_some() {
        return Err(invalid("output register shadows a parameter", Span::default()));
    }
    let keep: BTreeSet<String> = core.params.iter().map(|p| p.name.clone()).collect();
    let mut m = Machine::new(&core.body, Direction::Reverse, regs, heap, opts.clone()).expect_final(keep);
    m.run()?;
    finish(m, &core.params, None)
}

/// Run the inverted program forwards: it starts from the final parameters
/// and output and ends with only the parameters bound.
pub fn run_core_inverse(
    core: &CoreProgram,
    params: Vec<Value>,
    output: Value,
    heap: Heap,
    opts: &RunOptions,
) -> Result<FinalState, StepError> {
    let mut regs = bind_params(&core.params, params)?;
    if regs.insert(core.output.clone(), output).is_some() {
        return Err(invalid("output register shadows a parameter", Span::default()));
    }
    let keep: BTreeSet<String> = core.params.iter().map(|p| p.name.clone()).collect();
    let body = core.inverse_body();
    let mut m = Machine::new(&body, Direction::Forward, regs, heap, opts.clone()).expect_final(keep);
    m.run()?;
    finish(m, &core.params, None)
}

/// Run `main` directly, expanding calls as they are reached.
pub fn run_with_calls(p: &KernelProgram, inputs: Vec<Value>, heap: Heap, opts: &RunOptions) -> Result<FinalState, StepError> {
    let main = p.main().ok_or_else(|| invalid("program has no `main`", Span::default()))?;
    let (items, ret) = main.split_return();
    let ret = ret.ok_or_else(|| invalid("`main` has no return", Span::default()))?;
    let regs = bind_params(&main.params, inputs)?;
    let body = Stmt::seq(items);
    let mut m = Machine::new(&body, Direction::Forward, regs, heap, RunOptions { check_validity: false, ..opts.clone() })
        .with_program(p);
    m.run()?;
    finish(m, &main.params, Some(&ret))
}

/// Default value of a type, for callers building inputs.
pub fn default_of(t: &TypeExpr) -> Value {
    default_value(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boson::{PermutationSource, SectionSpec};
    use crate::pipeline::core_source;

    const LIST: &str = "type list = (uint, ptr<list>);
        fun push_front(l: ptr<list>, x: uint) {
          let head <- alloc<list>;
          l <-> head;
          let node <- (x, head);
          let head -> node.2;
          *l <-> node;
          let node -> default<list>;
          return ();
        }
        fun pop_front(l: ptr<list>) -> uint {
          let node <- default<list>;
          *l <-> node;
          let head <- node.2;
          let x <- node.1;
          let node -> (x, head);
          l <-> head;
          let head -> alloc<list>;
          return x;
        }";

    fn heap() -> Heap {
        Heap::new(8, &[SectionSpec { block_words: 2, count: 6 }], &PermutationSource::Identity).unwrap()
    }

    fn list_ty() -> TypeExpr {
        TypeExpr::list()
    }

    fn build(heap: &mut Heap, xs: &[u64]) -> Value {
        let mut next = 0;
        for &x in xs.iter().rev() {
            let a = heap.alloc(0).unwrap();
            heap.block_mut(a).unwrap().copy_from_slice(&[x, next]);
            next = a;
        }
        Value::addr(&list_ty(), next)
    }

    fn read(heap: &Heap, l: &Value) -> Vec<u64> {
        let mut out = Vec::new();
        let mut a = l.as_addr().unwrap();
        while a != 0 {
            let b = heap.block(a).unwrap();
            out.push(b[0]);
            a = b[1];
        }
        out
    }

    fn opts() -> RunOptions {
        RunOptions { check_validity: true, ..RunOptions::default() }
    }

    #[test]
    fn push_front_then_reverse_restores_state() {
        let main = "fun main(l: ptr<list>, x: uint) { let r <- push_front(l, x); return r; }";
        let (_, core) = core_source(&[LIST], main, 8).unwrap();
        let mut h = heap();
        let l = build(&mut h, &[1, 2]);
        let before = h.clone();
        let fin = run_core(&core, vec![l.clone(), Value::UInt(6)], h, &opts()).unwrap();
        assert_eq!(read(&fin.heap, &fin.params[0]), vec![6, 1, 2]);
        assert_eq!(fin.stats.allocs, 1);
        let back = run_core_reverse(&core, fin.params.clone(), fin.output, fin.heap, &opts()).unwrap();
        assert_eq!(back.params, vec![l, Value::UInt(6)]);
        assert_eq!(back.heap, before);
    }

    #[test]
    fn pop_front_returns_head() {
        let main = "fun main(l: ptr<list>) -> uint { let r <- pop_front(l); return r; }";
        let (_, core) = core_source(&[LIST], main, 8).unwrap();
        let mut h = heap();
        let l = build(&mut h, &[6, 1, 2]);
        let fin = run_core(&core, vec![l], h, &opts()).unwrap();
        assert_eq!(fin.output, Value::UInt(6));
        assert_eq!(read(&fin.heap, &fin.params[0]), vec![1, 2]);
    }

    #[test]
    fn call_aware_run_matches_inlined_run() {
        let main = "fun main(l: ptr<list>, x: uint) { let r <- push_front(l, x); return r; }";
        let (c, core) = core_source(&[LIST], main, 8).unwrap();
        let mut h = heap();
        let l = build(&mut h, &[3]);
        let a = run_core(&core, vec![l.clone(), Value::UInt(4)], h.clone(), &opts()).unwrap();
        let b = run_with_calls(&c.kernel, vec![l, Value::UInt(4)], h, &opts()).unwrap();
        assert_eq!(a.heap, b.heap);
        assert_eq!(a.params, b.params);
        assert_eq!(a.stats.steps, b.stats.steps);
    }

    #[test]
    fn wrong_unassign_is_stuck_with_location() {
        let src = "fun main(x: uint) -> uint {\n let y <- x + 1;\n let y -> x + 2;\n let z <- x;\n return z; }";
        let (_, core) = core_source(&[], src, 8).unwrap();
        let err = run_core(&core, vec![Value::UInt(3)], heap(), &opts()).unwrap_err();
        match err {
            StepError::StuckUnAssign { var, expected, held, span } => {
                assert_eq!(var, "y");
                assert_eq!((expected, held), (Value::UInt(5), Value::UInt(4)));
                assert_eq!(span.line, 3);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unreachable_block_is_a_leak() {
        let src = "type loop = ptr<loop>;
            fun main(x: uint) -> uint {
              let p <- alloc<loop>;
              *p <-> p;
              let p -> null;
              let r <- x;
              return r;
            }";
        let (_, core) = core_source(&[], src, 8).unwrap();
        let err = run_core(&core, vec![Value::UInt(3)], heap(), &opts()).unwrap_err();
        match err {
            StepError::Leak { vars, blocks, sites } => {
                assert!(vars.is_empty());
                assert_eq!(blocks, vec![1]);
                assert_eq!(sites[0].line, 3);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn arithmetic_wraps_and_null_swap_is_ignored() {
        let mut regs = Regs::new();
        regs.insert("a".into(), Value::UInt(200));
        regs.insert("b".into(), Value::UInt(100));
        let s = Stmt::assign("c", Expr::Binary(BinOp::Add, "a".into(), "b".into()));
        let mut m = Machine::new(&s, Direction::Forward, regs, heap(), RunOptions::default());
        m.run().unwrap();
        assert_eq!(m.regs["c"], Value::UInt(44));

        let mut regs = Regs::new();
        regs.insert("p".into(), Value::addr(&list_ty(), 0));
        regs.insert("y".into(), Value::UInt(5));
        let s = Stmt::memswap("p", "y");
        let mut m = Machine::new(&s, Direction::Forward, regs.clone(), heap(), RunOptions::default());
        m.run().unwrap();
        assert_eq!(m.regs, regs);
        assert_eq!(m.diagnostics.len(), 1);
    }

    #[test]
    fn reverse_assign_removes_and_skip_is_one_step() {
        let mut regs = Regs::new();
        regs.insert("x".into(), Value::UInt(5));
        let s = Stmt::assign("x", Expr::Lit(crate::syntax::kernel::Literal::Num(5)));
        let mut m = Machine::new(&s, Direction::Reverse, regs, heap(), RunOptions::default());
        m.run().unwrap();
        assert!(m.regs.is_empty());
        let mut m = Machine::new(&Stmt::skip(), Direction::Forward, Regs::new(), heap(), RunOptions::default());
        m.run().unwrap();
        assert_eq!(m.stats.steps, 1);
    }
}
