//! Core statement to L1 netlist.

use std::collections::{BTreeMap, BTreeSet};

use super::{Arith, Binding, Header, Memory, Netlist, Op, RegId, Register, Role};
use crate::boson::Heap;
use crate::interp::Value;
use crate::syntax::kernel::{BinOp, Expr, Stmt, StmtKind, UnOp};
use crate::syntax::Span;
use crate::transform::CoreProgram;
use crate::types::{TypeExpr, WordKind};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CompileError {
    #[error("{span}: calls must be inlined before compilation")]
    Call { span: Span },
    #[error("{span}: `return` inside a Core statement")]
    Return { span: Span },
    #[error("{span}: `{var}` is not bound")]
    Unbound { var: String, span: Span },
    #[error("{span}: `{var}` is already bound")]
    Bound { var: String, span: Span },
    #[error("{span}: no heap section holds `{ty}`")]
    NoSection { ty: TypeExpr, span: Span },
    #[error("{span}: cannot compile: {message}")]
    Shape { message: String, span: Span },
}

struct Compiler {
    k: u32,
    regs: Vec<Register>,
    mems: Vec<Memory>,
    hp: Vec<RegId>,
    env: BTreeMap<String, (TypeExpr, Vec<RegId>)>,
    instances: BTreeMap<String, usize>,
    params: BTreeMap<String, ()>,
    /// One frame per enclosing `if` body.
    frames: Vec<Frame>,
}

/// Variables bound when an `if` body starts keep their registers for the
/// whole body: with the control off they still hold data, so un-assigning
/// them parks the registers instead of retiring them.
#[derive(Default)]
struct Frame {
    outer: BTreeSet<String>,
    parked: BTreeMap<String, (TypeExpr, Vec<RegId>)>,
}

impl Compiler {
    fn new_regs(&mut self, var: &str, ty: &TypeExpr, role: Role) -> Vec<RegId> {
        let n = self.instances.entry(var.to_string()).or_insert(0);
        let inst = *n;
        *n += 1;
        ty.layout()
            .into_iter()
            .enumerate()
            .map(|(i, w)| {
                let width = match w {
                    WordKind::Word => self.k,
                    WordKind::Bit => 1,
                };
                let name = if inst == 0 { format!("{var}:{i}") } else { format!("{var}:{i}~{inst}") };
                self.regs.push(Register { name, width, role });
                self.regs.len() - 1
            })
            .collect()
    }

    /// Registers parked for `x` by an enclosing body, if their layout fits `ty`.
    fn unpark(&mut self, x: &str, ty: &TypeExpr) -> Option<Vec<RegId>> {
        let j = self.frames.iter().rposition(|f| f.parked.contains_key(x))?;
        let (old, regs) = &self.frames[j].parked[x];
        let widths = |t: &TypeExpr| t.layout();
        if widths(old) != widths(ty) {
            return None;
        }
        let regs = regs.clone();
        self.frames[j].parked.remove(x);
        for f in &mut self.frames[j + 1..] {
            f.outer.insert(x.to_string());
        }
        Some(regs)
    }

    fn lookup(&self, x: &str, span: Span) -> Result<&(TypeExpr, Vec<RegId>), CompileError> {
        self.env.get(x).ok_or_else(|| CompileError::Unbound { var: x.to_string(), span })
    }

    fn one(&self, x: &str, span: Span) -> Result<RegId, CompileError> {
        let (_, r) = self.lookup(x, span)?;
        match r.as_slice() {
            [r] => Ok(*r),
            _ => Err(CompileError::Shape { message: format!("`{x}` is not a single word"), span }),
        }
    }

    fn section(&self, pointee: &TypeExpr, span: Span) -> Result<usize, CompileError> {
        let words = pointee.words().max(1);
        self.mems
            .iter()
            .position(|m| m.words >= words)
            .ok_or_else(|| CompileError::NoSection { ty: pointee.clone(), span })
    }

    fn type_of(&self, e: &Expr, span: Span) -> Result<TypeExpr, CompileError> {
        Ok(match e {
            Expr::Lit(l) => Value::from_literal(l).type_of(),
            Expr::Var(x) => self.lookup(x, span)?.0.clone(),
            Expr::Pair(a, b) => TypeExpr::pair(self.lookup(a, span)?.0.clone(), self.lookup(b, span)?.0.clone()),
            Expr::Proj(i, x) => match self.lookup(x, span)?.0.whnf() {
                TypeExpr::Pair(a, b) => {
                    if *i == 1 {
                        *a
                    } else {
                        *b
                    }
                }
                t => return Err(CompileError::Shape { message: format!("projection from `{t}`"), span }),
            },
            Expr::Unary(..) => TypeExpr::Bool,
            Expr::Binary(op, ..) => match op {
                BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::BitAnd | BinOp::BitOr | BinOp::BitXor | BinOp::Shl | BinOp::Shr => {
                    TypeExpr::UInt
                }
                _ => TypeExpr::Bool,
            },
            Expr::Alloc(t) => TypeExpr::ptr(t.clone()),
            Expr::Call(_) => return Err(CompileError::Call { span }),
        })
    }

    /// Ops XORing the value of `e` into `dst`. Self-inverse.
    fn expr(&self, e: &Expr, dst: &[RegId], span: Span) -> Result<Vec<Op>, CompileError> {
        let copy = |src: &[RegId]| -> Vec<Op> { dst.iter().zip(src).map(|(&d, &s)| Op::Copy { dst: d, src: s }).collect() };
        Ok(match e {
            Expr::Lit(l) => Value::from_literal(l)
                .to_words()
                .into_iter()
                .zip(dst)
                .filter(|(w, _)| *w != 0)
                .map(|(value, &d)| Op::XorConst { dst: d, value })
                .collect(),
            Expr::Var(x) => copy(&self.lookup(x, span)?.1),
            Expr::Pair(a, b) => {
                let mut src = self.lookup(a, span)?.1.clone();
                src.extend(self.lookup(b, span)?.1.iter().copied());
                copy(&src)
            }
            Expr::Proj(i, x) => {
                let (t, regs) = self.lookup(x, span)?;
                let n1 = match t.whnf() {
                    TypeExpr::Pair(a, _) => a.words(),
                    t => return Err(CompileError::Shape { message: format!("projection from `{t}`"), span }),
                };
                if *i == 1 {
                    copy(&regs[..n1])
                } else {
                    copy(&regs[n1..])
                }
            }
            Expr::Unary(UnOp::Not, x) => vec![Op::Not { dst: dst[0], src: self.one(x, span)? }],
            Expr::Unary(UnOp::Test, x) => vec![Op::Test { dst: dst[0], src: self.one(x, span)? }],
            Expr::Binary(op, a, b) => {
                let op = match op {
                    BinOp::And | BinOp::BitAnd => Arith::And,
                    BinOp::Or | BinOp::BitOr => Arith::Or,
                    BinOp::BitXor => Arith::Xor,
                    BinOp::Add => Arith::Add,
                    BinOp::Sub => Arith::Sub,
                    BinOp::Mul => Arith::Mul,
                    BinOp::Eq => Arith::Eq,
                    BinOp::Ne => Arith::Ne,
                    BinOp::Lt => Arith::Lt,
                    BinOp::Le => Arith::Le,
                    BinOp::Gt => Arith::Gt,
                    BinOp::Ge => Arith::Ge,
                    BinOp::Shl => Arith::Shl,
                    BinOp::Shr => Arith::Shr,
                };
                vec![Op::Arith { op, dst: dst[0], a: self.one(a, span)?, b: self.one(b, span)? }]
            }
            Expr::Alloc(_) => unreachable!("handled by the statement"),
            Expr::Call(_) => return Err(CompileError::Call { span }),
        })
    }

    fn stmt(&mut self, s: &Stmt, out: &mut Vec<Op>) -> Result<(), CompileError> {
        let span = s.span;
        match &s.kind {
            StmtKind::Skip => {}
            StmtKind::Seq(v) => {
                for s in v {
                    self.stmt(s, out)?;
                }
            }
            StmtKind::Assign(x, e) => {
                if self.env.contains_key(x) {
                    return Err(CompileError::Bound { var: x.clone(), span });
                }
                let ty = self.type_of(e, span)?;
                let regs = match self.unpark(x, &ty) {
                    Some(regs) => regs,
                    None => {
                        let role = if self.params.contains_key(x) { Role::Program } else { Role::Ancilla };
                        let regs = self.new_regs(x, &ty, role);
                        out.extend(regs.iter().map(|&r| Op::Fresh(r)));
                        regs
                    }
                };
                match e {
                    Expr::Alloc(t) => {
                        let m = self.section(t, span)?;
                        out.push(Op::Swap { a: regs[0], b: self.hp[m] });
                        out.push(Op::Qram { addr: regs[0], data: vec![self.hp[m]], mem: m });
                    }
                    _ => out.extend(self.expr(e, &regs, span)?),
                }
                self.env.insert(x.clone(), (ty, regs));
            }
            StmtKind::UnAssign(x, e) => {
                let (_, regs) = self.lookup(x, span)?.clone();
                match e {
                    Expr::Alloc(t) => {
                        let m = self.section(t, span)?;
                        out.push(Op::Qram { addr: regs[0], data: vec![self.hp[m]], mem: m });
                        out.push(Op::Swap { a: regs[0], b: self.hp[m] });
                    }
                    _ => out.extend(self.expr(e, &regs, span)?),
                }
                let entry = self.env.remove(x).expect("looked up");
                match self.frames.last_mut() {
                    Some(f) if f.outer.contains(x) => {
                        f.parked.insert(x.clone(), entry);
                    }
                    _ => out.extend(regs.iter().map(|&r| Op::Retire(r))),
                }
            }
            StmtKind::Swap(a, b) => {
                let ra = self.lookup(a, span)?.1.clone();
                let rb = self.lookup(b, span)?.1.clone();
                if a != b {
                    out.extend(ra.into_iter().zip(rb).map(|(a, b)| Op::Swap { a, b }));
                }
            }
            StmtKind::MemSwap(p, y) => {
                let (pt, pr) = self.lookup(p, span)?.clone();
                let pointee = match pt.whnf() {
                    TypeExpr::Ptr(t) => *t,
                    t => return Err(CompileError::Shape { message: format!("memory swap through `{t}`"), span }),
                };
                let m = self.section(&pointee, span)?;
                let data = self.lookup(y, span)?.1.clone();
                out.push(Op::Qram { addr: pr[0], data, mem: m });
            }
            StmtKind::If(c, body) => {
                let ctrl = self.one(c, span)?;
                let mut inner = Vec::new();
                self.frames.push(Frame { outer: self.env.keys().cloned().collect(), parked: BTreeMap::new() });
                let r = self.stmt(body, &mut inner);
                let f = self.frames.pop().expect("pushed");
                r?;
                for (x, entry) in f.parked {
                    match self.frames.last_mut() {
                        Some(g) => {
                            g.parked.insert(x, entry);
                        }
                        None => return Err(CompileError::Shape { message: format!("`{x}` is unbound after a branch"), span }),
                    }
                }
                if !inner.is_empty() {
                    out.push(Op::Control { ctrl, body: inner });
                }
            }
            StmtKind::Return(_) => return Err(CompileError::Return { span }),
        }
        Ok(())
    }
}

/// Compile a Core program against a heap layout.
pub fn compile(core: &CoreProgram, heap: &Heap) -> Result<Netlist, CompileError> {
    let k = heap.k;
    let mut c = Compiler {
        k,
        regs: Vec::new(),
        mems: Vec::new(),
        hp: Vec::new(),
        env: BTreeMap::new(),
        instances: BTreeMap::new(),
        frames: Vec::new(),
        params: core.params.iter().map(|p| (p.name.clone(), ())).chain([(core.output.clone(), ())]).collect(),
    };
    for (i, s) in heap.sections.iter().enumerate() {
        c.mems.push(Memory { name: format!("M{i}"), base: s.base, blocks: s.count, words: s.block_words });
        c.regs.push(Register { name: format!("hp{i}"), width: k, role: Role::Heap });
        c.hp.push(c.regs.len() - 1);
    }
    let mut inputs = Vec::new();
    for p in &core.params {
        let regs = c.new_regs(&p.name, &p.ty, Role::Program);
        c.env.insert(p.name.clone(), (p.ty.clone(), regs.clone()));
        inputs.push(Binding { var: p.name.clone(), ty: p.ty.clone(), regs });
    }
    let mut ops = Vec::new();
    c.stmt(&core.body, &mut ops)?;
    let mut outputs = Vec::new();
    for p in &core.params {
        let (ty, regs) = c.lookup(&p.name, core.body.span)?.clone();
        outputs.push(Binding { var: p.name.clone(), ty, regs });
    }
    let (ty, regs) = c.lookup(&core.output, core.body.span)?.clone();
    outputs.push(Binding { var: core.output.clone(), ty, regs });
    Ok(Netlist { header: Header { k, regs: c.regs, mems: c.mems, hp: c.hp, inputs, outputs }, ops })
}

/// Compile a lone statement whose free variables are given, for tests and tools.
pub fn compile_stmt(s: &Stmt, free: &[(String, TypeExpr)], heap: &Heap) -> Result<Netlist, CompileError> {
    let core = CoreProgram {
        params: free.iter().map(|(n, t)| crate::syntax::kernel::Param { name: n.clone(), ty: t.clone() }).collect(),
        ret: TypeExpr::Unit,
        output: "$out".into(),
        body: Stmt::seq(vec![s.clone(), Stmt::assign("$out", Expr::Lit(crate::syntax::kernel::Literal::Unit))]),
    };
    compile(&core, heap)
}
