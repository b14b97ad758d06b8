//! Lowering from the surface AST to kernel statements.
//!
//! Handles type names, `with`/`do`, `if`/`else`, nested expressions,
//! patterns, `default<τ>` and comparisons against `null`.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::{Dir, Item, Pattern, SExpr, SExprKind, SFun, SStmt, SurfaceProgram};
use super::kernel::{BinOp, Call, Expr, FunDecl, KernelProgram, Literal, Param, Stmt, StmtKind, TypeDecl, UnOp};
use super::{Span, FRESH_PREFIX};
use crate::transform::{invert, invert_all};
use crate::types::{default_literal, TypeExpr};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum DesugarError {
    #[error("{span}: variable `{name}` is bound twice in one pattern")]
    DuplicateBinding { name: String, span: Span },
    #[error("{span}: unknown type `{name}`")]
    UnknownType { name: String, span: Span },
    #[error("{span}: type `{name}` is declared twice")]
    DuplicateType { name: String, span: Span },
    #[error("{span}: call to `{func}` must be the whole right-hand side of a `let`")]
    NestedCall { func: String, span: Span },
    #[error("{span}: arguments of `{func}` must be variables")]
    CallArgument { func: String, span: Span },
    #[error("{span}: branches of `if`/`else` disagree on {detail}")]
    BranchMismatch { detail: String, span: Span },
}

impl DesugarError {
    pub fn span(&self) -> Span {
        match self {
            DesugarError::DuplicateBinding { span, .. }
            | DesugarError::UnknownType { span, .. }
            | DesugarError::DuplicateType { span, .. }
            | DesugarError::NestedCall { span, .. }
            | DesugarError::CallArgument { span, .. }
            | DesugarError::BranchMismatch { span, .. } => *span,
        }
    }
}

pub fn desugar(p: &SurfaceProgram) -> Result<KernelProgram, DesugarError> {
    let mut types: BTreeMap<String, TypeExpr> = BTreeMap::new();
    let mut out = KernelProgram::default();
    for item in &p.items {
        match item {
            Item::Type(td) => {
                if types.contains_key(&td.name) {
                    return Err(DesugarError::DuplicateType { name: td.name.clone(), span: td.span });
                }
                let body = resolve(&types, &td.ty, Some(&td.name), td.span)?;
                let ty = if body.free_vars().contains(&td.name) { TypeExpr::ind(td.name.clone(), body) } else { body };
                types.insert(td.name.clone(), ty.clone());
                out.types.push(TypeDecl { name: td.name.clone(), ty });
            }
            Item::Fun(f) => out.funcs.push(Lower::new(&types).function(f)?),
        }
    }
    Ok(out)
}

fn resolve(
    types: &BTreeMap<String, TypeExpr>,
    t: &TypeExpr,
    this: Option<&str>,
    span: Span,
) -> Result<TypeExpr, DesugarError> {
    Ok(match t {
        TypeExpr::Var(name) if Some(name.as_str()) == this => t.clone(),
        TypeExpr::Var(name) => match types.get(name) {
            Some(r) => r.clone(),
            None => return Err(DesugarError::UnknownType { name: name.clone(), span }),
        },
        TypeExpr::Pair(a, b) => TypeExpr::pair(resolve(types, a, this, span)?, resolve(types, b, this, span)?),
        TypeExpr::Ptr(a) => TypeExpr::ptr(resolve(types, a, this, span)?),
        TypeExpr::Ind(v, body) => TypeExpr::ind(v.clone(), resolve(types, body, this, span)?),
        _ => t.clone(),
    })
}

struct Lower<'a> {
    types: &'a BTreeMap<String, TypeExpr>,
    fresh: u32,
    hole: u32,
}

fn lit(l: Literal) -> Expr {
    Expr::Lit(l)
}

impl<'a> Lower<'a> {
    fn new(types: &'a BTreeMap<String, TypeExpr>) -> Lower<'a> {
        Lower { types, fresh: 0, hole: 0 }
    }

    fn fresh(&mut self, hint: &str) -> String {
        self.fresh += 1;
        format!("{FRESH_PREFIX}{hint}{}", self.fresh)
    }

    fn hole(&mut self) -> TypeExpr {
        self.hole += 1;
        TypeExpr::Hole(self.hole)
    }

    fn ty(&self, t: &TypeExpr, span: Span) -> Result<TypeExpr, DesugarError> {
        resolve(self.types, t, None, span)
    }

    fn function(mut self, f: &SFun) -> Result<FunDecl, DesugarError> {
        let mut params = Vec::new();
        for (name, t) in &f.params {
            params.push(Param { name: name.clone(), ty: self.ty(t, f.span)? });
        }
        let ret = match &f.ret {
            Some(t) => self.ty(t, f.span)?,
            None => TypeExpr::Unit,
        };
        let body = self.block(&f.body)?;
        Ok(FunDecl { name: f.name.clone(), bound: f.bound.clone(), params, ret, body: Stmt::seq(body), span: f.span })
    }

    fn block(&mut self, ss: &[SStmt]) -> Result<Vec<Stmt>, DesugarError> {
        let mut out = Vec::new();
        for s in ss {
            out.extend(self.stmt(s)?);
        }
        Ok(out)
    }

    fn stmt(&mut self, s: &SStmt) -> Result<Vec<Stmt>, DesugarError> {
        let span = s.span();
        match s {
            SStmt::Skip(_) => Ok(vec![Stmt::at(StmtKind::Skip, span)]),
            SStmt::Swap(a, b, _) => Ok(vec![Stmt::at(StmtKind::Swap(a.clone(), b.clone()), span)]),
            SStmt::MemSwap(a, b, _) => Ok(vec![Stmt::at(StmtKind::MemSwap(a.clone(), b.clone()), span)]),
            SStmt::Let { pat, dir, expr, .. } => {
                check_pattern(pat, span)?;
                match (pat, dir) {
                    (Pattern::Var(x), Dir::UnAssign) => self.let_var(x, expr, false, span),
                    (_, Dir::Assign) => self.pattern_assign(pat, expr, span),
                    (_, Dir::UnAssign) => Ok(invert_all(&self.pattern_assign(pat, expr, span)?)),
                }
            }
            SStmt::With { with, body, .. } => {
                let w = self.block(with)?;
                let d = self.block(body)?;
                let undo = invert_all(&w);
                Ok(w.into_iter().chain(d).chain(undo).collect())
            }
            SStmt::If { cond, then, els, .. } => self.if_stmt(cond, then, els.as_deref(), span),
            SStmt::Return(e, _) => match &e.kind {
                SExprKind::Var(x) => Ok(vec![Stmt::at(StmtKind::Return(x.clone()), span)]),
                _ => {
                    let t = self.fresh("ret");
                    let mut out = self.let_var(&t, e, true, span)?;
                    out.push(Stmt::at(StmtKind::Return(t), span));
                    Ok(out)
                }
            },
        }
    }

    /// `let x <- e` or `let x -> e`, with temporaries for nested operands.
    fn let_var(&mut self, x: &str, e: &SExpr, assign: bool, span: Span) -> Result<Vec<Stmt>, DesugarError> {
        let mut pre = Vec::new();
        let k = self.expr(e, true, &mut pre)?;
        let kind = if assign { StmtKind::Assign(x.to_string(), k) } else { StmtKind::UnAssign(x.to_string(), k) };
        let undo = invert_all(&pre);
        let mut out = pre;
        out.push(Stmt::at(kind, span));
        out.extend(undo);
        Ok(out)
    }

    fn atom(&mut self, e: &SExpr, pre: &mut Vec<Stmt>) -> Result<String, DesugarError> {
        if let SExprKind::Var(x) = &e.kind {
            return Ok(x.clone());
        }
        let k = self.expr(e, false, pre)?;
        let t = self.fresh("t");
        pre.push(Stmt::at(StmtKind::Assign(t.clone(), k), e.span));
        Ok(t)
    }

    fn constant(&mut self, e: &SExpr) -> Result<Option<Literal>, DesugarError> {
        Ok(Some(match &e.kind {
            SExprKind::Num(n) => Literal::Num(*n),
            SExprKind::Bool(b) => Literal::Bool(*b),
            SExprKind::Unit => Literal::Unit,
            SExprKind::Null => Literal::Null(self.hole()),
            SExprKind::Default(Some(t)) => default_literal(&self.ty(t, e.span)?),
            SExprKind::Default(None) => Literal::Default(self.hole()),
            SExprKind::Pair(a, b) => match (self.constant(a)?, self.constant(b)?) {
                (Some(a), Some(b)) => Literal::Pair(Box::new(a), Box::new(b)),
                _ => return Ok(None),
            },
            _ => return Ok(None),
        }))
    }

    fn expr(&mut self, e: &SExpr, top: bool, pre: &mut Vec<Stmt>) -> Result<Expr, DesugarError> {
        if let Some(l) = self.constant(e)? {
            return Ok(lit(l));
        }
        Ok(match &e.kind {
            SExprKind::Var(x) => Expr::Var(x.clone()),
            SExprKind::Pair(a, b) => {
                let a = self.atom(a, pre)?;
                let b = self.atom(b, pre)?;
                Expr::Pair(a, b)
            }
            SExprKind::Proj(i, a) => Expr::Proj(*i, self.atom(a, pre)?),
            SExprKind::Unary(op, a) => Expr::Unary(*op, self.atom(a, pre)?),
            SExprKind::Binary(op @ (BinOp::Eq | BinOp::Ne), a, b)
                if matches!(a.kind, SExprKind::Null) || matches!(b.kind, SExprKind::Null) =>
            {
                let other = if matches!(a.kind, SExprKind::Null) { b } else { a };
                let x = self.atom(other, pre)?;
                if *op == BinOp::Eq {
                    Expr::Unary(UnOp::Test, x)
                } else {
                    let t = self.fresh("t");
                    pre.push(Stmt::at(StmtKind::Assign(t.clone(), Expr::Unary(UnOp::Test, x)), e.span));
                    Expr::Unary(UnOp::Not, t)
                }
            }
            SExprKind::Binary(op, a, b) => {
                let a = self.atom(a, pre)?;
                let b = self.atom(b, pre)?;
                Expr::Binary(*op, a, b)
            }
            SExprKind::Alloc(t) => Expr::Alloc(self.ty(t, e.span)?),
            SExprKind::Call { func, bound, args } => {
                if !top {
                    return Err(DesugarError::NestedCall { func: func.clone(), span: e.span });
                }
                let mut names = Vec::new();
                for a in args {
                    match &a.kind {
                        SExprKind::Var(x) => names.push(x.clone()),
                        _ => return Err(DesugarError::CallArgument { func: func.clone(), span: a.span }),
                    }
                }
                Expr::Call(Call { func: func.clone(), bound: bound.clone(), args: names })
            }
            SExprKind::Num(_)
            | SExprKind::Bool(_)
            | SExprKind::Null
            | SExprKind::Unit
            | SExprKind::Default(_) => unreachable!("constants handled above"),
        })
    }

    fn pattern_assign(&mut self, pat: &Pattern, e: &SExpr, span: Span) -> Result<Vec<Stmt>, DesugarError> {
        match pat {
            Pattern::Var(x) => self.let_var(x, e, true, span),
            Pattern::Pair(..) => {
                if let SExprKind::Var(v) = &e.kind {
                    return self.destructure(v, pat, span);
                }
                let t = self.fresh("p");
                let mut out = self.let_var(&t, e, true, span)?;
                out.extend(self.destructure(&t, pat, span)?);
                let rebuilt = rebuild(pat, span);
                out.extend(self.let_var(&t, &rebuilt, false, span)?);
                Ok(out)
            }
            _ => {
                let t = self.fresh("p");
                let mut out = self.let_var(&t, e, true, span)?;
                out.extend(self.let_var(&t, &rebuild(pat, span), false, span)?);
                Ok(out)
            }
        }
    }

    /// Bind the variables of a pair pattern from projections of `v`, leaving `v` intact.
    fn destructure(&mut self, v: &str, pat: &Pattern, span: Span) -> Result<Vec<Stmt>, DesugarError> {
        let (p1, p2) = match pat {
            Pattern::Pair(a, b) => (a, b),
            _ => unreachable!("destructure takes a pair pattern"),
        };
        let mut out = Vec::new();
        for (i, p) in [(1u8, p1), (2u8, p2)] {
            let proj = Expr::Proj(i, v.to_string());
            match &**p {
                Pattern::Var(x) => out.push(Stmt::at(StmtKind::Assign(x.clone(), proj), span)),
                Pattern::Pair(..) => {
                    let t = self.fresh("p");
                    out.push(Stmt::at(StmtKind::Assign(t.clone(), proj.clone()), span));
                    out.extend(self.destructure(&t, p, span)?);
                    out.push(Stmt::at(StmtKind::UnAssign(t, proj), span));
                }
                leaf => {
                    let t = self.fresh("p");
                    out.push(Stmt::at(StmtKind::Assign(t.clone(), proj), span));
                    let l = self.constant(&rebuild(leaf, span))?.expect("literal pattern");
                    out.push(Stmt::at(StmtKind::UnAssign(t, lit(l)), span));
                }
            }
        }
        Ok(out)
    }

    fn if_stmt(
        &mut self,
        cond: &SExpr,
        then: &[SStmt],
        els: Option<&[SStmt]>,
        span: Span,
    ) -> Result<Vec<Stmt>, DesugarError> {
        let (c, pre) = match &cond.kind {
            SExprKind::Var(x) => (x.clone(), Vec::new()),
            _ => {
                let t = self.fresh("c");
                let pre = self.let_var(&t, cond, true, span)?;
                (t, pre)
            }
        };
        let mut a = self.block(then)?;
        let mut out = pre.clone();
        match els {
            None => out.push(Stmt::at(StmtKind::If(c, Box::new(Stmt::seq(a))), span)),
            Some(els) => {
                let mut b = self.block(els)?;
                let (add_a, rem_a) = net_effect(&a);
                let (add_b, rem_b) = net_effect(&b);
                if add_a != add_b {
                    return Err(DesugarError::BranchMismatch {
                        detail: format!("bound variables: {} vs {}", show(&add_a), show(&add_b)),
                        span,
                    });
                }
                if rem_a != rem_b {
                    return Err(DesugarError::BranchMismatch {
                        detail: format!("consumed variables: {} vs {}", show(&rem_a), show(&rem_b)),
                        span,
                    });
                }
                for v in &add_a {
                    self.hoist_added(&mut a, v);
                    self.hoist_added(&mut b, v);
                    let h = self.hole();
                    out.push(Stmt::at(StmtKind::Assign(v.clone(), lit(Literal::Default(h))), span));
                }
                for v in &rem_a {
                    self.hoist_removed(&mut a, v);
                    self.hoist_removed(&mut b, v);
                }
                let nc = self.fresh("nc");
                let not_c = Expr::Unary(UnOp::Not, c.clone());
                out.push(Stmt::at(StmtKind::Assign(nc.clone(), not_c.clone()), span));
                out.push(Stmt::at(StmtKind::If(c, Box::new(Stmt::seq(a))), span));
                out.push(Stmt::at(StmtKind::If(nc.clone(), Box::new(Stmt::seq(b))), span));
                out.push(Stmt::at(StmtKind::UnAssign(nc, not_c), span));
                for v in &rem_a {
                    let h = self.hole();
                    out.push(Stmt::at(StmtKind::UnAssign(v.clone(), lit(Literal::Default(h))), span));
                }
            }
        }
        out.extend(invert_all(&pre));
        Ok(out)
    }

    /// The last top-level assignment of `v` moves its value into an outer binding.
    fn hoist_added(&mut self, branch: &mut Vec<Stmt>, v: &str) {
        let i = branch
            .iter()
            .rposition(|s| matches!(&s.kind, StmtKind::Assign(x, _) if x == v))
            .expect("net-added variable has an assignment");
        let earlier = self.fresh(&format!("{v}_"));
        for s in &mut branch[..i] {
            s.rename(&mut |x: &mut String| {
                if x == v {
                    *x = earlier.clone();
                }
            });
        }
        let (e, span) = match &branch[i].kind {
            StmtKind::Assign(_, e) => (e.clone(), branch[i].span),
            _ => unreachable!(),
        };
        let t = self.fresh(&format!("{v}_"));
        let h = self.hole();
        let repl = vec![
            Stmt::at(StmtKind::Assign(t.clone(), e), span),
            Stmt::at(StmtKind::Swap(v.to_string(), t.clone()), span),
            Stmt::at(StmtKind::UnAssign(t, lit(Literal::Default(h))), span),
        ];
        branch.splice(i..=i, repl);
    }

    /// The last top-level un-assignment of `v` works on a copy swapped out of `v`.
    fn hoist_removed(&mut self, branch: &mut Vec<Stmt>, v: &str) {
        let i = branch
            .iter()
            .rposition(|s| matches!(&s.kind, StmtKind::UnAssign(x, _) if x == v))
            .expect("net-removed variable has an un-assignment");
        let (e, span) = match &branch[i].kind {
            StmtKind::UnAssign(_, e) => (e.clone(), branch[i].span),
            _ => unreachable!(),
        };
        let t = self.fresh(&format!("{v}_"));
        let h = self.hole();
        let repl = vec![
            Stmt::at(StmtKind::Assign(t.clone(), lit(Literal::Default(h))), span),
            Stmt::at(StmtKind::Swap(v.to_string(), t.clone()), span),
            Stmt::at(StmtKind::UnAssign(t, e), span),
        ];
        branch.splice(i..=i, repl);
    }
}

fn show(s: &BTreeSet<String>) -> String {
    if s.is_empty() {
        "{}".to_string()
    } else {
        format!("{{{}}}", s.iter().cloned().collect::<Vec<_>>().join(", "))
    }
}

/// Variables a straight-line block binds and consumes on net.
fn net_effect(block: &[Stmt]) -> (BTreeSet<String>, BTreeSet<String>) {
    let mut added = BTreeSet::new();
    let mut removed = BTreeSet::new();
    for s in block.iter().cloned().flat_map(Stmt::flatten) {
        match &s.kind {
            StmtKind::Assign(x, _) => {
                if !removed.remove(x) {
                    added.insert(x.clone());
                }
            }
            StmtKind::UnAssign(x, _)
                if !added.remove(x) => {
                    removed.insert(x.clone());
                }
            _ => {}
        }
    }
    (added, removed)
}

fn check_pattern(p: &Pattern, span: Span) -> Result<(), DesugarError> {
    fn go(p: &Pattern, seen: &mut BTreeSet<String>, span: Span) -> Result<(), DesugarError> {
        match p {
            Pattern::Var(x) => {
                if !seen.insert(x.clone()) {
                    return Err(DesugarError::DuplicateBinding { name: x.clone(), span });
                }
                Ok(())
            }
            Pattern::Pair(a, b) => {
                go(a, seen, span)?;
                go(b, seen, span)
            }
            _ => Ok(()),
        }
    }
    go(p, &mut BTreeSet::new(), span)
}

/// A pattern read back as an expression.
fn rebuild(p: &Pattern, span: Span) -> SExpr {
    let kind = match p {
        Pattern::Var(x) => SExprKind::Var(x.clone()),
        Pattern::Unit => SExprKind::Unit,
        Pattern::Num(n) => SExprKind::Num(*n),
        Pattern::Bool(b) => SExprKind::Bool(*b),
        Pattern::Null => SExprKind::Null,
        Pattern::Pair(a, b) => SExprKind::Pair(Box::new(rebuild(a, span)), Box::new(rebuild(b, span))),
    };
    SExpr { kind, span }
}

/// Lowered `with s1 do s2`, for callers building kernel code directly.
pub fn with_do(s1: Stmt, s2: Stmt) -> Stmt {
    let undo = invert(&s1);
    Stmt::seq(vec![s1, s2, undo])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    fn body(src: &str) -> Vec<Stmt> {
        let p = desugar(&parse(src).unwrap()).unwrap();
        p.funcs.last().unwrap().body.clone().flatten()
    }

    fn var(x: &str) -> String {
        x.to_string()
    }

    #[test]
    fn with_do_runs_then_reverses() {
        let b = body(
            "fun main(x1: uint, x2: uint, x3: uint) -> uint {
               with { let t <- x1 + x2; } do { let r <- t + x3; }
               return r;
             }",
        );
        assert_eq!(b[0].kind, StmtKind::Assign(var("t"), Expr::Binary(BinOp::Add, var("x1"), var("x2"))));
        assert_eq!(b[1].kind, StmtKind::Assign(var("r"), Expr::Binary(BinOp::Add, var("t"), var("x3"))));
        assert_eq!(b[2].kind, StmtKind::UnAssign(var("t"), Expr::Binary(BinOp::Add, var("x1"), var("x2"))));
    }

    #[test]
    fn nested_expression_uses_one_temporary() {
        let b = body("fun main(x1: uint, x2: uint, x3: uint) -> uint { let result <- x1 + x2 + x3; return result; }");
        assert_eq!(b.len(), 4);
        let t = match &b[0].kind {
            StmtKind::Assign(t, Expr::Binary(BinOp::Add, a, c)) if a == "x1" && c == "x2" => t.clone(),
            other => panic!("unexpected {other:?}"),
        };
        assert_eq!(b[1].kind, StmtKind::Assign(var("result"), Expr::Binary(BinOp::Add, t.clone(), var("x3"))));
        assert_eq!(b[2].kind, StmtKind::UnAssign(t, Expr::Binary(BinOp::Add, var("x1"), var("x2"))));
    }

    #[test]
    fn with_skip_is_three_skips() {
        let b = body("fun main() { with { skip; } do { skip; } return (); }");
        assert!(b[..3].iter().all(|s| s.kind == StmtKind::Skip));
    }

    #[test]
    fn duplicate_pattern_binding_is_rejected() {
        let p = parse("fun main(t: (uint, uint)) { let (a, a) <- t; return (); }").unwrap();
        assert!(matches!(desugar(&p), Err(DesugarError::DuplicateBinding { .. })));
    }

    #[test]
    fn if_else_splits_on_negated_condition() {
        let b = body("fun main(c: bool, x: uint, y: uint) { if c { x <-> y; } else { skip; } return (); }");
        assert!(matches!(&b[0].kind, StmtKind::Assign(nc, Expr::Unary(UnOp::Not, c)) if nc.starts_with('$') && c == "c"));
        assert!(matches!(&b[1].kind, StmtKind::If(c, _) if c == "c"));
        assert!(matches!(&b[2].kind, StmtKind::If(nc, _) if nc.starts_with('$')));
        assert!(matches!(&b[3].kind, StmtKind::UnAssign(_, Expr::Unary(UnOp::Not, _))));
    }

    #[test]
    fn null_comparison_becomes_test() {
        let b = body("type list = (uint, ptr<list>); fun main(l: ptr<list>) { let e <- l == null; let e -> test l; return (); }");
        assert_eq!(b[0].kind, StmtKind::Assign(var("e"), Expr::Unary(UnOp::Test, var("l"))));
    }

    #[test]
    fn calls_cannot_nest() {
        let p = parse("fun f(x: uint) -> uint { let y <- x; return y; } fun main(x: uint) -> uint { let y <- f(x) + 1; return y; }").unwrap();
        assert!(matches!(desugar(&p), Err(DesugarError::NestedCall { .. })));
    }

    #[test]
    fn unknown_type_is_reported() {
        let p = parse("fun main(x: tree) { return (); }").unwrap();
        assert!(matches!(desugar(&p), Err(DesugarError::UnknownType { .. })));
    }

    #[test]
    fn recursive_type_declaration_becomes_inductive() {
        let p = desugar(&parse("type list = (uint, ptr<list>); fun main() { return (); }").unwrap()).unwrap();
        assert_eq!(p.types[0].ty, TypeExpr::list());
    }
}
