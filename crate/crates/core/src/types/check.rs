//! Typing and well-formation judgments for kernel programs, with
//! elaboration of inferred `null` and `default<_>` literals.

use std::collections::{BTreeMap, BTreeSet};

use super::{default_literal, type_wf, TypeExpr, Unifier};
use crate::syntax::kernel::{BinOp, Bound, Call, Expr, FunDecl, KernelProgram, Literal, Stmt, StmtKind, UnOp};
use crate::syntax::Span;

/// Γ: variables in scope and their types.
pub type Context = BTreeMap<String, TypeExpr>;

/// Φ: signatures of the functions declared so far.
pub type FunctionContext = BTreeMap<String, FunSig>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunSig {
    pub bound: Option<String>,
    pub params: Vec<TypeExpr>,
    pub ret: TypeExpr,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("error[{rule}]: {message}")]
pub struct TypeError {
    pub rule: &'static str,
    pub message: String,
    pub span: Span,
    pub func: Option<String>,
}

impl TypeError {
    fn new(rule: &'static str, message: impl Into<String>, span: Span) -> TypeError {
        TypeError { rule, message: message.into(), span, func: None }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CheckOptions {
    /// Word size; literals must fit in `k` bits.
    pub k: u32,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { k: 8 }
    }
}

/// Variables a statement may change.
pub fn modified(s: &Stmt) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    s.walk(&mut |s| match &s.kind {
        StmtKind::Assign(x, e) | StmtKind::UnAssign(x, e) => {
            out.insert(x.clone());
            if let Expr::Call(c) = e {
                out.extend(c.args.iter().cloned());
            }
        }
        StmtKind::Swap(a, b) => {
            out.insert(a.clone());
            out.insert(b.clone());
        }
        StmtKind::MemSwap(_, b) => {
            out.insert(b.clone());
        }
        StmtKind::Return(x) => {
            out.insert(x.clone());
        }
        StmtKind::Skip | StmtKind::Seq(_) | StmtKind::If(..) => {}
    });
    out
}

/// The function whose body is being checked.
#[derive(Clone, Copy, Debug)]
pub struct Current<'a> {
    pub name: &'a str,
    pub bound: Option<&'a str>,
}

struct Checker<'a> {
    phi: &'a FunctionContext,
    cur: Option<Current<'a>>,
    u: Unifier,
    k: u32,
}

impl<'a> Checker<'a> {
    fn lookup(&self, gamma: &Context, x: &str, span: Span) -> Result<TypeExpr, TypeError> {
        gamma
            .get(x)
            .cloned()
            .ok_or_else(|| TypeError::new("TV-Var", format!("variable `{x}` is not in scope"), span))
    }

    fn show(&self, t: &TypeExpr) -> String {
        self.u.resolve(t).to_string()
    }

    fn literal(&mut self, lit: &Literal, span: Span) -> Result<TypeExpr, TypeError> {
        Ok(match lit {
            Literal::Unit => TypeExpr::Unit,
            Literal::Num(n) => {
                if self.k < 64 && *n >= 1u64 << self.k {
                    return Err(TypeError::new(
                        "TV-Num",
                        format!("literal {n} does not fit in a {}-bit word", self.k),
                        span,
                    ));
                }
                TypeExpr::UInt
            }
            Literal::Bool(_) => TypeExpr::Bool,
            Literal::Null(t) => TypeExpr::ptr(t.clone()),
            Literal::Pair(a, b) => TypeExpr::pair(self.literal(a, span)?, self.literal(b, span)?),
            Literal::Default(t) => t.clone(),
        })
    }

    fn expect(&mut self, rule: &'static str, got: &TypeExpr, want: &TypeExpr, what: &str, span: Span) -> Result<(), TypeError> {
        if self.u.unify(got, want) {
            Ok(())
        } else {
            Err(TypeError::new(
                rule,
                format!("{what} has type `{}`, expected `{}`", self.show(got), self.show(want)),
                span,
            ))
        }
    }

    fn expr(&mut self, gamma: &Context, e: &Expr, span: Span) -> Result<TypeExpr, TypeError> {
        match e {
            Expr::Lit(l) => self.literal(l, span),
            Expr::Var(x) => self.lookup(gamma, x, span),
            Expr::Pair(a, b) => {
                let ta = self.lookup(gamma, a, span)?;
                let tb = self.lookup(gamma, b, span)?;
                Ok(TypeExpr::pair(ta, tb))
            }
            Expr::Proj(i, x) => {
                let t = self.lookup(gamma, x, span)?;
                match self.u.head(&t) {
                    TypeExpr::Pair(a, b) => Ok(if *i == 1 { *a } else { *b }),
                    other => Err(TypeError::new(
                        "TE-Proj",
                        format!("cannot project `.{i}` from `{x}` of type `{}`", self.show(&other)),
                        span,
                    )),
                }
            }
            Expr::Unary(UnOp::Not, x) => {
                let t = self.lookup(gamma, x, span)?;
                self.expect("TE-Not", &t, &TypeExpr::Bool, &format!("operand `{x}` of `not`"), span)?;
                Ok(TypeExpr::Bool)
            }
            Expr::Unary(UnOp::Test, x) => {
                let t = self.lookup(gamma, x, span)?;
                match self.u.head(&t) {
                    TypeExpr::UInt | TypeExpr::Ptr(_) => Ok(TypeExpr::Bool),
                    other => Err(TypeError::new(
                        "TE-Test",
                        format!("`test` needs a uint or pointer, `{x}` has type `{}`", self.show(&other)),
                        span,
                    )),
                }
            }
            Expr::Binary(op, a, b) => {
                let ta = self.lookup(gamma, a, span)?;
                let tb = self.lookup(gamma, b, span)?;
                let (rule, operand, result) = match op {
                    BinOp::And | BinOp::Or => ("TE-Lop", Some(TypeExpr::Bool), TypeExpr::Bool),
                    BinOp::Add | BinOp::Sub | BinOp::Mul => ("TE-Aop", Some(TypeExpr::UInt), TypeExpr::UInt),
                    BinOp::BitAnd | BinOp::BitOr | BinOp::BitXor | BinOp::Shl | BinOp::Shr => {
                        ("TE-Bit", Some(TypeExpr::UInt), TypeExpr::UInt)
                    }
                    BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => ("TE-Cmp", Some(TypeExpr::UInt), TypeExpr::Bool),
                    BinOp::Eq | BinOp::Ne => ("TE-Cmp", None, TypeExpr::Bool),
                };
                let sym = op.symbol();
                match operand {
                    Some(want) => {
                        self.expect(rule, &ta, &want, &format!("left operand `{a}` of `{sym}`"), span)?;
                        self.expect(rule, &tb, &want, &format!("right operand `{b}` of `{sym}`"), span)?;
                    }
                    None => {
                        self.expect(rule, &tb, &ta, &format!("right operand `{b}` of `{sym}`"), span)?;
                        match self.u.head(&ta) {
                            TypeExpr::UInt | TypeExpr::Bool | TypeExpr::Ptr(_) => {}
                            other => {
                                return Err(TypeError::new(
                                    rule,
                                    format!("`{sym}` compares words only, not `{}`", self.show(&other)),
                                    span,
                                ))
                            }
                        }
                    }
                }
                Ok(result)
            }
            Expr::Alloc(t) => {
                let t = self.u.resolve(t);
                if let Err(e) = type_wf(&BTreeSet::new(), &t) {
                    return Err(TypeError::new(e.rule(), e.to_string(), span));
                }
                Ok(TypeExpr::ptr(t))
            }
            Expr::Call(c) => self.call(gamma, c, span),
        }
    }

    fn call(&mut self, gamma: &Context, c: &Call, span: Span) -> Result<TypeExpr, TypeError> {
        let sig = match self.phi.get(&c.func) {
            Some(s) => s.clone(),
            None => return Err(TypeError::new("TE-Call", format!("unknown function `{}`", c.func), span)),
        };
        let is_self = self.cur.map(|cur| cur.name == c.func).unwrap_or(false);
        let caller_bound = self.cur.and_then(|cur| cur.bound);
        let rule = match (&sig.bound, &c.bound) {
            (None, None) => {
                if is_self {
                    return Err(TypeError::new(
                        "TE-CallSelf",
                        format!("recursive call to `{}` needs a recursion bound", c.func),
                        span,
                    ));
                }
                "TE-CallUnbounded"
            }
            (None, Some(_)) => {
                return Err(TypeError::new(
                    "TE-CallUnbounded",
                    format!("`{}` takes no recursion bound", c.func),
                    span,
                ))
            }
            (Some(_), None) => {
                return Err(TypeError::new(
                    if is_self { "TE-CallSelf" } else { "TE-CallBounded" },
                    format!("`{}` must be called with a recursion bound", c.func),
                    span,
                ))
            }
            (Some(_), Some(beta)) => {
                if is_self {
                    match beta {
                        Bound::Minus(b, n) if Some(b.as_str()) == caller_bound && *n >= 1 => {}
                        _ => {
                            return Err(TypeError::new(
                                "TE-CallSelf",
                                format!("self-call bound not decreasing: `{}` must be called with `[b - n]`", c.func),
                                span,
                            ))
                        }
                    }
                    "TE-CallSelf"
                } else {
                    match beta {
                        Bound::Lit(_) => {}
                        Bound::Var(b) | Bound::Minus(b, _) => {
                            if Some(b.as_str()) != caller_bound {
                                return Err(TypeError::new(
                                    "TE-CallBounded",
                                    format!("bound variable `{b}` is not the caller's bound"),
                                    span,
                                ));
                            }
                        }
                    }
                    "TE-CallBounded"
                }
            }
        };
        if c.args.len() != sig.params.len() {
            return Err(TypeError::new(
                rule,
                format!("`{}` takes {} arguments, {} given", c.func, sig.params.len(), c.args.len()),
                span,
            ));
        }
        let mut seen = BTreeSet::new();
        for (arg, pt) in c.args.iter().zip(&sig.params) {
            if !seen.insert(arg) {
                return Err(TypeError::new(rule, format!("argument `{arg}` is passed twice"), span));
            }
            let at = self.lookup(gamma, arg, span)?;
            self.expect(rule, &at, pt, &format!("argument `{arg}`"), span)?;
        }
        Ok(sig.ret.clone())
    }

    fn stmt(&mut self, mut gamma: Context, s: &Stmt) -> Result<Context, TypeError> {
        let span = s.span;
        match &s.kind {
            StmtKind::Skip => Ok(gamma),
            StmtKind::Seq(items) => {
                for item in items {
                    gamma = self.stmt(gamma, item)?;
                }
                Ok(gamma)
            }
            StmtKind::Assign(x, e) => {
                if gamma.contains_key(x) {
                    return Err(TypeError::new("S-Assign", format!("`{x}` is already bound"), span));
                }
                let t = self.expr(&gamma, e, span)?;
                gamma.insert(x.clone(), t);
                Ok(gamma)
            }
            StmtKind::UnAssign(x, e) => {
                let tx = match gamma.remove(x) {
                    Some(t) => t,
                    None => return Err(TypeError::new("S-UnAssign", format!("`{x}` is not bound"), span)),
                };
                if e.vars().contains(&x.as_str()) {
                    return Err(TypeError::new(
                        "S-UnAssign",
                        format!("`{x}` cannot appear in the expression it is un-assigned from"),
                        span,
                    ));
                }
                let te = self.expr(&gamma, e, span)?;
                self.expect("S-UnAssign", &te, &tx, &format!("expression un-assigned into `{x}`"), span)?;
                Ok(gamma)
            }
            StmtKind::Swap(a, b) => {
                let (ta, tb) = match (gamma.get(a), gamma.get(b)) {
                    (Some(ta), Some(tb)) => (ta.clone(), tb.clone()),
                    (None, _) => return Err(TypeError::new("S-Swap", format!("`{a}` is not bound"), span)),
                    (_, None) => return Err(TypeError::new("S-Swap", format!("`{b}` is not bound"), span)),
                };
                self.expect("S-Swap", &tb, &ta, &format!("`{b}`"), span)?;
                Ok(gamma)
            }
            StmtKind::MemSwap(a, b) => {
                let (ta, tb) = match (gamma.get(a), gamma.get(b)) {
                    (Some(ta), Some(tb)) => (ta.clone(), tb.clone()),
                    (None, _) => return Err(TypeError::new("S-MemSwap", format!("`{a}` is not bound"), span)),
                    (_, None) => return Err(TypeError::new("S-MemSwap", format!("`{b}` is not bound"), span)),
                };
                let inner = match self.u.head(&ta) {
                    TypeExpr::Ptr(t) => *t,
                    TypeExpr::Hole(_) => {
                        return Err(TypeError::new(
                            "S-MemSwap",
                            format!("cannot infer the pointer type of `{a}`"),
                            span,
                        ));
                    }
                    other => {
                        return Err(TypeError::new(
                            "S-MemSwap",
                            format!("`{a}` has type `{}`, expected a pointer", self.show(&other)),
                            span,
                        ))
                    }
                };
                self.expect("S-MemSwap", &tb, &inner, &format!("`{b}`"), span)?;
                Ok(gamma)
            }
            StmtKind::If(c, body) => {
                let tc = match gamma.get(c) {
                    Some(t) => t.clone(),
                    None => return Err(TypeError::new("S-If", format!("condition `{c}` is not bound"), span)),
                };
                self.expect("S-If", &tc, &TypeExpr::Bool, &format!("condition `{c}`"), span)?;
                if modified(body).contains(c) {
                    return Err(TypeError::new("S-If", format!("condition `{c}` is modified in the branch"), span));
                }
                let after = self.stmt(gamma.clone(), body)?;
                for x in gamma.keys() {
                    if !after.contains_key(x) {
                        return Err(TypeError::new("S-If", format!("branch consumes `{x}`"), span));
                    }
                }
                for (x, t) in &after {
                    match gamma.get(x) {
                        None => return Err(TypeError::new("S-If", format!("branch introduces `{x}`"), span)),
                        Some(t0) => self.expect("S-If", t, t0, &format!("`{x}` after the branch"), span)?,
                    }
                }
                Ok(gamma)
            }
            StmtKind::Return(_) => Err(TypeError::new(
                "S-Return",
                "`return` may only appear as the final statement of a function",
                span,
            )),
        }
    }

    fn function(&mut self, f: &FunDecl) -> Result<(), TypeError> {
        let mut gamma = Context::new();
        for p in &f.params {
            if gamma.insert(p.name.clone(), p.ty.clone()).is_some() {
                return Err(TypeError::new("S-Assign", format!("parameter `{}` declared twice", p.name), f.span));
            }
        }
        let items = f.body.clone().flatten();
        let (last, init) = match items.split_last() {
            Some((last, init)) => (last, init),
            None => return Err(TypeError::new("S-Return", "function body is empty", f.span)),
        };
        let ret = match &last.kind {
            StmtKind::Return(x) => x,
            _ => return Err(TypeError::new("S-Return", "function must end with `return`", last.span)),
        };
        for s in init {
            gamma = self.stmt(gamma, s)?;
        }
        let span = last.span;
        let tx = match gamma.remove(ret) {
            Some(t) => t,
            None => return Err(TypeError::new("S-Return", format!("returned variable `{ret}` is not bound"), span)),
        };
        if f.params.iter().any(|p| &p.name == ret) {
            return Err(TypeError::new("S-Return", format!("parameter `{ret}` cannot be returned"), span));
        }
        self.expect("S-Return", &tx, &f.ret, &format!("returned `{ret}`"), span)?;
        for p in &f.params {
            match gamma.remove(&p.name) {
                Some(t) => self.expect("S-Return", &t, &p.ty, &format!("parameter `{}`", p.name), span)?,
                None => {
                    return Err(TypeError::new(
                        "S-Return",
                        format!("parameter `{}` was consumed before return", p.name),
                        span,
                    ))
                }
            }
        }
        if !gamma.is_empty() {
            let leaked: Vec<&str> = gamma.keys().map(|s| s.as_str()).collect();
            return Err(TypeError::new(
                "S-Return",
                format!("variables still in scope at return: {}", leaked.join(", ")),
                span,
            ));
        }
        Ok(())
    }

    fn elaborate_literal(&self, lit: &Literal) -> Literal {
        match lit {
            Literal::Null(t) => Literal::Null(self.u.resolve(t).fill_holes()),
            Literal::Default(t) => default_literal(&self.u.resolve(t).fill_holes()),
            Literal::Pair(a, b) => Literal::Pair(Box::new(self.elaborate_literal(a)), Box::new(self.elaborate_literal(b))),
            other => other.clone(),
        }
    }

    fn elaborate(&self, s: &mut Stmt) {
        s.walk_mut(&mut |s| match &mut s.kind {
            StmtKind::Assign(_, Expr::Lit(l)) | StmtKind::UnAssign(_, Expr::Lit(l)) => {
                *l = self.elaborate_literal(l);
            }
            _ => {}
        });
    }
}

fn check_signature(f: &FunDecl) -> Result<FunSig, TypeError> {
    let empty = BTreeSet::new();
    for t in f.params.iter().map(|p| &p.ty).chain(std::iter::once(&f.ret)) {
        if let Err(e) = type_wf(&empty, t) {
            return Err(TypeError::new(e.rule(), e.to_string(), f.span));
        }
    }
    Ok(FunSig {
        bound: f.bound.clone(),
        params: f.params.iter().map(|p| p.ty.clone()).collect(),
        ret: f.ret.clone(),
    })
}

/// Check a whole program in declaration order. Returns the elaborated program
/// (inferred literal types filled in) and its function context.
pub fn check_program(p: &KernelProgram, opts: CheckOptions) -> Result<(KernelProgram, FunctionContext), Vec<TypeError>> {
    let mut errors = Vec::new();
    let empty = BTreeSet::new();
    for td in &p.types {
        if let Err(e) = type_wf(&empty, &td.ty) {
            errors.push(TypeError::new(e.rule(), format!("in type `{}`: {e}", td.name), Span::default()));
        }
    }
    let mut phi = FunctionContext::new();
    let mut out = KernelProgram { types: p.types.clone(), funcs: Vec::new() };
    for (i, f) in p.funcs.iter().enumerate() {
        let tag = |mut e: TypeError| {
            e.func = Some(f.name.clone());
            e
        };
        if phi.contains_key(&f.name) {
            errors.push(tag(TypeError::new("P-Fun", format!("function `{}` is declared twice", f.name), f.span)));
            continue;
        }
        if f.name == "main" {
            if i + 1 != p.funcs.len() {
                errors.push(tag(TypeError::new("P-Main", "`main` must be the last declaration", f.span)));
            }
            if f.bound.is_some() {
                errors.push(tag(TypeError::new("P-Main", "`main` cannot take a recursion bound", f.span)));
            }
        }
        let sig = match check_signature(f) {
            Ok(s) => s,
            Err(e) => {
                errors.push(tag(e));
                continue;
            }
        };
        phi.insert(f.name.clone(), sig);
        let mut ck = Checker {
            phi: &phi,
            cur: Some(Current { name: &f.name, bound: f.bound.as_deref() }),
            u: Unifier::new(),
            k: opts.k,
        };
        match ck.function(f) {
            Ok(()) => {
                let mut g = f.clone();
                ck.elaborate(&mut g.body);
                out.funcs.push(g);
            }
            Err(e) => errors.push(tag(e)),
        }
    }
    if !p.funcs.iter().any(|f| f.name == "main") {
        errors.push(TypeError::new("P-Main", "program has no `main` function", Span::default()));
    }
    if errors.is_empty() {
        Ok((out, phi))
    } else {
        Err(errors)
    }
}

/// Check one statement under Γ, returning the output context.
pub fn check_stmt_in(
    phi: &FunctionContext,
    gamma: &Context,
    cur: Option<(&str, Option<&str>)>,
    s: &Stmt,
    k: u32,
) -> Result<Context, TypeError> {
    let mut ck = Checker {
        phi,
        cur: cur.map(|(name, bound)| Current { name, bound }),
        u: Unifier::new(),
        k,
    };
    let out = ck.stmt(gamma.clone(), s)?;
    Ok(out.into_iter().map(|(x, t)| (x, ck.u.resolve(&t))).collect())
}

/// Type of an expression under Γ.
pub fn check_expr_in(
    phi: &FunctionContext,
    gamma: &Context,
    cur: Option<(&str, Option<&str>)>,
    e: &Expr,
    k: u32,
) -> Result<TypeExpr, TypeError> {
    let mut ck = Checker {
        phi,
        cur: cur.map(|(name, bound)| Current { name, bound }),
        u: Unifier::new(),
        k,
    };
    let t = ck.expr(gamma, e, Span::default())?;
    Ok(ck.u.resolve(&t))
}
