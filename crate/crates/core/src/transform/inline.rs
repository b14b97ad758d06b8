//! Inlining of calls down to a single call-free Core statement.

use std::collections::{BTreeMap, HashMap};
use std::hash::{Hash, Hasher};
use std::sync::{Arc, Mutex};

use super::invert::invert;
use crate::syntax::kernel::{Bound, Call, Expr, FunDecl, KernelProgram, Literal, Param, Stmt, StmtKind};
use crate::syntax::FRESH_PREFIX;
use crate::types::{default_literal, TypeExpr};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum InlineError {
    #[error("program has no `main`")]
    NoMain,
    #[error("call to unknown function `{0}`")]
    UnknownFunction(String),
    #[error("bounded function `{func}` called without a concrete bound")]
    MissingBound { func: String },
    #[error("recursion bound of `{func}` did not decrease ({bound})")]
    NotDecreasing { func: String, bound: u64 },
    #[error("`{func}` must end with `return`")]
    NoReturn { func: String },
    #[error("inlined program exceeds {0} statements")]
    TooLarge(usize),
}

/// A call-free entry point: `main` with every call expanded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoreProgram {
    pub params: Vec<Param>,
    pub ret: TypeExpr,
    /// Variable holding the result at the end of `body`.
    pub output: String,
    pub body: Stmt,
}

impl CoreProgram {
    /// The program run backwards: it starts from the final registers and
    /// ends with only the parameters bound.
    pub fn inverse_body(&self) -> Stmt {
        invert(&self.body)
    }
}

fn eval_bound(b: &Bound, env: Option<(&str, u64)>) -> Option<u64> {
    match b {
        Bound::Lit(n) => Some(*n),
        Bound::Var(v) => env.filter(|(name, _)| name == v).map(|(_, n)| n),
        Bound::Minus(v, m) => env.filter(|(name, _)| name == v).map(|(_, n)| n.saturating_sub(*m)),
    }
}

/// The body of `f` specialised to one call site: parameters renamed to the
/// arguments, the returned variable renamed to `dest`, locals prefixed with
/// `prefix`, and the bound variable replaced by its value.
pub fn instantiate(f: &FunDecl, call: &Call, dest: &str, bound: Option<u64>, prefix: &str) -> Result<Vec<Stmt>, InlineError> {
    let (items, ret) = f.split_return();
    let ret = ret.ok_or_else(|| InlineError::NoReturn { func: f.name.clone() })?;
    let mut map: HashMap<String, String> = HashMap::new();
    for (p, a) in f.params.iter().zip(&call.args) {
        map.insert(p.name.clone(), a.clone());
    }
    map.insert(ret, dest.to_string());
    let env = match (&f.bound, bound) {
        (Some(b), Some(n)) => Some((b.as_str(), n)),
        _ => None,
    };
    let mut out = Vec::with_capacity(items.len());
    for mut s in items {
        s.rename(&mut |x: &mut String| match map.get(x.as_str()) {
            Some(y) => *x = y.clone(),
            None => *x = format!("{prefix}{x}"),
        });
        s.walk_mut(&mut |s| {
            if let StmtKind::Assign(_, Expr::Call(c)) | StmtKind::UnAssign(_, Expr::Call(c)) = &mut s.kind {
                if let Some(b) = &c.bound {
                    if let Some(n) = eval_bound(b, env) {
                        c.bound = Some(Bound::Lit(n));
                    }
                }
            }
        });
        out.push(s);
    }
    Ok(out)
}

/// What a call site expands to.
pub enum Expansion {
    /// Bound reached zero: the destination takes the default value.
    Default(Literal),
    Body(Vec<Stmt>),
}

/// Name prefix for the locals of a call made at `site` from a caller whose
/// locals carry `caller_prefix`.
pub fn call_prefix(caller_prefix: &str, func: &str, site: usize) -> String {
    if caller_prefix.is_empty() {
        format!("{FRESH_PREFIX}{func}#{site}/")
    } else {
        format!("{caller_prefix}{func}#{site}/")
    }
}

/// Expand one call site; locals of the callee get `prefix`.
pub fn expand_call(p: &KernelProgram, call: &Call, dest: &str, prefix: &str) -> Result<Expansion, InlineError> {
    let f = p.func(&call.func).ok_or_else(|| InlineError::UnknownFunction(call.func.clone()))?;
    let bound = match (&f.bound, &call.bound) {
        (Some(_), Some(Bound::Lit(n))) => Some(*n),
        (Some(_), _) => return Err(InlineError::MissingBound { func: f.name.clone() }),
        (None, _) => None,
    };
    if bound == Some(0) {
        return Ok(Expansion::Default(default_literal(&f.ret)));
    }
    Ok(Expansion::Body(instantiate(f, call, dest, bound, prefix)?))
}

struct Inliner<'a> {
    p: &'a KernelProgram,
    limit: usize,
    size: usize,
    /// Functions being expanded, with their bounds.
    active: Vec<(String, Option<u64>)>,
}

impl Inliner<'_> {
    fn stmts(&mut self, items: Vec<Stmt>, prefix: &str, depth: usize, out: &mut Vec<Stmt>) -> Result<(), InlineError> {
        let mut site = 0usize;
        for s in items {
            self.stmt(s, prefix, depth, &mut site, out)?;
        }
        Ok(())
    }

    fn stmt(&mut self, s: Stmt, prefix: &str, depth: usize, site: &mut usize, out: &mut Vec<Stmt>) -> Result<(), InlineError> {
        let span = s.span;
        match s.kind {
            StmtKind::Seq(v) => {
                for s in v {
                    self.stmt(s, prefix, depth, site, out)?;
                }
                Ok(())
            }
            StmtKind::If(c, body) => {
                let mut inner = Vec::new();
                self.stmt(*body, prefix, depth, site, &mut inner)?;
                out.push(Stmt::at(StmtKind::If(c, Box::new(Stmt::seq(inner))), span));
                Ok(())
            }
            StmtKind::Assign(x, Expr::Call(call)) => self.call(x, call, false, prefix, depth, site, out, span),
            StmtKind::UnAssign(x, Expr::Call(call)) => self.call(x, call, true, prefix, depth, site, out, span),
            kind => {
                self.size += 1;
                if self.size > self.limit {
                    return Err(InlineError::TooLarge(self.limit));
                }
                out.push(Stmt::at(kind, span));
                Ok(())
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn call(
        &mut self,
        x: String,
        call: Call,
        reverse: bool,
        prefix: &str,
        depth: usize,
        site: &mut usize,
        out: &mut Vec<Stmt>,
        span: crate::syntax::Span,
    ) -> Result<(), InlineError> {
        *site += 1;
        let inner_prefix = call_prefix(prefix, &call.func, *site);
        match expand_call(self.p, &call, &x, &inner_prefix)? {
            Expansion::Default(l) => {
                self.size += 1;
                let kind = if reverse { StmtKind::UnAssign(x, Expr::Lit(l)) } else { StmtKind::Assign(x, Expr::Lit(l)) };
                out.push(Stmt::at(kind, span));
            }
            Expansion::Body(items) => {
                let bound = match call.bound {
                    Some(Bound::Lit(n)) => Some(n),
                    _ => None,
                };
                for (f, b) in &self.active {
                    if *f == call.func && !matches!((bound, b), (Some(n), Some(m)) if n < *m) {
                        return Err(InlineError::NotDecreasing { func: call.func.clone(), bound: bound.unwrap_or(0) });
                    }
                }
                self.active.push((call.func.clone(), bound));
                let mut body = Vec::new();
                self.stmts(items, &inner_prefix, depth + 1, &mut body)?;
                self.active.pop();
                if reverse {
                    out.extend(body.iter().rev().map(invert));
                } else {
                    out.extend(body);
                }
            }
        }
        Ok(())
    }
}

/// Inline every call reachable from `main` into one Core statement.
pub fn inline_program(p: &KernelProgram) -> Result<CoreProgram, InlineError> {
    inline_main(p, usize::MAX)
}

/// As `inline_program`, giving up after `limit` atomic statements.
pub fn inline_main(p: &KernelProgram, limit: usize) -> Result<CoreProgram, InlineError> {
    let main = p.main().ok_or(InlineError::NoMain)?;
    let (items, ret) = main.split_return();
    let output = ret.ok_or_else(|| InlineError::NoReturn { func: "main".into() })?;
    let mut inl = Inliner { p, limit, size: 0, active: vec![("main".to_string(), None)] };
    let mut body = Vec::new();
    inl.stmts(items, "", 0, &mut body)?;
    Ok(CoreProgram { params: main.params.clone(), ret: main.ret.clone(), output, body: Stmt::seq(body) })
}

/// Memoised inlining keyed by program, word size and a caller-chosen key
/// (typically the bounds baked into `main`).
#[derive(Clone, Default)]
pub struct InlineCache {
    map: Arc<Mutex<BTreeMap<(u64, u32), Arc<CoreProgram>>>>,
}

impl InlineCache {
    pub fn new() -> InlineCache {
        InlineCache::default()
    }

    pub fn get(&self, p: &KernelProgram, k: u32) -> Result<Arc<CoreProgram>, InlineError> {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        p.hash(&mut h);
        let key = (h.finish(), k);
        if let Some(c) = self.map.lock().expect("inline cache poisoned").get(&key) {
            return Ok(c.clone());
        }
        let core = Arc::new(inline_program(p)?);
        self.map.lock().expect("inline cache poisoned").insert(key, core.clone());
        Ok(core)
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("inline cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
