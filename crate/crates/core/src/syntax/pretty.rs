//! Printing kernel programs back to parseable source.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use super::kernel::{Bound, Expr, FunDecl, KernelProgram, Literal, Stmt, StmtKind, UnOp};
use super::{is_fresh_name, FRESH_PREFIX};
use crate::types::TypeExpr;

pub fn pretty_print(p: &KernelProgram) -> String {
    let names: Vec<(String, TypeExpr)> = p.types.iter().map(|t| (t.name.clone(), t.ty.clone())).collect();
    let pr = Printer { names: &names };
    let mut out = String::new();
    for td in &p.types {
        let body = match &td.ty {
            TypeExpr::Ind(v, body) if *v == td.name => pr.ty_inner(body),
            other => pr.ty_inner(other),
        };
        let _ = writeln!(out, "type {} = {};", td.name, body);
    }
    if !p.types.is_empty() {
        out.push('\n');
    }
    for (i, f) in p.funcs.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        pr.func(f, &mut out);
    }
    out
}

/// Print a single statement, one kernel statement per line.
pub fn pretty_stmt(s: &Stmt) -> String {
    let pr = Printer { names: &[] };
    let mut out = String::new();
    pr.stmt(s, 0, &BTreeMap::new(), &mut out);
    out
}

struct Printer<'a> {
    names: &'a [(String, TypeExpr)],
}

impl Printer<'_> {
    fn ty(&self, t: &TypeExpr) -> String {
        if let Some((n, _)) = self.names.iter().find(|(_, d)| d == t) {
            return n.clone();
        }
        self.ty_inner(t)
    }

    fn ty_inner(&self, t: &TypeExpr) -> String {
        match t {
            TypeExpr::Pair(a, b) => format!("({}, {})", self.ty(a), self.ty(b)),
            TypeExpr::Ptr(a) => format!("ptr<{}>", self.ty(a)),
            TypeExpr::Ind(v, body) => format!("mu {v}. {}", self.ty(body)),
            other => other.to_string(),
        }
    }

    fn func(&self, f: &FunDecl, out: &mut String) {
        let rename = legal_names(f);
        let bound = f.bound.as_ref().map(|b| format!("[{b}]")).unwrap_or_default();
        let params: Vec<String> = f.params.iter().map(|p| format!("{}: {}", p.name, self.ty(&p.ty))).collect();
        let _ = writeln!(out, "fun {}{}({}) -> {} {{", f.name, bound, params.join(", "), self.ty(&f.ret));
        for s in f.body.clone().flatten() {
            self.stmt(&s, 1, &rename, out);
        }
        out.push_str("}\n");
    }

    fn stmt(&self, s: &Stmt, depth: usize, rn: &BTreeMap<String, String>, out: &mut String) {
        let pad = "  ".repeat(depth);
        let v = |x: &String| rn.get(x).cloned().unwrap_or_else(|| x.clone());
        match &s.kind {
            StmtKind::Skip => {
                let _ = writeln!(out, "{pad}skip;");
            }
            StmtKind::Seq(items) => {
                for s in items {
                    self.stmt(s, depth, rn, out);
                }
            }
            StmtKind::Assign(x, e) => {
                let _ = writeln!(out, "{pad}let {} <- {};", v(x), self.expr(e, rn));
            }
            StmtKind::UnAssign(x, e) => {
                let _ = writeln!(out, "{pad}let {} -> {};", v(x), self.expr(e, rn));
            }
            StmtKind::Swap(a, b) => {
                let _ = writeln!(out, "{pad}{} <-> {};", v(a), v(b));
            }
            StmtKind::MemSwap(a, b) => {
                let _ = writeln!(out, "{pad}*{} <-> {};", v(a), v(b));
            }
            StmtKind::If(c, body) => {
                let _ = writeln!(out, "{pad}if {} {{", v(c));
                self.stmt(body, depth + 1, rn, out);
                let _ = writeln!(out, "{pad}}}");
            }
            StmtKind::Return(x) => {
                let _ = writeln!(out, "{pad}return {};", v(x));
            }
        }
    }

    fn lit(&self, l: &Literal) -> String {
        match l {
            Literal::Unit => "()".into(),
            Literal::Num(n) => n.to_string(),
            Literal::Bool(b) => b.to_string(),
            Literal::Null(_) => "null".into(),
            Literal::Pair(a, b) => format!("({}, {})", self.lit(a), self.lit(b)),
            Literal::Default(t) if t.has_holes() => "default<_>".into(),
            Literal::Default(t) => format!("default<{}>", self.ty(t)),
        }
    }

    fn expr(&self, e: &Expr, rn: &BTreeMap<String, String>) -> String {
        let v = |x: &String| rn.get(x).cloned().unwrap_or_else(|| x.clone());
        match e {
            Expr::Lit(l) => self.lit(l),
            Expr::Var(x) => v(x),
            Expr::Pair(a, b) => format!("({}, {})", v(a), v(b)),
            Expr::Proj(i, x) => format!("{}.{i}", v(x)),
            Expr::Unary(UnOp::Not, x) => format!("not {}", v(x)),
            Expr::Unary(UnOp::Test, x) => format!("test {}", v(x)),
            Expr::Binary(op, a, b) => format!("{} {} {}", v(a), op.symbol(), v(b)),
            Expr::Alloc(t) => format!("alloc<{}>", self.ty(t)),
            Expr::Call(c) => {
                let bound = match &c.bound {
                    None => String::new(),
                    Some(Bound::Var(b)) => format!("[{b}]"),
                    Some(Bound::Lit(n)) => format!("[{n}]"),
                    Some(Bound::Minus(b, n)) => format!("[{b}-{n}]"),
                };
                let args: Vec<String> = c.args.iter().map(v).collect();
                format!("{}{}({})", c.func, bound, args.join(", "))
            }
        }
    }
}

/// Map compiler-generated names to source-legal names that collide with nothing.
fn legal_names(f: &FunDecl) -> BTreeMap<String, String> {
    let mut used: BTreeSet<String> = f.params.iter().map(|p| p.name.clone()).collect();
    let mut fresh = Vec::new();
    let mut body = f.body.clone();
    body.rename(&mut |x: &mut String| {
        if is_fresh_name(x) {
            if !fresh.contains(x) {
                fresh.push(x.clone());
            }
        } else {
            used.insert(x.clone());
        }
    });
    let mut map = BTreeMap::new();
    for x in fresh {
        let base = format!("tmp_{}", x.trim_start_matches(FRESH_PREFIX));
        let mut cand = base.clone();
        let mut n = 0;
        while used.contains(&cand) {
            n += 1;
            cand = format!("{base}_{n}");
        }
        used.insert(cand.clone());
        map.insert(x, cand);
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{alpha::alpha_equivalent, parse_and_desugar};

    #[test]
    fn skip_prints_as_skip() {
        assert_eq!(pretty_stmt(&Stmt::skip()), "skip;\n");
    }

    #[test]
    fn swap_prints_with_arrow() {
        assert_eq!(pretty_stmt(&Stmt::swap("x1", "x2")), "x1 <-> x2;\n");
    }

    #[test]
    fn push_front_round_trips() {
        let src = "type list = (uint, ptr<list>);
            fun push_front(l: ptr<list>, x: uint) {
              let head <- alloc<list>;
              l <-> head;
              let node <- (x, head);
              let head -> node.2;
              *l <-> node;
              let node -> default<list>;
              return ();
            }
            fun main(l: ptr<list>, x: uint) { let u <- push_front(l, x); let u -> (); return (); }";
        let p = parse_and_desugar(src).unwrap();
        let text = pretty_print(&p);
        let q = parse_and_desugar(&text).unwrap();
        assert!(alpha_equivalent(&p, &q), "{text}");
        assert_eq!(pretty_print(&q), text);
    }
}
