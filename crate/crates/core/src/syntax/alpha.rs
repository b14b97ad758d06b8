//! α-equivalence of kernel programs.

use std::collections::HashMap;

use super::kernel::{Expr, FunDecl, KernelProgram, Literal, Stmt, StmtKind};
use crate::types::TypeExpr;

/// Rename locals to `v0, v1, …` in order of first occurrence and erase
/// inferred literal types.
pub fn canonical(f: &FunDecl) -> FunDecl {
    let mut map: HashMap<String, String> = HashMap::new();
    let mut next = 0usize;
    let mut name = |x: &mut String| {
        let n = map.entry(x.clone()).or_insert_with(|| {
            next += 1;
            format!("v{}", next - 1)
        });
        *x = n.clone();
    };
    let mut g = f.clone();
    for p in &mut g.params {
        name(&mut p.name);
    }
    g.body = Stmt::seq(g.body.flatten());
    g.body.rename(&mut name);
    g.body.walk_mut(&mut |s| match &mut s.kind {
        StmtKind::Assign(_, Expr::Lit(l)) | StmtKind::UnAssign(_, Expr::Lit(l)) => erase(l),
        _ => {}
    });
    g.body.walk_mut(&mut |s| {
        if let StmtKind::If(_, body) = &mut s.kind {
            let inner = std::mem::replace(&mut **body, Stmt::skip());
            **body = Stmt::seq(inner.flatten());
        }
    });
    g
}

fn erase(l: &mut Literal) {
    match l {
        Literal::Null(t) => *t = TypeExpr::Unit,
        Literal::Default(t) if t.has_holes() => *t = TypeExpr::Hole(0),
        Literal::Pair(a, b) => {
            erase(a);
            erase(b);
        }
        _ => {}
    }
}

pub fn alpha_equivalent(a: &KernelProgram, b: &KernelProgram) -> bool {
    a.types == b.types
        && a.funcs.len() == b.funcs.len()
        && a.funcs.iter().zip(&b.funcs).all(|(f, g)| canonical(f) == canonical(g))
}
