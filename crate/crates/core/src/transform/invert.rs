use crate::syntax::kernel::{Stmt, StmtKind};

/// Syntactic inverse of a statement.
pub fn invert(s: &Stmt) -> Stmt {
    let kind = match &s.kind {
        StmtKind::Skip => StmtKind::Skip,
        StmtKind::Seq(v) => StmtKind::Seq(v.iter().rev().map(invert).collect()),
        StmtKind::Assign(x, e) => StmtKind::UnAssign(x.clone(), e.clone()),
        StmtKind::UnAssign(x, e) => StmtKind::Assign(x.clone(), e.clone()),
        StmtKind::Swap(a, b) => StmtKind::Swap(a.clone(), b.clone()),
        StmtKind::MemSwap(a, b) => StmtKind::MemSwap(a.clone(), b.clone()),
        StmtKind::If(c, body) => StmtKind::If(c.clone(), Box::new(invert(body))),
        StmtKind::Return(x) => StmtKind::Return(x.clone()),
    };
    Stmt::at(kind, s.span)
}

/// Inverse of a statement list, as a list.
pub fn invert_all(v: &[Stmt]) -> Vec<Stmt> {
    v.iter().rev().map(invert).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::kernel::{BinOp, Expr, Literal};

    #[test]
    fn seq_reverses_and_flips() {
        let s = Stmt::seq(vec![
            Stmt::assign("t", Expr::Binary(BinOp::Add, "a".into(), "b".into())),
            Stmt::swap("t", "u"),
        ]);
        let want = Stmt::seq(vec![
            Stmt::swap("t", "u"),
            Stmt::unassign("t", Expr::Binary(BinOp::Add, "a".into(), "b".into())),
        ]);
        assert_eq!(invert(&s), want);
    }

    #[test]
    fn if_inverts_body() {
        let s = Stmt::if_("c", Stmt::assign("x", Expr::Lit(Literal::Num(1))));
        assert_eq!(invert(&s), Stmt::if_("c", Stmt::unassign("x", Expr::Lit(Literal::Num(1)))));
        assert_eq!(invert(&invert(&s)), s);
    }
}
