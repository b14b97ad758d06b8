//! Kernel AST: the statement forms every later pass works on.

use std::collections::BTreeSet;

use super::Span;
use crate::types::TypeExpr;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Literal {
    Unit,
    Num(u64),
    Bool(bool),
    /// `null` pointing at the given type.
    Null(TypeExpr),
    Pair(Box<Literal>, Box<Literal>),
    /// Default value of a type. Produced with a hole by if-else lowering and
    /// replaced by a concrete literal during elaboration.
    Default(TypeExpr),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Not,
    Test,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    And,
    Or,
    Add,
    Sub,
    Mul,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    BitAnd,
    BitOr,
    BitXor,
    Shl,
    Shr,
}

impl BinOp {
    pub const ALL: [BinOp; 16] = [
        BinOp::And,
        BinOp::Or,
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Eq,
        BinOp::Ne,
        BinOp::Lt,
        BinOp::Le,
        BinOp::Gt,
        BinOp::Ge,
        BinOp::BitAnd,
        BinOp::BitOr,
        BinOp::BitXor,
        BinOp::Shl,
        BinOp::Shr,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::BitAnd => "&",
            BinOp::BitOr => "|",
            BinOp::BitXor => "^",
            BinOp::Shl => "<<",
            BinOp::Shr => ">>",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Bound {
    Var(String),
    Lit(u64),
    /// `b - n` with `n >= 1`.
    Minus(String, u64),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Call {
    pub func: String,
    pub bound: Option<Bound>,
    pub args: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Lit(Literal),
    Var(String),
    Pair(String, String),
    /// Projection, index 1 or 2.
    Proj(u8, String),
    Unary(UnOp, String),
    Binary(BinOp, String, String),
    Alloc(TypeExpr),
    Call(Call),
}

impl Expr {
    /// Variables read by the expression, in order.
    pub fn vars(&self) -> Vec<&str> {
        match self {
            Expr::Lit(_) | Expr::Alloc(_) => vec![],
            Expr::Var(x) | Expr::Proj(_, x) | Expr::Unary(_, x) => vec![x],
            Expr::Pair(a, b) | Expr::Binary(_, a, b) => vec![a, b],
            Expr::Call(c) => c.args.iter().map(|s| s.as_str()).collect(),
        }
    }

    pub fn map_vars(&mut self, f: &mut impl FnMut(&mut String)) {
        match self {
            Expr::Lit(_) | Expr::Alloc(_) => {}
            Expr::Var(x) | Expr::Proj(_, x) | Expr::Unary(_, x) => f(x),
            Expr::Pair(a, b) | Expr::Binary(_, a, b) => {
                f(a);
                f(b);
            }
            Expr::Call(c) => c.args.iter_mut().for_each(f),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum StmtKind {
    Skip,
    Seq(Vec<Stmt>),
    Assign(String, Expr),
    UnAssign(String, Expr),
    Swap(String, String),
    MemSwap(String, String),
    If(String, Box<Stmt>),
    Return(String),
}

impl Stmt {
    pub fn new(kind: StmtKind) -> Stmt {
        Stmt { kind, span: Span::default() }
    }

    pub fn at(kind: StmtKind, span: Span) -> Stmt {
        Stmt { kind, span }
    }

    pub fn skip() -> Stmt {
        Stmt::new(StmtKind::Skip)
    }

    pub fn seq(items: Vec<Stmt>) -> Stmt {
        Stmt::new(StmtKind::Seq(items))
    }

    pub fn assign(x: impl Into<String>, e: Expr) -> Stmt {
        Stmt::new(StmtKind::Assign(x.into(), e))
    }

    pub fn unassign(x: impl Into<String>, e: Expr) -> Stmt {
        Stmt::new(StmtKind::UnAssign(x.into(), e))
    }

    pub fn swap(a: impl Into<String>, b: impl Into<String>) -> Stmt {
        Stmt::new(StmtKind::Swap(a.into(), b.into()))
    }

    pub fn memswap(a: impl Into<String>, b: impl Into<String>) -> Stmt {
        Stmt::new(StmtKind::MemSwap(a.into(), b.into()))
    }

    pub fn if_(c: impl Into<String>, body: Stmt) -> Stmt {
        Stmt::new(StmtKind::If(c.into(), Box::new(body)))
    }

    /// Number of atomic statements, counting nested bodies.
    pub fn size(&self) -> usize {
        match &self.kind {
            StmtKind::Seq(v) => v.iter().map(Stmt::size).sum(),
            StmtKind::If(_, b) => 1 + b.size(),
            _ => 1,
        }
    }

    /// Free variables: those read or written before being bound inside `self`.
    pub fn free_vars(&self) -> BTreeSet<String> {
        fn use_var(x: &str, free: &mut BTreeSet<String>, bound: &BTreeSet<String>) {
            if !bound.contains(x) {
                free.insert(x.to_string());
            }
        }
        fn go(s: &Stmt, free: &mut BTreeSet<String>, bound: &mut BTreeSet<String>) {
            match &s.kind {
                StmtKind::Skip => {}
                StmtKind::Seq(v) => v.iter().for_each(|s| go(s, free, bound)),
                StmtKind::Assign(x, e) => {
                    for v in e.vars() {
                        use_var(v, free, bound);
                    }
                    bound.insert(x.clone());
                }
                StmtKind::UnAssign(x, e) => {
                    for v in e.vars() {
                        use_var(v, free, bound);
                    }
                    use_var(x, free, bound);
                    bound.remove(x);
                }
                StmtKind::Swap(a, b) | StmtKind::MemSwap(a, b) => {
                    use_var(a, free, bound);
                    use_var(b, free, bound);
                }
                StmtKind::If(c, body) => {
                    use_var(c, free, bound);
                    go(body, free, bound);
                }
                StmtKind::Return(x) => use_var(x, free, bound),
            }
        }
        let mut free = BTreeSet::new();
        go(self, &mut free, &mut BTreeSet::new());
        free
    }

    /// Flatten nested sequences into a single level.
    pub fn flatten(self) -> Vec<Stmt> {
        match self.kind {
            StmtKind::Seq(v) => v.into_iter().flat_map(Stmt::flatten).collect(),
            _ => vec![self],
        }
    }

    pub fn walk(&self, f: &mut impl FnMut(&Stmt)) {
        f(self);
        match &self.kind {
            StmtKind::Seq(v) => v.iter().for_each(|s| s.walk(f)),
            StmtKind::If(_, b) => b.walk(f),
            _ => {}
        }
    }

    pub fn walk_mut(&mut self, f: &mut impl FnMut(&mut Stmt)) {
        f(self);
        match &mut self.kind {
            StmtKind::Seq(v) => v.iter_mut().for_each(|s| s.walk_mut(f)),
            StmtKind::If(_, b) => b.walk_mut(f),
            _ => {}
        }
    }

    /// Rename every variable occurrence.
    pub fn rename(&mut self, f: &mut impl FnMut(&mut String)) {
        self.walk_mut(&mut |s| match &mut s.kind {
            StmtKind::Assign(x, e) | StmtKind::UnAssign(x, e) => {
                f(x);
                e.map_vars(f);
            }
            StmtKind::Swap(a, b) | StmtKind::MemSwap(a, b) => {
                f(a);
                f(b);
            }
            StmtKind::If(c, _) => f(c),
            StmtKind::Return(x) => f(x),
            StmtKind::Skip | StmtKind::Seq(_) => {}
        });
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Param {
    pub name: String,
    pub ty: TypeExpr,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FunDecl {
    pub name: String,
    pub bound: Option<String>,
    pub params: Vec<Param>,
    pub ret: TypeExpr,
    pub body: Stmt,
    pub span: Span,
}

impl FunDecl {
    /// Body statements without the final `return`, and the returned variable.
    pub fn split_return(&self) -> (Vec<Stmt>, Option<String>) {
        let mut items = self.body.clone().flatten();
        if let Some(StmtKind::Return(x)) = items.last().map(|s| s.kind.clone()) {
            items.pop();
            return (items, Some(x));
        }
        (items, None)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TypeDecl {
    pub name: String,
    pub ty: TypeExpr,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct KernelProgram {
    pub types: Vec<TypeDecl>,
    pub funcs: Vec<FunDecl>,
}

impl KernelProgram {
    pub fn func(&self, name: &str) -> Option<&FunDecl> {
        self.funcs.iter().find(|f| f.name == name)
    }

    pub fn main(&self) -> Option<&FunDecl> {
        self.func("main")
    }
}
