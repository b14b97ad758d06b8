//! Surface AST, as written in `.twr` files.

use super::kernel::{BinOp, Bound, UnOp};
use super::Span;
use crate::types::TypeExpr;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SurfaceProgram {
    pub items: Vec<Item>,
}

impl SurfaceProgram {
    pub fn functions(&self) -> impl Iterator<Item = &SFun> {
        self.items.iter().filter_map(|i| match i {
            Item::Fun(f) => Some(f),
            Item::Type(_) => None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Item {
    Type(STypeDecl),
    Fun(SFun),
}

/// `type name = τ;`. Named references inside τ are `TypeExpr::Var`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct STypeDecl {
    pub name: String,
    pub ty: TypeExpr,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SFun {
    pub name: String,
    pub bound: Option<String>,
    pub params: Vec<(String, TypeExpr)>,
    pub ret: Option<TypeExpr>,
    pub body: Vec<SStmt>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Pattern {
    Var(String),
    Unit,
    Num(u64),
    Bool(bool),
    Null,
    Pair(Box<Pattern>, Box<Pattern>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dir {
    /// `<-`
    Assign,
    /// `->`
    UnAssign,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SStmt {
    Skip(Span),
    Let { pat: Pattern, dir: Dir, expr: SExpr, span: Span },
    Swap(String, String, Span),
    MemSwap(String, String, Span),
    If { cond: SExpr, then: Vec<SStmt>, els: Option<Vec<SStmt>>, span: Span },
    With { with: Vec<SStmt>, body: Vec<SStmt>, span: Span },
    Return(SExpr, Span),
}

impl SStmt {
    pub fn span(&self) -> Span {
        match self {
            SStmt::Skip(s) | SStmt::Swap(_, _, s) | SStmt::MemSwap(_, _, s) | SStmt::Return(_, s) => *s,
            SStmt::Let { span, .. } | SStmt::If { span, .. } | SStmt::With { span, .. } => *span,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SExpr {
    pub kind: SExprKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SExprKind {
    Num(u64),
    Bool(bool),
    Null,
    Unit,
    Var(String),
    Pair(Box<SExpr>, Box<SExpr>),
    Proj(u8, Box<SExpr>),
    Unary(UnOp, Box<SExpr>),
    Binary(BinOp, Box<SExpr>, Box<SExpr>),
    Alloc(TypeExpr),
    /// `default<τ>`; `None` is written `default<_>` and inferred.
    Default(Option<TypeExpr>),
    Call { func: String, bound: Option<Bound>, args: Vec<SExpr> },
}
