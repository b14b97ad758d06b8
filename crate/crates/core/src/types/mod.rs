//! Object-language types: formation, equi-recursive equivalence, defaults,
//! and the checker for kernel programs.

mod check;
mod unify;

pub use check::{
    check_expr_in, check_program, check_stmt_in, modified, CheckOptions, Context, FunSig, FunctionContext, TypeError,
};
pub use unify::Unifier;

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use crate::interp::Value;
use crate::syntax::kernel::Literal;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TypeExpr {
    /// A type variable, or a named type before resolution.
    Var(String),
    Unit,
    UInt,
    Bool,
    Pair(Box<TypeExpr>, Box<TypeExpr>),
    /// `ptr<τ>`
    Ptr(Box<TypeExpr>),
    /// `μt. τ`
    Ind(String, Box<TypeExpr>),
    /// Placeholder resolved by inference during elaboration.
    Hole(u32),
}

impl TypeExpr {
    pub fn pair(a: TypeExpr, b: TypeExpr) -> TypeExpr {
        TypeExpr::Pair(Box::new(a), Box::new(b))
    }

    pub fn ptr(a: TypeExpr) -> TypeExpr {
        TypeExpr::Ptr(Box::new(a))
    }

    pub fn ind(t: impl Into<String>, body: TypeExpr) -> TypeExpr {
        TypeExpr::Ind(t.into(), Box::new(body))
    }

    /// `μt.(uint × ptr<t>)`
    pub fn list() -> TypeExpr {
        TypeExpr::ind("list", TypeExpr::pair(TypeExpr::UInt, TypeExpr::ptr(TypeExpr::Var("list".into()))))
    }

    /// Replace free occurrences of `t` by `with`. `with` must be closed.
    pub fn subst(&self, t: &str, with: &TypeExpr) -> TypeExpr {
        match self {
            TypeExpr::Var(s) if s == t => with.clone(),
            TypeExpr::Var(_) | TypeExpr::Unit | TypeExpr::UInt | TypeExpr::Bool | TypeExpr::Hole(_) => self.clone(),
            TypeExpr::Pair(a, b) => TypeExpr::pair(a.subst(t, with), b.subst(t, with)),
            TypeExpr::Ptr(a) => TypeExpr::ptr(a.subst(t, with)),
            TypeExpr::Ind(s, _) if s == t => self.clone(),
            TypeExpr::Ind(s, body) => TypeExpr::ind(s.clone(), body.subst(t, with)),
        }
    }

    /// One unfolding step at the head: `μt.τ ↦ τ[t := μt.τ]`.
    pub fn unfold(&self) -> TypeExpr {
        match self {
            TypeExpr::Ind(t, body) => body.subst(t, self),
            _ => self.clone(),
        }
    }

    /// Unfold until the head is not a `μ`. Stops on non-contractive types.
    pub fn whnf(&self) -> TypeExpr {
        let mut cur = self.clone();
        for _ in 0..64 {
            if !matches!(cur, TypeExpr::Ind(..)) {
                return cur;
            }
            cur = cur.unfold();
        }
        cur
    }

    /// Unfold every `μ` in the type once.
    pub fn unfold_all(&self) -> TypeExpr {
        match self {
            TypeExpr::Ind(..) => self.unfold(),
            TypeExpr::Pair(a, b) => TypeExpr::pair(a.unfold_all(), b.unfold_all()),
            TypeExpr::Ptr(a) => TypeExpr::ptr(a.unfold_all()),
            _ => self.clone(),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        match self {
            TypeExpr::Var(s) => BTreeSet::from([s.clone()]),
            TypeExpr::Unit | TypeExpr::UInt | TypeExpr::Bool | TypeExpr::Hole(_) => BTreeSet::new(),
            TypeExpr::Pair(a, b) => &a.free_vars() | &b.free_vars(),
            TypeExpr::Ptr(a) => a.free_vars(),
            TypeExpr::Ind(t, body) => {
                let mut s = body.free_vars();
                s.remove(t);
                s
            }
        }
    }

    pub fn has_holes(&self) -> bool {
        match self {
            TypeExpr::Hole(_) => true,
            TypeExpr::Pair(a, b) => a.has_holes() || b.has_holes(),
            TypeExpr::Ptr(a) | TypeExpr::Ind(_, a) => a.has_holes(),
            _ => false,
        }
    }

    /// Number of machine words in a value of this type.
    pub fn words(&self) -> usize {
        self.layout().len()
    }

    /// Kind of each machine word, in flattening order.
    pub fn layout(&self) -> Vec<WordKind> {
        let mut out = Vec::new();
        self.layout_into(&mut out, 0);
        out
    }

    fn layout_into(&self, out: &mut Vec<WordKind>, depth: usize) {
        match self {
            TypeExpr::Unit | TypeExpr::Var(_) | TypeExpr::Hole(_) => {}
            TypeExpr::UInt => out.push(WordKind::Word),
            TypeExpr::Bool => out.push(WordKind::Bit),
            TypeExpr::Ptr(_) => out.push(WordKind::Word),
            TypeExpr::Pair(a, b) => {
                a.layout_into(out, depth);
                b.layout_into(out, depth);
            }
            TypeExpr::Ind(..) => {
                if depth < 64 {
                    self.unfold().layout_into(out, depth + 1);
                }
            }
        }
    }
}

/// A word of a flattened value: a full k-bit word or a single bit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WordKind {
    Word,
    Bit,
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeExpr::Var(s) => write!(f, "{s}"),
            TypeExpr::Unit => write!(f, "()"),
            TypeExpr::UInt => write!(f, "uint"),
            TypeExpr::Bool => write!(f, "bool"),
            TypeExpr::Pair(a, b) => write!(f, "({a}, {b})"),
            TypeExpr::Ptr(a) => write!(f, "ptr<{a}>"),
            TypeExpr::Ind(t, body) => write!(f, "mu {t}. {body}"),
            TypeExpr::Hole(_) => write!(f, "_"),
        }
    }
}

/// Variables of `τ` not guarded by a pointer.
pub fn exposed(ty: &TypeExpr) -> BTreeSet<String> {
    match ty {
        TypeExpr::Var(t) => BTreeSet::from([t.clone()]),
        TypeExpr::Unit | TypeExpr::UInt | TypeExpr::Bool | TypeExpr::Hole(_) | TypeExpr::Ptr(_) => BTreeSet::new(),
        TypeExpr::Pair(a, b) => &exposed(a) | &exposed(b),
        TypeExpr::Ind(t, body) => {
            let mut s = exposed(body);
            s.remove(t);
            s
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum WfError {
    #[error("unbound type variable `{0}`")]
    Unbound(String),
    #[error("type variable `{var}` is exposed in `{ty}`; it may only occur under a pointer")]
    Exposed { var: String, ty: TypeExpr },
}

impl WfError {
    pub fn rule(&self) -> &'static str {
        match self {
            WfError::Unbound(_) => "TypOk-Var",
            WfError::Exposed { .. } => "TypOk-Ind",
        }
    }
}

/// Type formation: `Δ ⊢ τ ok`.
pub fn type_wf(delta: &BTreeSet<String>, ty: &TypeExpr) -> Result<(), WfError> {
    match ty {
        TypeExpr::Var(t) => {
            if delta.contains(t) {
                Ok(())
            } else {
                Err(WfError::Unbound(t.clone()))
            }
        }
        TypeExpr::Unit | TypeExpr::UInt | TypeExpr::Bool | TypeExpr::Hole(_) => Ok(()),
        TypeExpr::Pair(a, b) => {
            type_wf(delta, a)?;
            type_wf(delta, b)
        }
        TypeExpr::Ptr(a) => type_wf(delta, a),
        TypeExpr::Ind(t, body) => {
            if exposed(body).contains(t) {
                return Err(WfError::Exposed { var: t.clone(), ty: ty.clone() });
            }
            let mut inner = delta.clone();
            inner.insert(t.clone());
            type_wf(&inner, body)
        }
    }
}

/// Equi-recursive type equivalence, decided by bisimulation over unfoldings.
pub fn type_equiv(a: &TypeExpr, b: &TypeExpr) -> bool {
    let mut seen = HashSet::new();
    equiv_rec(a, b, &mut seen)
}

fn equiv_rec(a: &TypeExpr, b: &TypeExpr, seen: &mut HashSet<(TypeExpr, TypeExpr)>) -> bool {
    if a == b {
        return true;
    }
    if !seen.insert((a.clone(), b.clone())) {
        return true;
    }
    match (a, b) {
        (TypeExpr::Ind(..), _) => equiv_rec(&a.unfold(), b, seen),
        (_, TypeExpr::Ind(..)) => equiv_rec(a, &b.unfold(), seen),
        (TypeExpr::Pair(a1, a2), TypeExpr::Pair(b1, b2)) => equiv_rec(a1, b1, seen) && equiv_rec(a2, b2, seen),
        (TypeExpr::Ptr(x), TypeExpr::Ptr(y)) => equiv_rec(x, y, seen),
        _ => false,
    }
}

/// Default value of a type as a kernel literal.
pub fn default_literal(ty: &TypeExpr) -> Literal {
    match ty {
        TypeExpr::Unit | TypeExpr::Var(_) => Literal::Unit,
        TypeExpr::UInt => Literal::Num(0),
        TypeExpr::Bool => Literal::Bool(false),
        TypeExpr::Ptr(t) => Literal::Null((**t).clone()),
        TypeExpr::Pair(a, b) => Literal::Pair(Box::new(default_literal(a)), Box::new(default_literal(b))),
        TypeExpr::Ind(..) => default_literal(&ty.whnf()),
        TypeExpr::Hole(_) => Literal::Default(ty.clone()),
    }
}

/// Default value of a type.
pub fn default_value(ty: &TypeExpr) -> Value {
    Value::from_literal(&default_literal(ty))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(name: &str) -> TypeExpr {
        TypeExpr::Var(name.into())
    }

    #[test]
    fn list_is_well_formed() {
        assert!(type_wf(&BTreeSet::new(), &TypeExpr::list()).is_ok());
    }

    #[test]
    fn exposed_recursion_is_rejected() {
        let bad = TypeExpr::ind("t", TypeExpr::pair(TypeExpr::UInt, t("t")));
        let err = type_wf(&BTreeSet::new(), &bad).unwrap_err();
        assert_eq!(err.rule(), "TypOk-Ind");
    }

    #[test]
    fn uint_is_well_formed() {
        assert!(type_wf(&BTreeSet::new(), &TypeExpr::UInt).is_ok());
    }

    #[test]
    fn list_equals_its_unfolding() {
        let l = TypeExpr::list();
        let unfolded = TypeExpr::pair(TypeExpr::UInt, TypeExpr::ptr(l.clone()));
        assert!(type_equiv(&l, &unfolded));
        assert!(type_equiv(&unfolded, &l));
    }

    #[test]
    fn distinct_base_types_differ() {
        assert!(!type_equiv(&TypeExpr::UInt, &TypeExpr::Bool));
    }

    #[test]
    fn differently_rolled_pointer_chains_are_equal() {
        let a = TypeExpr::ind("t", TypeExpr::ptr(t("t")));
        let b = TypeExpr::ind("s", TypeExpr::ptr(TypeExpr::ptr(t("s"))));
        assert!(type_equiv(&a, &b));
    }

    #[test]
    fn defaults_follow_the_table() {
        assert_eq!(default_value(&TypeExpr::ptr(TypeExpr::list())), Value::Null(TypeExpr::list().into()));
        assert_eq!(
            default_value(&TypeExpr::pair(TypeExpr::UInt, TypeExpr::Bool)),
            Value::pair(Value::UInt(0), Value::Bool(false))
        );
        assert_eq!(default_value(&TypeExpr::list()), Value::pair(Value::UInt(0), Value::Null(TypeExpr::list().into())));
    }

    #[test]
    fn layout_counts_words() {
        assert_eq!(TypeExpr::list().words(), 2);
        assert_eq!(TypeExpr::pair(TypeExpr::Bool, TypeExpr::Unit).layout(), vec![WordKind::Bit]);
    }
}
