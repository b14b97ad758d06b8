//! Unification of types with holes, modulo equi-recursive unfolding.

use std::collections::HashSet;

use super::TypeExpr;

#[derive(Clone, Debug, Default)]
pub struct Unifier {
    slots: Vec<Option<TypeExpr>>,
}

impl Unifier {
    pub fn new() -> Unifier {
        Unifier::default()
    }

    fn slot(&mut self, id: u32) -> &mut Option<TypeExpr> {
        let i = id as usize;
        if i >= self.slots.len() {
            self.slots.resize(i + 1, None);
        }
        &mut self.slots[i]
    }

    fn lookup(&self, id: u32) -> Option<&TypeExpr> {
        self.slots.get(id as usize).and_then(|s| s.as_ref())
    }

    /// Follow bound holes at the head.
    pub fn shallow(&self, t: &TypeExpr) -> TypeExpr {
        let mut cur = t.clone();
        while let TypeExpr::Hole(i) = cur {
            match self.lookup(i) {
                Some(next) => cur = next.clone(),
                None => break,
            }
        }
        cur
    }

    /// Head-normal form: bound holes followed and `μ` unfolded.
    pub fn head(&self, t: &TypeExpr) -> TypeExpr {
        let mut cur = self.shallow(t);
        for _ in 0..64 {
            match cur {
                TypeExpr::Ind(..) => cur = self.shallow(&cur.unfold()),
                _ => break,
            }
        }
        cur
    }

    /// Substitute every bound hole.
    pub fn resolve(&self, t: &TypeExpr) -> TypeExpr {
        self.resolve_depth(t, 0)
    }

    fn resolve_depth(&self, t: &TypeExpr, depth: usize) -> TypeExpr {
        if depth > 256 {
            return t.clone();
        }
        match t {
            TypeExpr::Hole(i) => match self.lookup(*i) {
                Some(next) => self.resolve_depth(next, depth + 1),
                None => t.clone(),
            },
            TypeExpr::Pair(a, b) => TypeExpr::pair(self.resolve_depth(a, depth + 1), self.resolve_depth(b, depth + 1)),
            TypeExpr::Ptr(a) => TypeExpr::ptr(self.resolve_depth(a, depth + 1)),
            TypeExpr::Ind(s, body) => TypeExpr::ind(s.clone(), self.resolve_depth(body, depth + 1)),
            _ => t.clone(),
        }
    }

    fn occurs(&self, id: u32, t: &TypeExpr) -> bool {
        self.resolve(t).has_hole(id)
    }

    pub fn unify(&mut self, a: &TypeExpr, b: &TypeExpr) -> bool {
        let mut seen = HashSet::new();
        self.unify_rec(a, b, &mut seen)
    }

    fn unify_rec(&mut self, a: &TypeExpr, b: &TypeExpr, seen: &mut HashSet<(TypeExpr, TypeExpr)>) -> bool {
        let a = self.shallow(a);
        let b = self.shallow(b);
        if a == b {
            return true;
        }
        if let TypeExpr::Hole(i) = a {
            if self.occurs(i, &b) {
                return false;
            }
            *self.slot(i) = Some(b);
            return true;
        }
        if let TypeExpr::Hole(j) = b {
            if self.occurs(j, &a) {
                return false;
            }
            *self.slot(j) = Some(a);
            return true;
        }
        if !seen.insert((a.clone(), b.clone())) {
            return true;
        }
        match (&a, &b) {
            (TypeExpr::Ind(..), _) => self.unify_rec(&a.unfold(), &b, seen),
            (_, TypeExpr::Ind(..)) => self.unify_rec(&a, &b.unfold(), seen),
            (TypeExpr::Pair(a1, a2), TypeExpr::Pair(b1, b2)) => {
                self.unify_rec(a1, b1, seen) && self.unify_rec(a2, b2, seen)
            }
            (TypeExpr::Ptr(x), TypeExpr::Ptr(y)) => self.unify_rec(x, y, seen),
            _ => false,
        }
    }
}

impl TypeExpr {
    pub fn has_hole(&self, id: u32) -> bool {
        match self {
            TypeExpr::Hole(i) => *i == id,
            TypeExpr::Pair(a, b) => a.has_hole(id) || b.has_hole(id),
            TypeExpr::Ptr(a) | TypeExpr::Ind(_, a) => a.has_hole(id),
            _ => false,
        }
    }

    /// Replace every hole by `()`.
    pub fn fill_holes(&self) -> TypeExpr {
        match self {
            TypeExpr::Hole(_) => TypeExpr::Unit,
            TypeExpr::Pair(a, b) => TypeExpr::pair(a.fill_holes(), b.fill_holes()),
            TypeExpr::Ptr(a) => TypeExpr::ptr(a.fill_holes()),
            TypeExpr::Ind(s, a) => TypeExpr::ind(s.clone(), a.fill_holes()),
            _ => self.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn holes_bind_through_unfolding() {
        let mut u = Unifier::new();
        let h = TypeExpr::ptr(TypeExpr::Hole(0));
        assert!(u.unify(&h, &TypeExpr::ptr(TypeExpr::list())));
        assert_eq!(u.resolve(&h), TypeExpr::ptr(TypeExpr::list()));
        assert!(u.unify(&TypeExpr::Hole(1), &TypeExpr::pair(TypeExpr::UInt, TypeExpr::ptr(TypeExpr::list()))));
        assert!(u.unify(&TypeExpr::Hole(1), &TypeExpr::list()));
    }

    #[test]
    fn occurs_check_fails() {
        let mut u = Unifier::new();
        assert!(!u.unify(&TypeExpr::Hole(0), &TypeExpr::ptr(TypeExpr::Hole(0))));
    }
}
