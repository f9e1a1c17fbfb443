//! Formula AST for MSO+U over set variables, free-variable computation,
//! and the standard syntactic sugar (or, implies, forall, empty, sing, big, ...).

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

/// A set variable (uppercase-initial by convention).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarName(String);

impl VarName {
    pub fn new(name: impl Into<String>) -> Self {
        let name = name.into();
        assert!(!name.is_empty(), "variable name must be nonempty");
        VarName(name)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for VarName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for VarName {
    fn from(s: &str) -> Self {
        VarName::new(s)
    }
}

/// A tree label (lowercase-initial by convention). Membership in a configured
/// alphabet is checked at use sites, not at construction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(String);

impl Label {
    pub fn new(name: impl Into<String>) -> Self {
        let name = name.into();
        assert!(!name.is_empty(), "label must be nonempty");
        Label(name)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Label {
    fn from(s: &str) -> Self {
        Label::new(s)
    }
}

/// An MSO+U formula. There are no first-order variables; all quantification
/// is over sets of tree nodes.
///
/// `Child(i, x, y)` holds when both variables denote singletons and the
/// `y`-node is the `i`-th child of the `x`-node. The index may exceed the
/// configured maximal arity; such atoms are legal and simply never hold on
/// conforming trees.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    /// `a(X)`: every node in the set is labeled `a`.
    LabelAtom(Label, VarName),
    /// `X sub Y`: set inclusion.
    Subset(VarName, VarName),
    /// `childi(X, Y)`: the `Y`-singleton is the `i`-th child of the `X`-singleton.
    Child(u32, VarName, VarName),
    And(Box<Formula>, Box<Formula>),
    Not(Box<Formula>),
    Exists(VarName, Box<Formula>),
    /// The unbounding quantifier: the body holds for finite witness sets of
    /// arbitrarily large cardinality.
    Unbound(VarName, Box<Formula>),
}

impl Formula {
    pub fn label_atom(label: impl Into<Label>, var: impl Into<VarName>) -> Self {
        Formula::LabelAtom(label.into(), var.into())
    }

    pub fn subset(x: impl Into<VarName>, y: impl Into<VarName>) -> Self {
        Formula::Subset(x.into(), y.into())
    }

    pub fn child(i: u32, x: impl Into<VarName>, y: impl Into<VarName>) -> Self {
        assert!(i >= 1, "child index must be >= 1");
        Formula::Child(i, x.into(), y.into())
    }

    pub fn and(lhs: Formula, rhs: Formula) -> Self {
        Formula::And(Box::new(lhs), Box::new(rhs))
    }

    pub fn not(inner: Formula) -> Self {
        Formula::Not(Box::new(inner))
    }

    pub fn exists(var: impl Into<VarName>, body: Formula) -> Self {
        Formula::Exists(var.into(), Box::new(body))
    }

    pub fn unbound(var: impl Into<VarName>, body: Formula) -> Self {
        Formula::Unbound(var.into(), Box::new(body))
    }

    /// Conjunction of a nonempty list, folded as a balanced tree so that
    /// large synthesized alternatives stay shallow.
    pub fn and_all(parts: Vec<Formula>) -> Formula {
        assert!(!parts.is_empty(), "conjunction of an empty list");
        balanced_fold(parts, Formula::and)
    }

    /// Disjunction of a nonempty list, folded as a balanced tree.
    pub fn or_all(parts: Vec<Formula>) -> Formula {
        assert!(!parts.is_empty(), "disjunction of an empty list");
        balanced_fold(parts, Formula::or)
    }

    /// The set of free variables; `Exists` and `Unbound` bind their variable.
    pub fn free_vars(&self) -> BTreeSet<VarName> {
        let mut out = BTreeSet::new();
        self.collect_free_vars(&mut out);
        out
    }

    fn collect_free_vars(&self, out: &mut BTreeSet<VarName>) {
        match self {
            Formula::LabelAtom(_, x) => {
                out.insert(x.clone());
            }
            Formula::Subset(x, y) | Formula::Child(_, x, y) => {
                out.insert(x.clone());
                out.insert(y.clone());
            }
            Formula::And(l, r) => {
                l.collect_free_vars(out);
                r.collect_free_vars(out);
            }
            Formula::Not(f) => f.collect_free_vars(out),
            Formula::Exists(v, body) | Formula::Unbound(v, body) => {
                let mut inner = BTreeSet::new();
                body.collect_free_vars(&mut inner);
                inner.remove(v);
                out.extend(inner);
            }
        }
    }

    /// Number of AST nodes.
    pub fn node_count(&self) -> usize {
        match self {
            Formula::LabelAtom(..) | Formula::Subset(..) | Formula::Child(..) => 1,
            Formula::And(l, r) => 1 + l.node_count() + r.node_count(),
            Formula::Not(f) | Formula::Exists(_, f) | Formula::Unbound(_, f) => {
                1 + f.node_count()
            }
        }
    }

    /// Maximal nesting depth of `Exists`/`Unbound` quantifiers.
    pub fn quantifier_depth(&self) -> usize {
        match self {
            Formula::LabelAtom(..) | Formula::Subset(..) | Formula::Child(..) => 0,
            Formula::And(l, r) => l.quantifier_depth().max(r.quantifier_depth()),
            Formula::Not(f) => f.quantifier_depth(),
            Formula::Exists(_, f) | Formula::Unbound(_, f) => 1 + f.quantifier_depth(),
        }
    }

    /// True iff the formula contains no `Unbound` quantifier.
    pub fn is_mso(&self) -> bool {
        match self {
            Formula::LabelAtom(..) | Formula::Subset(..) | Formula::Child(..) => true,
            Formula::And(l, r) => l.is_mso() && r.is_mso(),
            Formula::Not(f) | Formula::Exists(_, f) => f.is_mso(),
            Formula::Unbound(..) => false,
        }
    }

    // --- syntactic sugar; each desugars to the core constructors ---

    /// `or(f, g) = !(!f & !g)`
    pub fn or(lhs: Formula, rhs: Formula) -> Formula {
        Formula::not(Formula::and(Formula::not(lhs), Formula::not(rhs)))
    }

    /// `implies(f, g) = !(f & !g)`
    pub fn implies(lhs: Formula, rhs: Formula) -> Formula {
        Formula::not(Formula::and(lhs, Formula::not(rhs)))
    }

    /// `forall X. f = !ex X. !f`
    pub fn forall(var: impl Into<VarName>, body: Formula) -> Formula {
        Formula::not(Formula::exists(var, Formula::not(body)))
    }

    /// `empty(X)`: the set is empty, expressed as "X is included in every set".
    pub fn empty(x: impl Into<VarName>) -> Formula {
        let x = x.into();
        let fresh = fresh_var(&[x.clone()]);
        Formula::forall(fresh.clone(), Formula::Subset(x, fresh))
    }

    /// `big(X)`: the set has at least two elements (it has a nonempty proper subset).
    pub fn big(x: impl Into<VarName>) -> Formula {
        let x = x.into();
        let y = fresh_var(&[x.clone()]);
        Formula::exists(
            y.clone(),
            Formula::and_all(vec![
                Formula::Subset(y.clone(), x.clone()),
                Formula::not(Formula::Subset(x, y.clone())),
                Formula::not(Formula::empty(y)),
            ]),
        )
    }

    /// `sing(X) = !empty(X) & !big(X)`
    pub fn sing(x: impl Into<VarName>) -> Formula {
        let x = x.into();
        Formula::and(
            Formula::not(Formula::empty(x.clone())),
            Formula::not(Formula::big(x)),
        )
    }

    /// "The `Y`-singleton is some child of the `X`-singleton":
    /// `child1(X,Y) | ... | childr(X,Y)` up to the given maximal arity.
    pub fn child_any(r_max: usize, x: impl Into<VarName>, y: impl Into<VarName>) -> Result<Formula> {
        if r_max < 1 {
            return Err(Error::InvalidArgument(
                "child_any requires maximal arity >= 1".into(),
            ));
        }
        let x = x.into();
        let y = y.into();
        let parts = (1..=r_max as u32)
            .map(|i| Formula::Child(i, x.clone(), y.clone()))
            .collect();
        Ok(Formula::or_all(parts))
    }

    /// Every node of the set has its label in the given list.
    pub fn label_in(labels: &[Label], x: impl Into<VarName>) -> Result<Formula> {
        if labels.is_empty() {
            return Err(Error::InvalidArgument("label_in requires labels".into()));
        }
        let x = x.into();
        let y = fresh_var(&[x.clone()]);
        let guard = Formula::and(Formula::sing(y.clone()), Formula::Subset(y.clone(), x));
        let alts = labels
            .iter()
            .map(|a| Formula::LabelAtom(a.clone(), y.clone()))
            .collect();
        Ok(Formula::forall(
            y,
            Formula::implies(guard, Formula::or_all(alts)),
        ))
    }
}

fn balanced_fold(mut parts: Vec<Formula>, join: fn(Formula, Formula) -> Formula) -> Formula {
    debug_assert!(!parts.is_empty());
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(first) = it.next() {
            match it.next() {
                Some(second) => next.push(join(first, second)),
                None => next.push(first),
            }
        }
        parts = next;
    }
    parts.pop().expect("nonempty")
}

/// Picks the first name of the form `Y`, `Y1`, `Y2`, ... that does not occur
/// in `avoid`. Used by every formula synthesizer so that outputs are
/// deterministic.
pub fn fresh_var(avoid: &[VarName]) -> VarName {
    let taken: BTreeSet<&str> = avoid.iter().map(|v| v.as_str()).collect();
    if !taken.contains("Y") {
        return VarName::new("Y");
    }
    let mut k = 1usize;
    loop {
        let cand = format!("Y{k}");
        if !taken.contains(cand.as_str()) {
            return VarName::new(cand);
        }
        k += 1;
    }
}

/// Variant of [`fresh_var`] drawing several distinct fresh names at once.
pub fn fresh_vars(avoid: &[VarName], count: usize) -> Vec<VarName> {
    let mut avoid: Vec<VarName> = avoid.to_vec();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let v = fresh_var(&avoid);
        avoid.push(v.clone());
        out.push(v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> VarName {
        VarName::new(s)
    }

    #[test]
    fn free_vars_of_atom() {
        let f = Formula::label_atom("b", "X");
        assert_eq!(f.free_vars(), BTreeSet::from([v("X")]));
    }

    #[test]
    fn exists_binds_its_variable() {
        let f = Formula::exists("X", Formula::subset("X", "Y"));
        assert_eq!(f.free_vars(), BTreeSet::from([v("Y")]));
    }

    #[test]
    fn unbound_binds_its_variable() {
        let f = Formula::unbound(
            "X",
            Formula::and(Formula::label_atom("b", "X"), Formula::subset("X", "Y")),
        );
        assert_eq!(f.free_vars(), BTreeSet::from([v("Y")]));
    }

    #[test]
    fn empty_desugars_with_fresh_variable() {
        // empty(X) = !ex Y. !(X sub Y)
        let f = Formula::empty("X");
        let expected = Formula::not(Formula::exists(
            "Y",
            Formula::not(Formula::subset("X", "Y")),
        ));
        assert_eq!(f, expected);
        assert_eq!(f.free_vars(), BTreeSet::from([v("X")]));
    }

    #[test]
    fn empty_avoids_collision_with_argument() {
        let f = Formula::empty("Y");
        let expected = Formula::not(Formula::exists(
            "Y1",
            Formula::not(Formula::subset("Y", "Y1")),
        ));
        assert_eq!(f, expected);
        assert_eq!(f.free_vars(), BTreeSet::from([v("Y")]));
    }

    #[test]
    fn sing_is_not_empty_and_not_big() {
        let f = Formula::sing("X");
        let expected = Formula::and(
            Formula::not(Formula::empty("X")),
            Formula::not(Formula::big("X")),
        );
        assert_eq!(f, expected);
        assert_eq!(f.free_vars(), BTreeSet::from([v("X")]));
    }

    #[test]
    fn child_any_rejects_zero_arity() {
        assert!(Formula::child_any(0, "X", "Y").is_err());
        let f = Formula::child_any(2, "X", "Y").unwrap();
        assert_eq!(
            f,
            Formula::or(Formula::child(1, "X", "Y"), Formula::child(2, "X", "Y"))
        );
    }

    #[test]
    fn quantifier_binding_laws() {
        let body = Formula::and(Formula::label_atom("a", "X"), Formula::subset("Y", "Z"));
        let mut expect = body.free_vars();
        expect.remove(&v("X"));
        assert_eq!(Formula::exists("X", body.clone()).free_vars(), expect);
        assert_eq!(Formula::unbound("X", body).free_vars(), expect);
    }

    #[test]
    fn is_mso_detects_unbound() {
        assert!(!Formula::unbound("X", Formula::label_atom("b", "X")).is_mso());
        assert!(Formula::exists("X", Formula::label_atom("b", "X")).is_mso());
    }
}
