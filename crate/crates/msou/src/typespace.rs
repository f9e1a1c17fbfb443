//! Logical types of formulas: the type values themselves, truth extraction,
//! the potential type space size, reachable type spaces, and synthesis of
//! type-defining formulas.
//!
//! A type refines the truth value of a formula just enough to make it
//! compositional under tree formation: atoms carry their truth value (child
//! atoms a four-valued refinement), conjunction carries a pair, negation
//! carries the body's type, and a quantified formula carries two sets of
//! body types — those realized by some witness set, and those realized by
//! finite witness sets of unbounded cardinality.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::rc::Rc;

use num_bigint::BigUint;

use crate::compose::Composer;
use crate::config::Config;
use crate::error::{Error, Result};
use crate::formula::{fresh_var, Formula, Label, VarName};

/// The four-valued refinement carried by child atoms `childi(X,Y)`:
/// besides plain truth, it records the two situations that can still turn
/// into truth when the tree grows upward (both sets empty, or `X` empty
/// while `Y` holds exactly the root).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ChildVal {
    Tt,
    Empty,
    Root,
    Ff,
}

impl fmt::Display for ChildVal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChildVal::Tt => f.write_str("tt"),
            ChildVal::Empty => f.write_str("empty"),
            ChildVal::Root => f.write_str("root"),
            ChildVal::Ff => f.write_str("ff"),
        }
    }
}

/// A logical type. The shape mirrors a formula skeleton: `Bool` for label
/// and subset atoms, `Child4` for child atoms, `Pair` for conjunction, the
/// body's shape for negation, and `Quant` for either quantifier.
///
/// Values are canonical by construction: the derived ordering (constructor
/// tag first, then components, sets as sorted sequences) is total, and the
/// sets inside `Quant` are ordered sets.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PhType {
    Bool(bool),
    Child4(ChildVal),
    Pair(Box<PhType>, Box<PhType>),
    Quant(BTreeSet<PhType>, BTreeSet<PhType>),
}

impl PhType {
    pub fn tt() -> Self {
        PhType::Bool(true)
    }

    pub fn ff() -> Self {
        PhType::Bool(false)
    }

    pub fn pair(lhs: PhType, rhs: PhType) -> Self {
        PhType::Pair(Box::new(lhs), Box::new(rhs))
    }

    pub fn quant(
        exists_set: impl IntoIterator<Item = PhType>,
        unbounded_set: impl IntoIterator<Item = PhType>,
    ) -> Self {
        PhType::Quant(
            exists_set.into_iter().collect(),
            unbounded_set.into_iter().collect(),
        )
    }

    /// Checks that this type has the shape of `phi`.
    pub fn check_shape(&self, phi: &Formula) -> Result<()> {
        match (phi, self) {
            (Formula::LabelAtom(..) | Formula::Subset(..), PhType::Bool(_)) => Ok(()),
            (Formula::Child(..), PhType::Child4(_)) => Ok(()),
            (Formula::And(l, r), PhType::Pair(tl, tr)) => {
                tl.check_shape(l)?;
                tr.check_shape(r)
            }
            (Formula::Not(body), tau) => tau.check_shape(body),
            (Formula::Exists(_, body) | Formula::Unbound(_, body), PhType::Quant(s, su)) => {
                for sigma in s.iter().chain(su.iter()) {
                    sigma.check_shape(body)?;
                }
                Ok(())
            }
            (phi, tau) => Err(Error::ShapeMismatch(format!(
                "type {tau} does not fit formula {phi}"
            ))),
        }
    }

    /// True when every `Quant` position in the type has an empty second
    /// (unbounded) component. Every type of an actual finite tree is
    /// degenerate in this sense.
    pub fn has_empty_unbounded_components(&self) -> bool {
        match self {
            PhType::Bool(_) | PhType::Child4(_) => true,
            PhType::Pair(l, r) => {
                l.has_empty_unbounded_components() && r.has_empty_unbounded_components()
            }
            PhType::Quant(s, su) => {
                su.is_empty() && s.iter().all(PhType::has_empty_unbounded_components)
            }
        }
    }
}

impl fmt::Display for PhType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhType::Bool(true) => f.write_str("tt"),
            PhType::Bool(false) => f.write_str("ff"),
            PhType::Child4(v) => write!(f, "{v}"),
            PhType::Pair(l, r) => write!(f, "pair({l},{r})"),
            PhType::Quant(s, su) => {
                let fmt_set = |set: &BTreeSet<PhType>| {
                    let parts: Vec<String> = set.iter().map(|t| t.to_string()).collect();
                    parts.join(",")
                };
                write!(f, "q({{{}}},{{{}}})", fmt_set(s), fmt_set(su))
            }
        }
    }
}

/// Truth extraction: whether a formula holds is determined by its type.
///
/// Atoms are true exactly at `tt`; a conjunction is true when both
/// components are; negation flips the body; a quantified formula is true
/// when some type in the relevant component set (first for `ex`, second for
/// `U`) makes the body true.
pub fn tv(phi: &Formula, tau: &PhType) -> Result<bool> {
    match (phi, tau) {
        (Formula::LabelAtom(..) | Formula::Subset(..), PhType::Bool(b)) => Ok(*b),
        (Formula::Child(..), PhType::Child4(v)) => Ok(*v == ChildVal::Tt),
        (Formula::And(l, r), PhType::Pair(tl, tr)) => Ok(tv(l, tl)? && tv(r, tr)?),
        (Formula::Not(body), tau) => Ok(!tv(body, tau)?),
        (Formula::Exists(_, body), PhType::Quant(s, _)) => {
            for sigma in s {
                if tv(body, sigma)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        (Formula::Unbound(_, body), PhType::Quant(_, su)) => {
            for sigma in su {
                if tv(body, sigma)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        (phi, tau) => Err(Error::ShapeMismatch(format!(
            "type {tau} does not fit formula {phi}"
        ))),
    }
}

/// Size of the potential type space: 2 for boolean atoms, 4 for child
/// atoms, the product for conjunction, the body's size for negation, and
/// the square of the powerset size for quantifiers. Returns `None` as soon
/// as the result would exceed `max_bits` binary digits — already at
/// quantifier depth two the exact value can be too large to materialize.
pub fn potential_size_bounded(phi: &Formula, max_bits: u64) -> Option<BigUint> {
    let n = match phi {
        Formula::LabelAtom(..) | Formula::Subset(..) => BigUint::from(2u32),
        Formula::Child(..) => BigUint::from(4u32),
        Formula::And(l, r) => {
            let a = potential_size_bounded(l, max_bits)?;
            let b = potential_size_bounded(r, max_bits)?;
            a * b
        }
        Formula::Not(body) => potential_size_bounded(body, max_bits)?,
        Formula::Exists(_, body) | Formula::Unbound(_, body) => {
            let s = potential_size_bounded(body, max_bits)?;
            // (2^s)^2 = 1 << 2s
            let shift = (s * 2u32).try_into().ok().filter(|&b: &u64| b < max_bits)?;
            BigUint::from(1u32) << usize::try_from(shift).ok()?
        }
    };
    (n.bits() <= max_bits).then_some(n)
}

/// Exact potential type space size.
///
/// Panics when the value would not be representable (more than `usize::MAX`
/// bits); use [`potential_size_bounded`] when the input is not known to be
/// shallow.
pub fn potential_size(phi: &Formula) -> BigUint {
    potential_size_bounded(phi, usize::MAX as u64)
        .expect("potential type space size exceeds addressable memory")
}

/// The type of a single-node tree labeled `a` under any valuation whose
/// root membership set is `root_vars`.
pub fn leaf_type(
    phi: &Formula,
    a: &Label,
    root_vars: &BTreeSet<VarName>,
    config: &Config,
) -> Result<PhType> {
    Composer::new(phi.clone(), config)?.comp(a, root_vars, &[])
}

/// A formula's reachable type space for a fixed alphabet and maximal arity:
/// the least set containing all leaf types and closed under composition,
/// together with its truthy subset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeSpace {
    pub formula: Formula,
    pub config: Config,
    pub reachable: BTreeSet<PhType>,
    pub truthy: BTreeSet<PhType>,
}

impl TypeSpace {
    /// Position of a type in the canonically ordered reachable set.
    pub fn index_of(&self, tau: &PhType) -> Option<usize> {
        self.reachable.iter().position(|t| t == tau)
    }
}

/// Computes the reachable type space of `phi` by a least fixpoint: seed
/// with all leaf types, close under composition over all letters, arities,
/// and root membership sets.
pub fn reachable_types(phi: &Formula, config: &Config) -> Result<TypeSpace> {
    Analysis::new(phi.clone(), config)?.type_space()
}

/// A formula holding exactly in the trees and valuations of type `tau`.
pub fn type_formula(phi: &Formula, tau: &PhType, config: &Config) -> Result<Formula> {
    Analysis::new(phi.clone(), config)?.type_formula(tau)
}

/// A sentence holding exactly in the trees whose type under the empty
/// valuation is `tau`.
pub fn type_sentence(phi: &Formula, tau: &PhType, config: &Config) -> Result<Formula> {
    Analysis::new(phi.clone(), config)?.type_sentence(tau)
}

/// Shared machinery for type space computation and formula synthesis over
/// one formula: a composer plus a cache of reachable spaces per subformula.
pub struct Analysis<'c> {
    config: &'c Config,
    composer: Composer<'c>,
    spaces: RefCell<HashMap<Formula, Rc<Vec<PhType>>>>,
}

impl<'c> Analysis<'c> {
    pub fn new(phi: Formula, config: &'c Config) -> Result<Self> {
        Ok(Analysis {
            config,
            composer: Composer::new(phi, config)?,
            spaces: RefCell::new(HashMap::new()),
        })
    }

    pub fn formula(&self) -> &Formula {
        self.composer.formula()
    }

    pub fn composer(&self) -> &Composer<'c> {
        &self.composer
    }

    /// The reachable space of the root formula together with its truthy part.
    pub fn type_space(&self) -> Result<TypeSpace> {
        let phi = self.formula().clone();
        let reachable: BTreeSet<PhType> = self.space(&phi)?.iter().cloned().collect();
        let mut truthy = BTreeSet::new();
        for tau in &reachable {
            if tv(&phi, tau)? {
                truthy.insert(tau.clone());
            }
        }
        Ok(TypeSpace {
            formula: phi,
            config: self.config.clone(),
            reachable,
            truthy,
        })
    }

    /// The reachable space of a subformula, in canonical order.
    pub fn space(&self, psi: &Formula) -> Result<Rc<Vec<PhType>>> {
        if let Some(cached) = self.spaces.borrow().get(psi) {
            return Ok(Rc::clone(cached));
        }
        let space = Rc::new(self.compute_space(psi)?);
        self.spaces
            .borrow_mut()
            .insert(psi.clone(), Rc::clone(&space));
        Ok(space)
    }

    fn compute_space(&self, psi: &Formula) -> Result<Vec<PhType>> {
        let fv: Vec<VarName> = psi.free_vars().into_iter().collect();
        if fv.len() > 16 {
            return Err(Error::InvalidArgument(format!(
                "formula has {} free variables; the fixpoint enumerates all subsets",
                fv.len()
            )));
        }
        let composer = Composer::new(psi.clone(), self.config)?;
        let cap = self.config.limits.max_types;
        let mut reach: BTreeSet<PhType> = BTreeSet::new();

        // Leaf seeds: every letter, every root membership set.
        for a in self.config.letters() {
            for r_set in subsets(&fv) {
                reach.insert(composer.comp(a, &r_set, &[])?);
            }
        }

        // Close under composition at every arity up to the maximum.
        loop {
            if reach.len() > cap {
                return Err(Error::TypeCapExceeded { cap });
            }
            let current: Vec<PhType> = reach.iter().cloned().collect();
            let mut added = Vec::new();
            for r in 1..=self.config.r_max() {
                for args in tuples(&current, r) {
                    for a in self.config.letters() {
                        for r_set in subsets(&fv) {
                            let t = composer.comp(a, &r_set, &args)?;
                            if !reach.contains(&t) {
                                added.push(t);
                            }
                        }
                    }
                }
            }
            if added.is_empty() {
                break;
            }
            reach.extend(added);
        }
        Ok(reach.into_iter().collect())
    }

    /// Synthesis of the type-defining formula for the root formula.
    pub fn type_formula(&self, tau: &PhType) -> Result<Formula> {
        let phi = self.formula().clone();
        tau.check_shape(&phi)?;
        self.synth(&phi, tau)
    }

    fn synth(&self, psi: &Formula, tau: &PhType) -> Result<Formula> {
        match (psi, tau) {
            (Formula::LabelAtom(..) | Formula::Subset(..), PhType::Bool(b)) => Ok(if *b {
                psi.clone()
            } else {
                Formula::not(psi.clone())
            }),
            (Formula::Child(_, x, y), PhType::Child4(v)) => {
                Ok(match v {
                    ChildVal::Tt => psi.clone(),
                    ChildVal::Empty => self.child_empty_formula(x, y),
                    ChildVal::Root => self.child_root_formula(x, y),
                    ChildVal::Ff => Formula::not(Formula::or_all(vec![
                        psi.clone(),
                        self.child_empty_formula(x, y),
                        self.child_root_formula(x, y),
                    ])),
                })
            }
            (Formula::And(l, r), PhType::Pair(tl, tr)) => {
                Ok(Formula::and(self.synth(l, tl)?, self.synth(r, tr)?))
            }
            (Formula::Not(body), tau) => self.synth(body, tau),
            (Formula::Exists(x, body) | Formula::Unbound(x, body), PhType::Quant(s, su)) => {
                let reach = self.space(body)?;
                let mut conjuncts = Vec::new();
                for sigma in s {
                    conjuncts.push(Formula::exists(x.clone(), self.synth(body, sigma)?));
                }
                for sigma in reach.iter().filter(|sigma| !s.contains(sigma)) {
                    conjuncts.push(Formula::not(Formula::exists(
                        x.clone(),
                        self.synth(body, sigma)?,
                    )));
                }
                for sigma in su {
                    conjuncts.push(Formula::unbound(x.clone(), self.synth(body, sigma)?));
                }
                for sigma in reach.iter().filter(|sigma| !su.contains(sigma)) {
                    conjuncts.push(Formula::not(Formula::unbound(
                        x.clone(),
                        self.synth(body, sigma)?,
                    )));
                }
                Ok(Formula::and_all(conjuncts))
            }
            (psi, tau) => Err(Error::ShapeMismatch(format!(
                "type {tau} does not fit formula {psi}"
            ))),
        }
    }

    fn child_empty_formula(&self, x: &VarName, y: &VarName) -> Formula {
        Formula::and(Formula::empty(x.clone()), Formula::empty(y.clone()))
    }

    /// "`X` is empty and `Y` holds exactly the root."
    fn child_root_formula(&self, x: &VarName, y: &VarName) -> Formula {
        let mut conjuncts = vec![
            Formula::empty(x.clone()),
            Formula::sing(y.clone()),
        ];
        if let Some(root_test) = is_root_conjunct(y, self.config.r_max()) {
            conjuncts.push(root_test);
        }
        Formula::and_all(conjuncts)
    }

    /// The closed variant: the type-defining formula with every free
    /// variable forced empty, then existentially closed.
    pub fn type_sentence(&self, tau: &PhType) -> Result<Formula> {
        let phi = self.formula().clone();
        let mut out = self.type_formula(tau)?;
        let fv: Vec<VarName> = phi.free_vars().into_iter().collect();
        for x in &fv {
            out = Formula::and(out, Formula::empty(x.clone()));
        }
        for x in fv.iter().rev() {
            out = Formula::exists(x.clone(), out);
        }
        Ok(out)
    }
}

/// "The singleton `y` is the root": no node has it as a child. With maximal
/// arity zero there are no child steps at all and the test is vacuous, so
/// no conjunct is needed.
pub(crate) fn is_root_conjunct(y: &VarName, r_max: usize) -> Option<Formula> {
    if r_max == 0 {
        return None;
    }
    let z = fresh_var(&[y.clone()]);
    let any_parent = Formula::child_any(r_max, z.clone(), y.clone())
        .expect("r_max >= 1 checked above");
    Some(Formula::not(Formula::exists(z, any_parent)))
}

/// All subsets of a slice, smallest first, in a deterministic order.
pub(crate) fn subsets(items: &[VarName]) -> Vec<BTreeSet<VarName>> {
    let mut out = Vec::with_capacity(1 << items.len());
    for mask in 0u32..(1u32 << items.len()) {
        let set: BTreeSet<VarName> = items
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, v)| v.clone())
            .collect();
        out.push(set);
    }
    out
}

/// All `r`-tuples over `items` (an odometer over indices).
pub(crate) fn tuples<T: Clone>(items: &[T], r: usize) -> impl Iterator<Item = Vec<T>> + '_ {
    let mut idx = vec![0usize; r];
    let mut done = items.is_empty() && r > 0;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let tuple: Vec<T> = idx.iter().map(|&i| items[i].clone()).collect();
        let mut k = r;
        loop {
            if k == 0 {
                done = true;
                break;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < items.len() {
                break;
            }
            idx[k] = 0;
        }
        Some(tuple)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_formula;

    fn p(src: &str) -> Formula {
        parse_formula(src).unwrap()
    }

    fn cfg(letters: &[&str], r_max: usize) -> Config {
        Config::new(letters.iter().copied(), r_max).unwrap()
    }

    #[test]
    fn potential_sizes_of_small_formulas() {
        assert_eq!(potential_size(&p("b(X)")), BigUint::from(2u32));
        assert_eq!(potential_size(&p("child1(X,Y)")), BigUint::from(4u32));
        assert_eq!(potential_size(&p("ex X. b(X)")), BigUint::from(16u32));
        assert_eq!(
            potential_size(&p("b(X) & X sub Y")),
            BigUint::from(4u32)
        );
        assert_eq!(potential_size(&p("!(child2(X,Y))")), BigUint::from(4u32));
    }

    #[test]
    fn potential_size_bound_kicks_in() {
        // Nested quantifiers over a conjunction: (2^(2^8))^2 needs 513 bits.
        let f = p("U X. ex Y. ((a(X)) & (X sub Y))");
        assert!(potential_size_bounded(&f, 16).is_none());
        let exact = potential_size_bounded(&f, 1024).unwrap();
        assert_eq!(exact, BigUint::from(1u32) << 512);
    }

    #[test]
    fn tv_on_atoms() {
        assert!(tv(&p("b(X)"), &PhType::tt()).unwrap());
        assert!(!tv(&p("b(X)"), &PhType::ff()).unwrap());
        assert!(!tv(&p("child1(X,Y)"), &PhType::Child4(ChildVal::Root)).unwrap());
        assert!(tv(&p("child1(X,Y)"), &PhType::Child4(ChildVal::Tt)).unwrap());
    }

    #[test]
    fn tv_on_quantifier() {
        let tau = PhType::quant([PhType::tt(), PhType::ff()], []);
        assert!(tv(&p("ex X. b(X)"), &tau).unwrap());
        // The unbounding quantifier reads the second component.
        assert!(!tv(&p("U X. b(X)"), &tau).unwrap());
        let alive = PhType::quant([PhType::ff()], [PhType::tt()]);
        assert!(tv(&p("U X. b(X)"), &alive).unwrap());
    }

    #[test]
    fn tv_rejects_shape_mismatch() {
        assert!(tv(&p("b(X)"), &PhType::Child4(ChildVal::Tt)).is_err());
        assert!(tv(&p("ex X. b(X)"), &PhType::tt()).is_err());
    }

    #[test]
    fn leaf_types_of_label_atom() {
        let config = cfg(&["a", "b"], 2);
        let phi = p("b(X)");
        let x = VarName::new("X");
        let a = Label::new("a");
        let b = Label::new("b");
        assert_eq!(
            leaf_type(&phi, &a, &BTreeSet::from([x.clone()]), &config).unwrap(),
            PhType::ff()
        );
        assert_eq!(
            leaf_type(&phi, &a, &BTreeSet::new(), &config).unwrap(),
            PhType::tt()
        );
        assert_eq!(
            leaf_type(&phi, &b, &BTreeSet::from([x]), &config).unwrap(),
            PhType::tt()
        );
    }

    #[test]
    fn leaf_type_of_child_atom_can_be_root() {
        let config = cfg(&["a"], 1);
        let phi = p("child1(X,Y)");
        assert_eq!(
            leaf_type(
                &phi,
                &Label::new("a"),
                &BTreeSet::from([VarName::new("Y")]),
                &config
            )
            .unwrap(),
            PhType::Child4(ChildVal::Root)
        );
    }

    #[test]
    fn reachable_space_of_label_atom() {
        let config = cfg(&["a", "b"], 1);
        let space = reachable_types(&p("b(X)"), &config).unwrap();
        assert_eq!(
            space.reachable,
            BTreeSet::from([PhType::ff(), PhType::tt()])
        );
        assert_eq!(space.truthy, BTreeSet::from([PhType::tt()]));
    }

    #[test]
    fn reachable_space_of_child_atom_stays_inside_four_values() {
        let config = cfg(&["a"], 1);
        let space = reachable_types(&p("child1(X,Y)"), &config).unwrap();
        let all: BTreeSet<PhType> = [ChildVal::Tt, ChildVal::Empty, ChildVal::Root, ChildVal::Ff]
            .into_iter()
            .map(PhType::Child4)
            .collect();
        assert!(space.reachable.is_subset(&all));
        assert!(space.reachable.contains(&PhType::Child4(ChildVal::Empty)));
        assert!(space.reachable.contains(&PhType::Child4(ChildVal::Tt)));
    }

    #[test]
    fn synth_base_cases() {
        let config = cfg(&["a", "b"], 2);
        assert_eq!(
            type_formula(&p("b(X)"), &PhType::ff(), &config).unwrap(),
            p("!(b(X))")
        );
        assert_eq!(
            type_formula(&p("child1(X,Y)"), &PhType::Child4(ChildVal::Empty), &config).unwrap(),
            Formula::and(Formula::empty("X"), Formula::empty("Y"))
        );
    }

    #[test]
    fn type_sentence_is_closed() {
        let config = cfg(&["a", "b"], 2);
        let phi = p("b(X)");
        let sentence = type_sentence(&phi, &PhType::tt(), &config).unwrap();
        assert!(sentence.free_vars().is_empty());
        assert_eq!(
            sentence,
            Formula::exists("X", Formula::and(p("b(X)"), Formula::empty("X")))
        );
    }

    #[test]
    fn type_formula_free_vars_are_contained() {
        let config = cfg(&["a", "b"], 2);
        let phi = p("ex X. ((b(X)) & (X sub Y))");
        let space = reachable_types(&phi, &config).unwrap();
        for tau in &space.reachable {
            let psi = type_formula(&phi, tau, &config).unwrap();
            assert!(psi.free_vars().is_subset(&phi.free_vars()));
        }
    }

    #[test]
    fn quant_canonicalization_is_order_insensitive() {
        let t1 = PhType::quant([PhType::tt(), PhType::ff()], []);
        let t2 = PhType::quant([PhType::ff(), PhType::tt()], []);
        assert_eq!(t1, t2);
        assert_eq!(t1.to_string(), "q({ff,tt},{})");
    }

    #[test]
    fn tuples_odometer_covers_empty_and_unit_cases() {
        let items = [1, 2, 3];
        assert_eq!(tuples(&items, 0).count(), 1);
        assert_eq!(tuples(&items, 2).count(), 9);
        let none: [i32; 0] = [];
        assert_eq!(tuples(&none, 2).count(), 0);
        assert_eq!(tuples(&none, 0).count(), 1);
    }
}
