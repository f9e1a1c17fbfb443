//! Composition of logical types: computing the type of a tree from its root
//! letter, the set of variables holding the root, and the children's types —
//! plus the bottom-up fold over whole trees and over open contexts.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::formula::{Formula, Label, VarName};
use crate::tree::{Context, HoleId, NodeAddr, Tree, Valuation};
use crate::typespace::{ChildVal, PhType};

type CompKey = (Formula, Label, BTreeSet<VarName>, Vec<PhType>);

/// Memoizing composition engine for a fixed formula and configuration.
///
/// Composition is a pure function of its arguments; the memo table only
/// caches results. The quantifier case re-derives body compositions over
/// whole tuple products, so caching is what keeps the reachable-space
/// fixpoint tractable.
pub struct Composer<'c> {
    formula: Formula,
    config: &'c Config,
    memo: RefCell<HashMap<CompKey, PhType>>,
}

impl<'c> Composer<'c> {
    pub fn new(formula: Formula, config: &'c Config) -> Result<Self> {
        Ok(Composer {
            formula,
            config,
            memo: RefCell::new(HashMap::new()),
        })
    }

    pub fn formula(&self) -> &Formula {
        &self.formula
    }

    /// The type of a tree whose root is labeled `a`, has `args.len()`
    /// children of the given types, and whose root belongs to exactly the
    /// variables in `root_vars`.
    pub fn comp(
        &self,
        a: &Label,
        root_vars: &BTreeSet<VarName>,
        args: &[PhType],
    ) -> Result<PhType> {
        if args.len() > self.config.r_max() {
            return Err(Error::ArityExceeded {
                arity: args.len(),
                r_max: self.config.r_max(),
            });
        }
        let fv = self.formula.free_vars();
        if !root_vars.is_subset(&fv) {
            return Err(Error::InvalidArgument(
                "root membership set must be a subset of the free variables".into(),
            ));
        }
        for tau in args {
            tau.check_shape(&self.formula)?;
        }
        self.comp_rec(&self.formula.clone(), a, root_vars, args)
    }

    fn comp_rec(
        &self,
        psi: &Formula,
        a: &Label,
        root_vars: &BTreeSet<VarName>,
        args: &[PhType],
    ) -> Result<PhType> {
        let key: CompKey = (
            psi.clone(),
            a.clone(),
            root_vars.clone(),
            args.to_vec(),
        );
        if let Some(hit) = self.memo.borrow().get(&key) {
            return Ok(hit.clone());
        }
        let result = self.comp_uncached(psi, a, root_vars, args)?;
        self.memo.borrow_mut().insert(key, result.clone());
        Ok(result)
    }

    fn comp_uncached(
        &self,
        psi: &Formula,
        a: &Label,
        root_vars: &BTreeSet<VarName>,
        args: &[PhType],
    ) -> Result<PhType> {
        match psi {
            // A label atom holds in the whole tree iff it holds in every
            // subtree and at the root: the root is unconstrained unless it
            // belongs to the variable's set.
            Formula::LabelAtom(b, x) => {
                let children_ok = all_bool_tt(args)?;
                let root_ok = a == b || !root_vars.contains(x);
                Ok(PhType::Bool(children_ok && root_ok))
            }
            Formula::Subset(x, y) => {
                let children_ok = all_bool_tt(args)?;
                let root_ok = !root_vars.contains(x) || root_vars.contains(y);
                Ok(PhType::Bool(children_ok && root_ok))
            }
            Formula::Child(k, x, y) => {
                let vals = as_child_vals(args)?;
                let x_in = root_vars.contains(x);
                let y_in = root_vars.contains(y);
                let empty_except = |skip: usize| {
                    vals.iter()
                        .enumerate()
                        .all(|(i, v)| i == skip || *v == ChildVal::Empty)
                };
                let all_empty = vals.iter().all(|v| *v == ChildVal::Empty);
                // The witness pair lives entirely inside one subtree, ...
                let tt_inside = !x_in
                    && !y_in
                    && (0..vals.len()).any(|j| vals[j] == ChildVal::Tt && empty_except(j));
                // ... or the root itself is the parent of the k-th child.
                let k_pos = (*k as usize).checked_sub(1);
                let tt_at_root = x_in
                    && !y_in
                    && k_pos.is_some_and(|kp| {
                        vals.get(kp) == Some(&ChildVal::Root) && empty_except(kp)
                    });
                let val = if tt_inside || tt_at_root {
                    ChildVal::Tt
                } else if all_empty && !x_in && !y_in {
                    ChildVal::Empty
                } else if all_empty && !x_in && y_in {
                    ChildVal::Root
                } else {
                    ChildVal::Ff
                };
                Ok(PhType::Child4(val))
            }
            Formula::Not(body) => self.comp_rec(body, a, root_vars, args),
            Formula::And(l, r) => {
                let mut left_args = Vec::with_capacity(args.len());
                let mut right_args = Vec::with_capacity(args.len());
                for arg in args {
                    match arg {
                        PhType::Pair(tl, tr) => {
                            left_args.push((**tl).clone());
                            right_args.push((**tr).clone());
                        }
                        other => {
                            return Err(Error::ShapeMismatch(format!(
                                "expected a pair type, got {other}"
                            )));
                        }
                    }
                }
                let l_fv = l.free_vars();
                let r_fv = r.free_vars();
                let l_root: BTreeSet<VarName> =
                    root_vars.intersection(&l_fv).cloned().collect();
                let r_root: BTreeSet<VarName> =
                    root_vars.intersection(&r_fv).cloned().collect();
                Ok(PhType::pair(
                    self.comp_rec(l, a, &l_root, &left_args)?,
                    self.comp_rec(r, a, &r_root, &right_args)?,
                ))
            }
            Formula::Exists(x, body) | Formula::Unbound(x, body) => {
                let mut exists_sets = Vec::with_capacity(args.len());
                let mut unbounded_sets = Vec::with_capacity(args.len());
                for arg in args {
                    match arg {
                        PhType::Quant(s, su) => {
                            exists_sets.push(s.iter().cloned().collect::<Vec<_>>());
                            unbounded_sets.push(su.iter().cloned().collect::<Vec<_>>());
                        }
                        other => {
                            return Err(Error::ShapeMismatch(format!(
                                "expected a quantifier type, got {other}"
                            )));
                        }
                    }
                }
                let body_fv = body.free_vars();
                // The root may or may not be taken into the quantified set.
                let mut with_x = root_vars.clone();
                if body_fv.contains(x) {
                    with_x.insert(x.clone());
                }
                let without_x = root_vars.clone();

                let mut s_exists = BTreeSet::new();
                for tuple in product(&exists_sets) {
                    s_exists.insert(self.comp_rec(body, a, &with_x, &tuple)?);
                    s_exists.insert(self.comp_rec(body, a, &without_x, &tuple)?);
                }
                // Tuples drawing one position from an unbounded component:
                // if a subtree admits witnesses of unbounded size, so does
                // the whole tree.
                let mut s_unbounded = BTreeSet::new();
                for j in 0..args.len() {
                    if unbounded_sets[j].is_empty() {
                        continue;
                    }
                    let mut axes: Vec<&[PhType]> =
                        exists_sets.iter().map(Vec::as_slice).collect();
                    axes[j] = unbounded_sets[j].as_slice();
                    for tuple in product_slices(&axes) {
                        s_unbounded.insert(self.comp_rec(body, a, &with_x, &tuple)?);
                        s_unbounded.insert(self.comp_rec(body, a, &without_x, &tuple)?);
                    }
                }
                Ok(PhType::Quant(s_exists, s_unbounded))
            }
        }
    }
}

fn all_bool_tt(args: &[PhType]) -> Result<bool> {
    let mut all = true;
    for arg in args {
        match arg {
            PhType::Bool(b) => all &= *b,
            other => {
                return Err(Error::ShapeMismatch(format!(
                    "expected a boolean type, got {other}"
                )));
            }
        }
    }
    Ok(all)
}

fn as_child_vals(args: &[PhType]) -> Result<Vec<ChildVal>> {
    args.iter()
        .map(|arg| match arg {
            PhType::Child4(v) => Ok(*v),
            other => Err(Error::ShapeMismatch(format!(
                "expected a child-atom type, got {other}"
            ))),
        })
        .collect()
}

fn product(sets: &[Vec<PhType>]) -> Vec<Vec<PhType>> {
    let axes: Vec<&[PhType]> = sets.iter().map(Vec::as_slice).collect();
    product_slices(&axes)
}

fn product_slices(axes: &[&[PhType]]) -> Vec<Vec<PhType>> {
    let mut out = vec![Vec::new()];
    for axis in axes {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for partial in &out {
            for item in *axis {
                let mut tuple = partial.clone();
                tuple.push(item.clone());
                next.push(tuple);
            }
        }
        out = next;
    }
    out
}

/// One-shot composition without reusing the memo table.
pub fn comp(
    phi: &Formula,
    a: &Label,
    root_vars: &BTreeSet<VarName>,
    args: &[PhType],
    config: &Config,
) -> Result<PhType> {
    Composer::new(phi.clone(), config)?.comp(a, root_vars, args)
}

/// The type of a tree computed by the structural fold: at each node, compose
/// the node's letter, the variables holding that node, and the children's
/// types. Agrees with the direct (enumeration-based) type on every finite
/// tree.
pub fn bottom_up_type(
    phi: &Formula,
    tree: &Tree,
    nu: &Valuation,
    config: &Config,
) -> Result<PhType> {
    nu.check_in(tree)?;
    let composer = Composer::new(phi.clone(), config)?;
    let fv = phi.free_vars();
    fold_tree(&composer, &fv, tree, &NodeAddr::root(), nu)
}

fn fold_tree(
    composer: &Composer<'_>,
    fv: &BTreeSet<VarName>,
    node: &Tree,
    addr: &NodeAddr,
    nu: &Valuation,
) -> Result<PhType> {
    let mut child_types = Vec::with_capacity(node.children.len());
    for (k, child) in node.children.iter().enumerate() {
        child_types.push(fold_tree(composer, fv, child, &addr.child(k as u32 + 1), nu)?);
    }
    let root_vars: BTreeSet<VarName> = fv
        .iter()
        .filter(|x| nu.contains(x, addr))
        .cloned()
        .collect();
    composer.comp(&node.label, &root_vars, &child_types)
}

/// Bottom-up typing of an open context: holes contribute their assumed
/// types. Valuation entries at or below a hole are considered folded into
/// the hole's assumption and are ignored; entries outside the context's
/// domain are rejected. On a hole-free context this coincides with
/// [`bottom_up_type`].
pub fn context_type(
    phi: &Formula,
    ctx: &Context,
    nu: &Valuation,
    assumptions: &BTreeMap<HoleId, PhType>,
    config: &Config,
) -> Result<PhType> {
    ctx.check_holes_distinct()?;
    let holes = ctx.holes();
    for (_, id) in &holes {
        match assumptions.get(id) {
            None => return Err(Error::UncoveredHole(id.0)),
            Some(tau) => tau.check_shape(phi)?,
        }
    }
    check_context_valuation(ctx, nu, &holes)?;
    let composer = Composer::new(phi.clone(), config)?;
    let fv = phi.free_vars();
    fold_context(&composer, &fv, ctx, &NodeAddr::root(), nu, assumptions)
}

fn check_context_valuation(
    ctx: &Context,
    nu: &Valuation,
    holes: &[(NodeAddr, HoleId)],
) -> Result<()> {
    for (_, set) in nu.support() {
        for addr in set {
            let in_hole = holes.iter().any(|(h, _)| h.strip_prefix(addr).is_some());
            if !in_hole && !context_contains(ctx, addr) {
                return Err(Error::AddressOutOfDomain(addr.clone()));
            }
        }
    }
    Ok(())
}

fn context_contains(ctx: &Context, addr: &NodeAddr) -> bool {
    let mut node = ctx;
    for &i in addr.path() {
        match node {
            Context::Hole(_) => return false,
            Context::Node { children, .. } => match children.get(i as usize - 1) {
                Some(child) => node = child,
                None => return false,
            },
        }
    }
    !matches!(node, Context::Hole(_))
}

fn fold_context(
    composer: &Composer<'_>,
    fv: &BTreeSet<VarName>,
    node: &Context,
    addr: &NodeAddr,
    nu: &Valuation,
    assumptions: &BTreeMap<HoleId, PhType>,
) -> Result<PhType> {
    match node {
        Context::Hole(id) => Ok(assumptions[id].clone()),
        Context::Node { label, children } => {
            let mut child_types = Vec::with_capacity(children.len());
            for (k, child) in children.iter().enumerate() {
                child_types.push(fold_context(
                    composer,
                    fv,
                    child,
                    &addr.child(k as u32 + 1),
                    nu,
                    assumptions,
                )?);
            }
            let root_vars: BTreeSet<VarName> = fv
                .iter()
                .filter(|x| nu.contains(x, addr))
                .cloned()
                .collect();
            composer.comp(label, &root_vars, &child_types)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_formula;
    use crate::tree::parse_tree;

    fn p(src: &str) -> Formula {
        parse_formula(src).unwrap()
    }

    fn cfg(letters: &[&str], r_max: usize) -> Config {
        Config::new(letters.iter().copied(), r_max).unwrap()
    }

    fn vars(names: &[&str]) -> BTreeSet<VarName> {
        names.iter().map(|s| VarName::new(*s)).collect()
    }

    #[test]
    fn child_atom_composes_to_tt_from_inside_witness() {
        let config = cfg(&["a"], 2);
        let got = comp(
            &p("child1(X,Y)"),
            &Label::new("a"),
            &vars(&[]),
            &[
                PhType::Child4(ChildVal::Tt),
                PhType::Child4(ChildVal::Empty),
            ],
            &config,
        )
        .unwrap();
        assert_eq!(got, PhType::Child4(ChildVal::Tt));
    }

    #[test]
    fn child_atom_composes_to_tt_from_root_case() {
        let config = cfg(&["a"], 2);
        let got = comp(
            &p("child1(X,Y)"),
            &Label::new("a"),
            &vars(&["X"]),
            &[PhType::Child4(ChildVal::Root)],
            &config,
        )
        .unwrap();
        assert_eq!(got, PhType::Child4(ChildVal::Tt));
    }

    #[test]
    fn root_case_requires_matching_child_index() {
        let config = cfg(&["a"], 2);
        // The root argument sits at position 1 but the atom asks for child 2.
        let got = comp(
            &p("child2(X,Y)"),
            &Label::new("a"),
            &vars(&["X"]),
            &[PhType::Child4(ChildVal::Root)],
            &config,
        )
        .unwrap();
        assert_eq!(got, PhType::Child4(ChildVal::Ff));
    }

    #[test]
    fn label_atom_leaf_cases() {
        let config = cfg(&["a", "b"], 2);
        let got = comp(&p("b(X)"), &Label::new("a"), &vars(&["X"]), &[], &config).unwrap();
        assert_eq!(got, PhType::ff());
        let got = comp(&p("b(X)"), &Label::new("a"), &vars(&[]), &[], &config).unwrap();
        assert_eq!(got, PhType::tt());
    }

    #[test]
    fn quantifier_clause_mixes_root_membership() {
        // Hand-derived: with one child of type ({tt},{tt}), both tuple sets
        // are {(tt)}; the body composes to ff under {X} (wrong letter) and
        // to tt under {} — so both components are {tt,ff}.
        let config = cfg(&["a", "b"], 2);
        let arg = PhType::quant([PhType::tt()], [PhType::tt()]);
        let got = comp(
            &p("U X. b(X)"),
            &Label::new("a"),
            &vars(&[]),
            &[arg],
            &config,
        )
        .unwrap();
        let expected = PhType::quant(
            [PhType::tt(), PhType::ff()],
            [PhType::tt(), PhType::ff()],
        );
        assert_eq!(got, expected);
    }

    #[test]
    fn quantifier_leaf_has_empty_unbounded_component() {
        let config = cfg(&["a", "b"], 2);
        let got = comp(&p("ex X. b(X)"), &Label::new("c"), &vars(&[]), &[], &config);
        // c is not even in the alphabet; composition only compares letters.
        let got = got.unwrap();
        assert_eq!(got, PhType::quant([PhType::tt(), PhType::ff()], []));
    }

    #[test]
    fn comp_rejects_bad_arity_and_shape() {
        let config = cfg(&["a"], 1);
        let phi = p("b(X)");
        let err = comp(
            &phi,
            &Label::new("a"),
            &vars(&[]),
            &[PhType::tt(), PhType::tt()],
            &config,
        )
        .unwrap_err();
        assert!(matches!(err, Error::ArityExceeded { .. }));
        let err = comp(
            &phi,
            &Label::new("a"),
            &vars(&[]),
            &[PhType::Child4(ChildVal::Tt)],
            &config,
        )
        .unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch(_)));
    }

    #[test]
    fn bottom_up_single_node() {
        let config = cfg(&["a", "b"], 2);
        let mut nu = Valuation::empty();
        nu.set(VarName::new("X"), [NodeAddr::root()].into_iter().collect());
        let got = bottom_up_type(&p("b(X)"), &parse_tree("b").unwrap(), &nu, &config).unwrap();
        assert_eq!(got, PhType::tt());
    }

    #[test]
    fn bottom_up_quantified_on_single_node() {
        let config = cfg(&["a", "b", "c"], 2);
        let got = bottom_up_type(
            &p("ex X. b(X)"),
            &parse_tree("c").unwrap(),
            &Valuation::empty(),
            &config,
        )
        .unwrap();
        assert_eq!(got, PhType::quant([PhType::tt(), PhType::ff()], []));
    }

    #[test]
    fn context_type_with_false_assumption() {
        let config = cfg(&["a", "b"], 2);
        let ctx = crate::tree::parse_context("a(_1)").unwrap();
        let got = context_type(
            &p("b(X)"),
            &ctx,
            &Valuation::empty(),
            &BTreeMap::from([(HoleId(1), PhType::ff())]),
            &config,
        )
        .unwrap();
        assert_eq!(got, PhType::ff());
    }

    #[test]
    fn context_type_keeps_unbounded_assumption_alive() {
        let config = cfg(&["a", "b"], 2);
        let ctx = crate::tree::parse_context("a(_1)").unwrap();
        let assumption = PhType::quant([PhType::tt()], [PhType::tt()]);
        let got = context_type(
            &p("U X. b(X)"),
            &ctx,
            &Valuation::empty(),
            &BTreeMap::from([(HoleId(1), assumption)]),
            &config,
        )
        .unwrap();
        let expected = PhType::quant(
            [PhType::tt(), PhType::ff()],
            [PhType::tt(), PhType::ff()],
        );
        assert_eq!(got, expected);
    }

    #[test]
    fn context_type_requires_assumptions() {
        let config = cfg(&["a"], 2);
        let ctx = crate::tree::parse_context("a(_1)").unwrap();
        let err = context_type(
            &p("b(X)"),
            &ctx,
            &Valuation::empty(),
            &BTreeMap::new(),
            &config,
        )
        .unwrap_err();
        assert_eq!(err, Error::UncoveredHole(1));
    }

    #[test]
    fn hole_free_context_agrees_with_bottom_up() {
        let config = cfg(&["a", "b"], 2);
        let tree = parse_tree("a(b,a(b))").unwrap();
        let mut nu = Valuation::empty();
        nu.set(VarName::new("X"), [NodeAddr::new(vec![1])].into_iter().collect());
        let phi = p("ex Y. child1(Y,X)");
        let via_ctx = context_type(
            &phi,
            &Context::from(tree.clone()),
            &nu,
            &BTreeMap::new(),
            &config,
        )
        .unwrap();
        let via_tree = bottom_up_type(&phi, &tree, &nu, &config).unwrap();
        assert_eq!(via_ctx, via_tree);
    }
}
