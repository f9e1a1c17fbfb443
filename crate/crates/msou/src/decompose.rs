//! Constructive decompositions of a formula.
//!
//! Two results are built here. The root decomposition splits satisfaction
//! into a finite set of tuples: a formula checked at the root tree plus one
//! type-defining formula per child subtree — a tree satisfies the original
//! formula iff some tuple matches. The relabeling rewrite turns a formula
//! over finitary valuations into a plain MSO formula evaluated over the
//! same tree relabeled by closed sentences: each node's new letter pairs
//! its old letter with the type of its subtree under the empty valuation.

use std::collections::{BTreeSet, HashMap};
use std::rc::Rc;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::formula::{fresh_var, fresh_vars, Formula, Label, VarName};
use crate::oracle::{self, Evaluator};
use crate::tree::{NodeAddr, Tree, Valuation};
use crate::typespace::{is_root_conjunct, subsets, tuples, Analysis, PhType, TypeSpace};

/// "The root is labeled `a`, and exactly the variables of `root_vars`
/// contain the root." Only meaningful on single-node trees, where every
/// nonempty set is `{root}`.
pub fn root_descriptor(
    a: &Label,
    root_vars: &BTreeSet<VarName>,
    fv: &BTreeSet<VarName>,
) -> Formula {
    let avoid: Vec<VarName> = fv.iter().cloned().collect();
    let y = fresh_var(&avoid);
    let mut conjuncts = vec![Formula::forall(
        y.clone(),
        Formula::LabelAtom(a.clone(), y.clone()),
    )];
    for x in root_vars {
        conjuncts.push(Formula::forall(
            y.clone(),
            Formula::Subset(y.clone(), x.clone()),
        ));
    }
    for x in fv.iter().filter(|x| !root_vars.contains(*x)) {
        conjuncts.push(Formula::not(Formula::forall(
            y.clone(),
            Formula::Subset(y.clone(), x.clone()),
        )));
    }
    Formula::and_all(conjuncts)
}

/// One decomposition tuple: a root formula and one formula per child.
/// Formulas are shared, since the same type-defining formula appears in
/// many tuples.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct DecompTuple {
    pub root: Rc<Formula>,
    pub children: Vec<Rc<Formula>>,
}

/// The finite tuple set of the root decomposition, in canonical order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootDecomposition {
    pub tuples: Vec<DecompTuple>,
}

impl RootDecomposition {
    /// Every member formula of every tuple.
    pub fn formulas(&self) -> impl Iterator<Item = &Formula> {
        self.tuples.iter().flat_map(|t| {
            std::iter::once(&*t.root).chain(t.children.iter().map(|c| &**c))
        })
    }
}

/// Builds the tuple set: for every root letter, child count, root
/// membership set, and tuple of reachable child types whose composition is
/// a type making the formula true, emit the root descriptor together with
/// the children's type-defining formulas.
pub fn build_root_decomposition(phi: &Formula, config: &Config) -> Result<RootDecomposition> {
    let analysis = Analysis::new(phi.clone(), config)?;
    let space = analysis.type_space()?;
    let reach: Vec<PhType> = space.reachable.iter().cloned().collect();
    let fv = phi.free_vars();
    let fv_vec: Vec<VarName> = fv.iter().cloned().collect();

    let arity_tuples: usize = (0..=config.r_max())
        .map(|r| reach.len().saturating_pow(r as u32))
        .sum();
    let candidates = arity_tuples
        .saturating_mul(config.alphabet().len())
        .saturating_mul(1 << fv_vec.len());
    if candidates > config.limits.max_tuples {
        return Err(Error::TupleCapExceeded {
            count: candidates,
            cap: config.limits.max_tuples,
        });
    }

    let mut psi_lib: HashMap<PhType, Rc<Formula>> = HashMap::new();
    let mut eta_lib: HashMap<(Label, BTreeSet<VarName>), Rc<Formula>> = HashMap::new();
    let mut out: BTreeSet<DecompTuple> = BTreeSet::new();

    for r in 0..=config.r_max() {
        for args in tuples(&reach, r) {
            for a in config.letters() {
                for root_vars in subsets(&fv_vec) {
                    let tau = analysis.composer().comp(a, &root_vars, &args)?;
                    if !space.truthy.contains(&tau) {
                        continue;
                    }
                    let root = match eta_lib.entry((a.clone(), root_vars.clone())) {
                        std::collections::hash_map::Entry::Occupied(e) => Rc::clone(e.get()),
                        std::collections::hash_map::Entry::Vacant(e) => {
                            Rc::clone(e.insert(Rc::new(root_descriptor(a, &root_vars, &fv))))
                        }
                    };
                    let mut children = Vec::with_capacity(r);
                    for tau_i in &args {
                        let psi = match psi_lib.get(tau_i) {
                            Some(hit) => Rc::clone(hit),
                            None => {
                                let built = Rc::new(analysis.type_formula(tau_i)?);
                                psi_lib.insert(tau_i.clone(), Rc::clone(&built));
                                built
                            }
                        };
                        children.push(psi);
                    }
                    out.insert(DecompTuple { root, children });
                }
            }
        }
    }
    Ok(RootDecomposition {
        tuples: out.into_iter().collect(),
    })
}

/// Outcome of checking the root decomposition on one tree and valuation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecompositionReport {
    /// The formula itself, evaluated directly.
    pub lhs: bool,
    /// Some tuple matches: right child count, root formula holds on the
    /// root tree, each child formula holds on its subtree.
    pub rhs: bool,
    /// The first matching tuple in canonical order, when `rhs` holds.
    pub witness: Option<DecompTuple>,
}

pub fn check_root_decomposition(
    phi: &Formula,
    tree: &Tree,
    nu: &Valuation,
    omega: &RootDecomposition,
    config: &Config,
) -> Result<DecompositionReport> {
    let lhs = oracle::eval(phi, tree, nu, config)?;
    let r = tree.children.len();

    let root_tree = tree.root_tree();
    let root_nu = nu.root_valuation();
    let mut root_eval = Evaluator::new(&root_tree, &config.limits)?;
    let mut root_cache: HashMap<*const Formula, bool> = HashMap::new();

    let mut child_evals = Vec::with_capacity(r);
    let mut child_nus = Vec::with_capacity(r);
    for i in 1..=r {
        let addr = NodeAddr::root().child(i as u32);
        let sub = tree.subtree(&addr)?;
        child_nus.push(nu.restrict(&addr));
        child_evals.push((Evaluator::new(&sub, &config.limits)?, HashMap::<*const Formula, bool>::new()));
    }

    let mut witness = None;
    'tuples: for tuple in &omega.tuples {
        if tuple.children.len() != r {
            continue;
        }
        let root_ptr = Rc::as_ptr(&tuple.root);
        let root_ok = match root_cache.get(&root_ptr) {
            Some(&b) => b,
            None => {
                let b = root_eval.eval(&tuple.root, &root_nu)?;
                root_cache.insert(root_ptr, b);
                b
            }
        };
        if !root_ok {
            continue;
        }
        for (i, child_formula) in tuple.children.iter().enumerate() {
            let ptr = Rc::as_ptr(child_formula);
            let (evaluator, cache) = &mut child_evals[i];
            let ok = match cache.get(&ptr) {
                Some(&b) => b,
                None => {
                    let b = evaluator.eval(child_formula, &child_nus[i])?;
                    cache.insert(ptr, b);
                    b
                }
            };
            if !ok {
                continue 'tuples;
            }
        }
        witness = Some(tuple.clone());
        break;
    }

    Ok(DecompositionReport {
        lhs,
        rhs: witness.is_some(),
        witness,
    })
}

/// A relabeling: one closed sentence per output letter. A tree is relabeled
/// by giving each node the unique letter whose sentence its subtree
/// satisfies; the result is undefined when uniqueness fails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relabeling {
    pub sentences: Vec<(Label, Formula)>,
}

/// The output letter pairing `base` with the reachable type at `index`.
pub fn product_label(base: &Label, index: usize) -> Label {
    Label::new(format!("{base}#t{index}"))
}

/// "The root is labeled `a`", as a closed sentence: some singleton is the
/// root and is labeled `a`.
fn root_label_sentence(a: &Label, r_max: usize) -> Formula {
    let y = fresh_var(&[]);
    let mut conjuncts = vec![Formula::sing(y.clone())];
    if let Some(root_test) = is_root_conjunct(&y, r_max) {
        conjuncts.push(root_test);
    }
    conjuncts.push(Formula::LabelAtom(a.clone(), y.clone()));
    Formula::exists(y, Formula::and_all(conjuncts))
}

/// Builds the relabeling over the product alphabet: letters pair a base
/// letter with a reachable type, and the sentence for `(a, tau)` says the
/// root is labeled `a` and the tree's type under the empty valuation is
/// `tau`.
pub fn build_relabeling(phi: &Formula, config: &Config) -> Result<Relabeling> {
    let analysis = Analysis::new(phi.clone(), config)?;
    let space = analysis.type_space()?;
    let mut sentences = Vec::new();
    for a in config.letters() {
        for (idx, tau) in space.reachable.iter().enumerate() {
            let sentence = Formula::and(
                root_label_sentence(a, config.r_max()),
                analysis.type_sentence(tau)?,
            );
            sentences.push((product_label(a, idx), sentence));
        }
    }
    Ok(Relabeling { sentences })
}

/// Applies a relabeling: every node gets the unique letter whose sentence
/// holds in the subtree rooted there.
pub fn apply_relabeling(relabeling: &Relabeling, tree: &Tree, config: &Config) -> Result<Tree> {
    relabel_node(relabeling, tree, &NodeAddr::root(), config)
}

fn relabel_node(
    relabeling: &Relabeling,
    node: &Tree,
    addr: &NodeAddr,
    config: &Config,
) -> Result<Tree> {
    let mut evaluator = Evaluator::new(node, &config.limits)?;
    let empty = Valuation::empty();
    let mut letter = None;
    let mut holding = 0usize;
    for (b, sentence) in &relabeling.sentences {
        if evaluator.eval(sentence, &empty)? {
            holding += 1;
            letter = Some(b.clone());
        }
    }
    if holding != 1 {
        return Err(Error::NotUnique {
            addr: addr.clone(),
            holding,
        });
    }
    let mut children = Vec::with_capacity(node.children.len());
    for (k, child) in node.children.iter().enumerate() {
        children.push(relabel_node(
            relabeling,
            child,
            &addr.child(k as u32 + 1),
            config,
        )?);
    }
    Ok(Tree {
        label: letter.expect("holding == 1"),
        children,
    })
}

/// True iff the formula contains no unbounding quantifier.
pub fn is_mso(phi: &Formula) -> bool {
    phi.is_mso()
}

/// Builder state for the MSO formula over the relabeled alphabet.
struct MsoBuilder<'a> {
    space: &'a TypeSpace,
    reach: Vec<PhType>,
    type_vars: Vec<VarName>,
    fv: Vec<VarName>,
    r_max: usize,
    budget: usize,
    used: usize,
    // Helper variables, distinct from the type variables and from the
    // formula's free variables.
    node_v: VarName,
    mark_v: VarName,
    set_v: VarName,
    parent_v: VarName,
    child_v: VarName,
}

/// A closed, always-false formula (no set fails to include itself).
fn false_sentence() -> Formula {
    let y = fresh_var(&[]);
    Formula::exists(y.clone(), Formula::not(Formula::Subset(y.clone(), y)))
}

impl<'a> MsoBuilder<'a> {
    fn new(space: &'a TypeSpace, config: &Config) -> Self {
        let reach: Vec<PhType> = space.reachable.iter().cloned().collect();
        let fv: Vec<VarName> = space.formula.free_vars().into_iter().collect();
        let names = fresh_vars(&fv, reach.len() + 5);
        let (type_vars, helpers) = names.split_at(reach.len());
        MsoBuilder {
            space,
            type_vars: type_vars.to_vec(),
            reach,
            fv,
            r_max: config.r_max(),
            budget: config.limits.formula_nodes,
            used: 0,
            node_v: helpers[0].clone(),
            mark_v: helpers[1].clone(),
            set_v: helpers[2].clone(),
            parent_v: helpers[3].clone(),
            child_v: helpers[4].clone(),
        }
    }

    fn spend(&mut self, piece: &Formula) -> Result<()> {
        self.used += piece.node_count();
        if self.used > self.budget {
            return Err(Error::FormulaBudgetExceeded {
                budget: self.budget,
            });
        }
        Ok(())
    }

    fn type_var(&self, tau: &PhType) -> VarName {
        let idx = self
            .reach
            .iter()
            .position(|t| t == tau)
            .expect("composed type is reachable");
        self.type_vars[idx].clone()
    }

    fn in_set(&self, var: &VarName) -> Formula {
        Formula::Subset(self.node_v.clone(), var.clone())
    }

    /// For-all over singletons: `all N. sing(N) -> body`.
    fn for_all_nodes(&self, body: Formula) -> Formula {
        Formula::forall(
            self.node_v.clone(),
            Formula::implies(Formula::sing(self.node_v.clone()), body),
        )
    }

    fn partition(&mut self) -> Result<Formula> {
        let coverage = self.for_all_nodes(Formula::or_all(
            self.type_vars.iter().map(|v| self.in_set(v)).collect(),
        ));
        let mut conjuncts = vec![coverage];
        for i in 0..self.type_vars.len() {
            for j in (i + 1)..self.type_vars.len() {
                conjuncts.push(self.for_all_nodes(Formula::not(Formula::and(
                    self.in_set(&self.type_vars[i]),
                    self.in_set(&self.type_vars[j]),
                ))));
            }
        }
        let piece = Formula::and_all(conjuncts);
        self.spend(&piece)?;
        Ok(piece)
    }

    fn root_ok(&mut self) -> Result<Formula> {
        let truthy_vars: Vec<Formula> = self
            .reach
            .iter()
            .zip(&self.type_vars)
            .filter(|(tau, _)| self.space.truthy.contains(tau))
            .map(|(_, v)| self.in_set(v))
            .collect();
        let piece = if truthy_vars.is_empty() {
            false_sentence()
        } else {
            let mut conjuncts = vec![Formula::sing(self.node_v.clone())];
            if let Some(root_test) = is_root_conjunct(&self.node_v, self.r_max) {
                conjuncts.push(root_test);
            }
            conjuncts.push(Formula::or_all(truthy_vars));
            Formula::exists(self.node_v.clone(), Formula::and_all(conjuncts))
        };
        self.spend(&piece)?;
        Ok(piece)
    }

    /// "The node has an `r`-th child but no `(r+1)`-th" — exact because
    /// child lists are left-closed. The second conjunct is omitted at the
    /// maximal arity.
    fn exactly_children(&self, r: usize) -> Formula {
        let has_child = |i: usize| {
            Formula::exists(
                self.child_v.clone(),
                Formula::Child(i as u32, self.node_v.clone(), self.child_v.clone()),
            )
        };
        if r == 0 {
            Formula::not(has_child(1))
        } else if r < self.r_max {
            Formula::and(has_child(r), Formula::not(has_child(r + 1)))
        } else {
            has_child(r)
        }
    }

    fn child_in(&self, i: usize, type_var: &VarName) -> Formula {
        Formula::forall(
            self.child_v.clone(),
            Formula::implies(
                Formula::Child(i as u32, self.node_v.clone(), self.child_v.clone()),
                Formula::Subset(self.child_v.clone(), type_var.clone()),
            ),
        )
    }

    fn local_composition(&mut self, analysis: &Analysis<'_>, config: &Config) -> Result<Formula> {
        let reach = self.reach.clone();
        let fv = self.fv.clone();
        let mut cases = Vec::new();
        for a in config.letters() {
            for empty_idx in 0..reach.len() {
                let letter = product_label(a, empty_idx);
                for r in 0..=self.r_max {
                    for args in tuples(&reach, r) {
                        for root_vars in subsets(&fv) {
                            let tau = analysis.composer().comp(a, &root_vars, &args)?;
                            let mut conjuncts = vec![
                                Formula::LabelAtom(letter.clone(), self.node_v.clone()),
                                self.in_set(&self.type_var(&tau)),
                                self.exactly_children(r),
                            ];
                            for (i, tau_i) in args.iter().enumerate() {
                                conjuncts.push(self.child_in(i + 1, &self.type_var(tau_i)));
                            }
                            for y in &fv {
                                let membership =
                                    Formula::Subset(self.node_v.clone(), y.clone());
                                conjuncts.push(if root_vars.contains(y) {
                                    membership
                                } else {
                                    Formula::not(membership)
                                });
                            }
                            let case = Formula::and_all(conjuncts);
                            self.spend(&case)?;
                            cases.push(case);
                        }
                    }
                }
            }
        }
        Ok(self.for_all_nodes(Formula::or_all(cases)))
    }

    /// "`mark_v` is a descendant of `node_v` or the node itself": every set
    /// containing the node and closed under all child steps contains it.
    fn descendant_or_self(&self) -> Formula {
        let d = &self.set_v;
        let mut closure_premise = vec![Formula::Subset(self.node_v.clone(), d.clone())];
        if self.r_max >= 1 {
            let step = Formula::child_any(self.r_max, self.parent_v.clone(), self.child_v.clone())
                .expect("r_max >= 1");
            let closed = Formula::forall(
                self.parent_v.clone(),
                Formula::forall(
                    self.child_v.clone(),
                    Formula::implies(
                        Formula::and_all(vec![
                            Formula::sing(self.parent_v.clone()),
                            Formula::Subset(self.parent_v.clone(), d.clone()),
                            step,
                        ]),
                        Formula::Subset(self.child_v.clone(), d.clone()),
                    ),
                ),
            );
            closure_premise.push(closed);
        }
        Formula::forall(
            d.clone(),
            Formula::implies(
                Formula::and_all(closure_premise),
                Formula::Subset(self.mark_v.clone(), d.clone()),
            ),
        )
    }

    /// "No free variable's set contains this node or any of its
    /// descendants." Vacuous when the formula is a sentence.
    fn no_marks_below(&self) -> Vec<Formula> {
        self.fv
            .iter()
            .map(|y| {
                Formula::not(Formula::exists(
                    self.mark_v.clone(),
                    Formula::and_all(vec![
                        Formula::sing(self.mark_v.clone()),
                        Formula::Subset(self.mark_v.clone(), y.clone()),
                        self.descendant_or_self(),
                    ]),
                ))
            })
            .collect()
    }

    /// Nodes with no marked descendants take the type precomputed in their
    /// letter.
    fn empty_suffix(&mut self, config: &Config) -> Result<Formula> {
        let reach = self.reach.clone();
        let mut conjuncts = Vec::new();
        for a in config.letters() {
            for (empty_idx, empty_tau) in reach.iter().enumerate() {
                let letter = product_label(a, empty_idx);
                let mut premise =
                    vec![Formula::LabelAtom(letter, self.node_v.clone())];
                premise.extend(self.no_marks_below());
                let case = Formula::implies(
                    Formula::and_all(premise),
                    self.in_set(&self.type_var(empty_tau)),
                );
                self.spend(&case)?;
                conjuncts.push(case);
            }
        }
        Ok(self.for_all_nodes(Formula::and_all(conjuncts)))
    }

    fn build(mut self, analysis: &Analysis<'_>, config: &Config) -> Result<Formula> {
        let partition = self.partition()?;
        let root_ok = self.root_ok()?;
        let local = self.local_composition(analysis, config)?;
        let suffix = self.empty_suffix(config)?;
        let mut out = Formula::and_all(vec![partition, root_ok, local, suffix]);
        for v in self.type_vars.iter().rev() {
            out = Formula::exists(v.clone(), out);
        }
        Ok(out)
    }
}

/// Builds the MSO formula over the product alphabet: existential set
/// variables guess, per reachable type, the set of nodes whose subtree has
/// that type; the body says the guess is a partition, the root's type makes
/// the formula true, every node's type composes from its letter, its
/// children's types, and its variable memberships, and unmarked subtrees
/// take the type stored in their letter. Contains no unbounding quantifier.
pub fn build_mso_formula(phi: &Formula, config: &Config) -> Result<Formula> {
    let analysis = Analysis::new(phi.clone(), config)?;
    let space = analysis.type_space()?;
    MsoBuilder::new(&space, config).build(&analysis, config)
}

/// Outcome of checking the relabeling rewrite on one tree and valuation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewriteReport {
    pub lhs: bool,
    pub rhs: bool,
    pub relabeled: Tree,
}

/// Builds the relabeling and the MSO formula, relabels the tree, and
/// evaluates both sides. The relabeling must be defined for built
/// relabelings; a uniqueness failure propagates as an error.
pub fn check_mso_rewrite(
    phi: &Formula,
    tree: &Tree,
    nu: &Valuation,
    config: &Config,
) -> Result<RewriteReport> {
    let relabeling = build_relabeling(phi, config)?;
    let relabeled = apply_relabeling(&relabeling, tree, config)?;
    let mso = build_mso_formula(phi, config)?;
    let lhs = oracle::eval(phi, tree, nu, config)?;
    let rhs = oracle::eval(&mso, &relabeled, nu, config)?;
    Ok(RewriteReport {
        lhs,
        rhs,
        relabeled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_formula;
    use crate::tree::parse_tree;

    fn p(src: &str) -> Formula {
        parse_formula(src).unwrap()
    }

    fn t(src: &str) -> Tree {
        parse_tree(src).unwrap()
    }

    fn cfg(letters: &[&str], r_max: usize) -> Config {
        Config::new(letters.iter().copied(), r_max).unwrap()
    }

    fn nu_root(var: &str) -> Valuation {
        let mut nu = Valuation::empty();
        nu.set(
            VarName::new(var),
            [NodeAddr::root()].into_iter().collect(),
        );
        nu
    }

    #[test]
    fn root_descriptor_reads_root_membership() {
        let config = cfg(&["a", "b"], 2);
        let fv: BTreeSet<VarName> = [VarName::new("X")].into();
        let eta = root_descriptor(&Label::new("a"), &BTreeSet::new(), &fv);
        assert!(eta.free_vars().is_subset(&fv));
        let single_a = t("a");
        assert!(oracle::eval(&eta, &single_a, &Valuation::empty(), &config).unwrap());
        assert!(!oracle::eval(&eta, &single_a, &nu_root("X"), &config).unwrap());
        // Wrong letter.
        assert!(!oracle::eval(&eta, &t("b"), &Valuation::empty(), &config).unwrap());

        let eta_in = root_descriptor(&Label::new("a"), &fv, &fv);
        assert!(oracle::eval(&eta_in, &single_a, &nu_root("X"), &config).unwrap());
        assert!(!oracle::eval(&eta_in, &single_a, &Valuation::empty(), &config).unwrap());
    }

    #[test]
    fn decomposition_of_label_atom_at_arity_zero() {
        // Over the alphabet {b} every leaf case composes to tt, so both
        // root membership sets are emitted.
        let config = cfg(&["b"], 0);
        let omega = build_root_decomposition(&p("b(X)"), &config).unwrap();
        assert_eq!(omega.tuples.len(), 2);
        assert!(omega.tuples.iter().all(|t| t.children.is_empty()));

        // Over {a} the root-in-X case composes to ff and is dropped.
        let config = cfg(&["a"], 0);
        let omega = build_root_decomposition(&p("b(X)"), &config).unwrap();
        assert_eq!(omega.tuples.len(), 1);
        let report =
            check_root_decomposition(&p("b(X)"), &t("a"), &nu_root("X"), &omega, &config).unwrap();
        assert!(!report.lhs);
        assert!(!report.rhs);
    }

    #[test]
    fn decomposition_check_on_single_nodes() {
        let config = cfg(&["a", "b"], 2);
        let phi = p("b(X)");
        let omega = build_root_decomposition(&phi, &config).unwrap();
        for f in omega.formulas() {
            assert!(f.free_vars().is_subset(&phi.free_vars()));
        }
        let report =
            check_root_decomposition(&phi, &t("b"), &nu_root("X"), &omega, &config).unwrap();
        assert!(report.lhs && report.rhs);
        assert!(report.witness.is_some());

        let report =
            check_root_decomposition(&phi, &t("a"), &nu_root("X"), &omega, &config).unwrap();
        assert!(!report.lhs && !report.rhs);
        assert!(report.witness.is_none());
    }

    #[test]
    fn decomposition_check_with_children() {
        let config = cfg(&["a", "b"], 2);
        let phi = p("ex Y. child1(X,Y)");
        let omega = build_root_decomposition(&phi, &config).unwrap();
        let mut nu = Valuation::empty();
        nu.set(VarName::new("X"), [NodeAddr::root()].into_iter().collect());
        let report = check_root_decomposition(&phi, &t("a(b,a)"), &nu, &omega, &config).unwrap();
        assert!(report.lhs);
        assert!(report.rhs);
    }

    #[test]
    fn relabeling_of_label_atom_has_four_sentences() {
        let config = cfg(&["a", "b"], 1);
        let relabeling = build_relabeling(&p("b(X)"), &config).unwrap();
        assert_eq!(relabeling.sentences.len(), 4);
        for (_, sentence) in &relabeling.sentences {
            assert!(sentence.free_vars().is_empty());
        }
    }

    #[test]
    fn apply_relabeling_with_trivial_sentences() {
        let config = cfg(&["a", "b", "p", "q"], 2);
        let always = Formula::forall("Y", Formula::subset("Y", "Y"));
        let never = Formula::not(always.clone());
        let relabeling = Relabeling {
            sentences: vec![
                (Label::new("p"), always.clone()),
                (Label::new("q"), never),
            ],
        };
        let got = apply_relabeling(&relabeling, &t("a(b)"), &config).unwrap();
        assert_eq!(got, t("p(p)"));

        let both = Relabeling {
            sentences: vec![
                (Label::new("p"), always.clone()),
                (Label::new("q"), always),
            ],
        };
        let err = apply_relabeling(&both, &t("a(b)"), &config).unwrap_err();
        assert_eq!(
            err,
            Error::NotUnique {
                addr: NodeAddr::root(),
                holding: 2
            }
        );
    }

    #[test]
    fn built_relabeling_matches_direct_types() {
        let config = cfg(&["a", "b"], 2);
        let phi = p("b(X)");
        let space = crate::typespace::reachable_types(&phi, &config).unwrap();
        let relabeling = build_relabeling(&phi, &config).unwrap();
        let tree = t("a(b,a(b))");
        let relabeled = apply_relabeling(&relabeling, &tree, &config).unwrap();
        for addr in tree.addresses() {
            let sub = tree.subtree(&addr).unwrap();
            let tau =
                oracle::direct_type(&phi, &sub, &Valuation::empty(), &config).unwrap();
            let idx = space.index_of(&tau).unwrap();
            let expected = product_label(&sub.label, idx);
            assert_eq!(relabeled.label_at(&addr).unwrap(), &expected);
        }
    }

    #[test]
    fn mso_formula_is_mso_with_contained_free_vars() {
        let config = cfg(&["a", "b"], 2);
        let phi = p("U Y. b(Y)");
        let mso = build_mso_formula(&phi, &config).unwrap();
        assert!(is_mso(&mso));
        assert!(!is_mso(&phi));
        assert!(mso.free_vars().is_subset(&phi.free_vars()));
    }

    #[test]
    fn rewrite_check_on_small_cases() {
        let config = cfg(&["a", "b"], 2);
        let phi = p("ex X. ((b(X)) & (sing(X)))");
        let report = check_mso_rewrite(&phi, &t("a(b)"), &Valuation::empty(), &config).unwrap();
        assert!(report.lhs, "some singleton is labeled b");
        assert!(report.rhs);

        let report = check_mso_rewrite(&phi, &t("a(a)"), &Valuation::empty(), &config).unwrap();
        assert!(!report.lhs);
        assert!(!report.rhs);
    }

    #[test]
    fn rewrite_check_with_free_variable() {
        let config = cfg(&["a", "b"], 2);
        let phi = p("b(X)");
        for (tree, nu, expect) in [
            (t("b(b)"), nu_root("X"), true),
            (t("a(b)"), nu_root("X"), false),
            (t("a(b)"), Valuation::empty(), true),
        ] {
            let report = check_mso_rewrite(&phi, &tree, &nu, &config).unwrap();
            assert_eq!(report.lhs, expect);
            assert_eq!(report.rhs, expect, "rewrite disagrees on {tree}");
        }
    }

    #[test]
    fn formula_budget_guard_trips() {
        let mut config = cfg(&["a", "b"], 2);
        config.limits.formula_nodes = 500;
        let err = build_mso_formula(&p("ex X. b(X)"), &config).unwrap_err();
        assert!(matches!(err, Error::FormulaBudgetExceeded { .. }));
    }
}
