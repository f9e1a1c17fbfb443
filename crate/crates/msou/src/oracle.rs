//! Brute-force reference semantics: direct evaluation of formulas and direct
//! computation of types on finite trees, by enumeration of all node subsets.
//!
//! Evaluation hinges on two facts about finite trees. A quantified set
//! ranges over the `2^N` subsets of the domain, enumerated in the canonical
//! address order (so a node-count cap guards every enumeration). And the
//! unbounding quantifier is false outright: no subset of an `N`-node domain
//! has cardinality `N+1`, so no property can be witnessed by finite sets of
//! unbounded size. The same reasoning forces the second component of every
//! quantifier type to be empty here.
//!
//! Results are cached per subformula under the restriction of the
//! environment to the subformula's free variables — a pure-function cache
//! that leaves the enumeration semantics untouched. A differential test
//! against a plain recursive evaluator keeps the cache honest.

use std::collections::HashMap;

use crate::config::{Config, Limits};
use crate::error::{Error, Result};
use crate::formula::{Formula, Label, VarName};
use crate::tree::{NodeAddr, Tree, Valuation};
use crate::typespace::{ChildVal, PhType};

/// Largest tree the indexed evaluator supports (node sets are bitmasks).
const MAX_INDEXED_NODES: usize = 64;

/// Evaluates a formula on a finite tree under a valuation.
pub fn eval(phi: &Formula, tree: &Tree, nu: &Valuation, config: &Config) -> Result<bool> {
    if tree.node_count() <= MAX_INDEXED_NODES {
        Evaluator::new(tree, &config.limits)?.eval(phi, nu)
    } else {
        nu.check_in(tree)?;
        slow_eval(phi, tree, nu, &config.limits)
    }
}

/// Computes the type of `tree` under `nu` literally by the inductive
/// definition, with full subset enumeration at quantifiers.
pub fn direct_type(phi: &Formula, tree: &Tree, nu: &Valuation, config: &Config) -> Result<PhType> {
    if tree.node_count() <= MAX_INDEXED_NODES {
        Evaluator::new(tree, &config.limits)?.direct_type(phi, nu)
    } else {
        Err(Error::NodeCapExceeded {
            nodes: tree.node_count(),
            cap: config.limits.node_cap.min(MAX_INDEXED_NODES),
        })
    }
}

// --- interned formula DAG ---
//
// Identical subformulas collapse to one node, so evaluating a family of
// formulas that share large pieces (as every synthesized formula does)
// shares both work and cache entries.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Node {
    LabelAtom(u32, u32),
    Subset(u32, u32),
    Child(u32, u32, u32),
    And(u32, u32),
    Not(u32),
    Exists(u32, u32),
    Unbound(u32, u32),
}

#[derive(Default)]
struct Arena {
    nodes: Vec<Node>,
    free_vars: Vec<Vec<u32>>,
    dedup: HashMap<Node, u32>,
    vars: Vec<VarName>,
    var_ids: HashMap<VarName, u32>,
    labels: Vec<Label>,
    label_ids: HashMap<Label, u32>,
}

impl Arena {
    fn var_id(&mut self, v: &VarName) -> u32 {
        if let Some(&id) = self.var_ids.get(v) {
            return id;
        }
        let id = self.vars.len() as u32;
        self.vars.push(v.clone());
        self.var_ids.insert(v.clone(), id);
        id
    }

    fn label_id(&mut self, l: &Label) -> u32 {
        if let Some(&id) = self.label_ids.get(l) {
            return id;
        }
        let id = self.labels.len() as u32;
        self.labels.push(l.clone());
        self.label_ids.insert(l.clone(), id);
        id
    }

    fn add(&mut self, node: Node, fv: Vec<u32>) -> u32 {
        if let Some(&id) = self.dedup.get(&node) {
            return id;
        }
        let id = self.nodes.len() as u32;
        self.nodes.push(node);
        self.free_vars.push(fv);
        self.dedup.insert(node, id);
        id
    }

    fn intern(&mut self, phi: &Formula) -> u32 {
        match phi {
            Formula::LabelAtom(a, x) => {
                let (a, x) = (self.label_id(a), self.var_id(x));
                self.add(Node::LabelAtom(a, x), vec![x])
            }
            Formula::Subset(x, y) => {
                let (x, y) = (self.var_id(x), self.var_id(y));
                self.add(Node::Subset(x, y), sorted_pair(x, y))
            }
            Formula::Child(i, x, y) => {
                let (x, y) = (self.var_id(x), self.var_id(y));
                self.add(Node::Child(*i, x, y), sorted_pair(x, y))
            }
            Formula::And(l, r) => {
                let l = self.intern(l);
                let r = self.intern(r);
                let mut fv = self.free_vars[l as usize].clone();
                fv.extend(&self.free_vars[r as usize]);
                fv.sort_unstable();
                fv.dedup();
                self.add(Node::And(l, r), fv)
            }
            Formula::Not(body) => {
                let b = self.intern(body);
                let fv = self.free_vars[b as usize].clone();
                self.add(Node::Not(b), fv)
            }
            Formula::Exists(v, body) | Formula::Unbound(v, body) => {
                let b = self.intern(body);
                let v = self.var_id(v);
                let fv: Vec<u32> = self.free_vars[b as usize]
                    .iter()
                    .copied()
                    .filter(|&u| u != v)
                    .collect();
                let node = if matches!(phi, Formula::Exists(..)) {
                    Node::Exists(v, b)
                } else {
                    Node::Unbound(v, b)
                };
                self.add(node, fv)
            }
        }
    }
}

fn sorted_pair(x: u32, y: u32) -> Vec<u32> {
    use std::cmp::Ordering::*;
    match x.cmp(&y) {
        Less => vec![x, y],
        Equal => vec![x],
        Greater => vec![y, x],
    }
}

struct TreeIndex {
    n: usize,
    pos: HashMap<NodeAddr, usize>,
    labels: Vec<Label>,
    children: Vec<Vec<usize>>,
}

impl TreeIndex {
    fn new(tree: &Tree) -> Self {
        let addrs = tree.addresses();
        let n = addrs.len();
        let pos: HashMap<NodeAddr, usize> =
            addrs.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
        let mut labels = Vec::with_capacity(n);
        let mut children = Vec::with_capacity(n);
        for addr in &addrs {
            labels.push(tree.label_at(addr).expect("address from the domain").clone());
            let mut child_positions = Vec::new();
            for i in 1.. {
                match pos.get(&addr.child(i)) {
                    Some(&p) => child_positions.push(p),
                    None => break,
                }
            }
            children.push(child_positions);
        }
        TreeIndex {
            n,
            pos,
            labels,
            children,
        }
    }
}

/// Reusable evaluation engine for one tree. Formulas are interned into a
/// shared DAG, and cached results survive across formulas and valuations,
/// so evaluating many related formulas on the same tree is far cheaper than
/// evaluating each in isolation.
pub struct Evaluator {
    index: TreeIndex,
    limits: Limits,
    arena: Arena,
    env: Vec<u64>,
    label_masks: Vec<u64>,
    memo_bool: Vec<HashMap<Box<[u64]>, bool>>,
    memo_type: Vec<HashMap<Box<[u64]>, PhType>>,
    steps: u64,
}

impl Evaluator {
    pub fn new(tree: &Tree, limits: &Limits) -> Result<Self> {
        let n = tree.node_count();
        if n > MAX_INDEXED_NODES {
            return Err(Error::NodeCapExceeded {
                nodes: n,
                cap: limits.node_cap.min(MAX_INDEXED_NODES),
            });
        }
        Ok(Evaluator {
            index: TreeIndex::new(tree),
            limits: limits.clone(),
            arena: Arena::default(),
            env: Vec::new(),
            label_masks: Vec::new(),
            memo_bool: Vec::new(),
            memo_type: Vec::new(),
            steps: 0,
        })
    }

    pub fn eval(&mut self, phi: &Formula, nu: &Valuation) -> Result<bool> {
        let root = self.prepare(phi, nu)?;
        self.eval_node(root)
    }

    pub fn direct_type(&mut self, phi: &Formula, nu: &Valuation) -> Result<PhType> {
        let root = self.prepare(phi, nu)?;
        self.direct_node(root)
    }

    fn prepare(&mut self, phi: &Formula, nu: &Valuation) -> Result<u32> {
        let root = self.arena.intern(phi);
        self.env.resize(self.arena.vars.len(), 0);
        self.memo_bool.resize_with(self.arena.nodes.len(), HashMap::new);
        self.memo_type.resize_with(self.arena.nodes.len(), HashMap::new);
        while self.label_masks.len() < self.arena.labels.len() {
            let label = &self.arena.labels[self.label_masks.len()];
            let mut mask = 0u64;
            for (p, l) in self.index.labels.iter().enumerate() {
                if l == label {
                    mask |= 1 << p;
                }
            }
            self.label_masks.push(mask);
        }
        self.env.fill(0);
        for (var, set) in nu.support() {
            let mut mask = 0u64;
            for addr in set {
                match self.index.pos.get(addr) {
                    Some(&p) => mask |= 1 << p,
                    None => return Err(Error::AddressOutOfDomain(addr.clone())),
                }
            }
            // Variables that do not occur in any interned formula still get
            // their domain checked above.
            if let Some(&id) = self.arena.var_ids.get(var) {
                self.env[id as usize] = mask;
            }
        }
        self.steps = 0;
        Ok(root)
    }

    fn step(&mut self) -> Result<()> {
        self.steps += 1;
        if self.steps > self.limits.eval_steps {
            return Err(Error::EvalBudgetExceeded {
                budget: self.limits.eval_steps,
            });
        }
        Ok(())
    }

    fn check_enumeration_cap(&self) -> Result<()> {
        if self.index.n > self.limits.node_cap {
            return Err(Error::NodeCapExceeded {
                nodes: self.index.n,
                cap: self.limits.node_cap,
            });
        }
        Ok(())
    }

    fn fv_key(&self, id: u32) -> Vec<u64> {
        self.arena.free_vars[id as usize]
            .iter()
            .map(|&v| self.env[v as usize])
            .collect()
    }

    fn eval_node(&mut self, id: u32) -> Result<bool> {
        self.step()?;
        match self.arena.nodes[id as usize] {
            Node::LabelAtom(a, x) => {
                Ok(self.env[x as usize] & !self.label_masks[a as usize] == 0)
            }
            Node::Subset(x, y) => Ok(self.env[x as usize] & !self.env[y as usize] == 0),
            Node::Child(i, x, y) => Ok(self.child_holds(i, x, y)),
            Node::And(l, r) => Ok(self.eval_node(l)? && self.eval_node(r)?),
            Node::Not(body) => Ok(!self.eval_node(body)?),
            Node::Exists(x, body) => {
                self.check_enumeration_cap()?;
                let key = self.fv_key(id);
                if let Some(&hit) = self.memo_bool[id as usize].get(key.as_slice()) {
                    return Ok(hit);
                }
                let saved = self.env[x as usize];
                let mut holds = false;
                for mask in 0..(1u64 << self.index.n) {
                    self.env[x as usize] = mask;
                    if self.eval_node(body)? {
                        holds = true;
                        break;
                    }
                }
                self.env[x as usize] = saved;
                self.memo_bool[id as usize].insert(key.into_boxed_slice(), holds);
                Ok(holds)
            }
            // False on every finite tree: witnesses are subsets of an
            // N-node domain, so none has cardinality N+1.
            Node::Unbound(..) => Ok(false),
        }
    }

    fn child_holds(&self, i: u32, x: u32, y: u32) -> bool {
        let mx = self.env[x as usize];
        let my = self.env[y as usize];
        if mx.count_ones() != 1 || my.count_ones() != 1 {
            return false;
        }
        let px = mx.trailing_zeros() as usize;
        let py = my.trailing_zeros() as usize;
        self.index.children[px].get(i as usize - 1) == Some(&py)
    }

    fn direct_node(&mut self, id: u32) -> Result<PhType> {
        self.step()?;
        match self.arena.nodes[id as usize] {
            Node::LabelAtom(a, x) => Ok(PhType::Bool(
                self.env[x as usize] & !self.label_masks[a as usize] == 0,
            )),
            Node::Subset(x, y) => Ok(PhType::Bool(
                self.env[x as usize] & !self.env[y as usize] == 0,
            )),
            Node::Child(i, x, y) => {
                let mx = self.env[x as usize];
                let my = self.env[y as usize];
                let val = if self.child_holds(i, x, y) {
                    ChildVal::Tt
                } else if mx == 0 && my == 0 {
                    ChildVal::Empty
                } else if mx == 0 && my == 1 {
                    // Bit 0 is the root: the canonical address order puts
                    // the root first.
                    ChildVal::Root
                } else {
                    ChildVal::Ff
                };
                Ok(PhType::Child4(val))
            }
            Node::And(l, r) => Ok(PhType::pair(self.direct_node(l)?, self.direct_node(r)?)),
            Node::Not(body) => self.direct_node(body),
            Node::Exists(x, body) | Node::Unbound(x, body) => {
                self.check_enumeration_cap()?;
                let key = self.fv_key(id);
                if let Some(hit) = self.memo_type[id as usize].get(key.as_slice()) {
                    return Ok(hit.clone());
                }
                let saved = self.env[x as usize];
                let mut exists_set = std::collections::BTreeSet::new();
                for mask in 0..(1u64 << self.index.n) {
                    self.env[x as usize] = mask;
                    exists_set.insert(self.direct_node(body)?);
                }
                self.env[x as usize] = saved;
                // The second component asks for witnesses of every finite
                // cardinality; a finite domain bounds them, so it is empty.
                let result = PhType::Quant(exists_set, std::collections::BTreeSet::new());
                self.memo_type[id as usize].insert(key.into_boxed_slice(), result.clone());
                Ok(result)
            }
        }
    }
}

/// Set-based evaluation for trees too large to index. Atoms and boolean
/// connectives work at any size; quantifier enumeration is refused.
fn slow_eval(phi: &Formula, tree: &Tree, nu: &Valuation, limits: &Limits) -> Result<bool> {
    match phi {
        Formula::LabelAtom(a, x) => {
            for addr in nu.get(x).iter() {
                if tree.label_at(addr)? != a {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Formula::Subset(x, y) => Ok(nu.get(x).is_subset(&nu.get(y))),
        Formula::Child(i, x, y) => {
            let sx = nu.get(x);
            let sy = nu.get(y);
            Ok(sx.len() == 1
                && sy.len() == 1
                && sx.first().unwrap().child(*i) == *sy.first().unwrap())
        }
        Formula::And(l, r) => Ok(slow_eval(l, tree, nu, limits)? && slow_eval(r, tree, nu, limits)?),
        Formula::Not(body) => Ok(!slow_eval(body, tree, nu, limits)?),
        Formula::Exists(..) => Err(Error::NodeCapExceeded {
            nodes: tree.node_count(),
            cap: limits.node_cap.min(MAX_INDEXED_NODES),
        }),
        Formula::Unbound(..) => Ok(false),
    }
}

#[cfg(test)]
pub(crate) mod naive {
    //! Plain transcription of the semantics over address sets, used to
    //! cross-check the indexed evaluator's cache.

    use std::collections::BTreeSet;

    use super::*;

    pub fn naive_eval(phi: &Formula, tree: &Tree, nu: &Valuation) -> bool {
        match phi {
            Formula::LabelAtom(a, x) => nu
                .get(x)
                .iter()
                .all(|u| tree.label_at(u).map(|l| l == a).unwrap_or(false)),
            Formula::Subset(x, y) => nu.get(x).is_subset(&nu.get(y)),
            Formula::Child(i, x, y) => {
                let sx = nu.get(x);
                let sy = nu.get(y);
                sx.len() == 1
                    && sy.len() == 1
                    && sx.first().unwrap().child(*i) == *sy.first().unwrap()
            }
            Formula::And(l, r) => naive_eval(l, tree, nu) && naive_eval(r, tree, nu),
            Formula::Not(body) => !naive_eval(body, tree, nu),
            Formula::Exists(x, body) => all_subsets(tree).into_iter().any(|s| {
                let mut bound = nu.clone();
                bound.set(x.clone(), s);
                naive_eval(body, tree, &bound)
            }),
            Formula::Unbound(..) => false,
        }
    }

    pub fn naive_direct(phi: &Formula, tree: &Tree, nu: &Valuation) -> PhType {
        match phi {
            Formula::LabelAtom(..) | Formula::Subset(..) => {
                PhType::Bool(naive_eval(phi, tree, nu))
            }
            Formula::Child(_, x, y) => {
                let sx = nu.get(x);
                let sy = nu.get(y);
                let val = if naive_eval(phi, tree, nu) {
                    ChildVal::Tt
                } else if sx.is_empty() && sy.is_empty() {
                    ChildVal::Empty
                } else if sx.is_empty() && sy == BTreeSet::from([NodeAddr::root()]) {
                    ChildVal::Root
                } else {
                    ChildVal::Ff
                };
                PhType::Child4(val)
            }
            Formula::And(l, r) => {
                PhType::pair(naive_direct(l, tree, nu), naive_direct(r, tree, nu))
            }
            Formula::Not(body) => naive_direct(body, tree, nu),
            Formula::Exists(x, body) | Formula::Unbound(x, body) => {
                let mut exists_set = BTreeSet::new();
                for s in all_subsets(tree) {
                    let mut bound = nu.clone();
                    bound.set(x.clone(), s);
                    exists_set.insert(naive_direct(body, tree, &bound));
                }
                PhType::Quant(exists_set, BTreeSet::new())
            }
        }
    }

    pub fn all_subsets(tree: &Tree) -> Vec<BTreeSet<NodeAddr>> {
        let addrs = tree.addresses();
        let mut out = Vec::with_capacity(1 << addrs.len());
        for mask in 0u64..(1 << addrs.len()) {
            out.push(
                addrs
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, a)| a.clone())
                    .collect(),
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::naive::{naive_direct, naive_eval};
    use super::*;
    use crate::parser::parse_formula;
    use crate::tree::parse_tree;

    fn p(src: &str) -> Formula {
        parse_formula(src).unwrap()
    }

    fn t(src: &str) -> Tree {
        parse_tree(src).unwrap()
    }

    fn cfg() -> Config {
        Config::new(["a", "b", "c"], 2).unwrap()
    }

    fn nu_one(var: &str, addrs: &[&[u32]]) -> Valuation {
        let mut nu = Valuation::empty();
        nu.set(
            VarName::new(var),
            addrs.iter().map(|p| NodeAddr::new(p.to_vec())).collect(),
        );
        nu
    }

    #[test]
    fn eval_label_atom() {
        let config = cfg();
        assert!(eval(&p("b(X)"), &t("b"), &nu_one("X", &[&[]]), &config).unwrap());
        // Vacuously true: the empty set has all its nodes labeled b.
        assert!(eval(&p("b(X)"), &t("a"), &Valuation::empty(), &config).unwrap());
        assert!(!eval(&p("b(X)"), &t("a"), &nu_one("X", &[&[]]), &config).unwrap());
    }

    #[test]
    fn eval_child_atom() {
        let config = cfg();
        let mut nu = nu_one("X", &[&[]]);
        nu.set(VarName::new("Y"), BTreeSet::from([NodeAddr::new(vec![1])]));
        assert!(eval(&p("child1(X,Y)"), &t("a(b)"), &nu, &config).unwrap());
        assert!(!eval(&p("child2(X,Y)"), &t("a(b)"), &nu, &config).unwrap());
    }

    #[test]
    fn unbound_is_false_on_finite_trees() {
        let config = cfg();
        for tree in ["a", "a(b,c)", "a(b(a,c),c)"] {
            assert!(!eval(&p("U X. b(X)"), &t(tree), &Valuation::empty(), &config).unwrap());
        }
    }

    #[test]
    fn eval_checks_valuation_domain() {
        let config = cfg();
        let err = eval(&p("b(X)"), &t("b"), &nu_one("X", &[&[1]]), &config).unwrap_err();
        assert!(matches!(err, Error::AddressOutOfDomain(_)));
    }

    #[test]
    fn exists_respects_node_cap() {
        let mut config = cfg();
        config.limits.node_cap = 2;
        let tree = t("a(b,c)");
        let err = eval(&p("ex X. b(X)"), &tree, &Valuation::empty(), &config).unwrap_err();
        assert!(matches!(err, Error::NodeCapExceeded { nodes: 3, cap: 2 }));
        // Quantifier-free formulas are not capped.
        assert!(eval(&p("b(X)"), &tree, &nu_one("X", &[&[1]]), &config).unwrap());
        // A tree at the cap still enumerates.
        assert!(eval(&p("ex X. b(X)"), &t("a(b)"), &Valuation::empty(), &config).unwrap());
    }

    #[test]
    fn direct_type_child_atom_root_case() {
        let config = cfg();
        let got = direct_type(&p("child1(X,Y)"), &t("a"), &nu_one("Y", &[&[]]), &config).unwrap();
        assert_eq!(got, PhType::Child4(ChildVal::Root));
    }

    #[test]
    fn direct_type_of_quantified_formula_on_single_node() {
        let config = cfg();
        let got = direct_type(&p("ex X. b(X)"), &t("c"), &Valuation::empty(), &config).unwrap();
        assert_eq!(got, PhType::quant([PhType::tt(), PhType::ff()], []));
    }

    #[test]
    fn exists_component_is_nonempty_and_unbounded_component_empty() {
        let config = cfg();
        for tree in ["a", "a(b)", "a(b,c)"] {
            for phi in ["ex X. b(X)", "U Y. child1(X,Y)"] {
                let got = direct_type(&p(phi), &t(tree), &Valuation::empty(), &config).unwrap();
                match got {
                    PhType::Quant(s, su) => {
                        assert!(!s.is_empty());
                        assert!(su.is_empty());
                    }
                    other => panic!("expected a quantifier type, got {other}"),
                }
            }
        }
    }

    #[test]
    fn double_negation_and_conjunction_laws() {
        let config = cfg();
        let cases = [
            ("b(X)", "a(b)"),
            ("child1(X,Y)", "a(b)"),
            ("ex Y. child1(X,Y)", "a(b,c)"),
        ];
        for (phi_src, tree_src) in cases {
            let phi = p(phi_src);
            let tree = t(tree_src);
            let nu = nu_one("X", &[&[]]);
            let plain = eval(&phi, &tree, &nu, &config).unwrap();
            let doubled = eval(
                &Formula::not(Formula::not(phi.clone())),
                &tree,
                &nu,
                &config,
            )
            .unwrap();
            assert_eq!(plain, doubled);
            let other = p("a(X)");
            let both = eval(&Formula::and(phi.clone(), other.clone()), &tree, &nu, &config).unwrap();
            assert_eq!(
                both,
                plain && eval(&other, &tree, &nu, &config).unwrap()
            );
        }
    }

    #[test]
    fn indexed_evaluator_agrees_with_naive_semantics() {
        let config = cfg();
        let formulas = [
            "b(X)",
            "X sub Y",
            "child1(X,Y)",
            "child2(X,Y)",
            "ex X. b(X) & child1(X,Y)",
            "ex X. ex Y. child2(X,Y)",
            "!(ex X. (a(X)) & (X sub Y))",
            "U X. a(X)",
            "ex X. !(U Y. X sub Y)",
            "empty(X)",
            "sing(X)",
            "big(X)",
        ];
        let trees = ["a", "b", "a(b)", "a(b,c)", "b(a(c),b)"];
        for phi_src in formulas {
            let phi = p(phi_src);
            for tree_src in trees {
                let tree = t(tree_src);
                let addrs = tree.addresses();
                // A handful of deterministic valuations per (formula, tree).
                for (i, j) in [(0usize, 0usize), (1, 0), (0, 1), (2, 1)] {
                    let mut nu = Valuation::empty();
                    nu.set(
                        VarName::new("X"),
                        addrs.iter().take(i).cloned().collect(),
                    );
                    nu.set(
                        VarName::new("Y"),
                        addrs.iter().skip(j).step_by(2).cloned().collect(),
                    );
                    let fast = eval(&phi, &tree, &nu, &config).unwrap();
                    assert_eq!(fast, naive_eval(&phi, &tree, &nu), "{phi_src} on {tree_src}");
                    let fast_ty = direct_type(&phi, &tree, &nu, &config).unwrap();
                    assert_eq!(
                        fast_ty,
                        naive_direct(&phi, &tree, &nu),
                        "{phi_src} on {tree_src}"
                    );
                }
            }
        }
    }

    #[test]
    fn evaluator_is_reusable_across_formulas_and_valuations() {
        let tree = t("a(b,c)");
        let limits = Limits::default();
        let mut evaluator = Evaluator::new(&tree, &limits).unwrap();
        let phi1 = p("ex X. b(X)");
        let phi2 = p("ex X. (b(X)) & (sing(X))");
        assert!(evaluator.eval(&phi1, &Valuation::empty()).unwrap());
        assert!(evaluator.eval(&phi2, &Valuation::empty()).unwrap());
        let nu = nu_one("X", &[&[1]]);
        assert!(evaluator.eval(&p("b(X)"), &nu).unwrap());
        assert!(!evaluator.eval(&p("c(X)"), &nu).unwrap());
    }

    #[test]
    fn eval_budget_trips() {
        let mut config = cfg();
        config.limits.eval_steps = 50;
        let err = eval(
            &p("ex X. ex Y. ex Z. ((a(X)) & (!(a(X))))"),
            &t("a(b,c)"),
            &Valuation::empty(),
            &config,
        )
        .unwrap_err();
        assert!(matches!(err, Error::EvalBudgetExceeded { .. }));
    }

    #[test]
    fn big_tree_falls_back_to_set_semantics() {
        // 85 nodes: atoms fine, quantifiers refused.
        let mut src = String::from("a");
        for _ in 0..84 {
            src = format!("a({src})");
        }
        let tree = parse_tree(&src).unwrap();
        assert_eq!(tree.node_count(), 85);
        let config = cfg();
        assert!(eval(&p("a(X)"), &tree, &nu_one("X", &[&[1, 1]]), &config).unwrap());
        assert!(!eval(&p("U X. a(X)"), &tree, &Valuation::empty(), &config).unwrap());
        assert!(matches!(
            eval(&p("ex X. a(X)"), &tree, &Valuation::empty(), &config),
            Err(Error::NodeCapExceeded { .. })
        ));
    }
}
