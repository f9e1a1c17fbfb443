//! Seeded random corpus of formulas, trees, and valuations; exhaustive
//! small-model enumeration; the differential property suites; and greedy
//! counterexample shrinking.
//!
//! Identical seeds produce identical case streams, so every suite run is
//! reproducible byte for byte.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::compose::{bottom_up_type, context_type};
use crate::config::Config;
use crate::decompose::{
    apply_relabeling, build_mso_formula, build_relabeling, build_root_decomposition,
    check_root_decomposition, is_mso,
};
use crate::error::Error;
use crate::formula::{Formula, Label, VarName};
use crate::oracle::{direct_type, eval};
use crate::parser::parse_formula;
use crate::tree::{parse_tree, parse_valuation, Context, HoleId, NodeAddr, Tree, Valuation};
use crate::typespace::tv;

/// Bounds for the random generator.
#[derive(Debug, Clone)]
pub struct GenParams {
    /// Soft bound on formula AST size.
    pub max_formula_size: usize,
    /// Maximal quantifier nesting.
    pub max_qdepth: usize,
    /// Maximal tree size in nodes.
    pub max_tree_nodes: usize,
    /// Variable pool for atoms and quantifiers.
    pub vars: Vec<VarName>,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            max_formula_size: 9,
            max_qdepth: 2,
            max_tree_nodes: 6,
            vars: vec![VarName::new("X"), VarName::new("Y"), VarName::new("Z")],
        }
    }
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> &'a T {
    &items[rng.random_range(0..items.len())]
}

/// Random formula. Construction weights: atoms 40%, conjunction 20%,
/// negation 20%, existential 15%, unbounding 5%; quantifiers are dropped
/// once the depth bound is reached.
pub fn gen_formula(rng: &mut ChaCha8Rng, config: &Config, params: &GenParams) -> Formula {
    let letters: Vec<Label> = config.letters().cloned().collect();
    gen_formula_rec(rng, &letters, config.r_max(), params, params.max_formula_size, params.max_qdepth)
}

fn gen_formula_rec(
    rng: &mut ChaCha8Rng,
    letters: &[Label],
    r_max: usize,
    params: &GenParams,
    size: usize,
    qdepth: usize,
) -> Formula {
    let atom = |rng: &mut ChaCha8Rng| -> Formula {
        match rng.random_range(0..3) {
            0 => Formula::LabelAtom(pick(rng, letters).clone(), pick(rng, &params.vars).clone()),
            1 => Formula::Subset(
                pick(rng, &params.vars).clone(),
                pick(rng, &params.vars).clone(),
            ),
            _ => {
                // Mostly indices a conforming tree can have; occasionally one
                // past the maximal arity, which is legal and never holds.
                let hi = r_max.max(1) as u32;
                let idx = if rng.random_range(0..10) == 0 {
                    hi + 1
                } else {
                    rng.random_range(1..=hi)
                };
                Formula::Child(
                    idx,
                    pick(rng, &params.vars).clone(),
                    pick(rng, &params.vars).clone(),
                )
            }
        }
    };
    if size <= 1 {
        return atom(rng);
    }
    let roll = rng.random_range(0..if qdepth == 0 { 80 } else { 100 });
    match roll {
        0..40 => atom(rng),
        40..60 => {
            let left = rng.random_range(1..size);
            Formula::and(
                gen_formula_rec(rng, letters, r_max, params, left, qdepth),
                gen_formula_rec(rng, letters, r_max, params, size - 1 - left.min(size - 1), qdepth),
            )
        }
        60..80 => Formula::not(gen_formula_rec(rng, letters, r_max, params, size - 1, qdepth)),
        80..95 => Formula::exists(
            pick(rng, &params.vars).clone(),
            gen_formula_rec(rng, letters, r_max, params, size - 1, qdepth - 1),
        ),
        _ => Formula::unbound(
            pick(rng, &params.vars).clone(),
            gen_formula_rec(rng, letters, r_max, params, size - 1, qdepth - 1),
        ),
    }
}

/// Random tree with at most `max_nodes` nodes conforming to the alphabet
/// and maximal arity.
pub fn gen_tree(rng: &mut ChaCha8Rng, config: &Config, max_nodes: usize) -> Tree {
    let letters: Vec<Label> = config.letters().cloned().collect();
    let size = rng.random_range(1..=max_nodes.max(1));
    gen_tree_sized(rng, &letters, config.r_max(), size)
}

fn gen_tree_sized(rng: &mut ChaCha8Rng, letters: &[Label], r_max: usize, size: usize) -> Tree {
    let label = pick(rng, letters).clone();
    let mut rest = size.saturating_sub(1);
    if r_max == 0 {
        rest = 0;
    }
    let mut children = Vec::new();
    while rest > 0 && children.len() < r_max {
        let remaining_slots = r_max - children.len();
        let take = if remaining_slots == 1 {
            rest
        } else {
            rng.random_range(1..=rest)
        };
        children.push(gen_tree_sized(rng, letters, r_max, take));
        rest -= take;
    }
    Tree { label, children }
}

/// Random valuation of `vars` over the nodes of `tree`: per variable,
/// empty with probability 0.2, a singleton with probability 0.3, otherwise
/// each node independently with probability 0.35.
pub fn gen_valuation(
    rng: &mut ChaCha8Rng,
    tree: &Tree,
    vars: &BTreeSet<VarName>,
) -> Valuation {
    let addrs = tree.addresses();
    let mut nu = Valuation::empty();
    for var in vars {
        let set: BTreeSet<NodeAddr> = match rng.random_range(0..10) {
            0 | 1 => BTreeSet::new(),
            2..5 => [pick(rng, &addrs).clone()].into_iter().collect(),
            _ => addrs
                .iter()
                .filter(|_| rng.random_range(0..100) < 35)
                .cloned()
                .collect(),
        };
        nu.set(var.clone(), set);
    }
    nu
}

/// Random context: a tree in which up to `max_holes` leaves are replaced by
/// holes (at least one).
pub fn gen_context(
    rng: &mut ChaCha8Rng,
    config: &Config,
    max_nodes: usize,
    max_holes: usize,
) -> Context {
    let tree = gen_tree(rng, config, max_nodes);
    let leaves: Vec<NodeAddr> = tree
        .addresses()
        .into_iter()
        .filter(|a| tree.subtree(a).map(|s| s.children.is_empty()).unwrap_or(false))
        .collect();
    let count = rng.random_range(1..=max_holes.min(leaves.len()).max(1));
    let mut chosen: Vec<NodeAddr> = Vec::new();
    let mut pool = leaves;
    for _ in 0..count {
        let i = rng.random_range(0..pool.len());
        chosen.push(pool.swap_remove(i));
    }
    chosen.sort();
    let holes: BTreeMap<NodeAddr, HoleId> = chosen
        .into_iter()
        .enumerate()
        .map(|(i, a)| (a, HoleId(i as u32 + 1)))
        .collect();
    punch_holes(&tree, &NodeAddr::root(), &holes)
}

fn punch_holes(tree: &Tree, addr: &NodeAddr, holes: &BTreeMap<NodeAddr, HoleId>) -> Context {
    if let Some(id) = holes.get(addr) {
        return Context::Hole(*id);
    }
    Context::Node {
        label: tree.label.clone(),
        children: tree
            .children
            .iter()
            .enumerate()
            .map(|(k, c)| punch_holes(c, &addr.child(k as u32 + 1), holes))
            .collect(),
    }
}

/// Exhaustive enumeration of all trees with at most `max_nodes` nodes over
/// the configured alphabet and arity, in a deterministic order.
pub fn all_trees(config: &Config, max_nodes: usize) -> Vec<Tree> {
    let letters: Vec<Label> = config.letters().cloned().collect();
    let mut by_size: Vec<Vec<Tree>> = vec![Vec::new()];
    for size in 1..=max_nodes {
        let mut trees = Vec::new();
        for label in &letters {
            for children in child_lists(&by_size, size - 1, config.r_max()) {
                trees.push(Tree {
                    label: label.clone(),
                    children,
                });
            }
        }
        by_size.push(trees);
    }
    by_size.into_iter().flatten().collect()
}

/// All ordered lists of at most `r_max` trees with sizes summing to `total`.
fn child_lists(by_size: &[Vec<Tree>], total: usize, r_max: usize) -> Vec<Vec<Tree>> {
    if total == 0 {
        return vec![Vec::new()];
    }
    if r_max == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for first_size in 1..=total {
        for first in &by_size[first_size] {
            for rest in child_lists(by_size, total - first_size, r_max - 1) {
                let mut list = Vec::with_capacity(1 + rest.len());
                list.push(first.clone());
                list.extend(rest);
                out.push(list);
            }
        }
    }
    out
}

/// All subsets of the domain of `tree`, as valuation sets for one variable.
pub fn all_subsets(tree: &Tree) -> Vec<BTreeSet<NodeAddr>> {
    let addrs = tree.addresses();
    assert!(addrs.len() <= 20, "subset enumeration on a too-large tree");
    (0u64..(1 << addrs.len()))
        .map(|mask| {
            addrs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, a)| a.clone())
                .collect()
        })
        .collect()
}

// --- property suites ---

/// Outcome of one case of a property suite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CaseOutcome {
    Pass,
    Fail(String),
    /// A resource guard tripped; reported separately, not a failure.
    Skip(String),
}

impl CaseOutcome {
    fn from_error(err: &Error) -> CaseOutcome {
        if err.is_resource() {
            CaseOutcome::Skip(err.to_string())
        } else {
            CaseOutcome::Fail(err.to_string())
        }
    }
}

/// A failing case, shrunk as far as the failure persists.
#[derive(Debug, Clone)]
pub struct Counterexample {
    pub formula: Formula,
    pub tree: Tree,
    pub valuation: Valuation,
    pub detail: String,
}

impl std::fmt::Display for Counterexample {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "formula: {}\ntree: {}\nvaluation: {}detail: {}",
            self.formula, self.tree, self.valuation, self.detail
        )
    }
}

/// Aggregate result of one suite run.
#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub suite: String,
    pub cases: usize,
    pub passed: usize,
    pub skipped: usize,
    pub failures: Vec<Counterexample>,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn summary_line(&self) -> String {
        let mut line = format!(
            "{}: {} — {} cases, {} passed, {} skipped, {} failed",
            self.suite,
            if self.ok() { "PASS" } else { "FAIL" },
            self.cases,
            self.passed,
            self.skipped,
            self.failures.len()
        );
        if let Some(first) = self.failures.first() {
            let _ = write!(line, "\n  first counterexample:\n{first}");
        }
        line
    }
}

/// A property checked on one `(formula, tree, valuation)` case.
pub type CaseCheck = dyn Fn(&Formula, &Tree, &Valuation, &Config) -> CaseOutcome;

/// Runs `check` on `cases` random cases drawn from `seed`, shrinking any
/// failure greedily.
pub fn run_suite(
    suite: &str,
    check: &CaseCheck,
    seed: u64,
    cases: usize,
    config: &Config,
    params: &GenParams,
) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport {
        suite: suite.to_string(),
        cases,
        passed: 0,
        skipped: 0,
        failures: Vec::new(),
    };
    for _ in 0..cases {
        let phi = gen_formula(&mut rng, config, params);
        let tree = gen_tree(&mut rng, config, params.max_tree_nodes);
        let nu = gen_valuation(&mut rng, &tree, &phi.free_vars());
        match check(&phi, &tree, &nu, config) {
            CaseOutcome::Pass => report.passed += 1,
            CaseOutcome::Skip(_) => report.skipped += 1,
            CaseOutcome::Fail(detail) => {
                let (phi, tree, nu) = shrink(phi, tree, nu, config, check);
                report.failures.push(Counterexample {
                    formula: phi,
                    tree,
                    valuation: nu,
                    detail,
                });
            }
        }
    }
    report
}

/// Composition agreement: the bottom-up type equals the direct
/// (enumeration-based) type, with exact canonical equality.
pub fn type_agreement_case(
    phi: &Formula,
    tree: &Tree,
    nu: &Valuation,
    config: &Config,
) -> CaseOutcome {
    let direct = match direct_type(phi, tree, nu, config) {
        Ok(t) => t,
        Err(e) => return CaseOutcome::from_error(&e),
    };
    let composed = match bottom_up_type(phi, tree, nu, config) {
        Ok(t) => t,
        Err(e) => return CaseOutcome::from_error(&e),
    };
    if direct == composed {
        CaseOutcome::Pass
    } else {
        CaseOutcome::Fail(format!("direct type {direct} != composed type {composed}"))
    }
}

/// Truth extraction agreement: `tv` applied to the direct type equals
/// direct evaluation.
pub fn truth_bridge_case(
    phi: &Formula,
    tree: &Tree,
    nu: &Valuation,
    config: &Config,
) -> CaseOutcome {
    let tau = match direct_type(phi, tree, nu, config) {
        Ok(t) => t,
        Err(e) => return CaseOutcome::from_error(&e),
    };
    let via_type = match tv(phi, &tau) {
        Ok(b) => b,
        Err(e) => return CaseOutcome::Fail(e.to_string()),
    };
    let direct = match eval(phi, tree, nu, config) {
        Ok(b) => b,
        Err(e) => return CaseOutcome::from_error(&e),
    };
    if via_type == direct {
        CaseOutcome::Pass
    } else {
        CaseOutcome::Fail(format!(
            "tv gives {via_type} but evaluation gives {direct} (type {tau})"
        ))
    }
}

/// Root decomposition equivalence, witness re-verification, and the
/// free-variable containment of every emitted formula.
pub fn decomposition_case(
    phi: &Formula,
    tree: &Tree,
    nu: &Valuation,
    config: &Config,
) -> CaseOutcome {
    let omega = match build_root_decomposition(phi, config) {
        Ok(o) => o,
        Err(e) => return CaseOutcome::from_error(&e),
    };
    let fv = phi.free_vars();
    for f in omega.formulas() {
        if !f.free_vars().is_subset(&fv) {
            return CaseOutcome::Fail(format!(
                "tuple formula has free variables outside the original formula: {f}"
            ));
        }
    }
    let report = match check_root_decomposition(phi, tree, nu, &omega, config) {
        Ok(r) => r,
        Err(e) => return CaseOutcome::from_error(&e),
    };
    if report.lhs != report.rhs {
        return CaseOutcome::Fail(format!(
            "formula evaluates to {} but the tuple set says {}",
            report.lhs, report.rhs
        ));
    }
    if let Some(witness) = &report.witness {
        match reverify_witness(witness, tree, nu, config) {
            Ok(true) => {}
            Ok(false) => {
                return CaseOutcome::Fail("reported witness tuple does not re-verify".into());
            }
            Err(e) => return CaseOutcome::from_error(&e),
        }
    }
    CaseOutcome::Pass
}

fn reverify_witness(
    witness: &crate::decompose::DecompTuple,
    tree: &Tree,
    nu: &Valuation,
    config: &Config,
) -> crate::error::Result<bool> {
    if witness.children.len() != tree.children.len() {
        return Ok(false);
    }
    if !eval(&witness.root, &tree.root_tree(), &nu.root_valuation(), config)? {
        return Ok(false);
    }
    for (i, child_formula) in witness.children.iter().enumerate() {
        let addr = NodeAddr::root().child(i as u32 + 1);
        let sub = tree.subtree(&addr)?;
        if !eval(child_formula, &sub, &nu.restrict(&addr), config)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Relabeling rewrite equivalence: the relabeling is defined, the rewritten
/// formula is plain MSO with contained free variables, and evaluation
/// agrees on both sides.
pub fn rewrite_case(phi: &Formula, tree: &Tree, nu: &Valuation, config: &Config) -> CaseOutcome {
    let relabeling = match build_relabeling(phi, config) {
        Ok(r) => r,
        Err(e) => return CaseOutcome::from_error(&e),
    };
    let relabeled = match apply_relabeling(&relabeling, tree, config) {
        Ok(t) => t,
        // Uniqueness must hold for built relabelings; only resource
        // exhaustion is excusable.
        Err(e) => return CaseOutcome::from_error(&e),
    };
    let mso = match build_mso_formula(phi, config) {
        Ok(m) => m,
        Err(e) => return CaseOutcome::from_error(&e),
    };
    if !is_mso(&mso) {
        return CaseOutcome::Fail("rewritten formula contains an unbounding quantifier".into());
    }
    if !mso.free_vars().is_subset(&phi.free_vars()) {
        return CaseOutcome::Fail(
            "rewritten formula has free variables outside the original".into(),
        );
    }
    let lhs = match eval(phi, tree, nu, config) {
        Ok(b) => b,
        Err(e) => return CaseOutcome::from_error(&e),
    };
    let rhs = match eval(&mso, &relabeled, nu, config) {
        Ok(b) => b,
        Err(e) => return CaseOutcome::from_error(&e),
    };
    if lhs == rhs {
        CaseOutcome::Pass
    } else {
        CaseOutcome::Fail(format!(
            "formula evaluates to {lhs} but its rewrite over {relabeled} gives {rhs}"
        ))
    }
}

/// Degeneracy of the unbounding quantifier on finite trees: a formula
/// headed by it never holds, and composed types carry empty unbounded
/// components throughout.
pub fn unbound_degeneracy_case(
    phi: &Formula,
    tree: &Tree,
    nu: &Valuation,
    config: &Config,
) -> CaseOutcome {
    let headed = Formula::unbound(VarName::new("X"), phi.clone());
    match eval(&headed, tree, nu, config) {
        Ok(false) => {}
        Ok(true) => {
            return CaseOutcome::Fail(
                "formula headed by the unbounding quantifier holds on a finite tree".into(),
            );
        }
        Err(e) => return CaseOutcome::from_error(&e),
    }
    if let Formula::Unbound(..) = phi {
        match eval(phi, tree, nu, config) {
            Ok(false) => {}
            Ok(true) => {
                return CaseOutcome::Fail(
                    "formula headed by the unbounding quantifier holds on a finite tree".into(),
                );
            }
            Err(e) => return CaseOutcome::from_error(&e),
        }
    }
    match bottom_up_type(&headed, tree, nu, config) {
        Ok(tau) => {
            if tau.has_empty_unbounded_components() {
                CaseOutcome::Pass
            } else {
                CaseOutcome::Fail(format!(
                    "composed type of a finite tree has a nonempty unbounded component: {tau}"
                ))
            }
        }
        Err(e) => CaseOutcome::from_error(&e),
    }
}

/// Text round-trips: formulas through print/parse, trees and valuations
/// through their formats.
pub fn roundtrip_case(phi: &Formula, tree: &Tree, nu: &Valuation, _config: &Config) -> CaseOutcome {
    match parse_formula(&phi.to_string()) {
        Ok(back) if &back == phi => {}
        Ok(back) => {
            return CaseOutcome::Fail(format!("formula reparses differently: {back}"));
        }
        Err(e) => return CaseOutcome::Fail(format!("printed formula fails to parse: {e}")),
    }
    match parse_tree(&tree.to_string()) {
        Ok(back) if &back == tree => {}
        other => return CaseOutcome::Fail(format!("tree round-trip failed: {other:?}")),
    }
    match parse_valuation(&nu.to_string()) {
        Ok(back) if &back == nu => CaseOutcome::Pass,
        other => CaseOutcome::Fail(format!("valuation round-trip failed: {other:?}")),
    }
}

/// Context coherence: plugging subtrees into a context and typing the
/// result equals typing the context under the subtrees' types as hole
/// assumptions.
pub fn run_context_suite(
    seed: u64,
    cases: usize,
    config: &Config,
    params: &GenParams,
) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport {
        suite: "context-coherence".to_string(),
        cases,
        passed: 0,
        skipped: 0,
        failures: Vec::new(),
    };
    for _ in 0..cases {
        let phi = gen_formula(&mut rng, config, params);
        let ctx = gen_context(&mut rng, config, params.max_tree_nodes, 2);
        let holes = ctx.holes();
        let mut assignment = BTreeMap::new();
        for (_, id) in &holes {
            let sub = gen_tree(&mut rng, config, 3.min(params.max_tree_nodes));
            assignment.insert(*id, Context::from(sub));
        }
        let plugged = match ctx
            .plug(&assignment, config)
            .and_then(Context::into_tree)
        {
            Ok(t) => t,
            Err(e) => {
                report.failures.push(Counterexample {
                    formula: phi,
                    tree: Tree::leaf(config.letters().next().unwrap().clone()),
                    valuation: Valuation::empty(),
                    detail: format!("plugging failed: {e} (context {ctx})"),
                });
                continue;
            }
        };
        let nu = gen_valuation(&mut rng, &plugged, &phi.free_vars());
        let outcome = (|| -> Result<CaseOutcome, Error> {
            let mut assumptions = BTreeMap::new();
            for (addr, id) in &holes {
                let sub = plugged.subtree(addr)?;
                assumptions.insert(*id, bottom_up_type(&phi, &sub, &nu.restrict(addr), config)?);
            }
            let via_context = context_type(&phi, &ctx, &nu, &assumptions, config)?;
            let direct = bottom_up_type(&phi, &plugged, &nu, config)?;
            Ok(if via_context == direct {
                CaseOutcome::Pass
            } else {
                CaseOutcome::Fail(format!(
                    "context typing gives {via_context} but whole-tree typing gives {direct} (context {ctx})"
                ))
            })
        })()
        .unwrap_or_else(|e| CaseOutcome::from_error(&e));
        match outcome {
            CaseOutcome::Pass => report.passed += 1,
            CaseOutcome::Skip(_) => report.skipped += 1,
            CaseOutcome::Fail(detail) => report.failures.push(Counterexample {
                formula: phi,
                tree: plugged,
                valuation: nu,
                detail,
            }),
        }
    }
    report
}

// --- greedy shrinking ---

/// Shrinks a failing case: drop subtrees, shrink the valuation, prune
/// subformulas — keeping any reduction under which the failure persists.
pub fn shrink(
    mut phi: Formula,
    mut tree: Tree,
    mut nu: Valuation,
    config: &Config,
    check: &CaseCheck,
) -> (Formula, Tree, Valuation) {
    let fails = |phi: &Formula, tree: &Tree, nu: &Valuation| {
        matches!(check(phi, tree, nu, config), CaseOutcome::Fail(_))
    };
    for _ in 0..200 {
        let mut improved = false;

        for smaller in tree_variants(&tree) {
            let trimmed = restrict_to_tree(&nu, &smaller);
            if fails(&phi, &smaller, &trimmed) {
                tree = smaller;
                nu = trimmed;
                improved = true;
                break;
            }
        }
        if !improved {
            'vals: for (var, set) in nu.clone().support() {
                for addr in set {
                    let mut smaller_set = set.clone();
                    smaller_set.remove(addr);
                    let mut smaller = nu.clone();
                    smaller.set(var.clone(), smaller_set);
                    if fails(&phi, &tree, &smaller) {
                        nu = smaller;
                        improved = true;
                        break 'vals;
                    }
                }
            }
        }
        if !improved {
            for pruned in prune_variants(&phi) {
                if fails(&pruned, &tree, &nu) {
                    phi = pruned;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            break;
        }
    }
    (phi, tree, nu)
}

/// Single-step tree reductions: replace the tree by a child subtree, or
/// drop the last child of some node (keeping sibling closure).
fn tree_variants(tree: &Tree) -> Vec<Tree> {
    let mut out: Vec<Tree> = tree.children.iter().cloned().collect();
    out.extend(drop_last_child_variants(tree));
    out
}

fn drop_last_child_variants(tree: &Tree) -> Vec<Tree> {
    let mut out = Vec::new();
    if !tree.children.is_empty() {
        let mut dropped = tree.clone();
        dropped.children.pop();
        out.push(dropped);
    }
    for (i, child) in tree.children.iter().enumerate() {
        for variant in drop_last_child_variants(child) {
            let mut next = tree.clone();
            next.children[i] = variant;
            out.push(next);
        }
    }
    out
}

fn restrict_to_tree(nu: &Valuation, tree: &Tree) -> Valuation {
    let mut out = Valuation::empty();
    for (var, set) in nu.support() {
        out.set(
            var.clone(),
            set.iter().filter(|a| tree.contains(a)).cloned().collect(),
        );
    }
    out
}

/// Single-step formula reductions: replace a connective by one operand.
fn prune_variants(phi: &Formula) -> Vec<Formula> {
    let mut out = Vec::new();
    match phi {
        Formula::LabelAtom(..) | Formula::Subset(..) | Formula::Child(..) => {}
        Formula::And(l, r) => {
            out.push((**l).clone());
            out.push((**r).clone());
            for v in prune_variants(l) {
                out.push(Formula::and(v, (**r).clone()));
            }
            for v in prune_variants(r) {
                out.push(Formula::and((**l).clone(), v));
            }
        }
        Formula::Not(body) => {
            out.push((**body).clone());
            for v in prune_variants(body) {
                out.push(Formula::not(v));
            }
        }
        Formula::Exists(x, body) => {
            out.push((**body).clone());
            for v in prune_variants(body) {
                out.push(Formula::exists(x.clone(), v));
            }
        }
        Formula::Unbound(x, body) => {
            out.push((**body).clone());
            for v in prune_variants(body) {
                out.push(Formula::unbound(x.clone(), v));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> Config {
        Config::new(["a", "b"], 2).unwrap()
    }

    #[test]
    fn generator_is_deterministic() {
        let config = cfg();
        let params = GenParams::default();
        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let fa = gen_formula(&mut a, &config, &params);
            let fb = gen_formula(&mut b, &config, &params);
            assert_eq!(fa, fb);
            let ta = gen_tree(&mut a, &config, 6);
            let tb = gen_tree(&mut b, &config, 6);
            assert_eq!(ta, tb);
            let na = gen_valuation(&mut a, &ta, &fa.free_vars());
            let nb = gen_valuation(&mut b, &tb, &fb.free_vars());
            assert_eq!(na, nb);
        }
    }

    #[test]
    fn generated_values_respect_bounds() {
        let config = cfg();
        let params = GenParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let phi = gen_formula(&mut rng, &config, &params);
            assert!(phi.quantifier_depth() <= params.max_qdepth);
            let tree = gen_tree(&mut rng, &config, params.max_tree_nodes);
            assert!(tree.node_count() <= params.max_tree_nodes);
            assert!(tree.validate(&config).is_ok());
            let nu = gen_valuation(&mut rng, &tree, &phi.free_vars());
            assert!(nu.check_in(&tree).is_ok());
        }
    }

    #[test]
    fn tree_enumeration_counts() {
        let config = cfg();
        // sizes over {a,b}, arity <= 2: 2 trees of 1 node, 4 of 2 nodes,
        // 16 of 3 nodes (two shapes, eight labelings each).
        let trees = all_trees(&config, 3);
        assert_eq!(trees.iter().filter(|t| t.node_count() == 1).count(), 2);
        assert_eq!(trees.iter().filter(|t| t.node_count() == 2).count(), 4);
        assert_eq!(trees.iter().filter(|t| t.node_count() == 3).count(), 16);
        for t in &trees {
            assert!(t.validate(&config).is_ok());
        }
        let distinct: BTreeSet<Tree> = trees.iter().cloned().collect();
        assert_eq!(distinct.len(), trees.len());
    }

    #[test]
    fn shrink_reaches_a_minimal_tree() {
        let config = cfg();
        // "Fails" whenever the tree contains at least two nodes.
        let check: Box<CaseCheck> = Box::new(|_, tree, _, _| {
            if tree.node_count() >= 2 {
                CaseOutcome::Fail("big tree".into())
            } else {
                CaseOutcome::Pass
            }
        });
        let phi = parse_formula("a(X)").unwrap();
        let tree = parse_tree("a(b(a,b),a)").unwrap();
        let mut nu = Valuation::empty();
        nu.set(
            VarName::new("X"),
            [NodeAddr::root()].into_iter().collect(),
        );
        let (_, small, _) = shrink(phi, tree, nu, &config, &check);
        assert_eq!(small.node_count(), 2);
    }

    #[test]
    fn suites_pass_on_a_small_smoke_run() {
        let config = cfg();
        let params = GenParams::default();
        let report = run_suite(
            "type-agreement",
            &type_agreement_case,
            3,
            40,
            &config,
            &params,
        );
        assert!(report.ok(), "{}", report.summary_line());
        assert_eq!(report.passed + report.skipped, 40);

        let report = run_suite("truth-bridge", &truth_bridge_case, 3, 40, &config, &params);
        assert!(report.ok(), "{}", report.summary_line());

        let report = run_suite("round-trip", &roundtrip_case, 5, 60, &config, &params);
        assert!(report.ok(), "{}", report.summary_line());
        assert_eq!(report.passed, 60);

        let report = run_context_suite(9, 25, &config, &params);
        assert!(report.ok(), "{}", report.summary_line());
    }
}
