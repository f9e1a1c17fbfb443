//! Finite labeled trees over a prefix-closed domain, node addressing,
//! valuations, contexts with holes, and the text formats for all three.
//!
//! Trees are stored as label-plus-ordered-children values; addresses are
//! derived. The induced address set is automatically prefix-closed and
//! left-sibling-closed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::formula::{Label, VarName};
use crate::parser::error_at;

/// Address of a tree node: the root is the empty path, a child extends its
/// parent's path by a 1-based index. Ordered by length first, then
/// componentwise, which is the canonical enumeration order everywhere.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct NodeAddr(Vec<u32>);

impl NodeAddr {
    pub fn root() -> Self {
        NodeAddr(Vec::new())
    }

    pub fn new(path: impl Into<Vec<u32>>) -> Self {
        let path = path.into();
        assert!(path.iter().all(|&i| i >= 1), "child indices are 1-based");
        NodeAddr(path)
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn path(&self) -> &[u32] {
        &self.0
    }

    pub fn child(&self, i: u32) -> NodeAddr {
        let mut path = self.0.clone();
        path.push(i);
        NodeAddr(path)
    }

    /// The concatenated address `self . rest`.
    pub fn join(&self, rest: &NodeAddr) -> NodeAddr {
        let mut path = self.0.clone();
        path.extend_from_slice(&rest.0);
        NodeAddr(path)
    }

    /// If `self` is a prefix of `other`, the remaining suffix.
    pub fn strip_prefix(&self, other: &NodeAddr) -> Option<NodeAddr> {
        other
            .0
            .strip_prefix(self.0.as_slice())
            .map(|rest| NodeAddr(rest.to_vec()))
    }
}

impl Ord for NodeAddr {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for NodeAddr {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for NodeAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("eps");
        }
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        f.write_str(&parts.join("."))
    }
}

/// A finite labeled tree of bounded arity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tree {
    pub label: Label,
    pub children: Vec<Tree>,
}

impl Tree {
    pub fn leaf(label: impl Into<Label>) -> Self {
        Tree {
            label: label.into(),
            children: Vec::new(),
        }
    }

    pub fn node(label: impl Into<Label>, children: Vec<Tree>) -> Self {
        Tree {
            label: label.into(),
            children,
        }
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(Tree::node_count).sum::<usize>()
    }

    /// All addresses in canonical order (by length, then componentwise).
    pub fn addresses(&self) -> Vec<NodeAddr> {
        let mut out = Vec::with_capacity(self.node_count());
        let mut queue = std::collections::VecDeque::new();
        queue.push_back((NodeAddr::root(), self));
        while let Some((addr, node)) = queue.pop_front() {
            for (k, child) in node.children.iter().enumerate() {
                queue.push_back((addr.child(k as u32 + 1), child));
            }
            out.push(addr);
        }
        out
    }

    pub fn contains(&self, addr: &NodeAddr) -> bool {
        self.get(addr).is_some()
    }

    fn get(&self, addr: &NodeAddr) -> Option<&Tree> {
        let mut node = self;
        for &i in addr.path() {
            node = node.children.get(i as usize - 1)?;
        }
        Some(node)
    }

    pub fn label_at(&self, addr: &NodeAddr) -> Result<&Label> {
        self.get(addr)
            .map(|t| &t.label)
            .ok_or_else(|| Error::AddressOutOfDomain(addr.clone()))
    }

    /// The subtree starting at `addr`.
    pub fn subtree(&self, addr: &NodeAddr) -> Result<Tree> {
        self.get(addr)
            .cloned()
            .ok_or_else(|| Error::AddressOutOfDomain(addr.clone()))
    }

    /// The single-node tree carrying the root's label.
    pub fn root_tree(&self) -> Tree {
        Tree::leaf(self.label.clone())
    }

    /// Checks labels against the alphabet and arities against the maximal
    /// arity of `config`.
    pub fn validate(&self, config: &Config) -> Result<()> {
        if !config.alphabet().contains(&self.label) {
            return Err(Error::LabelNotInAlphabet(self.label.to_string()));
        }
        if self.children.len() > config.r_max() {
            return Err(Error::ArityExceeded {
                arity: self.children.len(),
                r_max: config.r_max(),
            });
        }
        self.children.iter().try_for_each(|c| c.validate(config))
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label)?;
        if !self.children.is_empty() {
            f.write_str("(")?;
            for (k, child) in self.children.iter().enumerate() {
                if k > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{child}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// A finite-support map from variables to node sets; unmentioned variables
/// denote the empty set. Empty sets are dropped on construction so equal
/// valuations compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Valuation {
    assignment: BTreeMap<VarName, BTreeSet<NodeAddr>>,
}

impl Valuation {
    /// The empty valuation, mapping every variable to the empty set.
    pub fn empty() -> Self {
        Valuation::default()
    }

    pub fn new(assignment: BTreeMap<VarName, BTreeSet<NodeAddr>>) -> Self {
        let assignment = assignment
            .into_iter()
            .filter(|(_, set)| !set.is_empty())
            .collect();
        Valuation { assignment }
    }

    pub fn set(&mut self, var: VarName, nodes: BTreeSet<NodeAddr>) {
        if nodes.is_empty() {
            self.assignment.remove(&var);
        } else {
            self.assignment.insert(var, nodes);
        }
    }

    /// The set assigned to `var` (empty when unmentioned).
    pub fn get(&self, var: &VarName) -> BTreeSet<NodeAddr> {
        self.assignment.get(var).cloned().unwrap_or_default()
    }

    pub fn contains(&self, var: &VarName, addr: &NodeAddr) -> bool {
        self.assignment
            .get(var)
            .is_some_and(|set| set.contains(addr))
    }

    /// Variables with a nonempty assigned set.
    pub fn support(&self) -> impl Iterator<Item = (&VarName, &BTreeSet<NodeAddr>)> {
        self.assignment.iter()
    }

    /// Checks that every assigned address lies in the domain of `tree`.
    pub fn check_in(&self, tree: &Tree) -> Result<()> {
        for (_, set) in self.support() {
            for addr in set {
                if !tree.contains(addr) {
                    return Err(Error::AddressOutOfDomain(addr.clone()));
                }
            }
        }
        Ok(())
    }

    /// The restriction to the subtree at `addr`: every variable keeps the
    /// suffixes of its nodes below (or at) `addr`.
    pub fn restrict(&self, addr: &NodeAddr) -> Valuation {
        let mut out = Valuation::empty();
        for (var, set) in self.support() {
            let rest: BTreeSet<NodeAddr> =
                set.iter().filter_map(|w| addr.strip_prefix(w)).collect();
            out.set(var.clone(), rest);
        }
        out
    }

    /// The restriction to a single-node tree: every variable keeps at most
    /// the root.
    pub fn root_valuation(&self) -> Valuation {
        let mut out = Valuation::empty();
        for (var, set) in self.support() {
            if set.contains(&NodeAddr::root()) {
                out.set(var.clone(), BTreeSet::from([NodeAddr::root()]));
            }
        }
        out
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (var, set) in self.support() {
            let parts: Vec<String> = set.iter().map(|a| a.to_string()).collect();
            writeln!(f, "{} = {{{}}}", var, parts.join(", "))?;
        }
        Ok(())
    }
}

/// Identifier of a context hole, written `_1`, `_2`, ... in the text format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HoleId(pub u32);

impl fmt::Display for HoleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "_{}", self.0)
    }
}

/// A tree in which some leaves are holes. Holes have no label and no
/// children; hole identifiers must be pairwise distinct.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Context {
    Node { label: Label, children: Vec<Context> },
    Hole(HoleId),
}

impl Context {
    pub fn leaf(label: impl Into<Label>) -> Self {
        Context::Node {
            label: label.into(),
            children: Vec::new(),
        }
    }

    pub fn node(label: impl Into<Label>, children: Vec<Context>) -> Self {
        Context::Node {
            label: label.into(),
            children,
        }
    }

    /// Holes with their addresses, in canonical address order.
    pub fn holes(&self) -> Vec<(NodeAddr, HoleId)> {
        let mut out = Vec::new();
        self.walk_holes(&NodeAddr::root(), &mut out);
        out.sort();
        out
    }

    fn walk_holes(&self, at: &NodeAddr, out: &mut Vec<(NodeAddr, HoleId)>) {
        match self {
            Context::Hole(id) => out.push((at.clone(), *id)),
            Context::Node { children, .. } => {
                for (k, child) in children.iter().enumerate() {
                    child.walk_holes(&at.child(k as u32 + 1), out);
                }
            }
        }
    }

    /// Checks the distinct-hole invariant.
    pub fn check_holes_distinct(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for (_, id) in self.holes() {
            if !seen.insert(id) {
                return Err(Error::DuplicateHole(id.0));
            }
        }
        Ok(())
    }

    /// Replaces each assigned hole by its context; unassigned holes remain.
    /// Fails when hole identifiers would collide after plugging or when a
    /// node of the result exceeds the maximal arity of `config`.
    pub fn plug(&self, assignment: &BTreeMap<HoleId, Context>, config: &Config) -> Result<Context> {
        self.check_holes_distinct()?;
        let plugged = self.plug_rec(assignment);
        plugged.check_holes_distinct()?;
        plugged.check_arity(config)?;
        Ok(plugged)
    }

    fn plug_rec(&self, assignment: &BTreeMap<HoleId, Context>) -> Context {
        match self {
            Context::Hole(id) => assignment.get(id).cloned().unwrap_or(Context::Hole(*id)),
            Context::Node { label, children } => Context::Node {
                label: label.clone(),
                children: children.iter().map(|c| c.plug_rec(assignment)).collect(),
            },
        }
    }

    fn check_arity(&self, config: &Config) -> Result<()> {
        if let Context::Node { children, .. } = self {
            if children.len() > config.r_max() {
                return Err(Error::ArityExceeded {
                    arity: children.len(),
                    r_max: config.r_max(),
                });
            }
            children.iter().try_for_each(|c| c.check_arity(config))?;
        }
        Ok(())
    }

    /// Converts a hole-free context into a tree.
    pub fn into_tree(self) -> Result<Tree> {
        match self {
            Context::Hole(id) => Err(Error::UnpluggedHole(id.0)),
            Context::Node { label, children } => Ok(Tree {
                label,
                children: children
                    .into_iter()
                    .map(Context::into_tree)
                    .collect::<Result<_>>()?,
            }),
        }
    }
}

impl From<Tree> for Context {
    fn from(tree: Tree) -> Self {
        Context::Node {
            label: tree.label,
            children: tree.children.into_iter().map(Context::from).collect(),
        }
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Context::Hole(id) => write!(f, "{id}"),
            Context::Node { label, children } => {
                write!(f, "{label}")?;
                if !children.is_empty() {
                    f.write_str("(")?;
                    for (k, child) in children.iter().enumerate() {
                        if k > 0 {
                            f.write_str(",")?;
                        }
                        write!(f, "{child}")?;
                    }
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

// --- text formats ---

struct TermParser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> TermParser<'a> {
    fn new(src: &'a str) -> Self {
        TermParser {
            src,
            bytes: src.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn parse_context(&mut self) -> Result<Context> {
        match self.peek() {
            Some(b'_') => {
                let start = self.pos;
                self.pos += 1;
                let digits_start = self.pos;
                while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                if self.pos == digits_start {
                    return Err(error_at(self.src, start, "expected a hole id after '_'"));
                }
                let id: u32 = self.src[digits_start..self.pos]
                    .parse()
                    .map_err(|_| error_at(self.src, start, "hole id is too large"))?;
                Ok(Context::Hole(HoleId(id)))
            }
            Some(c) if c.is_ascii_lowercase() => {
                let label = self.parse_label()?;
                let mut children = Vec::new();
                if self.peek() == Some(b'(') {
                    self.pos += 1;
                    loop {
                        children.push(self.parse_context()?);
                        match self.peek() {
                            Some(b',') => {
                                self.pos += 1;
                            }
                            Some(b')') => {
                                self.pos += 1;
                                break;
                            }
                            _ => {
                                return Err(error_at(
                                    self.src,
                                    self.pos,
                                    "expected ',' or ')' in a child list",
                                ));
                            }
                        }
                    }
                }
                Ok(Context::Node { label, children })
            }
            _ => Err(error_at(
                self.src,
                self.pos,
                "expected a label or a hole like '_1'",
            )),
        }
    }

    fn parse_label(&mut self) -> Result<Label> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_alphanumeric()
                || self.bytes[self.pos] == b'_'
                || self.bytes[self.pos] == b'#')
        {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(error_at(self.src, start, "expected a label"));
        }
        Ok(Label::new(&self.src[start..self.pos]))
    }

    fn expect_end(&mut self, what: &str) -> Result<()> {
        self.skip_ws();
        if self.pos != self.bytes.len() {
            return Err(error_at(
                self.src,
                self.pos,
                format!("unexpected input after the {what}"),
            ));
        }
        Ok(())
    }
}

/// Parses the term syntax `label(child1,...,childk)`; a leaf is a bare label.
pub fn parse_tree(src: &str) -> Result<Tree> {
    let ctx = parse_context(src)?;
    if let Some((addr, _)) = ctx.holes().first() {
        return Err(error_at(
            src,
            0,
            format!("holes are not allowed in a tree (found one at {addr})"),
        ));
    }
    ctx.into_tree()
}

/// Parses the term syntax with holes written `_1`, `_2`, ...
pub fn parse_context(src: &str) -> Result<Context> {
    let mut parser = TermParser::new(src);
    let ctx = parser.parse_context()?;
    parser.expect_end("term")?;
    ctx.check_holes_distinct()?;
    Ok(ctx)
}

/// Parses one `X = {eps, 1, 2.1}` line per variable; unlisted variables
/// default to the empty set.
pub fn parse_valuation(src: &str) -> Result<Valuation> {
    let mut out = Valuation::empty();
    let mut offset = 0usize;
    let mut seen = BTreeSet::new();
    for line in src.split('\n') {
        let trimmed = line.trim();
        if !trimmed.is_empty() {
            let base = offset + (line.len() - line.trim_start().len());
            let (var, set) = parse_valuation_line(src, base, trimmed)?;
            if !seen.insert(var.clone()) {
                return Err(error_at(src, base, format!("variable {var} listed twice")));
            }
            out.set(var, set);
        }
        offset += line.len() + 1;
    }
    Ok(out)
}

fn parse_valuation_line(
    src: &str,
    base: usize,
    line: &str,
) -> Result<(VarName, BTreeSet<NodeAddr>)> {
    let (var_part, rest) = line
        .split_once('=')
        .ok_or_else(|| error_at(src, base, "expected 'X = {...}'"))?;
    let var_str = var_part.trim();
    if var_str.is_empty() || !var_str.chars().next().unwrap().is_ascii_uppercase() {
        return Err(error_at(src, base, "expected an uppercase-initial variable"));
    }
    let rest = rest.trim();
    let inner = rest
        .strip_prefix('{')
        .and_then(|r| r.strip_suffix('}'))
        .ok_or_else(|| error_at(src, base, "expected a set in braces"))?;
    let mut set = BTreeSet::new();
    for part in inner.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        set.insert(parse_addr(src, base, part)?);
    }
    Ok((VarName::new(var_str), set))
}

fn parse_addr(src: &str, base: usize, text: &str) -> Result<NodeAddr> {
    if text == "eps" {
        return Ok(NodeAddr::root());
    }
    let mut path = Vec::new();
    for comp in text.split('.') {
        let i: u32 = comp
            .parse()
            .map_err(|_| error_at(src, base, format!("bad address component '{comp}'")))?;
        if i == 0 {
            return Err(error_at(src, base, "child indices are 1-based"));
        }
        path.push(i);
    }
    Ok(NodeAddr::new(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(src: &str) -> Tree {
        parse_tree(src).unwrap()
    }

    fn addr(path: &[u32]) -> NodeAddr {
        NodeAddr::new(path.to_vec())
    }

    #[test]
    fn subtree_examples() {
        assert_eq!(t("a(b,c)").subtree(&addr(&[2])).unwrap(), t("c"));
        let tree = t("a(b,c)");
        assert_eq!(tree.subtree(&NodeAddr::root()).unwrap(), tree);
        assert_eq!(t("a(b(c))").subtree(&addr(&[1, 1])).unwrap(), t("c"));
        assert!(matches!(
            t("a").subtree(&addr(&[1])),
            Err(Error::AddressOutOfDomain(_))
        ));
    }

    #[test]
    fn subtree_composes() {
        let tree = t("a(b(c,a),c(a(b)))");
        for u in tree.addresses() {
            let sub = tree.subtree(&u).unwrap();
            for w in sub.addresses() {
                assert_eq!(sub.subtree(&w).unwrap(), tree.subtree(&u.join(&w)).unwrap());
            }
        }
    }

    #[test]
    fn restrict_strips_prefix() {
        let mut nu = Valuation::empty();
        nu.set(
            VarName::new("X"),
            BTreeSet::from([NodeAddr::root(), addr(&[1]), addr(&[2, 1])]),
        );
        let r = nu.restrict(&addr(&[2]));
        assert_eq!(r.get(&VarName::new("X")), BTreeSet::from([addr(&[1])]));

        assert_eq!(nu.restrict(&NodeAddr::root()), nu);

        let mut single = Valuation::empty();
        single.set(VarName::new("X"), BTreeSet::from([addr(&[1])]));
        assert!(single.restrict(&addr(&[2])).get(&VarName::new("X")).is_empty());
    }

    #[test]
    fn root_tree_and_root_valuation() {
        assert_eq!(t("a(b,c)").root_tree(), t("a"));

        let mut nu = Valuation::empty();
        nu.set(
            VarName::new("X"),
            BTreeSet::from([NodeAddr::root(), addr(&[1])]),
        );
        assert_eq!(
            nu.root_valuation().get(&VarName::new("X")),
            BTreeSet::from([NodeAddr::root()])
        );

        let mut off_root = Valuation::empty();
        off_root.set(VarName::new("X"), BTreeSet::from([addr(&[1]), addr(&[2])]));
        assert!(off_root
            .root_valuation()
            .get(&VarName::new("X"))
            .is_empty());
    }

    #[test]
    fn addresses_are_canonically_ordered() {
        let tree = t("a(b(c),c(a,b))");
        let addrs = tree.addresses();
        let mut sorted = addrs.clone();
        sorted.sort();
        assert_eq!(addrs, sorted);
        assert_eq!(addrs[0], NodeAddr::root());
        // length-first order: [2] before [1,1]
        assert!(addr(&[2]) < addr(&[1, 1]));
    }

    #[test]
    fn plug_examples() {
        let config = Config::new(["a", "b", "c"], 2).unwrap();
        let c1 = parse_context("a(_1)").unwrap();
        let plugged = c1
            .plug(&BTreeMap::from([(HoleId(1), Context::from(t("b")))]), &config)
            .unwrap();
        assert_eq!(plugged.clone().into_tree().unwrap(), t("a(b)"));

        let c2 = parse_context("a(_1,_2)").unwrap();
        let partial = c2
            .plug(
                &BTreeMap::from([(HoleId(1), Context::from(t("b(c)")))]),
                &config,
            )
            .unwrap();
        assert_eq!(partial, parse_context("a(b(c),_2)").unwrap());
    }

    #[test]
    fn plug_rejects_duplicate_holes() {
        let config = Config::new(["a"], 2).unwrap();
        let ctx = parse_context("a(_1,_2)").unwrap();
        let err = ctx
            .plug(
                &BTreeMap::from([(HoleId(2), parse_context("a(_1)").unwrap())]),
                &config,
            )
            .unwrap_err();
        assert_eq!(err, Error::DuplicateHole(1));
        assert!(parse_context("a(_1,_1)").is_err());
    }

    #[test]
    fn valuation_text_roundtrip() {
        let src = "X = {eps, 1, 2.1}\nY = {}\nZ = {2}\n";
        let nu = parse_valuation(src).unwrap();
        assert_eq!(
            nu.get(&VarName::new("X")),
            BTreeSet::from([NodeAddr::root(), addr(&[1]), addr(&[2, 1])])
        );
        assert!(nu.get(&VarName::new("Y")).is_empty());
        let again = parse_valuation(&nu.to_string()).unwrap();
        assert_eq!(nu, again);
    }

    #[test]
    fn tree_text_roundtrip() {
        for src in ["a", "a(b,c)", "a(b(c,a),c)", "x#t0(y#t1)"] {
            let tree = t(src);
            assert_eq!(parse_tree(&tree.to_string()).unwrap(), tree);
        }
        assert!(parse_tree("a(_1)").is_err());
        assert!(parse_tree("a(b,,c)").is_err());
    }

    #[test]
    fn validate_checks_alphabet_and_arity() {
        let config = Config::new(["a", "b"], 2).unwrap();
        assert!(t("a(b,a)").validate(&config).is_ok());
        assert!(matches!(
            t("a(c)").validate(&config),
            Err(Error::LabelNotInAlphabet(_))
        ));
        assert!(matches!(
            t("a(b,b,b)").validate(&config),
            Err(Error::ArityExceeded { .. })
        ));
    }
}
