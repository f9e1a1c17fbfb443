//! Alphabet, maximal arity, and resource limits threaded through every
//! operation that needs them.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::formula::Label;

/// Resource guards. Subset enumeration on trees is exponential and several
/// constructions are honest but explosive, so every potentially large
/// operation fails loudly against one of these caps instead of thrashing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Limits {
    /// Maximal tree size for operations that enumerate node subsets.
    pub node_cap: usize,
    /// Step budget for a single evaluation or direct type computation.
    pub eval_steps: u64,
    /// Cap on the size of a reachable type space.
    pub max_types: usize,
    /// AST-node budget for synthesized formulas.
    pub formula_nodes: usize,
    /// Cap on the candidate space of a root decomposition.
    pub max_tuples: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            node_cap: 16,
            eval_steps: 200_000_000,
            max_types: 4096,
            formula_nodes: 1_000_000,
            max_tuples: 200_000,
        }
    }
}

/// A fixed finite alphabet and maximal arity, plus resource limits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    alphabet: BTreeSet<Label>,
    r_max: usize,
    pub limits: Limits,
}

impl Config {
    pub fn new<L: Into<Label>>(alphabet: impl IntoIterator<Item = L>, r_max: usize) -> Result<Self> {
        let alphabet: BTreeSet<Label> = alphabet.into_iter().map(Into::into).collect();
        if alphabet.is_empty() {
            return Err(Error::InvalidArgument("alphabet must be nonempty".into()));
        }
        Ok(Config {
            alphabet,
            r_max,
            limits: Limits::default(),
        })
    }

    pub fn with_limits(mut self, limits: Limits) -> Self {
        self.limits = limits;
        self
    }

    pub fn alphabet(&self) -> &BTreeSet<Label> {
        &self.alphabet
    }

    /// Letters in canonical order.
    pub fn letters(&self) -> impl Iterator<Item = &Label> {
        self.alphabet.iter()
    }

    pub fn r_max(&self) -> usize {
        self.r_max
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_alphabet() {
        assert!(Config::new(Vec::<Label>::new(), 2).is_err());
    }

    #[test]
    fn alphabet_is_deduplicated_and_ordered() {
        let config = Config::new(["b", "a", "b"], 2).unwrap();
        let letters: Vec<String> = config.letters().map(|l| l.to_string()).collect();
        assert_eq!(letters, ["a", "b"]);
    }
}
