//! Crate-wide error type.

use crate::tree::NodeAddr;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {col} (offset {offset}): {message}")]
    Parse {
        line: usize,
        col: usize,
        offset: usize,
        message: String,
    },

    #[error("address {0} is outside the tree domain")]
    AddressOutOfDomain(NodeAddr),

    #[error("tree has {nodes} nodes; subset enumeration is capped at {cap} (override with the node cap)")]
    NodeCapExceeded { nodes: usize, cap: usize },

    #[error("evaluation step budget of {budget} exhausted")]
    EvalBudgetExceeded { budget: u64 },

    #[error("reachable type space exceeded the cap of {cap} types")]
    TypeCapExceeded { cap: usize },

    #[error("formula size guard tripped: construction exceeds {budget} AST nodes")]
    FormulaBudgetExceeded { budget: usize },

    #[error("root decomposition has {count} candidate tuples, exceeding the cap of {cap}")]
    TupleCapExceeded { count: usize, cap: usize },

    #[error("type does not match the formula shape: {0}")]
    ShapeMismatch(String),

    #[error("expected {expected} child types, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("node has {arity} children but the maximal arity is {r_max}")]
    ArityExceeded { arity: usize, r_max: usize },

    #[error("label '{0}' is not in the configured alphabet")]
    LabelNotInAlphabet(String),

    #[error("hole _{0} is not covered by an assumption")]
    UncoveredHole(u32),

    #[error("duplicate hole identifier _{0}")]
    DuplicateHole(u32),

    #[error("context still contains hole _{0}")]
    UnpluggedHole(u32),

    #[error("relabeling is not unique at node {addr}: {holding} sentences hold")]
    NotUnique { addr: NodeAddr, holding: usize },

    #[error("{0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for resource-guard errors (as opposed to malformed input or a
    /// genuine contract violation).
    pub fn is_resource(&self) -> bool {
        matches!(
            self,
            Error::NodeCapExceeded { .. }
                | Error::EvalBudgetExceeded { .. }
                | Error::TypeCapExceeded { .. }
                | Error::FormulaBudgetExceeded { .. }
                | Error::TupleCapExceeded { .. }
        )
    }
}
