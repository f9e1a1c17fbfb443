//! MSO+U on finite ranked trees: a compositional type calculus.
//!
//! The library provides, for formulas of monadic second-order logic with
//! the unbounding quantifier over finite trees of bounded arity:
//!
//! - the formula and tree domain ([`formula`], [`tree`], [`parser`]),
//! - brute-force reference semantics by subset enumeration ([`oracle`]),
//! - logical types that refine truth values so that they compose under
//!   tree formation, their reachable spaces, and type-defining formulas
//!   ([`typespace`]),
//! - the composition function and bottom-up typing of trees and open
//!   contexts ([`compose`]),
//! - the constructive decompositions: root-split tuple sets, relabelings
//!   by closed sentences, and the rewriting of a formula into plain MSO
//!   over a relabeled tree ([`decompose`]),
//! - a seeded random corpus and the differential property suites built on
//!   it ([`corpus`]).

pub mod compose;
pub mod config;
pub mod corpus;
pub mod decompose;
pub mod error;
pub mod formula;
pub mod oracle;
pub mod parser;
pub mod tree;
pub mod typespace;

pub use config::{Config, Limits};
pub use error::{Error, Result};
pub use formula::{Formula, Label, VarName};
pub use tree::{Context, HoleId, NodeAddr, Tree, Valuation};
pub use typespace::{PhType, TypeSpace};
