// SPDX-License-Identifier: Apache-2.0

//! Validity checking for quantifier-free formulas over equality and
//! uninterpreted functions.
//!
//! The decision path normalizes a formula, classifies which function symbols
//! are only ever compared positively, replaces every application by nested
//! `ite` terms over fresh variables, and reduces the resulting
//! application-free formula to propositional logic with either a bit-vector
//! or a pairwise-equality encoding. A brute-force enumerator of term
//! partitions serves as an independent reference.

pub mod bench;
pub mod bitvec;
pub mod cnf;
pub mod decide;
pub mod elim;
pub mod error;
pub mod expr;
pub mod gen;
pub mod interp;
pub mod oracle;
pub mod pairwise;
pub mod parse;
pub mod pipeline;
pub mod polarity;
pub mod prop;
pub mod sat;

pub use error::{Error, Result};
pub use expr::{Node, NodeId, Sort, Store, SymbolId, SymbolKind};
pub use interp::{evaluate, Interpretation, Value};
pub use parse::{parse, parse_formula};

/// Chapters of the guide under `book/`, compiled so their examples run as
/// doctests.
#[cfg(doctest)]
pub mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/formulas.md")]
    pub mod formulas {}
    #[doc = include_str!("../../../book/src/polarity.md")]
    pub mod polarity {}
    #[doc = include_str!("../../../book/src/elimination.md")]
    pub mod elimination {}
    #[doc = include_str!("../../../book/src/encodings.md")]
    pub mod encodings {}
    #[doc = include_str!("../../../book/src/deciding.md")]
    pub mod deciding {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    pub mod oracle {}
    #[doc = include_str!("../../../book/src/pipelines.md")]
    pub mod pipelines {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
