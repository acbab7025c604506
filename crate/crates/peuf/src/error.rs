// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("arity mismatch for `{symbol}`: declared with {expected} arguments, used with {found}")]
    Arity {
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error("kind mismatch: {0}")]
    Kind(String),
    #[error("no table entry for `{symbol}` at ({args})")]
    MissingEntry { symbol: String, args: String },
    #[error("oracle size guard: search space of {terms} application terms exceeds the limit of {limit}")]
    SizeGuard { terms: usize, limit: usize },
    #[error("unmapped domain variable `{0}`")]
    UnmappedVariable(String),
    #[error("unsupported pipeline configuration: {0}")]
    UnsupportedSpec(String),
    #[error("DIMACS: {0}")]
    Dimacs(String),
    #[error("internal inconsistency: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
