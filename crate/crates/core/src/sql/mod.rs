//! A small SQL engine over a single in-memory table.
//!
//! The dialect covers what generated extraction and evidence queries need:
//! projections, arithmetic, the five standard aggregates, `WHERE` with
//! comparisons / `LIKE` / `IN` / `BETWEEN` / `IS NULL`, `GROUP BY`,
//! `ORDER BY` and `LIMIT`. There are no joins; the `FROM` name is accepted
//! but every query runs against the one table it is given.
//!
//! Every result row carries the ids of the source rows that produced it, so
//! row selections can be recovered even when a query projects `row_id`
//! away.

mod ast;
mod exec;
mod lexer;
mod parser;

use thiserror::Error;

pub use ast::{Aggregate, BinOp, Expr, OrderItem, Query, SelectItem, SelectList};
pub use exec::{
    compare_values, execute, like_match, referenced_columns, result_row_ids, sort_order,
    ResultRow, ResultSet,
};
pub use parser::parse_query;

use crate::table::Table;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SqlError {
    #[error("syntax error at offset {offset}: found {found}, expected one of {expected:?}")]
    Syntax {
        offset: usize,
        found: String,
        expected: Vec<String>,
    },
    #[error("unknown column {name:?}; valid columns are {valid:?}")]
    UnknownColumn { name: String, valid: Vec<String> },
    #[error("invalid query: {0}")]
    Invalid(String),
}

impl SqlError {
    pub(crate) fn lexical(offset: usize, what: &str) -> Self {
        SqlError::Syntax {
            offset,
            found: what.to_string(),
            expected: Vec::new(),
        }
    }

    /// Parse-time failures, as opposed to binding/execution failures.
    pub fn is_syntax(&self) -> bool {
        matches!(self, SqlError::Syntax { .. })
    }
}

/// Parses and executes in one step.
pub fn run(text: &str, table: &Table) -> Result<ResultSet, SqlError> {
    execute(&parse_query(text)?, table)
}
