//! The SPARQL subset: AST, parser, serializer and the results JSON format.
//!
//! Supported: SELECT/CONSTRUCT/ASK over groups of triple patterns, FILTER,
//! OPTIONAL, VALUES and SERVICE, with DISTINCT, ORDER BY, LIMIT and OFFSET.
//! UNION, GRAPH, BIND, subqueries, property paths and aggregates are
//! recognized and rejected with [`ParseError::UnsupportedFeature`].

mod ast;
mod lexer;
mod parser;
pub mod results;
mod solutions;
mod write;

pub use ast::*;
pub use parser::{parse_query, UNSUPPORTED_KEYWORDS};
pub use results::{
    parse_results, parse_select_results, serialize_boolean_result, serialize_select_results, MalformedResults,
    QueryResults,
};
pub use solutions::{Binding, Solutions};
pub use write::{serialize_group, serialize_query};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("unsupported feature {keyword} at line {line}, column {col}")]
    UnsupportedFeature { keyword: String, line: usize, col: usize },
}

impl ParseError {
    pub fn position(&self) -> (usize, usize) {
        match self {
            ParseError::Syntax { line, col, .. } | ParseError::UnsupportedFeature { line, col, .. } => (*line, *col),
        }
    }
}
