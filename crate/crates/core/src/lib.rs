//! Core engine for fedql: an indexed in-memory RDF store, a SPARQL subset
//! (parser, serializer, evaluator, results JSON) and JSON-to-RDF lifting
//! with CONSTRUCT mappings.

pub mod eval;
pub mod lift;
pub mod rdf;
pub mod sparql;
#[cfg(any(test, feature = "testkit"))]
pub mod testkit;

pub use rdf::{Graph, Term, Triple};
pub use sparql::{Query, Solutions, Variable};
