//! RDF data model and the in-memory triple store.

mod graph;
mod iso;
pub mod ntriples;
mod term;

pub use graph::{Graph, TripleRef};
pub use iso::isomorphic;
pub use ntriples::{parse_ntriples, serialize_ntriples};
pub use term::{is_valid_blank_label, is_valid_iri, Literal, Term};

use thiserror::Error;

pub mod vocab {
    pub mod xsd {
        pub const STRING: &str = "http://www.w3.org/2001/XMLSchema#string";
        pub const BOOLEAN: &str = "http://www.w3.org/2001/XMLSchema#boolean";
        pub const INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";
        pub const DECIMAL: &str = "http://www.w3.org/2001/XMLSchema#decimal";
        pub const DOUBLE: &str = "http://www.w3.org/2001/XMLSchema#double";
        pub const FLOAT: &str = "http://www.w3.org/2001/XMLSchema#float";
    }

    pub mod rdf {
        pub const TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
        pub const LANG_STRING: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#langString";
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RdfError {
    #[error("invalid IRI <{0}>")]
    InvalidIri(String),
    #[error("invalid blank node label '{0}'")]
    InvalidBlankLabel(String),
    #[error("invalid language tag '{0}'")]
    InvalidLanguage(String),
    #[error("language-tagged string without a language tag")]
    MissingLanguage,
    #[error("literal in subject position")]
    LiteralSubject,
    #[error("predicate must be an IRI")]
    NonIriPredicate,
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

/// A triple whose subject is an IRI or blank node and whose predicate is an IRI.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    subject: Term,
    predicate: Term,
    object: Term,
}

impl Triple {
    pub fn new(subject: Term, predicate: Term, object: Term) -> Result<Self, RdfError> {
        if subject.is_literal() {
            return Err(RdfError::LiteralSubject);
        }
        if !predicate.is_iri() {
            return Err(RdfError::NonIriPredicate);
        }
        Ok(Triple {
            subject,
            predicate,
            object,
        })
    }

    pub fn subject(&self) -> &Term {
        &self.subject
    }

    pub fn predicate(&self) -> &Term {
        &self.predicate
    }

    pub fn object(&self) -> &Term {
        &self.object
    }

    pub fn into_parts(self) -> (Term, Term, Term) {
        (self.subject, self.predicate, self.object)
    }
}

impl std::fmt::Display for Triple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}
