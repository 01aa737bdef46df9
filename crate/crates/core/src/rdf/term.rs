use std::fmt;

use super::vocab::{rdf, xsd};
use super::RdfError;

/// An RDF term: IRI, literal or blank node.
///
/// Equality is structural. Two literals with the same value but different
/// lexical forms (`"1"` and `"01"` as integers) are different terms here;
/// value comparison lives in filter evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Iri(String),
    Literal(Literal),
    BlankNode(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    lexical: String,
    datatype: String,
    language: Option<String>,
}

impl Literal {
    pub fn lexical(&self) -> &str {
        &self.lexical
    }

    pub fn datatype(&self) -> &str {
        &self.datatype
    }

    pub fn language(&self) -> Option<&str> {
        self.language.as_deref()
    }

    /// Plain string or `xsd:string`.
    pub fn is_simple(&self) -> bool {
        self.language.is_none() && self.datatype == xsd::STRING
    }
}

impl Term {
    /// Builds an IRI term, rejecting whitespace, angle brackets and
    /// relative references.
    pub fn iri(value: impl Into<String>) -> Result<Self, RdfError> {
        let value = value.into();
        if !is_valid_iri(&value) {
            return Err(RdfError::InvalidIri(value));
        }
        Ok(Term::Iri(value))
    }

    pub fn blank(label: impl Into<String>) -> Result<Self, RdfError> {
        let label = label.into();
        if !is_valid_blank_label(&label) {
            return Err(RdfError::InvalidBlankLabel(label));
        }
        Ok(Term::BlankNode(label))
    }

    /// An `xsd:string` literal.
    pub fn string(lexical: impl Into<String>) -> Self {
        Term::Literal(Literal {
            lexical: lexical.into(),
            datatype: xsd::STRING.to_owned(),
            language: None,
        })
    }

    pub fn typed(lexical: impl Into<String>, datatype: impl Into<String>) -> Result<Self, RdfError> {
        let datatype = datatype.into();
        if !is_valid_iri(&datatype) {
            return Err(RdfError::InvalidIri(datatype));
        }
        if datatype == rdf::LANG_STRING {
            return Err(RdfError::MissingLanguage);
        }
        Ok(Term::Literal(Literal {
            lexical: lexical.into(),
            datatype,
            language: None,
        }))
    }

    pub fn lang_string(lexical: impl Into<String>, language: impl Into<String>) -> Result<Self, RdfError> {
        let language = language.into();
        if !is_valid_language(&language) {
            return Err(RdfError::InvalidLanguage(language));
        }
        Ok(Term::Literal(Literal {
            lexical: lexical.into(),
            datatype: rdf::LANG_STRING.to_owned(),
            language: Some(language),
        }))
    }

    pub fn integer(value: i64) -> Self {
        Term::Literal(Literal {
            lexical: value.to_string(),
            datatype: xsd::INTEGER.to_owned(),
            language: None,
        })
    }

    pub fn boolean(value: bool) -> Self {
        Term::Literal(Literal {
            lexical: value.to_string(),
            datatype: xsd::BOOLEAN.to_owned(),
            language: None,
        })
    }

    pub fn is_iri(&self) -> bool {
        matches!(self, Term::Iri(_))
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Term::Literal(_))
    }

    pub fn is_blank(&self) -> bool {
        matches!(self, Term::BlankNode(_))
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(lit) => Some(lit),
            _ => None,
        }
    }

    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Term::Iri(iri) => Some(iri),
            _ => None,
        }
    }
}

/// N-Triples rendering.
impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(iri) => write!(f, "<{iri}>"),
            Term::BlankNode(label) => write!(f, "_:{label}"),
            Term::Literal(lit) => {
                f.write_str("\"")?;
                write_escaped(f, &lit.lexical)?;
                f.write_str("\"")?;
                match (&lit.language, lit.datatype.as_str()) {
                    (Some(lang), _) => write!(f, "@{lang}"),
                    (None, xsd::STRING) => Ok(()),
                    (None, dt) => write!(f, "^^<{dt}>"),
                }
            }
        }
    }
}

pub(crate) fn write_escaped(out: &mut impl fmt::Write, value: &str) -> fmt::Result {
    for c in value.chars() {
        match c {
            '\\' => out.write_str("\\\\")?,
            '"' => out.write_str("\\\"")?,
            '\n' => out.write_str("\\n")?,
            '\r' => out.write_str("\\r")?,
            '\t' => out.write_str("\\t")?,
            c if (c as u32) < 0x20 || c as u32 == 0x7f => write!(out, "\\u{:04X}", c as u32)?,
            c => out.write_char(c)?,
        }
    }
    Ok(())
}

/// Absolute IRI: a scheme followed by ':' and no whitespace or angle brackets.
pub fn is_valid_iri(value: &str) -> bool {
    let Some(colon) = value.find(':') else {
        return false;
    };
    let scheme = &value[..colon];
    let mut chars = scheme.chars();
    let scheme_ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'));
    scheme_ok
        && !value
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\'))
}

pub fn is_valid_blank_label(label: &str) -> bool {
    !label.is_empty() && label.chars().all(|c| c.is_ascii_alphanumeric())
}

fn is_valid_language(tag: &str) -> bool {
    let mut parts = tag.split('-');
    let first_ok = parts
        .next()
        .is_some_and(|p| !p.is_empty() && p.len() <= 8 && p.chars().all(|c| c.is_ascii_alphabetic()));
    first_ok && parts.all(|p| !p.is_empty() && p.len() <= 8 && p.chars().all(|c| c.is_ascii_alphanumeric()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iri_validation() {
        assert!(Term::iri("http://example.org/a").is_ok());
        assert!(Term::iri("a:s").is_ok());
        assert!(Term::iri("relative/path").is_err());
        assert!(Term::iri("http://a b").is_err());
        assert!(Term::iri("http://a<b").is_err());
    }

    #[test]
    fn literal_forms() {
        assert_eq!(Term::string("x").to_string(), "\"x\"");
        assert_eq!(Term::integer(5).to_string(), format!("\"5\"^^<{}>", xsd::INTEGER));
        assert_eq!(Term::lang_string("chat", "fr").unwrap().to_string(), "\"chat\"@fr");
        assert!(Term::typed("x", rdf::LANG_STRING).is_err());
        assert!(Term::lang_string("x", "not a tag").is_err());
    }

    #[test]
    fn escapes_render() {
        let t = Term::string("a\"b\\c\nd\te");
        assert_eq!(t.to_string(), r#""a\"b\\c\nd\te""#);
    }

    #[test]
    fn blank_labels() {
        assert!(Term::blank("b1").is_ok());
        assert!(Term::blank("b-1").is_err());
        assert!(Term::blank("").is_err());
    }
}
