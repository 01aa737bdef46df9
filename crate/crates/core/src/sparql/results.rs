//! SPARQL query results in the JSON interchange format.

use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use super::{Binding, Solutions, Variable};
use crate::rdf::vocab::{rdf, xsd};
use crate::rdf::{is_valid_blank_label, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed results: {reason}")]
pub struct MalformedResults {
    pub reason: String,
}

fn malformed(reason: impl Into<String>) -> MalformedResults {
    MalformedResults { reason: reason.into() }
}

/// A parsed results document: either solutions or an ASK answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryResults {
    Solutions(Solutions),
    Boolean(bool),
}

#[derive(Serialize)]
struct Doc<'a> {
    head: Head<'a>,
    results: Results<'a>,
}

#[derive(Serialize)]
struct Head<'a> {
    vars: Vec<&'a str>,
}

#[derive(Serialize)]
struct Results<'a> {
    bindings: Vec<Row<'a>>,
}

struct Row<'a> {
    vars: &'a [Variable],
    binding: &'a Binding,
}

impl Serialize for Row<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(None)?;
        for var in self.vars {
            if let Some(term) = self.binding.get(var) {
                map.serialize_entry(var.name(), &JsonTerm::from(term))?;
            }
        }
        map.end()
    }
}

#[derive(Serialize)]
struct JsonTerm<'a> {
    #[serde(rename = "type")]
    kind: &'static str,
    value: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    datatype: Option<&'a str>,
    #[serde(rename = "xml:lang", skip_serializing_if = "Option::is_none")]
    lang: Option<&'a str>,
}

impl<'a> From<&'a Term> for JsonTerm<'a> {
    fn from(term: &'a Term) -> Self {
        match term {
            Term::Iri(iri) => JsonTerm {
                kind: "uri",
                value: iri,
                datatype: None,
                lang: None,
            },
            Term::BlankNode(label) => JsonTerm {
                kind: "bnode",
                value: label,
                datatype: None,
                lang: None,
            },
            Term::Literal(lit) => JsonTerm {
                kind: "literal",
                value: lit.lexical(),
                datatype: match (lit.language(), lit.datatype()) {
                    (Some(_), _) | (None, xsd::STRING) => None,
                    (None, dt) => Some(dt),
                },
                lang: lit.language(),
            },
        }
    }
}

/// Serializes solutions; unbound variables are omitted from row objects.
pub fn serialize_select_results(solutions: &Solutions) -> String {
    let doc = Doc {
        head: Head {
            vars: solutions.vars.iter().map(|v| v.name()).collect(),
        },
        results: Results {
            bindings: solutions
                .rows
                .iter()
                .map(|binding| Row {
                    vars: &solutions.vars,
                    binding,
                })
                .collect(),
        },
    };
    serde_json::to_string(&doc).expect("results serialize to JSON")
}

pub fn serialize_boolean_result(value: bool) -> String {
    serde_json::json!({ "head": {}, "boolean": value }).to_string()
}

/// Parses a solutions document. Unknown keys are ignored.
pub fn parse_select_results(text: &str) -> Result<Solutions, MalformedResults> {
    match parse_results(text)? {
        QueryResults::Solutions(s) => Ok(s),
        QueryResults::Boolean(_) => Err(malformed("boolean result where solutions were expected")),
    }
}

pub fn parse_results(text: &str) -> Result<QueryResults, MalformedResults> {
    let doc: Value = serde_json::from_str(text).map_err(|e| malformed(format!("invalid JSON: {e}")))?;
    let obj = doc.as_object().ok_or_else(|| malformed("top level is not an object"))?;
    let head = obj.get("head").ok_or_else(|| malformed("missing head"))?;
    if let Some(b) = obj.get("boolean") {
        return b
            .as_bool()
            .map(QueryResults::Boolean)
            .ok_or_else(|| malformed("boolean is not true/false"));
    }
    let vars: Vec<Variable> = match head.get("vars") {
        None => Vec::new(),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| {
                v.as_str()
                    .map(Variable::new)
                    .ok_or_else(|| malformed("head.vars entry is not a string"))
            })
            .collect::<Result<_, _>>()?,
        Some(_) => return Err(malformed("head.vars is not an array")),
    };
    let bindings = obj
        .get("results")
        .ok_or_else(|| malformed("missing results"))?
        .get("bindings")
        .and_then(Value::as_array)
        .ok_or_else(|| malformed("missing results.bindings array"))?;
    let mut rows = Vec::with_capacity(bindings.len());
    for row in bindings {
        let row = row
            .as_object()
            .ok_or_else(|| malformed("binding row is not an object"))?;
        let mut binding = Binding::new();
        for (name, value) in row {
            let var = Variable::new(name.as_str());
            if !vars.contains(&var) {
                return Err(malformed(format!("row binds undeclared variable '{name}'")));
            }
            binding.insert(var, parse_term(value)?);
        }
        rows.push(binding);
    }
    Ok(QueryResults::Solutions(Solutions { vars, rows }))
}

fn parse_term(value: &Value) -> Result<Term, MalformedResults> {
    let kind = value
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| malformed("term without type"))?;
    let lexical = value
        .get("value")
        .and_then(Value::as_str)
        .ok_or_else(|| malformed("term without string value"))?;
    match kind {
        "uri" => Term::iri(lexical).map_err(|e| malformed(e.to_string())),
        "bnode" => Ok(Term::BlankNode(sanitize_label(lexical))),
        "literal" | "typed-literal" => {
            let lang = value.get("xml:lang").and_then(Value::as_str);
            let datatype = value.get("datatype").and_then(Value::as_str);
            match (lang, datatype) {
                (Some(lang), _) => Term::lang_string(lexical, lang).map_err(|e| malformed(e.to_string())),
                (None, Some(dt)) if dt != rdf::LANG_STRING => {
                    Term::typed(lexical, dt).map_err(|e| malformed(e.to_string()))
                }
                (None, Some(_)) => Err(malformed("language string without xml:lang")),
                (None, None) => Ok(Term::string(lexical)),
            }
        }
        other => Err(malformed(format!("unknown term type '{other}'"))),
    }
}

/// Remote labels may use characters outside `[A-Za-z0-9]`; those are hex-encoded.
fn sanitize_label(label: &str) -> String {
    if is_valid_blank_label(label) {
        return label.to_owned();
    }
    let mut out = String::from("x");
    for b in label.bytes() {
        out.push_str(&format!("{b:02x}"));
    }
    out
}
