//! Lifting JSON documents to RDF and applying CONSTRUCT mappings.
//!
//! Lifting is schema-agnostic. The root object (or array) becomes the
//! configured root IRI and every nested object or array a fresh blank node.
//! Object keys become predicates under the base IRI; array elements hang
//! off their parent under the array's key. Arrays that are themselves
//! nodes (a root array, or an array inside an array) use the `_item`
//! predicate. Object and array elements record their position with
//! `_index`; scalar elements do not. `null` produces nothing.

use std::collections::BTreeMap;
use std::path::Path;

use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::Deserialize;
use serde_json::Value as Json;
use thiserror::Error;

use crate::eval::{eval_construct, NoServices};
use crate::rdf::vocab::xsd;
use crate::rdf::{is_valid_iri, Graph, Term, Triple};
use crate::sparql::{parse_query, Element, ParseError, Query, QueryForm, ValuesTable, Variable};

/// Characters kept verbatim in key-derived predicate IRIs.
const KEY_ENCODE: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'.').remove(b'_').remove(b'~');

pub const ITEM_KEY: &str = "_item";
pub const INDEX_KEY: &str = "_index";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MappingError {
    #[error("missing parameter '{name}'")]
    MissingParam { name: String },
    #[error("invalid lift configuration: {0}")]
    InvalidConfig(String),
    #[error("mapping query: {0}")]
    Query(#[from] ParseError),
    #[error("mapping must be a CONSTRUCT query without SERVICE")]
    NotAMapping,
    #[error("reading mapping: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftConfig {
    base: String,
    root: String,
}

impl LiftConfig {
    pub fn new(base: impl Into<String>, root: impl Into<String>) -> Result<Self, MappingError> {
        let (base, root) = (base.into(), root.into());
        if !(base.ends_with('#') || base.ends_with('/')) || !is_valid_iri(&base) {
            return Err(MappingError::InvalidConfig(format!(
                "base '{base}' must be an IRI ending in '#' or '/'"
            )));
        }
        if !is_valid_iri(&root) {
            return Err(MappingError::InvalidConfig(format!("root '{root}' is not a valid IRI")));
        }
        Ok(LiftConfig { base, root })
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub fn root(&self) -> &str {
        &self.root
    }

    /// The predicate generated for an object key.
    pub fn predicate(&self, key: &str) -> Term {
        Term::Iri(format!("{}{}", self.base, utf8_percent_encode(key, KEY_ENCODE)))
    }
}

struct Lifter<'a> {
    cfg: &'a LiftConfig,
    graph: Graph,
    next_blank: usize,
}

impl Lifter<'_> {
    fn fresh(&mut self) -> Term {
        let t = Term::BlankNode(format!("j{}", self.next_blank));
        self.next_blank += 1;
        t
    }

    fn add(&mut self, s: &Term, p: &Term, o: Term) {
        let triple = Triple::new(s.clone(), p.clone(), o).expect("lifted subjects are nodes and predicates IRIs");
        self.graph.insert(triple);
    }

    /// Emits the contents of an object or array node.
    fn node(&mut self, node: &Term, value: &Json) {
        match value {
            Json::Object(map) => {
                for (key, v) in map {
                    let p = self.cfg.predicate(key);
                    self.edge(node, &p, v);
                }
            }
            Json::Array(items) => {
                let p = self.cfg.predicate(ITEM_KEY);
                self.elements(node, &p, items);
            }
            _ => {}
        }
    }

    fn edge(&mut self, node: &Term, p: &Term, value: &Json) {
        match value {
            Json::Null => {}
            Json::Array(items) => self.elements(node, p, items),
            Json::Object(_) => {
                let child = self.fresh();
                self.add(node, p, child.clone());
                self.node(&child, value);
            }
            scalar => {
                if let Some(lit) = scalar_literal(scalar) {
                    self.add(node, p, lit);
                }
            }
        }
    }

    fn elements(&mut self, node: &Term, p: &Term, items: &[Json]) {
        let index = self.cfg.predicate(INDEX_KEY);
        for (i, item) in items.iter().enumerate() {
            match item {
                Json::Object(_) | Json::Array(_) => {
                    let child = self.fresh();
                    self.add(node, p, child.clone());
                    self.add(&child, &index, Term::integer(i as i64));
                    self.node(&child, item);
                }
                scalar => {
                    if let Some(lit) = scalar_literal(scalar) {
                        self.add(node, p, lit);
                    }
                }
            }
        }
    }
}

fn scalar_literal(value: &Json) -> Option<Term> {
    Some(match value {
        Json::String(s) => Term::string(s.as_str()),
        Json::Bool(b) => Term::boolean(*b),
        Json::Number(n) => {
            // With arbitrary precision the original lexical form is preserved.
            let lex = n.to_string();
            let integral = {
                let digits = lex.strip_prefix('-').unwrap_or(&lex);
                !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
            };
            let dt = if integral { xsd::INTEGER } else { xsd::DOUBLE };
            Term::typed(lex, dt).expect("xsd datatypes are valid IRIs")
        }
        Json::Null | Json::Array(_) | Json::Object(_) => return None,
    })
}

/// Lifts a document. A scalar or `null` document lifts to the empty graph.
pub fn lift_json(doc: &Json, cfg: &LiftConfig) -> Graph {
    let mut lifter = Lifter {
        cfg,
        graph: Graph::new(),
        next_blank: 0,
    };
    let root = Term::Iri(cfg.root.clone());
    lifter.node(&root, doc);
    lifter.graph
}

/// A CONSTRUCT mapping plus the lifting convention it expects and the
/// API parameters it may reference.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingSpec {
    pub lift: LiftConfig,
    pub construct: Query,
    /// API parameter name → mapping variable.
    pub param_vars: BTreeMap<String, Variable>,
}

#[derive(Deserialize)]
struct Sidecar {
    base: String,
    root: String,
    #[serde(default)]
    param_vars: BTreeMap<String, String>,
}

impl MappingSpec {
    pub fn new(
        lift: LiftConfig,
        construct: Query,
        param_vars: BTreeMap<String, Variable>,
    ) -> Result<Self, MappingError> {
        if !matches!(construct.form, QueryForm::Construct { .. }) || construct.pattern.contains_service() {
            return Err(MappingError::NotAMapping);
        }
        Ok(MappingSpec {
            lift,
            construct,
            param_vars,
        })
    }

    /// Builds a spec from the CONSTRUCT text and the JSON sidecar text.
    pub fn from_parts(construct: &str, sidecar: &str) -> Result<Self, MappingError> {
        let side: Sidecar = serde_json::from_str(sidecar).map_err(|e| MappingError::InvalidConfig(e.to_string()))?;
        let lift = LiftConfig::new(side.base, side.root)?;
        let params = side
            .param_vars
            .into_iter()
            .map(|(k, v)| (k, Variable::new(v.trim_start_matches('?'))))
            .collect();
        MappingSpec::new(lift, parse_query(construct)?, params)
    }

    /// Loads `mapping.rq` and `mapping.json` from a directory.
    pub fn load(dir: &Path) -> Result<Self, MappingError> {
        let read = |name: &str| {
            std::fs::read_to_string(dir.join(name))
                .map_err(|e| MappingError::Io(format!("{}: {e}", dir.join(name).display())))
        };
        MappingSpec::from_parts(&read("mapping.rq")?, &read("mapping.json")?)
    }
}

/// Runs the mapping over a lifted graph, with each parameter variable bound
/// to the call's argument as a plain string.
pub fn apply_mapping(
    lifted: &Graph,
    spec: &MappingSpec,
    params: &BTreeMap<String, String>,
) -> Result<Graph, MappingError> {
    let mut query = spec.construct.clone();
    if !spec.param_vars.is_empty() {
        let mut vars = Vec::new();
        let mut cells = Vec::new();
        for (name, var) in &spec.param_vars {
            let value = params
                .get(name)
                .ok_or_else(|| MappingError::MissingParam { name: name.clone() })?;
            vars.push(var.clone());
            cells.push(Some(Term::string(value.as_str())));
        }
        let values = ValuesTable {
            vars,
            rows: vec![cells],
        };
        query.pattern.elements.insert(0, Element::Values(values));
    }
    Ok(eval_construct(lifted, &query, &NoServices).expect("mappings contain no SERVICE"))
}

/// Lift then map: the request-local fragment for one API response.
pub fn map_response(doc: &Json, spec: &MappingSpec, params: &BTreeMap<String, String>) -> Result<Graph, MappingError> {
    apply_mapping(&lift_json(doc, &spec.lift), spec, params)
}

#[cfg(test)]
mod tests;
