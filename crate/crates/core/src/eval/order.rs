use std::cmp::Ordering;

use super::value::numeric_value;
use crate::rdf::Term;
use crate::sparql::{Binding, OrderKey};

/// Total order for ORDER BY: unbound < blank nodes < IRIs < literals.
/// Numeric literals come first among literals, ordered by value; the rest
/// order by lexical form, then datatype, then language.
pub fn compare_terms(a: Option<&Term>, b: Option<&Term>) -> Ordering {
    fn class(t: Option<&Term>) -> u8 {
        match t {
            None => 0,
            Some(Term::BlankNode(_)) => 1,
            Some(Term::Iri(_)) => 2,
            Some(Term::Literal(_)) => 3,
        }
    }
    match (a, b) {
        (Some(Term::BlankNode(x)), Some(Term::BlankNode(y))) | (Some(Term::Iri(x)), Some(Term::Iri(y))) => x.cmp(y),
        (Some(Term::Literal(x)), Some(Term::Literal(y))) => match (numeric_value(x), numeric_value(y)) {
            (Some(nx), Some(ny)) => nx.total_cmp(&ny),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => (x.lexical(), x.datatype(), x.language()).cmp(&(y.lexical(), y.datatype(), y.language())),
        },
        _ => class(a).cmp(&class(b)),
    }
}

/// Stable sort by the keys in order; rows equal on every key keep their order.
pub fn sort_solutions(rows: &mut [Binding], keys: &[OrderKey]) {
    if keys.is_empty() {
        return;
    }
    rows.sort_by(|a, b| {
        keys.iter()
            .map(|k| {
                let o = compare_terms(a.get(&k.var), b.get(&k.var));
                if k.ascending {
                    o
                } else {
                    o.reverse()
                }
            })
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    });
}
