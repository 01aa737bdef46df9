//! Expected results for the workbench queries, computed by joining the raw
//! fixture lists directly. Nothing here goes through the query engine.

use std::collections::BTreeMap;

use fedql_core::rdf::vocab::xsd;
use fedql_core::rdf::Term;
use fedql_core::sparql::{Solutions, Variable};
use serde::{Deserialize, Serialize};

use crate::fixtures::{gene_iri, orth, taxon_iri, FixtureSet, RICE, TARGET_LABEL, TARGET_PROTEIN};

/// One result row: variable name (or s/p/o for CONSTRUCT) → N-Triples term.
pub type Row = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expected {
    pub count: usize,
    /// Sorted; duplicates kept for SELECT, none for CONSTRUCT.
    pub rows: Vec<Row>,
}

impl Expected {
    fn from_rows(mut rows: Vec<Row>) -> Self {
        rows.sort();
        Expected {
            count: rows.len(),
            rows,
        }
    }
}

fn row(pairs: &[(&str, Term)]) -> Row {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

fn iri(s: String) -> Term {
    Term::Iri(s)
}

fn score(thousandths: u16) -> Term {
    Term::typed(crate::fixtures::score_text(thousandths), xsd::DOUBLE).expect("xsd:double is a valid IRI")
}

/// Rows in the shape [`Expected`] uses, for comparing engine output.
pub fn rows_of(solutions: &Solutions) -> Vec<Row> {
    let mut rows: Vec<Row> = solutions
        .rows
        .iter()
        .map(|b| {
            b.iter()
                .map(|(v, t): (&Variable, &Term)| (v.name().to_owned(), t.to_string()))
                .collect()
        })
        .collect();
    rows.sort();
    rows
}

pub fn triple_rows(graph: &fedql_core::rdf::Graph) -> Vec<Row> {
    let mut rows: Vec<Row> = graph
        .iter()
        .map(|t| {
            row(&[
                ("s", t.subject.clone()),
                ("p", t.predicate.clone()),
                ("o", t.object.clone()),
            ])
        })
        .collect();
    rows.sort();
    rows
}

/// (partner protein, score) pairs of the target network whose A side is `protein`.
fn target_edges(f: &FixtureSet, network_type: &str, protein: &str) -> Vec<(String, u16)> {
    if protein != TARGET_PROTEIN {
        return Vec::new();
    }
    f.network(TARGET_PROTEIN, network_type)
        .into_iter()
        .map(|(p, s)| (f.genes[p].protein.clone(), s))
        .collect()
}

/// Rice orthologs of genes labelled OMT2: (ortholog id, protein).
fn rice_orthologs_of_target(f: &FixtureSet) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    for g in f.genes.iter().filter(|g| g.label == TARGET_LABEL) {
        for o in f.orthologs_of(g.id) {
            if f.genes[o].species == RICE {
                out.push((o, f.genes[o].protein.clone()));
            }
        }
    }
    out
}

fn q1(f: &FixtureSet) -> Expected {
    let mut rows = Vec::new();
    for g in f.genes.iter().filter(|g| g.label == TARGET_LABEL) {
        for o in f.orthologs_of(g.id) {
            rows.push(row(&[
                ("ortholog", iri(gene_iri(o))),
                ("taxon", iri(taxon_iri(f.genes[o].species))),
            ]));
        }
    }
    Expected::from_rows(rows)
}

fn q2(f: &FixtureSet) -> Expected {
    let mut rows = Vec::new();
    for g in f.genes.iter().filter(|g| g.label == TARGET_LABEL && g.species == RICE) {
        for (partner, _) in target_edges(f, "functional", &g.protein) {
            rows.push(row(&[
                ("protein", Term::string(g.protein.as_str())),
                ("partner", Term::string(partner)),
            ]));
        }
    }
    Expected::from_rows(rows)
}

fn q3(f: &FixtureSet) -> Expected {
    let physical = target_edges(f, "physical", TARGET_PROTEIN);
    let mut rows = Vec::new();
    for (partner, s) in target_edges(f, "functional", TARGET_PROTEIN) {
        let base = [("partner", Term::string(partner.as_str())), ("score", score(s))];
        let matches: Vec<u16> = physical.iter().filter(|(p, _)| *p == partner).map(|e| e.1).collect();
        if matches.is_empty() {
            rows.push(row(&base));
        }
        for ps in matches {
            let mut r = row(&base);
            r.insert("physical".into(), score(ps).to_string());
            rows.push(r);
        }
    }
    Expected::from_rows(rows)
}

fn q4(f: &FixtureSet) -> Expected {
    let rows = target_edges(f, "functional", TARGET_PROTEIN)
        .into_iter()
        .filter(|(_, s)| *s >= 500)
        .map(|(p, s)| row(&[("partner", Term::string(p)), ("score", score(s))]))
        .collect();
    Expected::from_rows(rows)
}

fn q5(f: &FixtureSet) -> Expected {
    let mut rows = Vec::new();
    for (o, protein) in rice_orthologs_of_target(f) {
        for (partner, _) in target_edges(f, "functional", &protein) {
            rows.push(row(&[
                ("s", iri(gene_iri(o))),
                ("p", orth("interactionPartner")),
                ("o", Term::string(partner)),
            ]));
        }
    }
    rows.sort();
    rows.dedup();
    Expected::from_rows(rows)
}

pub const Q6_LABELS: [&str; 4] = ["OMT2", "GENE0002", "GENE0003", "NO-SUCH-GENE"];

fn q6(f: &FixtureSet) -> Expected {
    let mut rows = Vec::new();
    for label in Q6_LABELS {
        for g in f.genes.iter().filter(|g| g.label == label) {
            for o in f.orthologs_of(g.id) {
                rows.push(row(&[
                    ("label", Term::string(label)),
                    ("ortholog", iri(gene_iri(o))),
                    ("protein", Term::string(f.genes[o].protein.as_str())),
                ]));
            }
        }
    }
    Expected::from_rows(rows)
}

fn q7(f: &FixtureSet) -> Expected {
    let mut rows = Vec::new();
    for g in f.genes.iter().filter(|g| g.label == TARGET_LABEL) {
        for o in f.orthologs_of(g.id) {
            rows.push(row(&[("ortholog", iri(gene_iri(o)))]));
        }
    }
    Expected::from_rows(rows)
}

fn q8(f: &FixtureSet) -> Expected {
    let mut rows = Vec::new();
    for (o, protein) in rice_orthologs_of_target(f) {
        for (partner, s) in target_edges(f, "functional", &protein) {
            rows.push(row(&[
                ("ortholog", iri(gene_iri(o))),
                ("protein", Term::string(protein.as_str())),
                ("partner", Term::string(partner)),
                ("score", score(s)),
            ]));
        }
    }
    Expected::from_rows(rows)
}

type QueryOracle = fn(&FixtureSet) -> Expected;

/// Expected results for Q1..Q8.
pub fn expected(f: &FixtureSet) -> BTreeMap<String, Expected> {
    let all: [(&str, QueryOracle); 8] = [
        ("Q1", q1),
        ("Q2", q2),
        ("Q3", q3),
        ("Q4", q4),
        ("Q5", q5),
        ("Q6", q6),
        ("Q7", q7),
        ("Q8", q8),
    ];
    all.into_iter().map(|(name, q)| (name.to_owned(), q(f))).collect()
}
