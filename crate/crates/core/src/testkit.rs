//! Random generators and reference oracles shared by the test suites.
//!
//! The brute-force evaluator here deliberately avoids the engine's
//! machinery: no indexes, no pattern reordering, no row tagging for
//! OPTIONAL, and its own FILTER semantics for the generated expressions.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::{Map, Value as Json};

use crate::rdf::vocab::xsd;
use crate::rdf::{Graph, Term, Triple};
use crate::sparql::{
    ArithOp, Binding, CompareOp, Element, Expression, Function, GroupPattern, OrderKey, Projection, Query, QueryForm,
    ServicePattern, Solutions, TermPattern, TriplePattern, ValuesTable, Variable,
};

const NS: &str = "http://example.org/t/";

fn iri(local: &str) -> Term {
    Term::iri(format!("{NS}{local}")).expect("valid IRI")
}

/// Node pool: IRIs, blank nodes, integer and string literals.
fn node_pool() -> Vec<Term> {
    let mut pool: Vec<Term> = ["a", "b", "c", "d", "e"].iter().map(|l| iri(l)).collect();
    pool.extend((0..2).map(|i| Term::BlankNode(format!("n{i}"))));
    pool.extend((0..4).map(Term::integer));
    pool.extend(["x", "y"].iter().map(|s| Term::string(*s)));
    pool
}

fn predicate_pool() -> Vec<Term> {
    ["p", "q", "r"].iter().map(|l| iri(l)).collect()
}

/// A random graph of at most `max_triples` triples over the small pool.
pub fn random_graph<R: Rng>(rng: &mut R, max_triples: usize) -> Graph {
    let nodes = node_pool();
    let preds = predicate_pool();
    let subjects: Vec<&Term> = nodes.iter().filter(|t| !t.is_literal()).collect();
    let target = rng.gen_range(0..=max_triples);
    let mut g = Graph::new();
    for _ in 0..target * 2 {
        if g.len() >= target {
            break;
        }
        let s = (*subjects.choose(rng).unwrap()).clone();
        let p = preds.choose(rng).unwrap().clone();
        let o = nodes.choose(rng).unwrap().clone();
        g.insert(Triple::new(s, p, o).expect("valid triple"));
    }
    g
}

fn random_var<R: Rng>(rng: &mut R) -> Variable {
    Variable::new(format!("v{}", rng.gen_range(0..5)))
}

fn random_pattern<R: Rng>(rng: &mut R) -> TriplePattern {
    let nodes = node_pool();
    let preds = predicate_pool();
    let subject = if rng.gen_bool(0.75) {
        TermPattern::Var(random_var(rng))
    } else {
        TermPattern::Term(iri(["a", "b", "c"].choose(rng).unwrap()))
    };
    let predicate = if rng.gen_bool(0.3) {
        TermPattern::Var(random_var(rng))
    } else {
        TermPattern::Term(preds.choose(rng).unwrap().clone())
    };
    let object = if rng.gen_bool(0.7) {
        TermPattern::Var(random_var(rng))
    } else {
        // Blank nodes in patterns are variables, so constants avoid them.
        let consts: Vec<&Term> = nodes.iter().filter(|t| !t.is_blank()).collect();
        TermPattern::Term((*consts.choose(rng).unwrap()).clone())
    };
    TriplePattern::new(subject, predicate, object)
}

fn random_filter<R: Rng>(rng: &mut R, depth: usize) -> Expression {
    let leaf = |rng: &mut R| -> Expression {
        let v = Expression::Var(random_var(rng));
        match rng.gen_range(0..6) {
            0 => Expression::Call(Function::Bound, vec![v]),
            1 => Expression::Call(Function::IsIri, vec![v]),
            2 => Expression::Compare(
                *[CompareOp::Lt, CompareOp::Gt, CompareOp::Le].choose(rng).unwrap(),
                Box::new(v),
                Box::new(Expression::Term(Term::integer(rng.gen_range(0..4)))),
            ),
            3 => Expression::Compare(CompareOp::Eq, Box::new(v), Box::new(Expression::Var(random_var(rng)))),
            _ => {
                let pool = node_pool();
                let consts: Vec<&Term> = pool.iter().filter(|t| !t.is_blank()).collect();
                Expression::Compare(
                    *[CompareOp::Eq, CompareOp::Ne].choose(rng).unwrap(),
                    Box::new(v),
                    Box::new(Expression::Term((*consts.choose(rng).unwrap()).clone())),
                )
            }
        }
    };
    if depth == 0 || rng.gen_bool(0.6) {
        return leaf(rng);
    }
    match rng.gen_range(0..3) {
        0 => Expression::Not(Box::new(random_filter(rng, depth - 1))),
        1 => Expression::And(
            Box::new(random_filter(rng, depth - 1)),
            Box::new(random_filter(rng, depth - 1)),
        ),
        _ => Expression::Or(
            Box::new(random_filter(rng, depth - 1)),
            Box::new(random_filter(rng, depth - 1)),
        ),
    }
}

fn random_values<R: Rng>(rng: &mut R) -> ValuesTable {
    let mut vars: Vec<Variable> = (0..rng.gen_range(1..=2)).map(|_| random_var(rng)).collect();
    vars.dedup();
    let pool = node_pool();
    let consts: Vec<&Term> = pool.iter().filter(|t| !t.is_blank()).collect();
    let rows = (0..rng.gen_range(0..=3))
        .map(|_| {
            vars.iter()
                .map(|_| rng.gen_bool(0.8).then(|| (*consts.choose(rng).unwrap()).clone()))
                .collect()
        })
        .collect();
    ValuesTable { vars, rows }
}

/// A group of BGP, FILTER, OPTIONAL and VALUES elements with at most
/// `max_patterns` triple patterns in total (OPTIONAL bodies included).
pub fn random_group<R: Rng>(rng: &mut R, max_patterns: usize, depth: usize) -> GroupPattern {
    let mut budget = rng.gen_range(1..=max_patterns.max(1));
    random_group_with(rng, &mut budget, depth)
}

fn random_group_with<R: Rng>(rng: &mut R, budget: &mut usize, depth: usize) -> GroupPattern {
    let mut elements = Vec::new();
    let n = rng.gen_range(1..=3);
    for _ in 0..n {
        let choice = rng.gen_range(0..10);
        if choice < 5 && *budget > 0 {
            let k = rng.gen_range(1..=(*budget).min(2));
            *budget -= k;
            let tps: Vec<TriplePattern> = (0..k).map(|_| random_pattern(rng)).collect();
            match elements.last_mut() {
                Some(Element::Triples(prev)) => prev.extend(tps),
                _ => elements.push(Element::Triples(tps)),
            }
        } else if choice < 7 {
            elements.push(Element::Filter(random_filter(rng, 2)));
        } else if choice < 9 && depth > 0 && *budget > 0 {
            elements.push(Element::Optional(random_group_with(rng, budget, depth - 1)));
        } else {
            elements.push(Element::Values(random_values(rng)));
        }
    }
    GroupPattern::new(elements)
}

/// A SELECT query over [`random_group`], for comparing against [`brute_select`].
pub fn random_eval_query<R: Rng>(rng: &mut R) -> Query {
    let mut q = Query::select_all(random_group(rng, 4, 2));
    if rng.gen_bool(0.4) {
        let mut vars: Vec<Variable> = (0..rng.gen_range(1..=3)).map(|_| random_var(rng)).collect();
        vars.sort();
        vars.dedup();
        q.form = QueryForm::Select {
            distinct: rng.gen_bool(0.5),
            projection: Projection::Vars(vars),
        };
    } else if rng.gen_bool(0.2) {
        q.form = QueryForm::Select {
            distinct: true,
            projection: Projection::All,
        };
    }
    q
}

// ---------------------------------------------------------------------------
// Brute-force reference evaluator.

/// Evaluates a SELECT query (no SERVICE, no ORDER BY/LIMIT/OFFSET) by the
/// set-algebra definitions, directly over the list of triples.
pub fn brute_select(graph: &Graph, query: &Query) -> Solutions {
    let triples = graph.triples();
    let rows = brute_group(&triples, &query.pattern, vec![Binding::new()]);
    let (distinct, vars) = match &query.form {
        QueryForm::Select { distinct, projection } => (
            *distinct,
            match projection {
                Projection::Vars(vs) => vs.clone(),
                Projection::All => {
                    let mut vs = Vec::new();
                    brute_scope(&query.pattern, &mut vs);
                    vs
                }
            },
        ),
        _ => panic!("brute_select handles SELECT only"),
    };
    let mut out: Vec<Binding> = rows.iter().map(|r| r.project(&vars)).collect();
    if distinct {
        let mut kept: Vec<Binding> = Vec::new();
        for r in out {
            if !kept.contains(&r) {
                kept.push(r);
            }
        }
        out = kept;
    }
    Solutions::new(vars, out)
}

fn brute_scope(group: &GroupPattern, out: &mut Vec<Variable>) {
    for el in &group.elements {
        let vars: Vec<Variable> = match el {
            Element::Triples(tps) => tps
                .iter()
                .flat_map(|tp| tp.positions().into_iter().filter_map(|p| p.as_var().cloned()))
                .collect(),
            Element::Values(t) => t.vars.clone(),
            Element::Optional(g) => {
                brute_scope(g, out);
                continue;
            }
            _ => continue,
        };
        for v in vars {
            if !v.is_blank_derived() && !out.contains(&v) {
                out.push(v);
            }
        }
    }
}

fn brute_group(triples: &[Triple], group: &GroupPattern, seed: Vec<Binding>) -> Vec<Binding> {
    let mut rows = seed;
    for el in &group.elements {
        rows = match el {
            Element::Triples(tps) => rows.iter().flat_map(|r| brute_bgp(triples, tps, r.clone())).collect(),
            Element::Values(table) => {
                let mut out = Vec::new();
                for r in &rows {
                    for cells in &table.rows {
                        let mut merged = r.clone();
                        let ok = table.vars.iter().zip(cells).all(|(v, c)| match (c, r.get(v)) {
                            (None, _) => true,
                            (Some(t), Some(u)) => t == u,
                            (Some(t), None) => {
                                merged.insert(v.clone(), t.clone());
                                true
                            }
                        });
                        if ok {
                            out.push(merged);
                        }
                    }
                }
                out
            }
            Element::Optional(body) => {
                let mut out = Vec::new();
                for r in &rows {
                    let ext = brute_group(triples, body, vec![r.clone()]);
                    if ext.is_empty() {
                        out.push(r.clone());
                    } else {
                        out.extend(ext);
                    }
                }
                out
            }
            Element::Filter(_) => rows,
            Element::Service(_) => panic!("brute evaluator has no SERVICE"),
        };
    }
    for el in &group.elements {
        if let Element::Filter(e) = el {
            rows.retain(|r| brute_ebv(e, r) == Some(true));
        }
    }
    rows
}

/// Nested loops over all triples, patterns in written order.
fn brute_bgp(triples: &[Triple], patterns: &[TriplePattern], row: Binding) -> Vec<Binding> {
    let Some((tp, rest)) = patterns.split_first() else {
        return vec![row];
    };
    let mut out = Vec::new();
    for t in triples {
        let mut next = row.clone();
        let mut ok = true;
        for (pat, term) in tp.positions().into_iter().zip([t.subject(), t.predicate(), t.object()]) {
            match pat {
                TermPattern::Term(c) => ok &= c == term,
                TermPattern::Var(v) => match next.get(v) {
                    Some(b) => ok &= b == term,
                    None => {
                        next.insert(v.clone(), term.clone());
                    }
                },
            }
        }
        if ok {
            out.extend(brute_bgp(triples, rest, next));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
enum BVal {
    Term(Term),
    Bool(bool),
}

fn brute_ebv(e: &Expression, row: &Binding) -> Option<bool> {
    match brute_expr(e, row)? {
        BVal::Bool(b) => Some(b),
        BVal::Term(Term::Literal(l)) if l.datatype() == xsd::INTEGER => Some(l.lexical() != "0"),
        BVal::Term(Term::Literal(l)) if l.is_simple() => Some(!l.lexical().is_empty()),
        BVal::Term(_) => None,
    }
}

fn int_of(t: &Term) -> Option<i64> {
    t.as_literal()
        .filter(|l| l.datatype() == xsd::INTEGER)
        .and_then(|l| l.lexical().parse().ok())
}

fn str_of(t: &Term) -> Option<&str> {
    t.as_literal().filter(|l| l.is_simple()).map(|l| l.lexical())
}

/// `None` is a type error; errors propagate through every operator.
fn brute_expr(e: &Expression, row: &Binding) -> Option<BVal> {
    Some(match e {
        Expression::Var(v) => BVal::Term(row.get(v)?.clone()),
        Expression::Term(t) => BVal::Term(t.clone()),
        Expression::Not(a) => BVal::Bool(!brute_ebv(a, row)?),
        // Both operands must evaluate: an error on either side is an error,
        // even when the other side alone would decide the result.
        Expression::And(a, b) => {
            let (x, y) = (brute_ebv(a, row)?, brute_ebv(b, row)?);
            BVal::Bool(x && y)
        }
        Expression::Or(a, b) => {
            let (x, y) = (brute_ebv(a, row)?, brute_ebv(b, row)?);
            BVal::Bool(x || y)
        }
        Expression::Call(Function::Bound, args) => match &args[0] {
            Expression::Var(v) => BVal::Bool(row.contains(v)),
            _ => return None,
        },
        Expression::Call(Function::IsIri, args) => match brute_expr(&args[0], row)? {
            BVal::Term(t) => BVal::Bool(t.is_iri()),
            BVal::Bool(_) => BVal::Bool(false),
        },
        Expression::Compare(op, a, b) => {
            let (BVal::Term(x), BVal::Term(y)) = (brute_expr(a, row)?, brute_expr(b, row)?) else {
                return None;
            };
            let ord = match (int_of(&x), int_of(&y), str_of(&x), str_of(&y)) {
                (Some(i), Some(j), _, _) => Some(i.cmp(&j)),
                (_, _, Some(s), Some(t)) => Some(s.cmp(t)),
                _ => None,
            };
            match (op, ord) {
                (_, Some(o)) => BVal::Bool(match op {
                    CompareOp::Eq => o.is_eq(),
                    CompareOp::Ne => o.is_ne(),
                    CompareOp::Lt => o.is_lt(),
                    CompareOp::Le => o.is_le(),
                    CompareOp::Gt => o.is_gt(),
                    CompareOp::Ge => o.is_ge(),
                }),
                (CompareOp::Eq | CompareOp::Ne, None) => {
                    // Two different literals of unrelated kinds cannot be compared.
                    if x.is_literal() && y.is_literal() && x != y {
                        return None;
                    }
                    BVal::Bool((x == y) == (*op == CompareOp::Eq))
                }
                (_, None) => return None,
            }
        }
        _ => panic!("brute evaluator does not cover {e:?}"),
    })
}

/// Multiset equality of two solution sequences, ignoring row order.
pub fn same_multiset(a: &Solutions, b: &Solutions) -> bool {
    a.sorted_rows() == b.sorted_rows()
}

// ---------------------------------------------------------------------------
// Query generator for parse/serialize round trips.

fn random_expression<R: Rng>(rng: &mut R, depth: usize) -> Expression {
    if depth == 0 || rng.gen_bool(0.35) {
        return match rng.gen_range(0..5) {
            0 => Expression::Var(random_var(rng)),
            1 => Expression::Term(Term::integer(rng.gen_range(-5..50))),
            2 => Expression::Term(random_literal(rng)),
            3 => Expression::Term(iri("z")),
            _ => Expression::Call(Function::Bound, vec![Expression::Var(random_var(rng))]),
        };
    }
    let sub = |rng: &mut R| Box::new(random_expression(rng, depth - 1));
    match rng.gen_range(0..7) {
        0 => Expression::Or(sub(rng), sub(rng)),
        1 => Expression::And(sub(rng), sub(rng)),
        2 => Expression::Not(sub(rng)),
        3 => Expression::Compare(
            *[
                CompareOp::Eq,
                CompareOp::Ne,
                CompareOp::Lt,
                CompareOp::Le,
                CompareOp::Gt,
                CompareOp::Ge,
            ]
            .choose(rng)
            .unwrap(),
            sub(rng),
            sub(rng),
        ),
        4 => Expression::Arith(
            *[ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div]
                .choose(rng)
                .unwrap(),
            sub(rng),
            sub(rng),
        ),
        _ => {
            let f = *[
                Function::Str,
                Function::Lang,
                Function::Datatype,
                Function::Contains,
                Function::StrStarts,
                Function::Regex,
                Function::IsIri,
                Function::IsLiteral,
            ]
            .choose(rng)
            .unwrap();
            Expression::Call(f, (0..f.arity()).map(|_| random_expression(rng, depth - 1)).collect())
        }
    }
}

fn random_literal<R: Rng>(rng: &mut R) -> Term {
    match rng.gen_range(0..6) {
        0 => Term::string(
            ["OMT2", "a \"quoted\" word", "tab\there", "ünïcode", ""]
                .choose(rng)
                .unwrap()
                .to_string(),
        ),
        1 => Term::lang_string("chat", *["fr", "en-GB"].choose(rng).unwrap()).unwrap(),
        2 => Term::typed(
            format!("{}.{}", rng.gen_range(-9..10), rng.gen_range(0..100)),
            xsd::DECIMAL,
        )
        .unwrap(),
        3 => Term::typed(
            format!("{}E{}", rng.gen_range(1..10), rng.gen_range(-3..4)),
            xsd::DOUBLE,
        )
        .unwrap(),
        4 => Term::boolean(rng.gen_bool(0.5)),
        _ => Term::typed("2020-01-01", "http://www.w3.org/2001/XMLSchema#date").unwrap(),
    }
}

fn random_node_pattern<R: Rng>(rng: &mut R, allow_literal: bool, blank_vars: bool) -> TermPattern {
    match rng.gen_range(0..10) {
        0..=4 => TermPattern::Var(random_var(rng)),
        5 if blank_vars => TermPattern::Var(Variable::new(format!("_:b{}", rng.gen_range(0..2)))),
        6 | 7 if allow_literal => TermPattern::Term(random_literal(rng)),
        _ => TermPattern::Term(iri(["a", "b", "c", "Gene"].choose(rng).unwrap())),
    }
}

fn random_query_pattern<R: Rng>(rng: &mut R, blank_vars: bool) -> TriplePattern {
    TriplePattern::new(
        random_node_pattern(rng, false, blank_vars),
        if rng.gen_bool(0.3) {
            TermPattern::Var(random_var(rng))
        } else {
            TermPattern::Term(predicate_pool().choose(rng).unwrap().clone())
        },
        random_node_pattern(rng, true, blank_vars),
    )
}

fn random_query_group<R: Rng>(rng: &mut R, depth: usize, allow_service: bool) -> GroupPattern {
    let mut elements: Vec<Element> = Vec::new();
    for _ in 0..rng.gen_range(1..=4) {
        let el = match rng.gen_range(0..10) {
            0..=3 => Element::Triples(
                (0..rng.gen_range(1..=3))
                    .map(|_| random_query_pattern(rng, depth == 2))
                    .collect(),
            ),
            4 | 5 => Element::Filter(random_expression(rng, 3)),
            6 if depth > 0 => Element::Optional(random_query_group(rng, depth - 1, allow_service)),
            7 if allow_service => Element::Service(ServicePattern {
                endpoint: format!(
                    "http://127.0.0.1:{}/srv/x/sparql?species=4530&q={}",
                    rng.gen_range(1000..9000),
                    rng.gen_range(0..9)
                ),
                silent: rng.gen_bool(0.3),
                body: random_query_group(rng, 0, false),
            }),
            _ => {
                let mut vt = random_values(rng);
                for row in &mut vt.rows {
                    for cell in row.iter_mut().filter(|c| c.is_some()) {
                        if rng.gen_bool(0.3) {
                            *cell = Some(random_literal(rng));
                        }
                    }
                }
                Element::Values(vt)
            }
        };
        // Adjacent triples blocks would merge when reparsed.
        match (elements.last_mut(), el) {
            (Some(Element::Triples(prev)), Element::Triples(more)) => prev.extend(more),
            (_, el) => elements.push(el),
        }
    }
    GroupPattern::new(elements)
}

/// A random query in the supported subset, in the parser's canonical AST shape.
pub fn random_query<R: Rng>(rng: &mut R) -> Query {
    let pattern = random_query_group(rng, 2, true);
    let form = match rng.gen_range(0..6) {
        0 => QueryForm::Ask,
        1 => QueryForm::Construct {
            template: (0..rng.gen_range(1..=3))
                .map(|_| {
                    let s = if rng.gen_bool(0.3) {
                        TermPattern::Term(Term::BlankNode("m".into()))
                    } else {
                        TermPattern::Var(random_var(rng))
                    };
                    TriplePattern::new(s, TermPattern::Term(iri("q")), random_node_pattern(rng, true, false))
                })
                .collect(),
        },
        2 | 3 => QueryForm::Select {
            distinct: rng.gen_bool(0.5),
            projection: Projection::All,
        },
        _ => QueryForm::Select {
            distinct: rng.gen_bool(0.5),
            projection: Projection::Vars(
                (0..rng.gen_range(1..=3))
                    .map(|i| Variable::new(format!("v{i}")))
                    .collect(),
            ),
        },
    };
    let mut q = Query::select_all(pattern);
    q.form = form;
    if rng.gen_bool(0.3) {
        q.prefixes.insert("t".into(), NS.into());
    }
    if q.form == QueryForm::Ask {
        return q;
    }
    if rng.gen_bool(0.3) {
        q.order = (0..rng.gen_range(1..=2))
            .map(|_| OrderKey {
                var: random_var(rng),
                ascending: rng.gen_bool(0.5),
            })
            .collect();
    }
    q.limit = rng.gen_bool(0.3).then(|| rng.gen_range(0..100));
    q.offset = rng.gen_bool(0.2).then(|| rng.gen_range(0..10));
    q
}

// ---------------------------------------------------------------------------
// Results, N-Triples and JSON fixtures.

fn random_any_term<R: Rng>(rng: &mut R) -> Term {
    match rng.gen_range(0..4) {
        0 => iri(&format!("r{}", rng.gen_range(0..20))),
        1 => Term::BlankNode(format!("b{}", rng.gen_range(0..5))),
        _ => random_literal(rng),
    }
}

/// Random solution sequences including unbound cells and every term kind.
pub fn random_solutions<R: Rng>(rng: &mut R) -> Solutions {
    let vars: Vec<Variable> = (0..rng.gen_range(0..5))
        .map(|i| Variable::new(format!("c{i}")))
        .collect();
    let rows = (0..rng.gen_range(0..8))
        .map(|_| {
            let mut b = Binding::new();
            for v in &vars {
                if rng.gen_bool(0.75) {
                    b.insert(v.clone(), random_any_term(rng));
                }
            }
            b
        })
        .collect();
    Solutions::new(vars, rows)
}

/// A graph of exactly `n` distinct triples exercising escapes, language
/// tags, datatypes and blank nodes.
pub fn ntriples_fixture<R: Rng>(rng: &mut R, n: usize) -> Graph {
    let mut g = Graph::new();
    while g.len() < n {
        let s = if rng.gen_bool(0.3) {
            Term::BlankNode(format!("b{}", rng.gen_range(0..6)))
        } else {
            iri(&format!("s{}", rng.gen_range(0..10)))
        };
        let p = iri(&format!("p{}", rng.gen_range(0..4)));
        let o = match rng.gen_range(0..3) {
            0 => Term::BlankNode(format!("b{}", rng.gen_range(0..6))),
            1 => iri(&format!("o{}", rng.gen_range(0..10))),
            _ => match rng.gen_range(0..3) {
                0 => Term::string(format!("line\n{}\\\"{}\"", rng.gen_range(0..100), '\u{e9}')),
                1 => Term::integer(rng.gen_range(-1000..1000)),
                _ => random_literal(rng),
            },
        };
        g.insert(Triple::new(s, p, o).expect("valid triple"));
    }
    g
}

/// Random JSON documents: nested objects and arrays, every scalar kind.
pub fn random_json<R: Rng>(rng: &mut R, depth: usize) -> Json {
    let scalar = |rng: &mut R| -> Json {
        match rng.gen_range(0..6) {
            0 => Json::Null,
            1 => Json::Bool(rng.gen_bool(0.5)),
            2 => serde_json::from_str(&rng.gen_range(-50..50).to_string()).unwrap(),
            3 => serde_json::from_str(&format!("{}.{}", rng.gen_range(0..9), rng.gen_range(1..99))).unwrap(),
            _ => Json::String(["OMT2", "a b", "", "x/y?z", "é"].choose(rng).unwrap().to_string()),
        }
    };
    if depth == 0 || rng.gen_bool(0.3) {
        return scalar(rng);
    }
    if rng.gen_bool(0.5) {
        let mut m = Map::new();
        for _ in 0..rng.gen_range(0..5) {
            let key = ["name", "score", "edges", "a b", "taxon", "id", "ü"]
                .choose(rng)
                .unwrap()
                .to_string();
            m.insert(key, random_json(rng, depth - 1));
        }
        Json::Object(m)
    } else {
        Json::Array((0..rng.gen_range(0..5)).map(|_| random_json(rng, depth - 1)).collect())
    }
}

/// Triple count of the lifted form of `doc`, derived from the lifting
/// rules alone. Identical scalar elements of one array collapse into one
/// triple because a graph is a set.
pub fn lift_count(doc: &Json) -> usize {
    match doc {
        Json::Object(_) | Json::Array(_) => node_count(doc),
        _ => 0,
    }
}

fn node_count(node: &Json) -> usize {
    match node {
        Json::Object(m) => m.values().map(edge_count).sum(),
        Json::Array(items) => elements_count(items),
        _ => 0,
    }
}

/// Triples contributed by a value under one key of an object. Array
/// elements attach to the object itself, one edge each.
fn edge_count(value: &Json) -> usize {
    match value {
        Json::Null => 0,
        Json::Object(_) => 1 + node_count(value),
        Json::Array(items) => elements_count(items),
        _ => 1,
    }
}

fn elements_count(items: &[Json]) -> usize {
    let mut scalars = BTreeSet::new();
    let mut total = 0;
    for item in items {
        match item {
            Json::Null => {}
            Json::Object(_) => total += 2 + node_count(item),
            // An array element of an array becomes a node with its own items.
            Json::Array(inner) => total += 2 + elements_count(inner),
            scalar => {
                let kind = match scalar {
                    Json::String(_) => "s",
                    Json::Bool(_) => "b",
                    _ => "n",
                };
                scalars.insert((kind, scalar.to_string()));
            }
        }
    }
    total + scalars.len()
}
