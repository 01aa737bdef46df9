//! Query evaluation over a frozen [`Graph`], with SERVICE delegated to a
//! caller-supplied [`ServiceExecutor`].

mod order;
mod value;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::rdf::{Graph, Term, Triple};
use crate::sparql::{
    Binding, Element, GroupPattern, Projection, Query, QueryForm, ServicePattern, Solutions, TermPattern,
    TriplePattern, ValuesTable, Variable,
};

pub use order::{compare_terms, sort_solutions};
pub use value::{eval_expression, filter_passes, numeric_value, Numeric, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RemoteFailure {
    Status(u16),
    Timeout,
    Malformed(String),
    Unreachable(String),
}

impl fmt::Display for RemoteFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RemoteFailure::Status(s) => write!(f, "HTTP status {s}"),
            RemoteFailure::Timeout => f.write_str("timed out"),
            RemoteFailure::Malformed(why) => write!(f, "malformed response: {why}"),
            RemoteFailure::Unreachable(why) => write!(f, "unreachable: {why}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ServiceError {
    #[error("SERVICE {endpoint} cannot be evaluated here")]
    Unavailable { endpoint: String },
    #[error("endpoint {endpoint} is not in the allowlist")]
    NotAllowed { endpoint: String },
    #[error("remote endpoint {endpoint}: {failure}")]
    Remote { endpoint: String, failure: RemoteFailure },
    #[error("query exceeded the budget of {limit} remote calls")]
    BudgetExceeded { limit: usize },
}

/// Evaluates a SERVICE element against the current solutions and returns
/// the joined sequence. Implementations must not assume they are called
/// once per query.
pub trait ServiceExecutor {
    fn execute(&self, service: &ServicePattern, incoming: &Solutions) -> Result<Solutions, ServiceError>;
}

/// Executor for leaf endpoints: every SERVICE is an error.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoServices;

impl ServiceExecutor for NoServices {
    fn execute(&self, service: &ServicePattern, _: &Solutions) -> Result<Solutions, ServiceError> {
        Err(ServiceError::Unavailable {
            endpoint: service.endpoint.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum QueryOutput {
    Solutions(Solutions),
    Boolean(bool),
    Graph(Graph),
}

pub fn evaluate(graph: &Graph, query: &Query, svc: &dyn ServiceExecutor) -> Result<QueryOutput, ServiceError> {
    Ok(match &query.form {
        QueryForm::Construct { .. } => QueryOutput::Graph(eval_construct(graph, query, svc)?),
        QueryForm::Ask => QueryOutput::Boolean(!eval_select(graph, query, svc)?.is_empty()),
        QueryForm::Select { .. } => QueryOutput::Solutions(eval_select(graph, query, svc)?),
    })
}

/// Extends each seed row with every match of the patterns.
pub fn eval_bgp(graph: &Graph, patterns: &[TriplePattern], seed: &Solutions) -> Solutions {
    let mut out = Solutions::empty(seed.vars.clone());
    out.declare(&pattern_vars(patterns));
    for row in &seed.rows {
        let order = greedy_order(patterns, row);
        extend(graph, patterns, &order, row.clone(), &mut out.rows);
    }
    out
}

fn pattern_vars(patterns: &[TriplePattern]) -> Vec<Variable> {
    let mut vars = Vec::new();
    for tp in patterns {
        for v in tp.positions().into_iter().filter_map(TermPattern::as_var) {
            if !vars.contains(v) {
                vars.push(v.clone());
            }
        }
    }
    vars
}

/// Most-bound-first: repeatedly pick the pattern with the most positions
/// fixed by constants or already-bound variables, ties by written order.
fn greedy_order(patterns: &[TriplePattern], row: &Binding) -> Vec<usize> {
    let mut bound: BTreeSet<&Variable> = row.iter().map(|(v, _)| v).collect();
    let mut remaining: Vec<usize> = (0..patterns.len()).collect();
    let mut order = Vec::with_capacity(patterns.len());
    while !remaining.is_empty() {
        let score = |i: usize| {
            patterns[i]
                .positions()
                .iter()
                .filter(|p| p.as_var().is_none_or(|v| bound.contains(v)))
                .count()
        };
        let (pick, _) = remaining
            .iter()
            .enumerate()
            .max_by(|(ia, &a), (ib, &b)| score(a).cmp(&score(b)).then(ib.cmp(ia)))
            .expect("non-empty");
        let chosen = remaining.remove(pick);
        bound.extend(patterns[chosen].positions().into_iter().filter_map(TermPattern::as_var));
        order.push(chosen);
    }
    order
}

fn extend(graph: &Graph, patterns: &[TriplePattern], order: &[usize], row: Binding, out: &mut Vec<Binding>) {
    let Some((&first, rest)) = order.split_first() else {
        out.push(row);
        return;
    };
    let tp = &patterns[first];
    let resolve = |p: &TermPattern| -> Option<Term> {
        match p {
            TermPattern::Term(t) => Some(t.clone()),
            TermPattern::Var(v) => row.get(v).cloned(),
        }
    };
    let (s, p, o) = (resolve(&tp.subject), resolve(&tp.predicate), resolve(&tp.object));
    for t in graph.matching(s.as_ref(), p.as_ref(), o.as_ref()) {
        let mut next = row.clone();
        let ok = [
            (&tp.subject, t.subject),
            (&tp.predicate, t.predicate),
            (&tp.object, t.object),
        ]
        .into_iter()
        .all(|(pat, term)| match pat {
            TermPattern::Term(_) => true,
            // A variable repeated within the pattern must take one value.
            TermPattern::Var(v) => match next.get(v) {
                Some(existing) => existing == term,
                None => {
                    next.insert(v.clone(), term.clone());
                    true
                }
            },
        });
        if ok {
            extend(graph, patterns, rest, next, out);
        }
    }
}

/// Joins every row with every compatible row of the table.
pub fn join_values(seed: &Solutions, table: &ValuesTable) -> Solutions {
    let table_rows: Vec<Binding> = table
        .rows
        .iter()
        .map(|cells| {
            table
                .vars
                .iter()
                .zip(cells)
                .filter_map(|(v, c)| c.clone().map(|t| (v.clone(), t)))
                .collect()
        })
        .collect();
    let mut out = Solutions::empty(seed.vars.clone());
    out.declare(&table.vars);
    for row in &seed.rows {
        out.rows.extend(table_rows.iter().filter_map(|t| row.merge(t)));
    }
    out
}

/// Evaluates a group left to right from `seed`. FILTERs apply to the
/// group's whole solution sequence, after its other elements.
pub fn eval_group(
    graph: &Graph,
    group: &GroupPattern,
    seed: Solutions,
    svc: &dyn ServiceExecutor,
) -> Result<Solutions, ServiceError> {
    eval_group_at(graph, group, seed, svc, 0)
}

fn eval_group_at(
    graph: &Graph,
    group: &GroupPattern,
    seed: Solutions,
    svc: &dyn ServiceExecutor,
    depth: usize,
) -> Result<Solutions, ServiceError> {
    let mut current = seed;
    let mut filters = Vec::new();
    for el in &group.elements {
        current = match el {
            Element::Triples(tps) => eval_bgp(graph, tps, &current),
            Element::Values(table) => join_values(&current, table),
            Element::Service(s) => svc.execute(s, &current)?,
            Element::Optional(body) => left_join(graph, body, current, svc, depth)?,
            Element::Filter(e) => {
                filters.push(e);
                continue;
            }
        };
    }
    if !filters.is_empty() {
        current.rows.retain(|row| filters.iter().all(|e| filter_passes(e, row)));
    }
    Ok(current)
}

/// Left outer join in which the optional body is evaluated once over all
/// rows: each row carries a hidden tag so its extensions can be regrouped.
/// This keeps a SERVICE inside OPTIONAL to one bound-join per evaluation.
fn left_join(
    graph: &Graph,
    body: &GroupPattern,
    current: Solutions,
    svc: &dyn ServiceExecutor,
    depth: usize,
) -> Result<Solutions, ServiceError> {
    let tag = Variable::new(format!("#opt{depth}"));
    let n = current.rows.len();
    let mut tagged = Solutions::empty(current.vars.clone());
    tagged.rows = current
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut row = row.clone();
            row.insert(tag.clone(), Term::integer(i as i64));
            row
        })
        .collect();
    let extended = eval_group_at(graph, body, tagged, svc, depth + 1)?;
    let mut groups: Vec<Vec<Binding>> = vec![Vec::new(); n];
    for mut row in extended.rows {
        let Some(Term::Literal(lit)) = row.remove(&tag) else {
            continue;
        };
        if let Some(slot) = lit.lexical().parse::<usize>().ok().and_then(|i| groups.get_mut(i)) {
            slot.push(row);
        }
    }
    let mut out = Solutions::empty(current.vars);
    out.declare(extended.vars.iter().filter(|v| **v != tag));
    for (row, ext) in current.rows.into_iter().zip(groups) {
        if ext.is_empty() {
            out.rows.push(row);
        } else {
            out.rows.extend(ext);
        }
    }
    Ok(out)
}

/// Variables a `SELECT *` projects: those the pattern can bind, in order of
/// first appearance, excluding blank-node variables.
pub fn in_scope_variables(group: &GroupPattern) -> Vec<Variable> {
    let mut out = Vec::new();
    collect_in_scope(group, &mut out);
    out
}

fn collect_in_scope(group: &GroupPattern, out: &mut Vec<Variable>) {
    fn push(out: &mut Vec<Variable>, v: &Variable) {
        if !v.is_blank_derived() && !out.contains(v) {
            out.push(v.clone());
        }
    }
    for el in &group.elements {
        match el {
            Element::Triples(tps) => pattern_vars(tps).iter().for_each(|v| push(out, v)),
            Element::Values(t) => t.vars.iter().for_each(|v| push(out, v)),
            Element::Optional(g) => collect_in_scope(g, out),
            Element::Service(s) => collect_in_scope(&s.body, out),
            Element::Filter(_) => {}
        }
    }
}

/// SELECT and ASK. For ASK the result has no variables and at most one row.
pub fn eval_select(graph: &Graph, query: &Query, svc: &dyn ServiceExecutor) -> Result<Solutions, ServiceError> {
    let mut solutions = eval_group(graph, &query.pattern, Solutions::unit(), svc)?;
    let (distinct, vars) = match &query.form {
        QueryForm::Select { distinct, projection } => (
            *distinct,
            match projection {
                Projection::All => in_scope_variables(&query.pattern),
                Projection::Vars(vs) => vs.clone(),
            },
        ),
        QueryForm::Ask => {
            let rows = if solutions.is_empty() {
                vec![]
            } else {
                vec![Binding::new()]
            };
            return Ok(Solutions::new(Vec::new(), rows));
        }
        QueryForm::Construct { .. } => (false, in_scope_variables(&query.pattern)),
    };
    sort_solutions(&mut solutions.rows, &query.order);
    let mut rows: Vec<Binding> = solutions.rows.iter().map(|r| r.project(&vars)).collect();
    if distinct {
        let mut seen = std::collections::HashSet::new();
        rows.retain(|r| seen.insert(r.clone()));
    }
    Ok(Solutions::new(vars, slice(rows, query.offset, query.limit)))
}

fn slice<T>(rows: Vec<T>, offset: Option<u64>, limit: Option<u64>) -> Vec<T> {
    let offset = offset.unwrap_or(0).min(usize::MAX as u64) as usize;
    let limit = limit.map_or(usize::MAX, |l| l.min(usize::MAX as u64) as usize);
    rows.into_iter().skip(offset).take(limit).collect()
}

/// Instantiates the template once per solution row. Template blank nodes are
/// fresh per row; instantiations that would not be valid triples are skipped.
pub fn eval_construct(graph: &Graph, query: &Query, svc: &dyn ServiceExecutor) -> Result<Graph, ServiceError> {
    let QueryForm::Construct { template } = &query.form else {
        return Ok(Graph::new());
    };
    let mut solutions = eval_group(graph, &query.pattern, Solutions::unit(), svc)?;
    sort_solutions(&mut solutions.rows, &query.order);
    let rows = slice(solutions.rows, query.offset, query.limit);
    let mut out = Graph::new();
    for (i, row) in rows.iter().enumerate() {
        for tp in template {
            let inst = |p: &TermPattern| -> Option<Term> {
                match p {
                    TermPattern::Term(Term::BlankNode(label)) => Some(Term::BlankNode(format!("t{i}x{label}"))),
                    TermPattern::Term(t) => Some(t.clone()),
                    TermPattern::Var(v) => row.get(v).map(|t| match t {
                        // Source blanks get their own namespace so they never meet template blanks.
                        Term::BlankNode(label) => Term::BlankNode(format!("s{label}")),
                        t => t.clone(),
                    }),
                }
            };
            if let (Some(s), Some(p), Some(o)) = (inst(&tp.subject), inst(&tp.predicate), inst(&tp.object)) {
                if let Ok(triple) = Triple::new(s, p, o) {
                    out.insert(triple);
                }
            }
        }
    }
    Ok(out)
}

/// The query with every SERVICE frame erased and its body inlined, for
/// evaluating a federated query over a single merged graph.
pub fn strip_services(query: &Query) -> Query {
    let mut q = query.clone();
    q.pattern = strip_group(&query.pattern);
    q
}

fn strip_group(group: &GroupPattern) -> GroupPattern {
    let mut elements = Vec::new();
    for el in &group.elements {
        match el {
            Element::Service(s) => elements.extend(strip_group(&s.body).elements),
            Element::Optional(g) => elements.push(Element::Optional(strip_group(g))),
            other => elements.push(other.clone()),
        }
    }
    GroupPattern::new(elements)
}
