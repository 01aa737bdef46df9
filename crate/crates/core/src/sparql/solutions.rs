use std::collections::BTreeMap;

use super::Variable;
use crate::rdf::Term;

/// One solution mapping: a partial function from variables to terms.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Binding(BTreeMap<Variable, Term>);

impl Binding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, var: &Variable) -> Option<&Term> {
        self.0.get(var)
    }

    pub fn insert(&mut self, var: Variable, term: Term) -> Option<Term> {
        self.0.insert(var, term)
    }

    pub fn remove(&mut self, var: &Variable) -> Option<Term> {
        self.0.remove(var)
    }

    pub fn contains(&self, var: &Variable) -> bool {
        self.0.contains_key(var)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Variable, &Term)> {
        self.0.iter()
    }

    /// Two bindings are compatible when they agree on every shared variable.
    pub fn compatible(&self, other: &Binding) -> bool {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small.0.iter().all(|(v, t)| large.0.get(v).is_none_or(|u| u == t))
    }

    /// Union of two compatible bindings; `None` when they conflict.
    pub fn merge(&self, other: &Binding) -> Option<Binding> {
        if !self.compatible(other) {
            return None;
        }
        let mut out = self.clone();
        for (v, t) in &other.0 {
            out.0.entry(v.clone()).or_insert_with(|| t.clone());
        }
        Some(out)
    }

    pub fn project(&self, vars: &[Variable]) -> Binding {
        Binding(
            vars.iter()
                .filter_map(|v| self.0.get(v).map(|t| (v.clone(), t.clone())))
                .collect(),
        )
    }
}

impl FromIterator<(Variable, Term)> for Binding {
    fn from_iter<I: IntoIterator<Item = (Variable, Term)>>(iter: I) -> Self {
        Binding(iter.into_iter().collect())
    }
}

/// An ordered multiset of bindings over a declared variable list.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Solutions {
    pub vars: Vec<Variable>,
    pub rows: Vec<Binding>,
}

impl Solutions {
    pub fn new(vars: Vec<Variable>, rows: Vec<Binding>) -> Self {
        Solutions { vars, rows }
    }

    /// The join identity: no variables, one empty row.
    pub fn unit() -> Self {
        Solutions {
            vars: Vec::new(),
            rows: vec![Binding::new()],
        }
    }

    pub fn empty(vars: Vec<Variable>) -> Self {
        Solutions { vars, rows: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Appends any variable not yet declared, keeping declaration order.
    pub fn declare<'a>(&mut self, vars: impl IntoIterator<Item = &'a Variable>) {
        for v in vars {
            if !self.vars.contains(v) {
                self.vars.push(v.clone());
            }
        }
    }

    /// Rows sorted by their canonical ordering, for multiset comparisons.
    pub fn sorted_rows(&self) -> Vec<Binding> {
        let mut rows = self.rows.clone();
        rows.sort();
        rows
    }
}
