use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::rdf::Term;

/// A query variable. Names starting with `_:` come from blank nodes written
/// in a WHERE clause; they behave like ordinary variables during evaluation
/// but are never projected by `SELECT *`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Variable(String);

impl Variable {
    pub fn new(name: impl Into<String>) -> Self {
        Variable(name.into())
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    pub fn is_blank_derived(&self) -> bool {
        self.0.starts_with("_:")
    }

    /// Only names the SPARQL syntax can express travel over the wire.
    pub fn is_expressible(&self) -> bool {
        if let Some(label) = self.0.strip_prefix("_:") {
            return crate::rdf::is_valid_blank_label(label);
        }
        !self.0.is_empty() && self.0.chars().all(|c| c.is_alphanumeric() || c == '_')
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_blank_derived() {
            f.write_str(&self.0)
        } else {
            write!(f, "?{}", self.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TermPattern {
    Term(Term),
    Var(Variable),
}

impl TermPattern {
    pub fn as_var(&self) -> Option<&Variable> {
        match self {
            TermPattern::Var(v) => Some(v),
            TermPattern::Term(_) => None,
        }
    }
}

impl From<Term> for TermPattern {
    fn from(t: Term) -> Self {
        TermPattern::Term(t)
    }
}

impl From<Variable> for TermPattern {
    fn from(v: Variable) -> Self {
        TermPattern::Var(v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TriplePattern {
    pub subject: TermPattern,
    pub predicate: TermPattern,
    pub object: TermPattern,
}

impl TriplePattern {
    pub fn new(
        subject: impl Into<TermPattern>,
        predicate: impl Into<TermPattern>,
        object: impl Into<TermPattern>,
    ) -> Self {
        TriplePattern {
            subject: subject.into(),
            predicate: predicate.into(),
            object: object.into(),
        }
    }

    pub fn positions(&self) -> [&TermPattern; 3] {
        [&self.subject, &self.predicate, &self.object]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CompareOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CompareOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Eq => "=",
            CompareOp::Ne => "!=",
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Gt => ">",
            CompareOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Function {
    Bound,
    Str,
    Lang,
    Datatype,
    Contains,
    StrStarts,
    Regex,
    IsIri,
    IsLiteral,
}

impl Function {
    pub fn name(self) -> &'static str {
        match self {
            Function::Bound => "BOUND",
            Function::Str => "STR",
            Function::Lang => "LANG",
            Function::Datatype => "DATATYPE",
            Function::Contains => "CONTAINS",
            Function::StrStarts => "STRSTARTS",
            Function::Regex => "REGEX",
            Function::IsIri => "isIRI",
            Function::IsLiteral => "isLiteral",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name.to_ascii_uppercase().as_str() {
            "BOUND" => Function::Bound,
            "STR" => Function::Str,
            "LANG" => Function::Lang,
            "DATATYPE" => Function::Datatype,
            "CONTAINS" => Function::Contains,
            "STRSTARTS" => Function::StrStarts,
            "REGEX" => Function::Regex,
            "ISIRI" | "ISURI" => Function::IsIri,
            "ISLITERAL" => Function::IsLiteral,
            _ => return None,
        })
    }

    pub fn arity(self) -> usize {
        match self {
            Function::Contains | Function::StrStarts | Function::Regex => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expression {
    Or(Box<Expression>, Box<Expression>),
    And(Box<Expression>, Box<Expression>),
    Not(Box<Expression>),
    Compare(CompareOp, Box<Expression>, Box<Expression>),
    Arith(ArithOp, Box<Expression>, Box<Expression>),
    Call(Function, Vec<Expression>),
    Term(Term),
    Var(Variable),
}

impl Expression {
    pub fn variables(&self, out: &mut BTreeSet<Variable>) {
        match self {
            Expression::Or(a, b)
            | Expression::And(a, b)
            | Expression::Compare(_, a, b)
            | Expression::Arith(_, a, b) => {
                a.variables(out);
                b.variables(out);
            }
            Expression::Not(a) => a.variables(out),
            Expression::Call(_, args) => args.iter().for_each(|a| a.variables(out)),
            Expression::Term(_) => {}
            Expression::Var(v) => {
                out.insert(v.clone());
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ValuesTable {
    pub vars: Vec<Variable>,
    /// `None` cells are `UNDEF`.
    pub rows: Vec<Vec<Option<Term>>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ServicePattern {
    pub endpoint: String,
    pub silent: bool,
    pub body: GroupPattern,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Element {
    Triples(Vec<TriplePattern>),
    Filter(Expression),
    Optional(GroupPattern),
    Service(ServicePattern),
    Values(ValuesTable),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct GroupPattern {
    pub elements: Vec<Element>,
}

impl GroupPattern {
    pub fn new(elements: Vec<Element>) -> Self {
        GroupPattern { elements }
    }

    /// Every variable mentioned anywhere in the group, filters included.
    pub fn variables(&self) -> BTreeSet<Variable> {
        let mut out = BTreeSet::new();
        self.collect_variables(&mut out);
        out
    }

    fn collect_variables(&self, out: &mut BTreeSet<Variable>) {
        for el in &self.elements {
            match el {
                Element::Triples(tps) => {
                    for tp in tps {
                        for pos in tp.positions() {
                            if let TermPattern::Var(v) = pos {
                                out.insert(v.clone());
                            }
                        }
                    }
                }
                Element::Filter(e) => e.variables(out),
                Element::Optional(g) => g.collect_variables(out),
                Element::Service(s) => s.body.collect_variables(out),
                Element::Values(v) => out.extend(v.vars.iter().cloned()),
            }
        }
    }

    /// Variables that can be bound by evaluating the group (filters excluded).
    pub fn bindable_variables(&self) -> BTreeSet<Variable> {
        let mut out = BTreeSet::new();
        for el in &self.elements {
            match el {
                Element::Triples(tps) => {
                    for tp in tps {
                        for pos in tp.positions() {
                            if let TermPattern::Var(v) = pos {
                                out.insert(v.clone());
                            }
                        }
                    }
                }
                Element::Filter(_) => {}
                Element::Optional(g) => out.extend(g.bindable_variables()),
                Element::Service(s) => out.extend(s.body.bindable_variables()),
                Element::Values(v) => out.extend(v.vars.iter().cloned()),
            }
        }
        out
    }

    pub fn contains_service(&self) -> bool {
        self.elements.iter().any(|el| match el {
            Element::Service(_) => true,
            Element::Optional(g) => g.contains_service(),
            _ => false,
        })
    }

    /// Services in textual order, descending into OPTIONAL groups.
    pub fn services(&self) -> Vec<&ServicePattern> {
        let mut out = Vec::new();
        for el in &self.elements {
            match el {
                Element::Service(s) => out.push(s),
                Element::Optional(g) => out.extend(g.services()),
                _ => {}
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Projection {
    All,
    Vars(Vec<Variable>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum QueryForm {
    Select { distinct: bool, projection: Projection },
    Construct { template: Vec<TriplePattern> },
    Ask,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OrderKey {
    pub var: Variable,
    pub ascending: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    /// Declared prefixes. Every prefixed name in the query has already been
    /// expanded; this map is kept only for display.
    pub prefixes: BTreeMap<String, String>,
    pub form: QueryForm,
    pub pattern: GroupPattern,
    pub order: Vec<OrderKey>,
    pub limit: Option<u64>,
    pub offset: Option<u64>,
}

impl Query {
    pub fn select_all(pattern: GroupPattern) -> Self {
        Query {
            prefixes: BTreeMap::new(),
            form: QueryForm::Select {
                distinct: false,
                projection: Projection::All,
            },
            pattern,
            order: Vec::new(),
            limit: None,
            offset: None,
        }
    }

    /// Projected variables that never occur in the WHERE clause. They are
    /// legal and simply stay unbound.
    pub fn warnings(&self) -> Vec<String> {
        let QueryForm::Select {
            projection: Projection::Vars(vars),
            ..
        } = &self.form
        else {
            return Vec::new();
        };
        let mentioned = self.pattern.variables();
        vars.iter()
            .filter(|v| !mentioned.contains(*v))
            .map(|v| format!("projected variable {v} does not occur in WHERE"))
            .collect()
    }
}
