use std::collections::BTreeMap;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;
use crate::rdf::vocab::{rdf, xsd};
use crate::rdf::Term;

/// Keywords of SPARQL 1.1 that this engine recognizes but does not support.
pub const UNSUPPORTED_KEYWORDS: &[&str] = &[
    "UNION",
    "GRAPH",
    "BIND",
    "MINUS",
    "GROUP",
    "HAVING",
    "COUNT",
    "SUM",
    "MIN",
    "MAX",
    "AVG",
    "SAMPLE",
    "GROUP_CONCAT",
    "DESCRIBE",
    "FROM",
    "NAMED",
    "EXISTS",
    "NOT",
    "IN",
    "BASE",
    "REDUCED",
    "INSERT",
    "DELETE",
    "LOAD",
    "CLEAR",
    "CREATE",
    "DROP",
];

/// Parses a query in the supported subset, expanding prefixed names.
pub fn parse_query(text: &str) -> Result<Query, ParseError> {
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        prefixes: BTreeMap::new(),
        in_template: false,
    };
    p.query()
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    prefixes: BTreeMap<String, String>,
    in_template: bool,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let idx = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[idx].tok
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        let t = &self.tokens[self.pos];
        ParseError::Syntax {
            line: t.line,
            col: t.col,
            message: message.into(),
        }
    }

    fn unsupported(&self, keyword: impl Into<String>) -> ParseError {
        let t = &self.tokens[self.pos];
        ParseError::UnsupportedFeature {
            keyword: keyword.into(),
            line: t.line,
            col: t.col,
        }
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::Eof => "end of input".into(),
            Tok::Word(w) => format!("'{w}'"),
            Tok::Punct(p) => format!("'{p}'"),
            Tok::Var(v) => format!("?{v}"),
            Tok::Iri(i) => format!("<{i}>"),
            other => format!("{other:?}"),
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Word(w) if w.eq_ignore_ascii_case(kw))
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        self.reject_reserved()?;
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.error(format!("expected {kw}, found {}", Self::describe(self.peek()))))
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), ParseError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            self.reject_reserved()?;
            Err(self.error(format!("expected '{p}', found {}", Self::describe(self.peek()))))
        }
    }

    fn reject_reserved(&self) -> Result<(), ParseError> {
        if let Tok::Word(w) = self.peek() {
            let upper = w.to_ascii_uppercase();
            if UNSUPPORTED_KEYWORDS.contains(&upper.as_str()) {
                return Err(self.unsupported(upper));
            }
        }
        Ok(())
    }

    fn query(&mut self) -> Result<Query, ParseError> {
        while self.eat_keyword("PREFIX") {
            let (prefix, local) = match self.next().tok {
                Tok::PName { prefix, local } => (prefix, local),
                _ => {
                    self.pos -= 1;
                    return Err(self.error("expected prefix name after PREFIX"));
                }
            };
            if !local.is_empty() {
                return Err(self.error("prefix declaration must end with ':'"));
            }
            let iri = match self.next().tok {
                Tok::Iri(iri) => iri,
                _ => {
                    self.pos -= 1;
                    return Err(self.error("expected IRI in PREFIX declaration"));
                }
            };
            self.prefixes.insert(prefix, iri);
        }
        self.reject_reserved()?;
        let form = if self.eat_keyword("SELECT") {
            let distinct = self.eat_keyword("DISTINCT");
            self.reject_reserved()?;
            let projection = if self.eat_punct("*") {
                Projection::All
            } else {
                let mut vars = Vec::new();
                loop {
                    match self.peek().clone() {
                        Tok::Var(v) => {
                            self.next();
                            vars.push(Variable::new(v));
                        }
                        Tok::Punct("(") => return Err(self.unsupported("SELECT expression")),
                        _ => break,
                    }
                }
                if vars.is_empty() {
                    return Err(self.error("expected '*' or variables after SELECT"));
                }
                Projection::Vars(vars)
            };
            QueryForm::Select { distinct, projection }
        } else if self.eat_keyword("CONSTRUCT") {
            self.expect_punct("{")?;
            self.in_template = true;
            let template = self.triples_block(&["}"])?;
            self.in_template = false;
            self.expect_punct("}")?;
            QueryForm::Construct { template }
        } else if self.eat_keyword("ASK") {
            QueryForm::Ask
        } else {
            return Err(self.error(format!(
                "expected SELECT, CONSTRUCT or ASK, found {}",
                Self::describe(self.peek())
            )));
        };
        self.reject_reserved()?;
        let has_where = self.eat_keyword("WHERE");
        if !has_where && !matches!(form, QueryForm::Ask) && !self.is_punct("{") {
            return Err(self.error("expected WHERE"));
        }
        let pattern = self.group(false)?;

        let mut query = Query {
            prefixes: std::mem::take(&mut self.prefixes),
            form,
            pattern,
            order: Vec::new(),
            limit: None,
            offset: None,
        };
        if !matches!(query.form, QueryForm::Ask) {
            self.modifiers(&mut query)?;
        }
        self.reject_reserved()?;
        if *self.peek() != Tok::Eof {
            return Err(self.error(format!("unexpected {} after query", Self::describe(self.peek()))));
        }
        Ok(query)
    }

    fn modifiers(&mut self, query: &mut Query) -> Result<(), ParseError> {
        self.reject_reserved()?;
        if self.eat_keyword("ORDER") {
            self.expect_keyword("BY")?;
            loop {
                let key = if self.is_keyword("ASC") || self.is_keyword("DESC") {
                    let ascending = self.is_keyword("ASC");
                    self.next();
                    self.expect_punct("(")?;
                    let var = self.order_var()?;
                    self.expect_punct(")")?;
                    OrderKey { var, ascending }
                } else if matches!(self.peek(), Tok::Var(_)) {
                    OrderKey {
                        var: self.order_var()?,
                        ascending: true,
                    }
                } else {
                    break;
                };
                query.order.push(key);
            }
            if query.order.is_empty() {
                return Err(self.error("expected ORDER BY key"));
            }
        }
        loop {
            if self.eat_keyword("LIMIT") {
                if query.limit.is_some() {
                    return Err(self.error("duplicate LIMIT"));
                }
                query.limit = Some(self.count()?);
            } else if self.eat_keyword("OFFSET") {
                if query.offset.is_some() {
                    return Err(self.error("duplicate OFFSET"));
                }
                query.offset = Some(self.count()?);
            } else {
                break;
            }
        }
        Ok(())
    }

    fn order_var(&mut self) -> Result<Variable, ParseError> {
        match self.peek().clone() {
            Tok::Var(v) => {
                self.next();
                Ok(Variable::new(v))
            }
            Tok::Punct("(") | Tok::Word(_) => Err(self.unsupported("ORDER BY expression")),
            _ => Err(self.error("expected variable in ORDER BY")),
        }
    }

    fn count(&mut self) -> Result<u64, ParseError> {
        match self.peek().clone() {
            Tok::Integer(n) => {
                let value = n.parse().map_err(|_| self.error("integer out of range"))?;
                self.next();
                Ok(value)
            }
            _ => Err(self.error("expected non-negative integer")),
        }
    }

    fn group(&mut self, in_service: bool) -> Result<GroupPattern, ParseError> {
        self.expect_punct("{")?;
        let mut elements = Vec::new();
        loop {
            self.reject_reserved()?;
            if self.eat_punct("}") {
                break;
            }
            if self.eat_punct(".") {
                continue;
            }
            if self.eat_keyword("FILTER") {
                let expr = if self.is_punct("(") {
                    self.next();
                    let e = self.expression()?;
                    self.expect_punct(")")?;
                    e
                } else {
                    self.primary()?
                };
                elements.push(Element::Filter(expr));
            } else if self.eat_keyword("OPTIONAL") {
                elements.push(Element::Optional(self.group(in_service)?));
            } else if self.is_keyword("SERVICE") {
                if in_service {
                    return Err(self.unsupported("nested SERVICE"));
                }
                self.next();
                let silent = self.eat_keyword("SILENT");
                let endpoint = match self.peek().clone() {
                    Tok::Iri(iri) => {
                        self.next();
                        iri
                    }
                    Tok::PName { .. } => match self.term_pattern(false)? {
                        TermPattern::Term(Term::Iri(iri)) => iri,
                        _ => unreachable!("prefixed names expand to IRIs"),
                    },
                    Tok::Var(_) => return Err(self.unsupported("SERVICE with variable endpoint")),
                    _ => return Err(self.error("expected endpoint IRI after SERVICE")),
                };
                let body = self.group(true)?;
                elements.push(Element::Service(ServicePattern { endpoint, silent, body }));
            } else if self.eat_keyword("VALUES") {
                elements.push(Element::Values(self.values()?));
            } else if self.is_punct("{") {
                if matches!(self.peek_at(1), Tok::Word(w) if w.eq_ignore_ascii_case("SELECT")) {
                    return Err(self.unsupported("subquery"));
                }
                self.group(in_service)?;
                self.reject_reserved()?;
                return Err(self.unsupported("nested group"));
            } else {
                let triples = self.triples_block(&["}", "FILTER", "OPTIONAL", "SERVICE", "VALUES", "{"])?;
                if triples.is_empty() {
                    return Err(self.error(format!("unexpected {} in group", Self::describe(self.peek()))));
                }
                match elements.last_mut() {
                    Some(Element::Triples(prev)) => prev.extend(triples),
                    _ => elements.push(Element::Triples(triples)),
                }
            }
        }
        Ok(GroupPattern { elements })
    }

    fn at_block_end(&self, stops: &[&str]) -> bool {
        match self.peek() {
            Tok::Eof => true,
            Tok::Punct(p) => stops.contains(p),
            Tok::Word(w) => stops.iter().any(|s| s.eq_ignore_ascii_case(w)),
            _ => false,
        }
    }

    fn triples_block(&mut self, stops: &[&str]) -> Result<Vec<TriplePattern>, ParseError> {
        let mut out = Vec::new();
        loop {
            self.reject_reserved()?;
            if self.at_block_end(stops) {
                break;
            }
            let subject = self.term_pattern(false)?;
            loop {
                let predicate = self.verb()?;
                loop {
                    let object = self.term_pattern(false)?;
                    out.push(TriplePattern {
                        subject: subject.clone(),
                        predicate: predicate.clone(),
                        object,
                    });
                    if !self.eat_punct(",") {
                        break;
                    }
                }
                if !self.eat_punct(";") {
                    break;
                }
                while self.eat_punct(";") {}
                if self.is_punct(".") || self.at_block_end(stops) {
                    break;
                }
            }
            if !self.eat_punct(".") {
                break;
            }
        }
        Ok(out)
    }

    fn verb(&mut self) -> Result<TermPattern, ParseError> {
        if matches!(self.peek(), Tok::Punct("^" | "(" | "!")) {
            return Err(self.unsupported("property path"));
        }
        if self.is_keyword("a") {
            self.next();
            return Ok(TermPattern::Term(Term::Iri(rdf::TYPE.to_owned())));
        }
        let predicate = match self.peek() {
            Tok::Var(_) | Tok::Iri(_) | Tok::PName { .. } => self.term_pattern(true)?,
            _ => return Err(self.error(format!("expected predicate, found {}", Self::describe(self.peek())))),
        };
        if matches!(self.peek(), Tok::Punct("/" | "|" | "*" | "+" | "?")) {
            return Err(self.unsupported("property path"));
        }
        Ok(predicate)
    }

    fn iri_term(&self, iri: String) -> Result<Term, ParseError> {
        Term::iri(iri).map_err(|e| self.error(e.to_string()))
    }

    fn expand(&self, prefix: &str, local: &str) -> Result<String, ParseError> {
        match self.prefixes.get(prefix) {
            Some(ns) => Ok(format!("{ns}{local}")),
            None => Err(self.error(format!("undeclared prefix '{prefix}:'"))),
        }
    }

    fn term_pattern(&mut self, predicate: bool) -> Result<TermPattern, ParseError> {
        let tok = self.peek().clone();
        let out = match tok {
            Tok::Var(v) => TermPattern::Var(Variable::new(v)),
            Tok::Iri(iri) => TermPattern::Term(self.iri_term(iri)?),
            Tok::PName { prefix, local } => TermPattern::Term(self.iri_term(self.expand(&prefix, &local)?)?),
            Tok::Blank(label) if !predicate => {
                if self.in_template {
                    TermPattern::Term(Term::BlankNode(label))
                } else {
                    TermPattern::Var(Variable::new(format!("_:{label}")))
                }
            }
            Tok::Punct("[") => return Err(self.unsupported("anonymous blank node")),
            _ if !predicate => return self.literal().map(TermPattern::Term),
            _ => return Err(self.error(format!("expected term, found {}", Self::describe(&tok)))),
        };
        self.next();
        Ok(out)
    }

    /// String, numeric or boolean literal. Consumes its tokens.
    fn literal(&mut self) -> Result<Term, ParseError> {
        let tok = self.peek().clone();
        let negative = match tok {
            Tok::Punct("-") => true,
            Tok::Punct("+") => false,
            _ => return self.unsigned_literal(),
        };
        self.next();
        let lit = match self.peek().clone() {
            Tok::Integer(n) => Term::typed(signed(&n, negative), xsd::INTEGER),
            Tok::Decimal(n) => Term::typed(signed(&n, negative), xsd::DECIMAL),
            Tok::Double(n) => Term::typed(signed(&n, negative), xsd::DOUBLE),
            _ => return Err(self.error("expected number after sign")),
        };
        self.next();
        Ok(lit.expect("xsd datatypes are valid IRIs"))
    }

    fn unsigned_literal(&mut self) -> Result<Term, ParseError> {
        let tok = self.peek().clone();
        let term = match tok {
            Tok::Str(s) => {
                self.next();
                return match self.peek().clone() {
                    Tok::LangTag(tag) => {
                        self.next();
                        Term::lang_string(s, tag).map_err(|e| self.error(e.to_string()))
                    }
                    Tok::Punct("^^") => {
                        self.next();
                        let dt = match self.peek().clone() {
                            Tok::Iri(iri) => iri,
                            Tok::PName { prefix, local } => self.expand(&prefix, &local)?,
                            _ => return Err(self.error("expected datatype IRI after '^^'")),
                        };
                        let t = Term::typed(s, dt).map_err(|e| self.error(e.to_string()))?;
                        self.next();
                        Ok(t)
                    }
                    _ => Ok(Term::string(s)),
                };
            }
            Tok::Integer(n) => Term::typed(n, xsd::INTEGER),
            Tok::Decimal(n) => Term::typed(n, xsd::DECIMAL),
            Tok::Double(n) => Term::typed(n, xsd::DOUBLE),
            Tok::Word(w) if w == "true" || w == "false" => Term::typed(w, xsd::BOOLEAN),
            Tok::Word(ref w) if UNSUPPORTED_KEYWORDS.contains(&w.to_ascii_uppercase().as_str()) => {
                return Err(self.unsupported(w.to_ascii_uppercase()))
            }
            other => return Err(self.error(format!("expected term, found {}", Self::describe(&other)))),
        };
        self.next();
        Ok(term.expect("xsd datatypes are valid IRIs"))
    }

    fn values(&mut self) -> Result<ValuesTable, ParseError> {
        let (vars, multi) = match self.peek().clone() {
            Tok::Var(v) => {
                self.next();
                (vec![Variable::new(v)], false)
            }
            Tok::Punct("(") => {
                self.next();
                let mut vars = Vec::new();
                while let Tok::Var(v) = self.peek().clone() {
                    self.next();
                    vars.push(Variable::new(v));
                }
                self.expect_punct(")")?;
                (vars, true)
            }
            _ => return Err(self.error("expected variable or '(' after VALUES")),
        };
        self.expect_punct("{")?;
        let mut rows = Vec::new();
        while !self.eat_punct("}") {
            if multi {
                self.expect_punct("(")?;
                let mut row = Vec::new();
                while !self.eat_punct(")") {
                    row.push(self.values_cell()?);
                }
                if row.len() != vars.len() {
                    return Err(self.error(format!(
                        "VALUES row has {} values for {} variables",
                        row.len(),
                        vars.len()
                    )));
                }
                rows.push(row);
            } else {
                rows.push(vec![self.values_cell()?]);
            }
        }
        Ok(ValuesTable { vars, rows })
    }

    fn values_cell(&mut self) -> Result<Option<Term>, ParseError> {
        if self.eat_keyword("UNDEF") {
            return Ok(None);
        }
        match self.peek().clone() {
            Tok::Iri(iri) => {
                self.next();
                Ok(Some(self.iri_term(iri)?))
            }
            Tok::PName { prefix, local } => {
                let t = self.iri_term(self.expand(&prefix, &local)?)?;
                self.next();
                Ok(Some(t))
            }
            Tok::Eof => Err(self.error("unterminated VALUES block")),
            _ => self.literal().map(Some),
        }
    }

    // Expression grammar: || < && < comparison < additive < multiplicative < unary.

    fn expression(&mut self) -> Result<Expression, ParseError> {
        let mut lhs = self.and_expr()?;
        while self.eat_punct("||") {
            let rhs = self.and_expr()?;
            lhs = Expression::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expression, ParseError> {
        let mut lhs = self.comparison()?;
        while self.eat_punct("&&") {
            let rhs = self.comparison()?;
            lhs = Expression::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn comparison(&mut self) -> Result<Expression, ParseError> {
        let lhs = self.additive()?;
        let op = match self.peek() {
            Tok::Punct("=") => CompareOp::Eq,
            Tok::Punct("!=") => CompareOp::Ne,
            Tok::Punct("<") => CompareOp::Lt,
            Tok::Punct("<=") => CompareOp::Le,
            Tok::Punct(">") => CompareOp::Gt,
            Tok::Punct(">=") => CompareOp::Ge,
            _ => {
                self.reject_reserved()?;
                return Ok(lhs);
            }
        };
        self.next();
        let rhs = self.additive()?;
        Ok(Expression::Compare(op, Box::new(lhs), Box::new(rhs)))
    }

    fn additive(&mut self) -> Result<Expression, ParseError> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Punct("+") => ArithOp::Add,
                Tok::Punct("-") => ArithOp::Sub,
                _ => return Ok(lhs),
            };
            self.next();
            let rhs = self.multiplicative()?;
            lhs = Expression::Arith(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn multiplicative(&mut self) -> Result<Expression, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Punct("*") => ArithOp::Mul,
                Tok::Punct("/") => ArithOp::Div,
                _ => return Ok(lhs),
            };
            self.next();
            let rhs = self.unary()?;
            lhs = Expression::Arith(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expression, ParseError> {
        if self.eat_punct("!") {
            return Ok(Expression::Not(Box::new(self.unary()?)));
        }
        if matches!(self.peek(), Tok::Punct("-" | "+")) {
            if matches!(self.peek_at(1), Tok::Integer(_) | Tok::Decimal(_) | Tok::Double(_)) {
                return self.literal().map(Expression::Term);
            }
            return Err(self.unsupported("unary arithmetic"));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expression, ParseError> {
        match self.peek().clone() {
            Tok::Punct("(") => {
                self.next();
                let e = self.expression()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Var(v) => {
                self.next();
                Ok(Expression::Var(Variable::new(v)))
            }
            Tok::Iri(iri) => {
                self.next();
                Ok(Expression::Term(self.iri_term(iri)?))
            }
            Tok::PName { prefix, local } => {
                let t = self.iri_term(self.expand(&prefix, &local)?)?;
                self.next();
                if self.is_punct("(") {
                    return Err(self.unsupported("extension function"));
                }
                Ok(Expression::Term(t))
            }
            Tok::Word(w) if w != "true" && w != "false" => {
                let upper = w.to_ascii_uppercase();
                if UNSUPPORTED_KEYWORDS.contains(&upper.as_str()) {
                    return Err(self.unsupported(upper));
                }
                let Some(func) = Function::from_name(&w) else {
                    if matches!(self.peek_at(1), Tok::Punct("(")) {
                        return Err(self.unsupported(upper));
                    }
                    return Err(self.error(format!("unexpected '{w}' in expression")));
                };
                self.next();
                self.expect_punct("(")?;
                let mut args = Vec::new();
                if !self.is_punct(")") {
                    loop {
                        args.push(self.expression()?);
                        if !self.eat_punct(",") {
                            break;
                        }
                    }
                }
                if args.len() != func.arity() {
                    return Err(self.error(format!(
                        "{} takes {} argument(s), got {}",
                        func.name(),
                        func.arity(),
                        args.len()
                    )));
                }
                if func == Function::Bound && !matches!(args[0], Expression::Var(_)) {
                    return Err(self.error("BOUND requires a variable"));
                }
                self.expect_punct(")")?;
                Ok(Expression::Call(func, args))
            }
            Tok::Blank(_) => Err(self.error("blank node in expression")),
            _ => self.literal().map(Expression::Term),
        }
    }
}

fn signed(n: &str, negative: bool) -> String {
    if negative {
        format!("-{n}")
    } else {
        n.to_owned()
    }
}
