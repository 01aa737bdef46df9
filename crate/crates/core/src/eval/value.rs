//! FILTER expression values and their operators.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use regex::Regex;

use crate::rdf::vocab::xsd;
use crate::rdf::{Literal, Term};
use crate::sparql::{ArithOp, Binding, CompareOp, Expression, Function};

/// Numbers keep the promotion lattice integer < decimal < double.
#[derive(Debug, Clone, PartialEq)]
pub enum Numeric {
    Integer(BigInt),
    Decimal(BigRational),
    Double(f64),
}

impl Numeric {
    fn rank(&self) -> u8 {
        match self {
            Numeric::Integer(_) => 0,
            Numeric::Decimal(_) => 1,
            Numeric::Double(_) => 2,
        }
    }

    fn as_rational(&self) -> Option<BigRational> {
        match self {
            Numeric::Integer(i) => Some(BigRational::from_integer(i.clone())),
            Numeric::Decimal(d) => Some(d.clone()),
            Numeric::Double(_) => None,
        }
    }

    fn as_f64(&self) -> f64 {
        match self {
            Numeric::Integer(i) => i.to_f64().unwrap_or(f64::NAN),
            Numeric::Decimal(d) => d.to_f64().unwrap_or(f64::NAN),
            Numeric::Double(f) => *f,
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            Numeric::Integer(i) => i.is_zero(),
            Numeric::Decimal(d) => d.is_zero(),
            Numeric::Double(f) => *f == 0.0,
        }
    }

    fn is_nan(&self) -> bool {
        matches!(self, Numeric::Double(f) if f.is_nan())
    }

    /// Value comparison; `None` when a NaN is involved.
    pub fn partial_cmp_value(&self, other: &Numeric) -> Option<Ordering> {
        match (self.as_rational(), other.as_rational()) {
            (Some(a), Some(b)) => Some(a.cmp(&b)),
            _ => self.as_f64().partial_cmp(&other.as_f64()),
        }
    }

    /// Total order used for sorting: NaN sorts after every number.
    pub fn total_cmp(&self, other: &Numeric) -> Ordering {
        match (self.as_rational(), other.as_rational()) {
            (Some(a), Some(b)) => a.cmp(&b),
            _ => self.as_f64().total_cmp(&other.as_f64()),
        }
    }

    fn datatype(&self) -> &'static str {
        match self {
            Numeric::Integer(_) => xsd::INTEGER,
            Numeric::Decimal(_) => xsd::DECIMAL,
            Numeric::Double(_) => xsd::DOUBLE,
        }
    }

    fn lexical(&self) -> String {
        match self {
            Numeric::Integer(i) => i.to_string(),
            Numeric::Decimal(d) if d.is_integer() => format!("{}.0", d.to_integer()),
            Numeric::Decimal(d) => {
                // Exact decimals from arithmetic may not terminate; render 18 digits.
                let f = d.to_f64().unwrap_or(f64::NAN);
                let s = format!("{f:.18}");
                s.trim_end_matches('0').to_owned()
            }
            Numeric::Double(f) => format!("{f:E}"),
        }
    }
}

/// Parses the numeric value of a literal with a numeric datatype. Invalid
/// lexical forms yield `None`.
pub fn numeric_value(lit: &Literal) -> Option<Numeric> {
    let lex = lit.lexical().trim();
    match lit.datatype() {
        xsd::INTEGER => lex.parse::<BigInt>().ok().map(Numeric::Integer),
        xsd::DECIMAL => parse_decimal(lex).map(Numeric::Decimal),
        xsd::DOUBLE | xsd::FLOAT => parse_double(lex).map(Numeric::Double),
        _ => None,
    }
}

pub fn is_numeric_datatype(dt: &str) -> bool {
    matches!(dt, xsd::INTEGER | xsd::DECIMAL | xsd::DOUBLE | xsd::FLOAT)
}

fn parse_decimal(lex: &str) -> Option<BigRational> {
    let (neg, body) = match lex.as_bytes().first()? {
        b'-' => (true, &lex[1..]),
        b'+' => (false, &lex[1..]),
        _ => (false, lex),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("0{int}{frac}").parse().ok()?;
    let scale = BigInt::from(10u32).pow(frac.len() as u32);
    let value = BigRational::new(digits, scale);
    Some(if neg { -value } else { value })
}

fn parse_double(lex: &str) -> Option<f64> {
    match lex {
        "INF" | "+INF" => Some(f64::INFINITY),
        "-INF" => Some(f64::NEG_INFINITY),
        "NaN" => Some(f64::NAN),
        _ if lex.contains(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E') => None,
        _ => lex.parse().ok(),
    }
}

/// An evaluation-time value. `Error` is absorbing.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Term(Term),
    Num(Numeric),
    Bool(bool),
    /// A string literal: lexical form and optional language tag.
    Str(String, Option<String>),
    Error,
}

/// A term seen through its value space.
enum Kind<'a> {
    Num(Numeric),
    Bool(bool),
    Str(&'a str, Option<&'a str>),
    Iri(&'a str),
    Blank(&'a str),
    /// Literal of a datatype with no value semantics here, or an ill-typed one.
    Opaque,
    Error,
}

impl Value {
    fn kind(&self) -> Kind<'_> {
        match self {
            Value::Error => Kind::Error,
            Value::Num(n) => Kind::Num(n.clone()),
            Value::Bool(b) => Kind::Bool(*b),
            Value::Str(s, lang) => Kind::Str(s, lang.as_deref()),
            Value::Term(Term::Iri(i)) => Kind::Iri(i),
            Value::Term(Term::BlankNode(b)) => Kind::Blank(b),
            Value::Term(Term::Literal(lit)) => {
                if let Some(lang) = lit.language() {
                    return Kind::Str(lit.lexical(), Some(lang));
                }
                match lit.datatype() {
                    xsd::STRING => Kind::Str(lit.lexical(), None),
                    xsd::BOOLEAN => match lit.lexical() {
                        "true" | "1" => Kind::Bool(true),
                        "false" | "0" => Kind::Bool(false),
                        _ => Kind::Opaque,
                    },
                    dt if is_numeric_datatype(dt) => match numeric_value(lit) {
                        Some(n) => Kind::Num(n),
                        None => Kind::Opaque,
                    },
                    _ => Kind::Opaque,
                }
            }
        }
    }

    /// Effective boolean value; `None` is a type error.
    pub fn ebv(&self) -> Option<bool> {
        match self.kind() {
            Kind::Bool(b) => Some(b),
            Kind::Num(n) => Some(!n.is_zero() && !n.is_nan()),
            Kind::Str(s, None) => Some(!s.is_empty()),
            _ => None,
        }
    }
}

/// Evaluates an expression against one row. Never fails: errors are `Value::Error`.
pub fn eval_expression(e: &Expression, row: &Binding) -> Value {
    match e {
        Expression::Var(v) => row.get(v).cloned().map(Value::Term).unwrap_or(Value::Error),
        Expression::Term(t) => Value::Term(t.clone()),
        Expression::Or(a, b) => logical(a, b, row, |x, y| x || y),
        Expression::And(a, b) => logical(a, b, row, |x, y| x && y),
        Expression::Not(a) => match eval_expression(a, row).ebv() {
            Some(b) => Value::Bool(!b),
            None => Value::Error,
        },
        Expression::Compare(op, a, b) => compare(*op, &eval_expression(a, row), &eval_expression(b, row)),
        Expression::Arith(op, a, b) => arith(*op, &eval_expression(a, row), &eval_expression(b, row)),
        Expression::Call(f, args) => call(*f, args, row),
    }
}

/// True iff the expression's effective boolean value is `true`.
pub fn filter_passes(e: &Expression, row: &Binding) -> bool {
    eval_expression(e, row).ebv() == Some(true)
}

fn logical(a: &Expression, b: &Expression, row: &Binding, f: fn(bool, bool) -> bool) -> Value {
    match (eval_expression(a, row).ebv(), eval_expression(b, row).ebv()) {
        (Some(x), Some(y)) => Value::Bool(f(x, y)),
        _ => Value::Error,
    }
}

fn compare(op: CompareOp, a: &Value, b: &Value) -> Value {
    let ordering = match (a.kind(), b.kind()) {
        (Kind::Error, _) | (_, Kind::Error) => return Value::Error,
        (Kind::Num(x), Kind::Num(y)) => match x.partial_cmp_value(&y) {
            Some(o) => Some(o),
            // NaN is unequal to everything and unordered.
            None => return Value::Bool(op == CompareOp::Ne),
        },
        (Kind::Str(x, None), Kind::Str(y, None)) => Some(x.cmp(y)),
        (Kind::Bool(x), Kind::Bool(y)) => Some(x.cmp(&y)),
        (Kind::Str(x, Some(lx)), Kind::Str(y, Some(ly))) => {
            return equality_only(op, x == y && lx.eq_ignore_ascii_case(ly));
        }
        // Both literals of incomparable kinds: equal only when they are the same term.
        (ka, kb) if is_literal_kind(&ka) && is_literal_kind(&kb) => {
            return match (a, b) {
                (Value::Term(x), Value::Term(y)) if x == y => equality_only(op, true),
                _ => Value::Error,
            };
        }
        (Kind::Iri(x), Kind::Iri(y)) => return equality_only(op, x == y),
        (Kind::Blank(x), Kind::Blank(y)) => return equality_only(op, x == y),
        // Literal versus IRI/blank, or IRI versus blank: distinct terms.
        _ => return equality_only(op, false),
    };
    let Some(o) = ordering else { return Value::Error };
    Value::Bool(match op {
        CompareOp::Eq => o == Ordering::Equal,
        CompareOp::Ne => o != Ordering::Equal,
        CompareOp::Lt => o == Ordering::Less,
        CompareOp::Le => o != Ordering::Greater,
        CompareOp::Gt => o == Ordering::Greater,
        CompareOp::Ge => o != Ordering::Less,
    })
}

fn is_literal_kind(k: &Kind<'_>) -> bool {
    matches!(k, Kind::Num(_) | Kind::Bool(_) | Kind::Str(..) | Kind::Opaque)
}

fn equality_only(op: CompareOp, same: bool) -> Value {
    match op {
        CompareOp::Eq => Value::Bool(same),
        CompareOp::Ne => Value::Bool(!same),
        _ => Value::Error,
    }
}

fn arith(op: ArithOp, a: &Value, b: &Value) -> Value {
    let (Kind::Num(x), Kind::Num(y)) = (a.kind(), b.kind()) else {
        return Value::Error;
    };
    let rank = x.rank().max(y.rank());
    if rank == 2 {
        let (x, y) = (x.as_f64(), y.as_f64());
        return Value::Num(Numeric::Double(match op {
            ArithOp::Add => x + y,
            ArithOp::Sub => x - y,
            ArithOp::Mul => x * y,
            ArithOp::Div => x / y,
        }));
    }
    if let (ArithOp::Div, true) = (op, y.is_zero()) {
        return Value::Error;
    }
    if let (0, Numeric::Integer(x), Numeric::Integer(y), false) = (rank, &x, &y, op == ArithOp::Div) {
        return Value::Num(Numeric::Integer(match op {
            ArithOp::Add => x + y,
            ArithOp::Sub => x - y,
            _ => x * y,
        }));
    }
    let (x, y) = (x.as_rational().expect("exact"), y.as_rational().expect("exact"));
    Value::Num(Numeric::Decimal(match op {
        ArithOp::Add => x + y,
        ArithOp::Sub => x - y,
        ArithOp::Mul => x * y,
        ArithOp::Div => x / y,
    }))
}

fn call(f: Function, args: &[Expression], row: &Binding) -> Value {
    if f == Function::Bound {
        return match &args[0] {
            Expression::Var(v) => Value::Bool(row.contains(v)),
            _ => Value::Error,
        };
    }
    let vals: Vec<Value> = args.iter().map(|a| eval_expression(a, row)).collect();
    if vals.contains(&Value::Error) {
        return Value::Error;
    }
    match f {
        Function::Bound => unreachable!("handled above"),
        Function::IsIri => Value::Bool(matches!(vals[0].kind(), Kind::Iri(_))),
        Function::IsLiteral => Value::Bool(is_literal_kind(&vals[0].kind())),
        Function::Str => match vals[0].kind() {
            Kind::Iri(i) => Value::Str(i.to_owned(), None),
            Kind::Blank(_) | Kind::Error => Value::Error,
            _ => match &vals[0] {
                Value::Term(Term::Literal(lit)) => Value::Str(lit.lexical().to_owned(), None),
                Value::Str(s, _) => Value::Str(s.clone(), None),
                Value::Bool(b) => Value::Str(b.to_string(), None),
                Value::Num(n) => Value::Str(n.lexical(), None),
                _ => Value::Error,
            },
        },
        Function::Lang => match &vals[0] {
            Value::Term(Term::Literal(lit)) => Value::Str(lit.language().unwrap_or("").to_owned(), None),
            Value::Str(_, lang) => Value::Str(lang.clone().unwrap_or_default(), None),
            Value::Num(_) | Value::Bool(_) => Value::Str(String::new(), None),
            _ => Value::Error,
        },
        Function::Datatype => {
            let dt = match &vals[0] {
                Value::Term(Term::Literal(lit)) => lit.datatype().to_owned(),
                Value::Str(_, None) => xsd::STRING.to_owned(),
                Value::Str(_, Some(_)) => crate::rdf::vocab::rdf::LANG_STRING.to_owned(),
                Value::Num(n) => n.datatype().to_owned(),
                Value::Bool(_) => xsd::BOOLEAN.to_owned(),
                _ => return Value::Error,
            };
            Value::Term(Term::Iri(dt))
        }
        Function::Contains | Function::StrStarts => {
            let (Kind::Str(hay, hl), Kind::Str(needle, nl)) = (vals[0].kind(), vals[1].kind()) else {
                return Value::Error;
            };
            // Argument compatibility: the needle is simple or shares the haystack's tag.
            if nl.is_some() && nl != hl {
                return Value::Error;
            }
            Value::Bool(if f == Function::Contains {
                hay.contains(needle)
            } else {
                hay.starts_with(needle)
            })
        }
        Function::Regex => {
            let (Kind::Str(text, _), Kind::Str(pattern, None)) = (vals[0].kind(), vals[1].kind()) else {
                return Value::Error;
            };
            match compiled(pattern) {
                Some(re) => Value::Bool(re.is_match(text)),
                None => Value::Error,
            }
        }
    }
}

thread_local! {
    static REGEX_CACHE: RefCell<HashMap<String, Option<Regex>>> = RefCell::new(HashMap::new());
}

fn compiled(pattern: &str) -> Option<Regex> {
    REGEX_CACHE.with(|cache| {
        let mut cache = cache.borrow_mut();
        if cache.len() > 256 {
            cache.clear();
        }
        cache
            .entry(pattern.to_owned())
            .or_insert_with(|| Regex::new(pattern).ok())
            .clone()
    })
}
