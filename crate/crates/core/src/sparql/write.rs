//! Rendering queries back to SPARQL text with every IRI in full form.

use std::fmt::{self, Write};

use super::ast::*;

pub fn serialize_query(query: &Query) -> String {
    let mut out = String::new();
    write_query(&mut out, query).expect("writing to a String cannot fail");
    out
}

/// Renders a group pattern on its own, braces included.
pub fn serialize_group(group: &GroupPattern) -> String {
    let mut out = String::new();
    write_group(&mut out, group, 0).expect("writing to a String cannot fail");
    out
}

fn write_query(out: &mut String, q: &Query) -> fmt::Result {
    for (prefix, iri) in &q.prefixes {
        writeln!(out, "PREFIX {prefix}: <{iri}>")?;
    }
    match &q.form {
        QueryForm::Select { distinct, projection } => {
            out.push_str("SELECT ");
            if *distinct {
                out.push_str("DISTINCT ");
            }
            match projection {
                Projection::All => out.push('*'),
                Projection::Vars(vars) => {
                    let names: Vec<String> = vars.iter().map(|v| v.to_string()).collect();
                    out.push_str(&names.join(" "));
                }
            }
            out.push_str(" WHERE ");
        }
        QueryForm::Construct { template } => {
            out.push_str("CONSTRUCT {\n");
            for tp in template {
                out.push_str("  ");
                write_triple(out, tp)?;
                out.push('\n');
            }
            out.push_str("} WHERE ");
        }
        QueryForm::Ask => out.push_str("ASK "),
    }
    write_group(out, &q.pattern, 0)?;
    if !q.order.is_empty() {
        out.push_str("\nORDER BY");
        for key in &q.order {
            let dir = if key.ascending { "ASC" } else { "DESC" };
            write!(out, " {dir}({})", key.var)?;
        }
    }
    if let Some(limit) = q.limit {
        write!(out, "\nLIMIT {limit}")?;
    }
    if let Some(offset) = q.offset {
        write!(out, "\nOFFSET {offset}")?;
    }
    out.push('\n');
    Ok(())
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn write_group(out: &mut String, g: &GroupPattern, depth: usize) -> fmt::Result {
    out.push_str("{\n");
    for el in &g.elements {
        match el {
            Element::Triples(tps) => {
                for tp in tps {
                    indent(out, depth + 1);
                    write_triple(out, tp)?;
                    out.push('\n');
                }
            }
            Element::Filter(e) => {
                indent(out, depth + 1);
                out.push_str("FILTER(");
                write_expr(out, e)?;
                out.push_str(")\n");
            }
            Element::Optional(inner) => {
                indent(out, depth + 1);
                out.push_str("OPTIONAL ");
                write_group(out, inner, depth + 1)?;
                out.push('\n');
            }
            Element::Service(s) => {
                indent(out, depth + 1);
                out.push_str("SERVICE ");
                if s.silent {
                    out.push_str("SILENT ");
                }
                write!(out, "<{}> ", s.endpoint)?;
                write_group(out, &s.body, depth + 1)?;
                out.push('\n');
            }
            Element::Values(v) => {
                indent(out, depth + 1);
                write_values(out, v)?;
                out.push('\n');
            }
        }
    }
    indent(out, depth);
    out.push('}');
    Ok(())
}

fn write_values(out: &mut String, v: &ValuesTable) -> fmt::Result {
    out.push_str("VALUES (");
    let names: Vec<String> = v.vars.iter().map(|v| v.to_string()).collect();
    out.push_str(&names.join(" "));
    out.push_str(") {");
    for row in &v.rows {
        out.push_str(" (");
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            match cell {
                Some(t) => write!(out, "{t}")?,
                None => out.push_str("UNDEF"),
            }
        }
        out.push(')');
    }
    out.push_str(" }");
    Ok(())
}

fn write_triple(out: &mut String, tp: &TriplePattern) -> fmt::Result {
    write_pattern(out, &tp.subject)?;
    out.push(' ');
    write_pattern(out, &tp.predicate)?;
    out.push(' ');
    write_pattern(out, &tp.object)?;
    out.push_str(" .");
    Ok(())
}

fn write_pattern(out: &mut String, p: &TermPattern) -> fmt::Result {
    match p {
        TermPattern::Var(v) => write!(out, "{v}"),
        TermPattern::Term(t) => write!(out, "{t}"),
    }
}

fn write_expr(out: &mut String, e: &Expression) -> fmt::Result {
    match e {
        Expression::Or(a, b) => binary(out, a, "||", b),
        Expression::And(a, b) => binary(out, a, "&&", b),
        Expression::Compare(op, a, b) => binary(out, a, op.symbol(), b),
        Expression::Arith(op, a, b) => binary(out, a, op.symbol(), b),
        Expression::Not(a) => {
            out.push_str("!(");
            write_expr(out, a)?;
            out.push(')');
            Ok(())
        }
        Expression::Call(f, args) => {
            write!(out, "{}(", f.name())?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, a)?;
            }
            out.push(')');
            Ok(())
        }
        Expression::Term(t) => write!(out, "{t}"),
        Expression::Var(v) => write!(out, "{v}"),
    }
}

fn binary(out: &mut String, a: &Expression, op: &str, b: &Expression) -> fmt::Result {
    out.push('(');
    write_expr(out, a)?;
    write!(out, " {op} ")?;
    write_expr(out, b)?;
    out.push(')');
    Ok(())
}
