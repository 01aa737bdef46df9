//! Line-oriented N-Triples reading and canonical writing.

use std::collections::HashMap;

use super::vocab::xsd;
use super::{Graph, RdfError, Term, Triple};

/// Parses an N-Triples document. Any syntax error aborts the whole parse.
pub fn parse_ntriples(text: &str) -> Result<Graph, RdfError> {
    let mut graph = Graph::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let mut cursor = Cursor::new(line, line_no);
        cursor.skip_ws();
        if cursor.at_end() || cursor.peek() == Some('#') {
            continue;
        }
        let triple = cursor.statement()?;
        graph.insert(triple);
    }
    Ok(graph)
}

/// Canonical N-Triples: lines sorted by the rendered (subject, predicate,
/// object) and blank nodes renumbered `_:b0`, `_:b1`, ... in order of first
/// appearance in the sorted stream.
pub fn serialize_ntriples(graph: &Graph) -> String {
    let mut rows: Vec<[String; 3]> = graph
        .iter()
        .map(|t| [t.subject.to_string(), t.predicate.to_string(), t.object.to_string()])
        .collect();
    rows.sort();
    let mut relabel: HashMap<String, String> = HashMap::new();
    let mut out = String::new();
    for row in rows {
        for (i, part) in row.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            if part.starts_with("_:") {
                let next = relabel.len();
                let label = relabel.entry(part.clone()).or_insert_with(|| format!("_:b{next}"));
                out.push_str(label);
            } else {
                out.push_str(part);
            }
        }
        out.push_str(" .\n");
    }
    out
}

struct Cursor {
    chars: Vec<char>,
    pos: usize,
    line: usize,
}

impl Cursor {
    fn new(src: &str, line: usize) -> Self {
        Cursor {
            chars: src.chars().collect(),
            pos: 0,
            line,
        }
    }

    fn err(&self, message: impl Into<String>) -> RdfError {
        RdfError::Syntax {
            line: self.line,
            message: format!("{} (column {})", message.into(), self.pos + 1),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        Some(c)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.chars.len()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(' ' | '\t' | '\r')) {
            self.pos += 1;
        }
    }

    fn expect(&mut self, c: char) -> Result<(), RdfError> {
        match self.bump() {
            Some(got) if got == c => Ok(()),
            Some(got) => Err(self.err(format!("expected '{c}', found '{got}'"))),
            None => Err(self.err(format!("expected '{c}', found end of line"))),
        }
    }

    fn statement(&mut self) -> Result<Triple, RdfError> {
        let subject = self.term()?;
        self.skip_ws();
        let predicate = self.term()?;
        self.skip_ws();
        let object = self.term()?;
        self.skip_ws();
        self.expect('.')?;
        self.skip_ws();
        if self.peek().is_some_and(|c| c != '#') {
            return Err(self.err("trailing content after '.'"));
        }
        Triple::new(subject, predicate, object).map_err(|e| self.err(e.to_string()))
    }

    fn term(&mut self) -> Result<Term, RdfError> {
        match self.peek() {
            Some('<') => {
                let iri = self.iri()?;
                Term::iri(iri).map_err(|e| self.err(e.to_string()))
            }
            Some('_') => {
                self.bump();
                self.expect(':')?;
                let start = self.pos;
                while self.peek().is_some_and(|c| c.is_ascii_alphanumeric()) {
                    self.pos += 1;
                }
                let label: String = self.chars[start..self.pos].iter().collect();
                Term::blank(label).map_err(|e| self.err(e.to_string()))
            }
            Some('"') => self.literal(),
            Some(c) => Err(self.err(format!("unexpected '{c}'"))),
            None => Err(self.err("unexpected end of line")),
        }
    }

    fn iri(&mut self) -> Result<String, RdfError> {
        self.expect('<')?;
        let mut out = String::new();
        loop {
            match self.bump() {
                Some('>') => return Ok(out),
                Some('\\') => out.push(self.unicode_escape()?),
                Some(c) => out.push(c),
                None => return Err(self.err("unterminated IRI")),
            }
        }
    }

    fn unicode_escape(&mut self) -> Result<char, RdfError> {
        let width = match self.bump() {
            Some('u') => 4,
            Some('U') => 8,
            _ => return Err(self.err("invalid escape in IRI")),
        };
        self.hex(width)
    }

    fn hex(&mut self, width: usize) -> Result<char, RdfError> {
        if self.pos + width > self.chars.len() {
            return Err(self.err("truncated unicode escape"));
        }
        let digits: String = self.chars[self.pos..self.pos + width].iter().collect();
        self.pos += width;
        u32::from_str_radix(&digits, 16)
            .ok()
            .and_then(char::from_u32)
            .ok_or_else(|| self.err(format!("invalid unicode escape '{digits}'")))
    }

    fn literal(&mut self) -> Result<Term, RdfError> {
        self.expect('"')?;
        let mut lexical = String::new();
        loop {
            match self.bump() {
                Some('"') => break,
                Some('\\') => {
                    let c = match self.bump() {
                        Some('n') => '\n',
                        Some('t') => '\t',
                        Some('r') => '\r',
                        Some('b') => '\u{8}',
                        Some('f') => '\u{c}',
                        Some('"') => '"',
                        Some('\'') => '\'',
                        Some('\\') => '\\',
                        Some('u') => self.hex(4)?,
                        Some('U') => self.hex(8)?,
                        _ => return Err(self.err("invalid string escape")),
                    };
                    lexical.push(c);
                }
                Some(c) => lexical.push(c),
                None => return Err(self.err("unterminated literal")),
            }
        }
        match self.peek() {
            Some('@') => {
                self.bump();
                let start = self.pos;
                while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '-') {
                    self.pos += 1;
                }
                let lang: String = self.chars[start..self.pos].iter().collect();
                Term::lang_string(lexical, lang).map_err(|e| self.err(e.to_string()))
            }
            Some('^') => {
                self.bump();
                self.expect('^')?;
                let dt = self.iri()?;
                Term::typed(lexical, dt).map_err(|e| self.err(e.to_string()))
            }
            _ => Ok(Term::typed(lexical, xsd::STRING).expect("xsd:string is valid")),
        }
    }
}


#[cfg(test)]
mod fixture_tests {
    use rand::SeedableRng;

    use super::*;
    use crate::rdf::isomorphic;

    #[test]
    fn fifty_triple_fixture_roundtrips() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let g = crate::testkit::ntriples_fixture(&mut rng, 50);
        let text = serialize_ntriples(&g);
        let back = parse_ntriples(&text).unwrap();
        assert_eq!(back.len(), 50);
        assert!(isomorphic(&g, &back));
        assert_eq!(text.lines().count(), 50);
    }
}
