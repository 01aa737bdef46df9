use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Iri(String),
    PName { prefix: String, local: String },
    Var(String),
    Blank(String),
    Str(String),
    LangTag(String),
    Integer(String),
    Decimal(String),
    Double(String),
    Word(String),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

const PUNCTS: &[&str] = &[
    "&&", "||", "!=", "<=", ">=", "^^", "{", "}", "(", ")", "[", "]", ".", ";", ",", "*", "=", "<", ">", "+", "-", "/",
    "!", "^", "|", "?",
];

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    macro_rules! advance {
        ($n:expr) => {{
            for _ in 0..$n {
                if chars[i] == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                i += 1;
            }
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            advance!(1);
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                advance!(1);
            }
            continue;
        }
        let (tl, tc) = (line, col);
        let err = |message: &str| ParseError::Syntax {
            line: tl,
            col: tc,
            message: message.to_owned(),
        };

        if c == '<' {
            if let Some(len) = iri_ref_len(&chars[i..]) {
                let iri: String = chars[i + 1..i + len - 1].iter().collect();
                advance!(len);
                out.push(Token {
                    tok: Tok::Iri(iri),
                    line: tl,
                    col: tc,
                });
                continue;
            }
        }
        if (c == '?' || c == '$') && chars.get(i + 1).is_some_and(|n| is_name_char(*n)) {
            let start = i + 1;
            let mut end = start;
            while end < chars.len() && is_name_char(chars[end]) {
                end += 1;
            }
            let name: String = chars[start..end].iter().collect();
            advance!(end - i);
            out.push(Token {
                tok: Tok::Var(name),
                line: tl,
                col: tc,
            });
            continue;
        }
        if c == '_' && chars.get(i + 1) == Some(&':') {
            let start = i + 2;
            let mut end = start;
            while end < chars.len() && chars[end].is_ascii_alphanumeric() {
                end += 1;
            }
            if end == start {
                return Err(err("empty blank node label"));
            }
            let label: String = chars[start..end].iter().collect();
            advance!(end - i);
            out.push(Token {
                tok: Tok::Blank(label),
                line: tl,
                col: tc,
            });
            continue;
        }
        if c == '"' || c == '\'' {
            let (value, len) = string_lit(&chars[i..]).map_err(|m| err(&m))?;
            advance!(len);
            out.push(Token {
                tok: Tok::Str(value),
                line: tl,
                col: tc,
            });
            continue;
        }
        if c == '@' {
            let start = i + 1;
            let mut end = start;
            while end < chars.len() && (chars[end].is_ascii_alphanumeric() || chars[end] == '-') {
                end += 1;
            }
            if end == start {
                return Err(err("empty language tag"));
            }
            let tag: String = chars[start..end].iter().collect();
            advance!(end - i);
            out.push(Token {
                tok: Tok::LangTag(tag),
                line: tl,
                col: tc,
            });
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let (tok, len) = number(&chars[i..]);
            advance!(len);
            out.push(Token { tok, line: tl, col: tc });
            continue;
        }
        if c.is_alphabetic() || c == '_' || c == ':' {
            let mut end = i;
            while end < chars.len() && is_name_char(chars[end]) {
                end += 1;
            }
            let word: String = chars[i..end].iter().collect();
            if chars.get(end) == Some(&':') {
                let start = end + 1;
                let mut stop = start;
                while stop < chars.len() && (is_name_char(chars[stop]) || chars[stop] == '-' || chars[stop] == '.') {
                    stop += 1;
                }
                // A trailing '.' terminates the triple rather than belonging to the name.
                while stop > start && chars[stop - 1] == '.' {
                    stop -= 1;
                }
                let local: String = chars[start..stop].iter().collect();
                advance!(stop - i);
                out.push(Token {
                    tok: Tok::PName { prefix: word, local },
                    line: tl,
                    col: tc,
                });
                continue;
            }
            if word.is_empty() {
                return Err(err("unexpected ':'"));
            }
            advance!(end - i);
            out.push(Token {
                tok: Tok::Word(word),
                line: tl,
                col: tc,
            });
            continue;
        }
        if let Some(p) = PUNCTS.iter().find(|p| {
            let pc: Vec<char> = p.chars().collect();
            chars[i..].starts_with(&pc)
        }) {
            advance!(p.len());
            out.push(Token {
                tok: Tok::Punct(p),
                line: tl,
                col: tc,
            });
            continue;
        }
        return Err(err(&format!("unexpected character '{c}'")));
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Length of an IRIREF starting at `<`, if the text there is one.
fn iri_ref_len(chars: &[char]) -> Option<usize> {
    for (k, &c) in chars.iter().enumerate().skip(1) {
        match c {
            '>' => return Some(k + 1),
            c if c.is_whitespace() || matches!(c, '<' | '"' | '{' | '}' | '|' | '^' | '`' | '\\') => return None,
            _ => {}
        }
    }
    None
}

fn string_lit(chars: &[char]) -> Result<(String, usize), String> {
    let quote = chars[0];
    let mut out = String::new();
    let mut k = 1;
    while k < chars.len() {
        let c = chars[k];
        if c == quote {
            return Ok((out, k + 1));
        }
        if c == '\n' {
            return Err("newline in string literal".into());
        }
        if c == '\\' {
            let esc = *chars.get(k + 1).ok_or("unterminated escape")?;
            k += 2;
            let decoded = match esc {
                'n' => '\n',
                't' => '\t',
                'r' => '\r',
                'b' => '\u{8}',
                'f' => '\u{c}',
                '"' => '"',
                '\'' => '\'',
                '\\' => '\\',
                'u' | 'U' => {
                    let width = if esc == 'u' { 4 } else { 8 };
                    let digits: String = chars
                        .get(k..k + width)
                        .ok_or("truncated unicode escape")?
                        .iter()
                        .collect();
                    k += width;
                    u32::from_str_radix(&digits, 16)
                        .ok()
                        .and_then(char::from_u32)
                        .ok_or("invalid unicode escape")?
                }
                other => return Err(format!("invalid escape '\\{other}'")),
            };
            out.push(decoded);
            continue;
        }
        out.push(c);
        k += 1;
    }
    Err("unterminated string literal".into())
}

fn number(chars: &[char]) -> (Tok, usize) {
    let mut k = 0;
    while k < chars.len() && chars[k].is_ascii_digit() {
        k += 1;
    }
    let mut decimal = false;
    if k < chars.len() && chars[k] == '.' && chars.get(k + 1).is_some_and(|d| d.is_ascii_digit()) {
        decimal = true;
        k += 1;
        while k < chars.len() && chars[k].is_ascii_digit() {
            k += 1;
        }
    }
    if k < chars.len() && (chars[k] == 'e' || chars[k] == 'E') {
        let mut j = k + 1;
        if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
            j += 1;
        }
        if j < chars.len() && chars[j].is_ascii_digit() {
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            return (Tok::Double(chars[..j].iter().collect()), j);
        }
    }
    let text: String = chars[..k].iter().collect();
    if decimal {
        (Tok::Decimal(text), k)
    } else {
        (Tok::Integer(text), k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn less_than_versus_iri() {
        assert_eq!(
            toks("?x < 5"),
            vec![
                Tok::Var("x".into()),
                Tok::Punct("<"),
                Tok::Integer("5".into()),
                Tok::Eof
            ]
        );
        assert_eq!(toks("<http://a/b>"), vec![Tok::Iri("http://a/b".into()), Tok::Eof]);
    }

    #[test]
    fn prefixed_name_before_dot() {
        assert_eq!(
            toks("up:Gene ."),
            vec![
                Tok::PName {
                    prefix: "up".into(),
                    local: "Gene".into()
                },
                Tok::Punct("."),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn numbers() {
        assert_eq!(
            toks("1.5 2e3 7"),
            vec![
                Tok::Decimal("1.5".into()),
                Tok::Double("2e3".into()),
                Tok::Integer("7".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn positions_track_lines() {
        let t = tokenize("SELECT\n  ?x").unwrap();
        assert_eq!((t[1].line, t[1].col), (2, 3));
    }
}
