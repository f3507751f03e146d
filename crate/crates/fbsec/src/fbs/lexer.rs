use std::sync::Arc;

use super::{ParseDiagnostic, ParseErrorKind, SourceSpan};

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    /// Raw text of a numeric literal: `12`, `-3.5`, `1e-5`, `60s`, `0x00ff`.
    Number(String),
    Str(String),
    Punct(&'static str),
    Newline,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(s) => format!("number `{s}`"),
            Tok::Str(_) => "string literal".into(),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Newline => "end of line".into(),
        }
    }

    /// Source text of the token, as written (strings re-quoted).
    pub fn text(&self) -> String {
        match self {
            Tok::Ident(s) | Tok::Number(s) => s.clone(),
            Tok::Str(s) => super::print::quote(s),
            Tok::Punct(p) => (*p).into(),
            Tok::Newline => "\n".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

const PUNCT: [&str; 14] = ["->", "==", "!=", "{", "}", "(", ")", ",", ":", "=", ".", "@", "<", ">"];

pub fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

pub fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub fn tokenize(file: &Arc<str>, text: &str) -> Result<Vec<Token>, ParseDiagnostic> {
    let mut out = Vec::new();
    for (ln, line) in text.split('\n').enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        let chars: Vec<char> = line.chars().collect();
        let span = |col: usize, len: usize| SourceSpan::new(file.clone(), ln + 1, col + 1, len.max(1));
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c == '/' && chars.get(i + 1) == Some(&'/') {
                break;
            }
            let start = i;
            let tok = if is_ident_start(c) {
                while i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                }
                Tok::Ident(chars[start..i].iter().collect())
            } else if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(char::is_ascii_digit)) {
                i += 1;
                let hex = c == '0' && matches!(chars.get(i), Some('x' | 'X'));
                while i < chars.len() {
                    let d = chars[i];
                    let exp_sign = !hex && matches!(d, '-' | '+') && matches!(chars[i - 1], 'e' | 'E');
                    if is_ident_char(d) || d == '.' || exp_sign {
                        i += 1;
                    } else {
                        break;
                    }
                }
                Tok::Number(chars[start..i].iter().collect())
            } else if c == '"' {
                i += 1;
                let mut s = String::new();
                loop {
                    match chars.get(i) {
                        None => {
                            return Err(ParseDiagnostic::new(
                                ParseErrorKind::Lexical,
                                span(start, i - start),
                                "unterminated string literal",
                            ))
                        }
                        Some('"') => {
                            i += 1;
                            break;
                        }
                        Some('\\') => {
                            let esc = match chars.get(i + 1) {
                                Some('"') => '"',
                                Some('\\') => '\\',
                                Some('n') => '\n',
                                Some('t') => '\t',
                                _ => {
                                    return Err(ParseDiagnostic::new(
                                        ParseErrorKind::Lexical,
                                        span(i, 2),
                                        "unknown escape sequence",
                                    ))
                                }
                            };
                            s.push(esc);
                            i += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                Tok::Str(s)
            } else {
                let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
                match PUNCT.iter().find(|p| rest.starts_with(**p)) {
                    Some(p) => {
                        i += p.len();
                        Tok::Punct(p)
                    }
                    None => {
                        return Err(ParseDiagnostic::new(
                            ParseErrorKind::Lexical,
                            span(i, 1),
                            format!("unexpected character `{c}`"),
                        ))
                    }
                }
            };
            out.push(Token {
                tok,
                span: span(start, i - start),
            });
        }
        out.push(Token {
            tok: Tok::Newline,
            span: span(chars.len(), 1),
        });
    }
    Ok(out)
}
