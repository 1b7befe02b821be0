//! Hand-rolled lexer with 1-based line/column tracking.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum TokKind {
    Ident(String),
    Int(i64),
    Str(String),
    Comma,
    Dot,
    Star,
    LParen,
    RParen,
    Semi,
    Minus,
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
    Eof,
}

impl TokKind {
    pub fn describe(&self) -> String {
        match self {
            TokKind::Ident(s) => format!("identifier `{s}`"),
            TokKind::Int(v) => format!("integer `{v}`"),
            TokKind::Str(s) => format!("string '{s}'"),
            TokKind::Comma => "`,`".into(),
            TokKind::Dot => "`.`".into(),
            TokKind::Star => "`*`".into(),
            TokKind::LParen => "`(`".into(),
            TokKind::RParen => "`)`".into(),
            TokKind::Semi => "`;`".into(),
            TokKind::Minus => "`-`".into(),
            TokKind::Lt => "`<`".into(),
            TokKind::Le => "`<=`".into(),
            TokKind::Eq => "`=`".into(),
            TokKind::Ge => "`>=`".into(),
            TokKind::Gt => "`>`".into(),
            TokKind::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub kind: TokKind,
    pub line: usize,
    pub col: usize,
}

impl Token {
    /// Case-insensitive keyword test.
    pub fn is_kw(&self, kw: &str) -> bool {
        matches!(&self.kind, TokKind::Ident(s) if s.eq_ignore_ascii_case(kw))
    }
}

pub fn lex(input: &str) -> Result<Vec<Token>> {
    let mut toks = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = input.chars().peekable();
    macro_rules! err {
        ($l:expr, $c:expr, $($m:tt)*) => {
            return Err(Error::Syntax { line: $l, column: $c, message: format!($($m)*) })
        };
    }
    while let Some(&c) = chars.peek() {
        let (tl, tc) = (line, col);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars<'_>>| {
            let c = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        if c.is_whitespace() {
            bump(&mut chars);
            continue;
        }
        let kind = match c {
            ',' => {
                bump(&mut chars);
                TokKind::Comma
            }
            '.' => {
                bump(&mut chars);
                TokKind::Dot
            }
            '*' => {
                bump(&mut chars);
                TokKind::Star
            }
            '(' => {
                bump(&mut chars);
                TokKind::LParen
            }
            ')' => {
                bump(&mut chars);
                TokKind::RParen
            }
            ';' => {
                bump(&mut chars);
                TokKind::Semi
            }
            '-' => {
                bump(&mut chars);
                TokKind::Minus
            }
            '=' => {
                bump(&mut chars);
                TokKind::Eq
            }
            '<' => {
                bump(&mut chars);
                if chars.peek() == Some(&'=') {
                    bump(&mut chars);
                    TokKind::Le
                } else {
                    TokKind::Lt
                }
            }
            '>' => {
                bump(&mut chars);
                if chars.peek() == Some(&'=') {
                    bump(&mut chars);
                    TokKind::Ge
                } else {
                    TokKind::Gt
                }
            }
            '\'' => {
                bump(&mut chars);
                let mut s = String::new();
                loop {
                    match chars.peek() {
                        Some('\'') => {
                            bump(&mut chars);
                            // Doubled quote escapes a quote.
                            if chars.peek() == Some(&'\'') {
                                bump(&mut chars);
                                s.push('\'');
                            } else {
                                break;
                            }
                        }
                        Some(_) => s.push(bump(&mut chars)),
                        None => err!(tl, tc, "unterminated string literal"),
                    }
                }
                TokKind::Str(s)
            }
            _ if c.is_ascii_digit() => {
                let mut s = String::new();
                while matches!(chars.peek(), Some(d) if d.is_ascii_digit()) {
                    s.push(bump(&mut chars));
                }
                match s.parse::<i64>() {
                    Ok(v) => TokKind::Int(v),
                    Err(_) => err!(tl, tc, "integer literal out of range: {s}"),
                }
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while matches!(chars.peek(), Some(d) if d.is_ascii_alphanumeric() || *d == '_') {
                    s.push(bump(&mut chars));
                }
                TokKind::Ident(s)
            }
            _ => err!(tl, tc, "unexpected character `{c}`"),
        };
        toks.push(Token {
            kind,
            line: tl,
            col: tc,
        });
    }
    toks.push(Token {
        kind: TokKind::Eof,
        line,
        col,
    });
    Ok(toks)
}
