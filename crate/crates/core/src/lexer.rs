//! Tokenizer shared by the sort, signature, type and equation-file front ends.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pos}: {message}")]
pub struct SyntaxError {
    pub pos: Pos,
    pub message: String,
}

impl SyntaxError {
    pub fn new(pos: Pos, message: impl Into<String>) -> Self {
        SyntaxError {
            pos,
            message: message.into(),
        }
    }
}

// Longest symbols first so that `->` wins over `-` and `:=` over `:`.
const SYMBOLS: &[&str] = &[
    "->", ":=", "{", "}", ";", ":", ",", "[", "]", "(", ")", "<", ">", "=", "@", "\\", "λ", ".",
];

pub fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() && c != 'λ' || c == '_' || c == '\''
}

pub fn tokenize(src: &str) -> Result<Vec<(Tok, Pos)>, SyntaxError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if is_ident_char(c) {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            col += i - start;
            out.push((Tok::Ident(chars[start..i].iter().collect()), pos));
            continue;
        }
        let sym = SYMBOLS.iter().find(|s| {
            let n = s.chars().count();
            i + n <= chars.len() && s.chars().zip(&chars[i..i + n]).all(|(a, &b)| a == b)
        });
        match sym {
            Some(s) => {
                let n = s.chars().count();
                i += n;
                col += n;
                out.push((Tok::Sym(s), pos));
            }
            None => return Err(SyntaxError::new(pos, format!("unexpected character `{c}`"))),
        }
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

/// Cursor over a token stream with the usual peek/expect helpers.
pub struct Cursor {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Cursor {
    pub fn new(src: &str) -> Result<Self, SyntaxError> {
        Ok(Cursor {
            toks: tokenize(src)?,
            at: 0,
        })
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    pub fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.at + n).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    pub fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    pub fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    pub fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    pub fn eat(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, s: &str) -> Result<(), SyntaxError> {
        if self.eat(s) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{s}`")))
        }
    }

    pub fn ident(&mut self) -> Result<String, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected("an identifier")),
        }
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub fn unexpected(&self, wanted: &str) -> SyntaxError {
        SyntaxError::new(self.pos(), format!("expected {wanted}, found {}", self.peek()))
    }

    pub fn expect_eof(&self) -> Result<(), SyntaxError> {
        if self.at_eof() {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arrows_and_comments() {
        let toks = tokenize("a->b # trailing\n:= λ").unwrap();
        let kinds: Vec<_> = toks.iter().map(|(t, _)| t.clone()).collect();
        assert_eq!(
            kinds,
            vec![
                Tok::Ident("a".into()),
                Tok::Sym("->"),
                Tok::Ident("b".into()),
                Tok::Sym(":="),
                Tok::Sym("λ"),
                Tok::Eof
            ]
        );
        assert_eq!(toks[3].1, Pos { line: 2, col: 1 });
    }

    #[test]
    fn bad_character_reports_position() {
        let err = tokenize("a\n  $").unwrap_err();
        assert_eq!(err.pos, Pos { line: 2, col: 3 });
    }
}
