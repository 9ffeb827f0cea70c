//! Tokenizer shared by the expression, model-file and query parsers.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    /// Unsigned integer or decimal literal, kept as text.
    Num(String),
    Sym(&'static str),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Num(s) => write!(f, "`{s}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Spanned {
    pub tok: Tok,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {column}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl SyntaxError {
    pub fn at(pos: Pos, message: impl Into<String>) -> Self {
        SyntaxError { line: pos.line, column: pos.column, message: message.into() }
    }
}

const SYMBOLS: &[&str] =
    &["<=", ">=", "==", "!=", "&&", "||", "..", "<", ">", "=", "+", "-", "*", "/", "(", ")", "[", "]", "{", "}", ",", "|", ";", "!", ":"];

/// Tokenize `text`, reporting positions relative to `start`.
pub fn tokenize(text: &str, start: Pos) -> Result<Vec<Spanned>, SyntaxError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = start.line;
    let mut column = start.column;
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, column };
        if c == '\n' {
            line += 1;
            column = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            column += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let begin = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[begin..i].iter().collect();
            column += i - begin;
            out.push(Spanned { tok: Tok::Ident(word), pos });
            continue;
        }
        if c.is_ascii_digit() {
            let begin = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            let num: String = chars[begin..i].iter().collect();
            column += i - begin;
            out.push(Spanned { tok: Tok::Num(num), pos });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(sym) => {
                i += sym.len();
                column += sym.len();
                out.push(Spanned { tok: Tok::Sym(sym), pos });
            }
            None => return Err(SyntaxError::at(pos, format!("unknown token `{c}`"))),
        }
    }
    Ok(out)
}

/// Cursor over a token stream with positioned errors.
pub struct Cursor<'a> {
    toks: &'a [Spanned],
    at: usize,
    end: Pos,
}

impl<'a> Cursor<'a> {
    pub fn new(toks: &'a [Spanned], end: Pos) -> Self {
        Cursor { toks, at: 0, end }
    }

    pub fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.at).map(|s| &s.tok)
    }

    pub fn peek_at(&self, k: usize) -> Option<&'a Tok> {
        self.toks.get(self.at + k).map(|s| &s.tok)
    }

    pub fn pos(&self) -> Pos {
        self.toks.get(self.at).map(|s| s.pos).unwrap_or(self.end)
    }

    pub fn done(&self) -> bool {
        self.at >= self.toks.len()
    }

    pub fn bump(&mut self) -> Option<&'a Tok> {
        let t = self.toks.get(self.at).map(|s| &s.tok);
        self.at += 1;
        t
    }

    pub fn is_sym(&self, sym: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(s)) if *s == sym)
    }

    pub fn is_ident(&self, word: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == word)
    }

    pub fn eat_sym(&mut self, sym: &str) -> bool {
        if self.is_sym(sym) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    pub fn expect_sym(&mut self, sym: &str) -> Result<(), SyntaxError> {
        if self.eat_sym(sym) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{sym}`")))
        }
    }

    pub fn expect_ident(&mut self) -> Result<String, SyntaxError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                self.at += 1;
                Ok(s.clone())
            }
            _ => Err(self.unexpected("a name")),
        }
    }

    pub fn unexpected(&self, wanted: &str) -> SyntaxError {
        match self.peek() {
            Some(t) => SyntaxError::at(self.pos(), format!("expected {wanted}, found {t}")),
            None => SyntaxError::at(self.pos(), format!("expected {wanted}, found end of input")),
        }
    }

    /// Optional `-`, then `int`, `decimal` or `int/int`.
    pub fn signed_number(&mut self) -> Result<crate::rational::Value, SyntaxError> {
        let pos = self.pos();
        let neg = self.eat_sym("-");
        let text = match self.peek() {
            Some(Tok::Num(n)) => {
                self.at += 1;
                n.clone()
            }
            _ => return Err(self.unexpected("a number")),
        };
        let mut text = text;
        if self.is_sym("/") {
            if let Some(Tok::Num(d)) = self.peek_at(1) {
                self.at += 2;
                text = format!("{text}/{d}");
            }
        }
        let v = crate::rational::parse_value(&text).ok_or_else(|| SyntaxError::at(pos, format!("invalid number `{text}`")))?;
        Ok(if neg { -v } else { v })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_and_positions() {
        let toks = tokenize("Y[T=-1] in {0, 1/2}", Pos { line: 1, column: 1 }).unwrap();
        assert_eq!(toks[0].tok, Tok::Ident("Y".into()));
        assert_eq!(toks[1].tok, Tok::Sym("["));
        assert_eq!(toks[4].tok, Tok::Sym("-"));
        assert_eq!(toks[4].pos.column, 5);
        assert!(toks.iter().any(|t| t.tok == Tok::Ident("in".into())));
    }

    #[test]
    fn ranges_are_not_decimals() {
        let toks = tokenize("1..10", Pos { line: 3, column: 7 }).unwrap();
        assert_eq!(toks[0].tok, Tok::Num("1".into()));
        assert_eq!(toks[1].tok, Tok::Sym(".."));
        assert_eq!(toks[2].tok, Tok::Num("10".into()));
        assert_eq!(toks[2].pos, Pos { line: 3, column: 10 });
    }

    #[test]
    fn unknown_character() {
        let err = tokenize("a $ b", Pos { line: 2, column: 1 }).unwrap_err();
        assert_eq!((err.line, err.column), (2, 3));
    }
}
