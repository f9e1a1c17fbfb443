//! Text grammar for formulas: parser and canonical printer.
//!
//! ```text
//! phi := LABEL "(" VAR ")" | VAR "sub" VAR | "child" INT "(" VAR "," VAR ")"
//!      | phi "&" phi | phi "|" phi | phi "->" phi | "!" phi | "(" phi ")"
//!      | "ex" VAR "." phi | "all" VAR "." phi | "U" VAR "." phi
//!      | "empty(" VAR ")" | "sing(" VAR ")" | "big(" VAR ")"
//! ```
//!
//! Precedence `! > & > | > ->`; quantifier bodies extend maximally to the
//! right. `or`, `->`, `all`, `empty`, `sing`, `big` are sugar and desugar
//! during parsing, so printing a parsed formula yields core syntax only.
//! Canonical printing is fully parenthesized.

use std::fmt;

use crate::error::{Error, Result};
use crate::formula::{Formula, Label, VarName};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LParen,
    RParen,
    Comma,
    Dot,
    Amp,
    Pipe,
    Arrow,
    Bang,
    Var(String),
    LabelIdent(String),
    ChildIdx(u32),
    KwEx,
    KwAll,
    KwU,
    KwSub,
    KwEmpty,
    KwSing,
    KwBig,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::LParen => write!(f, "'('"),
            Tok::RParen => write!(f, "')'"),
            Tok::Comma => write!(f, "','"),
            Tok::Dot => write!(f, "'.'"),
            Tok::Amp => write!(f, "'&'"),
            Tok::Pipe => write!(f, "'|'"),
            Tok::Arrow => write!(f, "'->'"),
            Tok::Bang => write!(f, "'!'"),
            Tok::Var(s) => write!(f, "variable '{s}'"),
            Tok::LabelIdent(s) => write!(f, "label '{s}'"),
            Tok::ChildIdx(i) => write!(f, "'child{i}'"),
            Tok::KwEx => write!(f, "'ex'"),
            Tok::KwAll => write!(f, "'all'"),
            Tok::KwU => write!(f, "'U'"),
            Tok::KwSub => write!(f, "'sub'"),
            Tok::KwEmpty => write!(f, "'empty'"),
            Tok::KwSing => write!(f, "'sing'"),
            Tok::KwBig => write!(f, "'big'"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

pub(crate) fn error_at(src: &str, offset: usize, message: impl Into<String>) -> Error {
    let mut line = 1;
    let mut col = 1;
    for (i, c) in src.char_indices() {
        if i >= offset {
            break;
        }
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    Error::Parse {
        line,
        col,
        offset,
        message: message.into(),
    }
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src,
            bytes: src.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn next_token(&mut self) -> Result<(Tok, usize)> {
        self.skip_ws();
        let start = self.pos;
        if self.pos >= self.bytes.len() {
            return Ok((Tok::Eof, start));
        }
        let b = self.bytes[self.pos];
        let simple = match b {
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            b'.' => Some(Tok::Dot),
            b'&' => Some(Tok::Amp),
            b'|' => Some(Tok::Pipe),
            b'!' => Some(Tok::Bang),
            _ => None,
        };
        if let Some(tok) = simple {
            self.pos += 1;
            return Ok((tok, start));
        }
        if b == b'-' {
            if self.pos + 1 < self.bytes.len() && self.bytes[self.pos + 1] == b'>' {
                self.pos += 2;
                return Ok((Tok::Arrow, start));
            }
            return Err(error_at(self.src, start, "expected '->'"));
        }
        if b.is_ascii_alphabetic() {
            let mut end = self.pos + 1;
            while end < self.bytes.len()
                && (self.bytes[end].is_ascii_alphanumeric()
                    || self.bytes[end] == b'_'
                    || self.bytes[end] == b'#')
            {
                end += 1;
            }
            let word = &self.src[self.pos..end];
            self.pos = end;
            return Ok((self.classify(word, start)?, start));
        }
        Err(error_at(
            self.src,
            start,
            format!("unexpected character '{}'", b as char),
        ))
    }

    fn classify(&self, word: &str, start: usize) -> Result<Tok> {
        let first = word.chars().next().unwrap();
        if first.is_ascii_uppercase() {
            if word == "U" {
                return Ok(Tok::KwU);
            }
            if word.contains('#') {
                return Err(error_at(
                    self.src,
                    start,
                    "'#' is not allowed in variable names",
                ));
            }
            return Ok(Tok::Var(word.to_string()));
        }
        match word {
            "ex" => return Ok(Tok::KwEx),
            "all" => return Ok(Tok::KwAll),
            "sub" => return Ok(Tok::KwSub),
            "empty" => return Ok(Tok::KwEmpty),
            "sing" => return Ok(Tok::KwSing),
            "big" => return Ok(Tok::KwBig),
            _ => {}
        }
        if let Some(rest) = word.strip_prefix("child") {
            if !rest.is_empty() && rest.bytes().all(|c| c.is_ascii_digit()) {
                let idx: u32 = rest.parse().map_err(|_| {
                    error_at(self.src, start, format!("child index '{rest}' is too large"))
                })?;
                if idx == 0 {
                    return Err(error_at(self.src, start, "child index must be >= 1"));
                }
                return Ok(Tok::ChildIdx(idx));
            }
            if rest.is_empty() {
                return Err(error_at(
                    self.src,
                    start,
                    "'child' must be followed by an index, e.g. child1(X,Y)",
                ));
            }
        }
        Ok(Tok::LabelIdent(word.to_string()))
    }
}

struct Parser<'a> {
    src: &'a str,
    lexer: Lexer<'a>,
    tok: Tok,
    tok_at: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self> {
        let mut lexer = Lexer::new(src);
        let (tok, tok_at) = lexer.next_token()?;
        Ok(Parser {
            src,
            lexer,
            tok,
            tok_at,
        })
    }

    fn advance(&mut self) -> Result<()> {
        let (tok, at) = self.lexer.next_token()?;
        self.tok = tok;
        self.tok_at = at;
        Ok(())
    }

    fn expect(&mut self, want: Tok) -> Result<()> {
        if self.tok == want {
            self.advance()
        } else {
            Err(error_at(
                self.src,
                self.tok_at,
                format!("expected {}, found {}", want, self.tok),
            ))
        }
    }

    fn expect_var(&mut self) -> Result<VarName> {
        if let Tok::Var(name) = self.tok.clone() {
            self.advance()?;
            Ok(VarName::new(name))
        } else {
            Err(error_at(
                self.src,
                self.tok_at,
                format!("expected a variable, found {}", self.tok),
            ))
        }
    }

    fn parse_implies(&mut self) -> Result<Formula> {
        let lhs = self.parse_or()?;
        if self.tok == Tok::Arrow {
            self.advance()?;
            let rhs = self.parse_implies()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn parse_or(&mut self) -> Result<Formula> {
        let mut acc = self.parse_and()?;
        while self.tok == Tok::Pipe {
            self.advance()?;
            let rhs = self.parse_and()?;
            acc = Formula::or(acc, rhs);
        }
        Ok(acc)
    }

    fn parse_and(&mut self) -> Result<Formula> {
        let mut acc = self.parse_unary()?;
        while self.tok == Tok::Amp {
            self.advance()?;
            let rhs = self.parse_unary()?;
            acc = Formula::and(acc, rhs);
        }
        Ok(acc)
    }

    fn parse_unary(&mut self) -> Result<Formula> {
        match self.tok.clone() {
            Tok::Bang => {
                self.advance()?;
                Ok(Formula::not(self.parse_unary()?))
            }
            Tok::KwEx | Tok::KwAll | Tok::KwU => {
                let kw = self.tok.clone();
                self.advance()?;
                let var = self.expect_var()?;
                self.expect(Tok::Dot)?;
                let body = self.parse_implies()?;
                Ok(match kw {
                    Tok::KwEx => Formula::exists(var, body),
                    Tok::KwAll => Formula::forall(var, body),
                    _ => Formula::unbound(var, body),
                })
            }
            _ => self.parse_atom(),
        }
    }

    fn parse_unary_sugar(&mut self, make: fn(VarName) -> Formula) -> Result<Formula> {
        self.advance()?;
        self.expect(Tok::LParen)?;
        let var = self.expect_var()?;
        self.expect(Tok::RParen)?;
        Ok(make(var))
    }

    fn parse_atom(&mut self) -> Result<Formula> {
        match self.tok.clone() {
            Tok::LParen => {
                self.advance()?;
                let inner = self.parse_implies()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::KwEmpty => self.parse_unary_sugar(Formula::empty),
            Tok::KwSing => self.parse_unary_sugar(Formula::sing),
            Tok::KwBig => self.parse_unary_sugar(Formula::big),
            Tok::ChildIdx(i) => {
                self.advance()?;
                self.expect(Tok::LParen)?;
                let x = self.expect_var()?;
                self.expect(Tok::Comma)?;
                let y = self.expect_var()?;
                self.expect(Tok::RParen)?;
                Ok(Formula::Child(i, x, y))
            }
            Tok::LabelIdent(name) => {
                self.advance()?;
                self.expect(Tok::LParen)?;
                let var = self.expect_var()?;
                self.expect(Tok::RParen)?;
                Ok(Formula::LabelAtom(Label::new(name), var))
            }
            Tok::Var(name) => {
                self.advance()?;
                self.expect(Tok::KwSub)?;
                let y = self.expect_var()?;
                Ok(Formula::Subset(VarName::new(name), y))
            }
            other => Err(error_at(
                self.src,
                self.tok_at,
                format!("expected a formula, found {other}"),
            )),
        }
    }
}

/// Parses a formula in the text grammar. Sugar keywords expand during
/// parsing, so the result is built from core constructors only.
pub fn parse_formula(src: &str) -> Result<Formula> {
    let mut parser = Parser::new(src)?;
    let formula = parser.parse_implies()?;
    if parser.tok != Tok::Eof {
        return Err(error_at(
            src,
            parser.tok_at,
            format!("unexpected {} after the formula", parser.tok),
        ));
    }
    Ok(formula)
}

impl std::str::FromStr for Formula {
    type Err = Error;

    fn from_str(s: &str) -> Result<Formula> {
        parse_formula(s)
    }
}

/// Canonical printing: atoms are bare, conjunction operands and negation
/// bodies are parenthesized, quantifier bodies extend to the end of the
/// enclosing group. `parse(print(f)) == f` structurally.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::LabelAtom(a, x) => write!(f, "{a}({x})"),
            Formula::Subset(x, y) => write!(f, "{x} sub {y}"),
            Formula::Child(i, x, y) => write!(f, "child{i}({x},{y})"),
            Formula::And(l, r) => write!(f, "(({l}) & ({r}))"),
            Formula::Not(inner) => write!(f, "!({inner})"),
            Formula::Exists(v, body) => write!(f, "ex {v}. {body}"),
            Formula::Unbound(v, body) => write!(f, "U {v}. {body}"),
        }
    }
}
