//! Infix parser for the text form produced by `ExpressionTree`'s `Display`.
//!
//! Grammar (conventional precedence, `^` binds tightest and right-associative):
//!
//! ```text
//! expr   := term  { ('+' | '-') term }
//! term   := unary { ('*' | '/') unary }
//! unary  := '-' unary | power
//! power  := atom [ '^' unary ]
//! atom   := NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')'
//! ```

use std::collections::BTreeMap;

use thiserror::Error;

use super::{BinaryOp, ExpressionTree, Node, UnaryOp};

#[derive(Debug, Clone, Error, PartialEq)]
#[error("parse error at byte {pos}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
}

fn err(pos: usize, msg: impl Into<String>) -> ParseError {
    ParseError { pos, msg: msg.into() }
}

impl<'a> Lexer<'a> {
    fn run(src: &'a str) -> Result<Vec<(Tok, usize)>, ParseError> {
        let mut lx = Lexer { src, toks: Vec::new() };
        lx.scan()?;
        Ok(lx.toks)
    }

    fn scan(&mut self) -> Result<(), ParseError> {
        let bytes = self.src.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            match c {
                ' ' | '\t' | '\n' | '\r' => i += 1,
                '+' => {
                    self.toks.push((Tok::Plus, i));
                    i += 1;
                }
                '-' => {
                    self.toks.push((Tok::Minus, i));
                    i += 1;
                }
                '*' => {
                    self.toks.push((Tok::Star, i));
                    i += 1;
                }
                '/' => {
                    self.toks.push((Tok::Slash, i));
                    i += 1;
                }
                '^' => {
                    self.toks.push((Tok::Caret, i));
                    i += 1;
                }
                '(' => {
                    self.toks.push((Tok::LParen, i));
                    i += 1;
                }
                ')' => {
                    self.toks.push((Tok::RParen, i));
                    i += 1;
                }
                '0'..='9' | '.' => {
                    let start = i;
                    while i < bytes.len() && matches!(bytes[i] as char, '0'..='9' | '.') {
                        i += 1;
                    }
                    // Exponent part, e.g. 2.5e-3.
                    if i < bytes.len() && matches!(bytes[i] as char, 'e' | 'E') {
                        let mut j = i + 1;
                        if j < bytes.len() && matches!(bytes[j] as char, '+' | '-') {
                            j += 1;
                        }
                        if j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                            i = j;
                            while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                                i += 1;
                            }
                        }
                    }
                    let text = &self.src[start..i];
                    let v: f64 = text
                        .parse()
                        .map_err(|_| err(start, format!("bad number `{text}`")))?;
                    self.toks.push((Tok::Num(v), start));
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let start = i;
                    while i < bytes.len()
                        && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] as char == '_')
                    {
                        i += 1;
                    }
                    self.toks.push((Tok::Ident(self.src[start..i].to_string()), start));
                }
                other => return Err(err(i, format!("unexpected character `{other}`"))),
            }
        }
        Ok(())
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, p)| *p)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, desc: &str) -> Result<(), ParseError> {
        let at = self.here();
        match self.bump() {
            Some(t) if t == want => Ok(()),
            Some(t) => Err(err(at, format!("expected {desc}, found {t:?}"))),
            None => Err(err(at, format!("expected {desc}, found end of input"))),
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinaryOp::Add,
                Some(Tok::Minus) => BinaryOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => BinaryOp::Mul,
                Some(Tok::Slash) => BinaryOp::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if matches!(self.peek(), Some(Tok::Minus)) {
            self.bump();
            let inner = self.unary()?;
            // "-3.5" is a negative constant, not a negation node, so that
            // constants print and re-parse without structural drift.
            if let Node::Constant(v) = inner {
                return Ok(Node::Constant(-v));
            }
            return Ok(Node::Unary(UnaryOp::Neg, Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if matches!(self.peek(), Some(Tok::Caret)) {
            self.bump();
            let exp = self.unary()?;
            return Ok(Node::Binary(BinaryOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let at = self.here();
        match self.bump() {
            Some(Tok::Num(v)) => Ok(Node::Constant(v)),
            Some(Tok::Ident(name)) => {
                if matches!(self.peek(), Some(Tok::LParen)) {
                    self.bump();
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    let op = match name.as_str() {
                        "neg" => UnaryOp::Neg,
                        "square" => UnaryOp::Square,
                        "sqrt" => UnaryOp::Sqrt,
                        "abs" => UnaryOp::Abs,
                        other => return Err(err(at, format!("unknown function `{other}`"))),
                    };
                    Ok(Node::Unary(op, Box::new(arg)))
                } else {
                    Ok(Node::Variable(name))
                }
            }
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Some(t) => Err(err(at, format!("expected expression, found {t:?}"))),
            None => Err(err(at, "expected expression, found end of input")),
        }
    }
}

pub(super) fn parse(text: &str) -> Result<ExpressionTree, ParseError> {
    let toks = Lexer::run(text)?;
    let mut p = Parser { toks, pos: 0, end: text.len() };
    let root = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(err(p.here(), "trailing input after expression"));
    }
    Ok(ExpressionTree::new(root))
}

/// Parse several newline-separated expressions, ignoring blank lines.
#[allow(dead_code)]
pub(crate) fn parse_lines(text: &str) -> Result<Vec<ExpressionTree>, ParseError> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(parse)
        .collect()
}

/// Map each known symbol to its column index, for `ExpressionTree::compile`.
#[allow(dead_code)]
pub(crate) fn symbol_index(symbols: &[String]) -> BTreeMap<String, usize> {
    symbols
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i))
        .collect()
}
