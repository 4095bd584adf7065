//! Tokenizer and expression parser shared by the element grammars.
//!
//! Grammar: `expr := ['+'|'-'] term (('+'|'-') term)*`,
//! `term := factor ('*' factor)*`, `factor := int ['/' int] | ident | '(' expr ')'`.

use num_bigint::BigInt;

use crate::error::{GtkvError, Result};
use crate::exactlin::Rational;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn err(line: usize, column: usize, message: impl Into<String>) -> GtkvError {
    GtkvError::Parse { line, column, message: message.into() }
}

fn tokenize(src: &str) -> Result<(Vec<Spanned>, (usize, usize))> {
    let mut out = Vec::new();
    let (mut line, mut column) = (1usize, 1usize);
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, column);
        if c == '\n' {
            line += 1;
            column = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            column += 1;
            i += 1;
            continue;
        }
        let single = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Spanned { tok, line: l0, column: c0 });
            column += 1;
            i += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            column += i - start;
            out.push(Spanned { tok: Tok::Int(s.parse().expect("digits")), line: l0, column: c0 });
            continue;
        }
        if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            column += i - start;
            out.push(Spanned { tok: Tok::Ident(s), line: l0, column: c0 });
            continue;
        }
        return Err(err(l0, c0, format!("unexpected character '{c}'")));
    }
    Ok((out, (line, column)))
}

/// A ring that the expression parser can build values in.
pub trait TextRing: Sized {
    fn scalar(&self, c: Rational) -> Self;
    /// Resolves an identifier, or returns a message explaining why it is invalid.
    fn symbol(&self, name: &str) -> std::result::Result<Self, String>;
    fn add(self, other: Self) -> Self;
    fn mul(self, other: Self) -> Self;
    fn negate(self) -> Self;
}

struct Parser<'a, R> {
    toks: &'a [Spanned],
    pos: usize,
    end: (usize, usize),
    proto: &'a R,
}

impl<'a, R: TextRing> Parser<'a, R> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks.get(self.pos).map_or(self.end, |s| (s.line, s.column))
    }

    fn expr(&mut self) -> Result<R> {
        let mut neg = false;
        match self.peek() {
            Some(Tok::Minus) => {
                neg = true;
                self.pos += 1;
            }
            Some(Tok::Plus) => self.pos += 1,
            _ => {}
        }
        let mut acc = self.term()?;
        if neg {
            acc = acc.negate();
        }
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    let t = self.term()?;
                    acc = acc.add(t);
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    let t = self.term()?;
                    acc = acc.add(t.negate());
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<R> {
        let mut acc = self.factor()?;
        while let Some(Tok::Star) = self.peek() {
            self.pos += 1;
            let f = self.factor()?;
            acc = acc.mul(f);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<R> {
        let (line, column) = self.here();
        let Some(tok) = self.peek().cloned() else {
            return Err(err(line, column, "unexpected end of input"));
        };
        self.pos += 1;
        match tok {
            Tok::Int(n) => {
                if let Some(Tok::Slash) = self.peek() {
                    self.pos += 1;
                    let (l2, c2) = self.here();
                    match self.peek().cloned() {
                        Some(Tok::Int(d)) => {
                            self.pos += 1;
                            if d == BigInt::from(0) {
                                return Err(err(l2, c2, "zero denominator"));
                            }
                            Ok(self.proto.scalar(Rational::new(n, d)))
                        }
                        _ => Err(err(l2, c2, "expected denominator")),
                    }
                } else {
                    Ok(self.proto.scalar(Rational::from_integer(n)))
                }
            }
            Tok::Ident(name) => self.proto.symbol(&name).map_err(|m| err(line, column, m)),
            Tok::LParen => {
                let e = self.expr()?;
                let (l2, c2) = self.here();
                match self.peek() {
                    Some(Tok::RParen) => {
                        self.pos += 1;
                        Ok(e)
                    }
                    _ => Err(err(l2, c2, "expected ')'")),
                }
            }
            other => Err(err(line, column, format!("unexpected token {other:?}"))),
        }
    }
}

/// Parses `src` into a value of the ring whose constants and symbols `proto` supplies.
pub fn parse_expr<R: TextRing>(proto: &R, src: &str) -> Result<R> {
    let (toks, end) = tokenize(src)?;
    let mut p = Parser { toks: &toks, pos: 0, end, proto };
    let e = p.expr()?;
    if p.pos != toks.len() {
        let (l, c) = p.here();
        return Err(err(l, c, "trailing input"));
    }
    Ok(e)
}

/// Formats a sum `c1*w1 + c2*w2 - ...` given already-rendered basis strings.
/// A basis string equal to `"1"` is the unit and prints as a bare coefficient.
pub fn format_sum<'a>(terms: impl Iterator<Item = (String, &'a Rational)>) -> String {
    use num_traits::{One, Signed};
    let mut s = String::new();
    for (i, (basis, c)) in terms.enumerate() {
        let neg = c.is_negative();
        let a = c.abs();
        if i == 0 {
            if neg {
                s.push('-');
            }
        } else {
            s.push_str(if neg { " - " } else { " + " });
        }
        if basis == "1" {
            s.push_str(&crate::exactlin::fmt_rational(&a));
        } else if a.is_one() {
            s.push_str(&basis);
        } else {
            s.push_str(&crate::exactlin::fmt_rational(&a));
            s.push('*');
            s.push_str(&basis);
        }
    }
    if s.is_empty() {
        s.push('0');
    }
    s
}
