//! Reader for the plain-text system format.
//!
//! ```text
//! # comment
//! 2
//! x1 x2          # or `*` for x1..xn
//! x1^2*x2;
//! x1^2*(x2^2 + x1);
//! ```
//!
//! Precedence: `^` > `*` > binary `+`/`-`; unary minus applies to a power.
//! Products of sums are expanded at parse time.

use thiserror::Error;

use super::{Polynomial, PolynomialSystem};
use crate::numeric::C64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Header(String),
    Syntax(String),
    UnknownVariable(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}, column {column}: {}", describe(.kind))]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

fn describe(kind: &ParseErrorKind) -> String {
    match kind {
        ParseErrorKind::Header(m) => format!("bad header: {m}"),
        ParseErrorKind::Syntax(m) => format!("syntax error: {m}"),
        ParseErrorKind::UnknownVariable(v) => format!("unknown variable `{v}`"),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
    Semi,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(k) => &line[..k],
        None => line,
    }
}

fn is_ident_start(ch: char) -> bool {
    ch.is_ascii_alphabetic() || ch == '_'
}

fn is_ident_char(ch: char) -> bool {
    ch.is_ascii_alphanumeric() || ch == '_'
}

fn tokenize<'a>(lines: impl Iterator<Item = (usize, &'a str)>) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    for (line_no, raw) in lines {
        let line = strip_comment(raw);
        let chars: Vec<char> = line.chars().collect();
        let mut k = 0;
        while k < chars.len() {
            let ch = chars[k];
            let column = k + 1;
            let simple = match ch {
                '+' => Some(Tok::Plus),
                '-' => Some(Tok::Minus),
                '*' => Some(Tok::Star),
                '^' => Some(Tok::Caret),
                '(' => Some(Tok::LParen),
                ')' => Some(Tok::RParen),
                ';' => Some(Tok::Semi),
                _ => None,
            };
            if let Some(tok) = simple {
                out.push(Spanned {
                    tok,
                    line: line_no,
                    column,
                });
                k += 1;
            } else if ch.is_whitespace() {
                k += 1;
            } else if ch.is_ascii_digit() || ch == '.' {
                let start = k;
                while k < chars.len() && (chars[k].is_ascii_digit() || chars[k] == '.') {
                    k += 1;
                }
                // exponent only when digits follow, so `2e` stays a syntax error
                if k < chars.len() && (chars[k] == 'e' || chars[k] == 'E') {
                    let mut m = k + 1;
                    if m < chars.len() && (chars[m] == '+' || chars[m] == '-') {
                        m += 1;
                    }
                    if m < chars.len() && chars[m].is_ascii_digit() {
                        while m < chars.len() && chars[m].is_ascii_digit() {
                            m += 1;
                        }
                        k = m;
                    }
                }
                let text: String = chars[start..k].iter().collect();
                let value: f64 = text.parse().map_err(|_| ParseError {
                    line: line_no,
                    column,
                    kind: ParseErrorKind::Syntax(format!("malformed number `{text}`")),
                })?;
                out.push(Spanned {
                    tok: Tok::Num(value),
                    line: line_no,
                    column,
                });
            } else if is_ident_start(ch) {
                let start = k;
                while k < chars.len() && is_ident_char(chars[k]) {
                    k += 1;
                }
                out.push(Spanned {
                    tok: Tok::Ident(chars[start..k].iter().collect()),
                    line: line_no,
                    column,
                });
            } else {
                return Err(ParseError {
                    line: line_no,
                    column,
                    kind: ParseErrorKind::Syntax(format!("unexpected character `{ch}`")),
                });
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    names: &'a [String],
    end: (usize, usize),
}

impl Parser<'_> {
    fn n_vars(&self) -> usize {
        self.names.len()
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map_or(self.end, |s| (s.line, s.column))
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        let (line, column) = self.here();
        ParseError {
            line,
            column,
            kind: ParseErrorKind::Syntax(msg.into()),
        }
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|s| s.tok.clone());
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<Polynomial, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    acc = acc.add(&self.term()?);
                }
                Some(Tok::Minus) => {
                    self.bump();
                    acc = acc.add(&self.term()?.scale(C64::new(-1.0, 0.0)));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial, ParseError> {
        let mut acc = self.unary()?;
        while let Some(Tok::Star) = self.peek() {
            self.bump();
            acc = acc.mul(&self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Polynomial, ParseError> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.bump();
                Ok(self.unary()?.scale(C64::new(-1.0, 0.0)))
            }
            Some(Tok::Plus) => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Polynomial, ParseError> {
        let base = self.atom()?;
        if let Some(Tok::Caret) = self.peek() {
            self.bump();
            match self.bump() {
                Some(Tok::Num(v)) if v >= 0.0 && v.fract() == 0.0 && v <= f64::from(u16::MAX) => {
                    Ok(base.pow(v as u32))
                }
                _ => {
                    self.pos -= 1;
                    Err(self.err("exponent must be a nonnegative integer"))
                }
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Polynomial, ParseError> {
        let n = self.n_vars();
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.bump();
                Ok(Polynomial::constant(n, C64::new(v, 0.0)))
            }
            Some(Tok::Ident(name)) => {
                if let Some(j) = self.names.iter().position(|v| *v == name) {
                    self.bump();
                    Ok(Polynomial::variable(n, j))
                } else if name == "i" {
                    self.bump();
                    Ok(Polynomial::constant(n, C64::new(0.0, 1.0)))
                } else {
                    let (line, column) = self.here();
                    Err(ParseError {
                        line,
                        column,
                        kind: ParseErrorKind::UnknownVariable(name),
                    })
                }
            }
            Some(Tok::LParen) => {
                self.bump();
                let inner = self.expr()?;
                match self.bump() {
                    Some(Tok::RParen) => Ok(inner),
                    _ => {
                        self.pos -= 1;
                        Err(self.err("expected `)`"))
                    }
                }
            }
            Some(other) => Err(self.err(format!("unexpected token {other:?}"))),
            None => Err(self.err("unexpected end of input (missing `;`?)")),
        }
    }
}

fn parse_body<'a>(
    lines: impl Iterator<Item = (usize, &'a str)> + Clone,
    names: &[String],
) -> Result<Vec<Polynomial>, ParseError> {
    let end = lines
        .clone()
        .last()
        .map_or((1, 1), |(no, l)| (no, strip_comment(l).chars().count() + 1));
    let toks = tokenize(lines)?;
    let mut p = Parser {
        toks,
        pos: 0,
        names,
        end,
    };
    let mut polys = Vec::new();
    while p.peek().is_some() {
        let poly = p.expr()?;
        match p.bump() {
            Some(Tok::Semi) => polys.push(poly),
            Some(_) => {
                p.pos -= 1;
                return Err(p.err("expected operator or `;`"));
            }
            None => return Err(p.err("missing `;` after last polynomial")),
        }
    }
    Ok(polys)
}

/// Parses `;`-terminated polynomials in the given variables (no header).
pub fn parse_polynomials(text: &str, var_names: &[String]) -> Result<Vec<Polynomial>, ParseError> {
    parse_body(text.lines().enumerate().map(|(k, l)| (k + 1, l)), var_names)
}

fn header_error(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError {
        line,
        column: 1,
        kind: ParseErrorKind::Header(msg.into()),
    }
}

/// Parses a complete system file: variable count, variable names, then the
/// polynomials. The polynomial count is not checked against the variable
/// count here; solvers reject non-square systems.
pub fn parse_system(text: &str) -> Result<PolynomialSystem, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l))
        .filter(|(_, l)| !strip_comment(l).trim().is_empty());

    let (count_line, raw) = lines
        .next()
        .ok_or_else(|| header_error(1, "empty input, expected the number of variables"))?;
    let n: usize = strip_comment(raw)
        .trim()
        .parse()
        .map_err(|_| header_error(count_line, "first line must be the number of variables"))?;
    if n == 0 {
        return Err(header_error(count_line, "need at least one variable"));
    }

    let (names_line, raw) = lines
        .next()
        .ok_or_else(|| header_error(count_line + 1, "missing variable names line"))?;
    let field = strip_comment(raw).trim();
    let names: Vec<String> = if field == "*" {
        PolynomialSystem::default_names(n)
    } else {
        field.split_whitespace().map(str::to_string).collect()
    };
    if names.len() != n {
        return Err(header_error(
            names_line,
            format!("expected {n} variable names, found {}", names.len()),
        ));
    }
    for (k, name) in names.iter().enumerate() {
        let valid =
            name.chars().next().is_some_and(is_ident_start) && name.chars().all(is_ident_char);
        if !valid || name == "i" {
            return Err(header_error(
                names_line,
                format!("invalid variable name `{name}`"),
            ));
        }
        if names[..k].contains(name) {
            return Err(header_error(
                names_line,
                format!("duplicate variable `{name}`"),
            ));
        }
    }

    let body_start = names_line + 1;
    let body = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l))
        .filter(move |(no, _)| *no >= body_start);
    let polys = parse_body(body, &names)?;
    Ok(PolynomialSystem::new(names, polys))
}
