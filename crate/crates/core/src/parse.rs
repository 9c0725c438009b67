//! Text format for polynomial systems.
//!
//! ```text
//! # optional comment lines
//! vars: x, y, z;
//! (y - x^2)*(x^2 + y^2 + z^2 - 1)*(x - 0.5);
//! (2+1i)*x*y^2 - 3;
//! ```
//!
//! Products are expanded on parse. Multiplication is always explicit, `^`
//! takes a nonnegative integer literal, and `3i` / `2.5i` are imaginary
//! literals.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{ParseError, Result};
use crate::poly::{PolySystem, Polynomial};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Real(f64),
    Imag(f64),
    Int(u64),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
    Comma,
    Colon,
    Semi,
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn err<T>(line: usize, column: usize, message: impl Into<String>) -> std::result::Result<T, ParseError> {
    Err(ParseError { line, column, message: message.into() })
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn tokenize(text: &str) -> std::result::Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    for (line_idx, line) in text.lines().enumerate() {
        let line_no = line_idx + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let column = i + 1;
            if c == '#' {
                break;
            }
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            let simple = match c {
                '+' => Some(Tok::Plus),
                '-' => Some(Tok::Minus),
                '*' => Some(Tok::Star),
                '^' => Some(Tok::Caret),
                '(' => Some(Tok::LParen),
                ')' => Some(Tok::RParen),
                ',' => Some(Tok::Comma),
                ':' => Some(Tok::Colon),
                ';' => Some(Tok::Semi),
                _ => None,
            };
            if let Some(tok) = simple {
                out.push(Token { tok, line: line_no, column });
                i += 1;
                continue;
            }
            if is_ident_start(c) {
                let start = i;
                while i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                }
                let name: String = chars[start..i].iter().collect();
                out.push(Token { tok: Tok::Ident(name), line: line_no, column });
                continue;
            }
            if c.is_ascii_digit() || c == '.' {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let mut decimal = false;
                if i < chars.len() && chars[i] == '.' {
                    decimal = true;
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let lit: String = chars[start..i].iter().collect();
                if lit == "." {
                    return err(line_no, column, "malformed number");
                }
                let imaginary = i < chars.len()
                    && chars[i] == 'i'
                    && !(i + 1 < chars.len() && is_ident_char(chars[i + 1]));
                if i < chars.len() && is_ident_char(chars[i]) && !imaginary {
                    return err(line_no, i + 1, "implicit multiplication is not allowed; use '*'");
                }
                let value: f64 = lit
                    .parse()
                    .map_err(|_| ParseError { line: line_no, column, message: format!("bad number '{lit}'") })?;
                let tok = if imaginary {
                    i += 1;
                    Tok::Imag(value)
                } else if decimal {
                    Tok::Real(value)
                } else {
                    match lit.parse::<u64>() {
                        Ok(v) => Tok::Int(v),
                        Err(_) => Tok::Real(value),
                    }
                };
                out.push(Token { tok, line: line_no, column });
                continue;
            }
            return err(line_no, column, format!("unexpected character '{c}'"));
        }
    }
    let (line, column) = out.last().map_or((1, 1), |t| (t.line, t.column + 1));
    out.push(Token { tok: Tok::Eof, line, column });
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    vars: Vec<String>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> std::result::Result<Token, ParseError> {
        let t = self.next();
        if t.tok == want {
            Ok(t)
        } else {
            err(t.line, t.column, format!("expected {what}, found {}", describe(&t.tok)))
        }
    }

    fn header(&mut self) -> std::result::Result<(), ParseError> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) if s == "vars" => {}
            other => return err(t.line, t.column, format!("expected 'vars:' header, found {}", describe(other))),
        }
        self.expect(Tok::Colon, "':'")?;
        loop {
            let t = self.next();
            match t.tok {
                Tok::Ident(name) => {
                    if self.vars.contains(&name) {
                        return err(t.line, t.column, format!("variable '{name}' declared twice"));
                    }
                    self.vars.push(name);
                }
                other => return err(t.line, t.column, format!("expected variable name, found {}", describe(&other))),
            }
            let sep = self.next();
            match sep.tok {
                Tok::Comma => continue,
                Tok::Semi => break,
                other => return err(sep.line, sep.column, format!("expected ',' or ';', found {}", describe(&other))),
            }
        }
        Ok(())
    }

    fn expr(&mut self) -> std::result::Result<Polynomial, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek().tok {
                Tok::Plus => {
                    self.next();
                    acc = &acc + &self.term()?;
                }
                Tok::Minus => {
                    self.next();
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> std::result::Result<Polynomial, ParseError> {
        let mut acc = self.unary()?;
        while self.peek().tok == Tok::Star {
            self.next();
            acc = &acc * &self.unary()?;
        }
        Ok(acc)
    }

    fn unary(&mut self) -> std::result::Result<Polynomial, ParseError> {
        match self.peek().tok {
            Tok::Minus => {
                self.next();
                Ok(-&self.unary()?)
            }
            Tok::Plus => {
                self.next();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> std::result::Result<Polynomial, ParseError> {
        let base = self.atom()?;
        if self.peek().tok != Tok::Caret {
            return Ok(base);
        }
        self.next();
        let t = self.next();
        match t.tok {
            Tok::Int(e) => {
                let e = u32::try_from(e).map_err(|_| ParseError {
                    line: t.line,
                    column: t.column,
                    message: "exponent too large".into(),
                })?;
                Ok(base.pow(e))
            }
            Tok::Minus => err(t.line, t.column, "negative exponent"),
            other => err(t.line, t.column, format!("expected nonnegative integer exponent, found {}", describe(&other))),
        }
    }

    fn atom(&mut self) -> std::result::Result<Polynomial, ParseError> {
        let n = self.vars.len();
        let t = self.next();
        match t.tok {
            Tok::Int(v) => Ok(Polynomial::constant(n, Complex64::new(v as f64, 0.0))),
            Tok::Real(v) => Ok(Polynomial::constant(n, Complex64::new(v, 0.0))),
            Tok::Imag(v) => Ok(Polynomial::constant(n, Complex64::new(0.0, v))),
            Tok::Ident(name) => match self.vars.iter().position(|v| *v == name) {
                Some(i) => Ok(Polynomial::variable(n, i).expect("index from declaration list")),
                None => err(t.line, t.column, format!("undeclared variable '{name}'")),
            },
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            other => err(t.line, t.column, format!("expected operand, found {}", describe(&other))),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("'{s}'"),
        Tok::Real(v) => format!("number {v}"),
        Tok::Int(v) => format!("number {v}"),
        Tok::Imag(v) => format!("imaginary literal {v}i"),
        Tok::Plus => "'+'".into(),
        Tok::Minus => "'-'".into(),
        Tok::Star => "'*'".into(),
        Tok::Caret => "'^'".into(),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
        Tok::Comma => "','".into(),
        Tok::Colon => "':'".into(),
        Tok::Semi => "';'".into(),
        Tok::Eof => "end of input".into(),
    }
}

/// Parses a system; variables are ordered as declared.
pub fn parse_system(text: &str) -> Result<PolySystem> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, pos: 0, vars: Vec::new() };
    p.header()?;
    let mut polys = Vec::new();
    while p.peek().tok != Tok::Eof {
        let poly = p.expr()?;
        p.expect(Tok::Semi, "';'")?;
        polys.push(poly);
    }
    Ok(PolySystem::from_parts(p.vars, polys))
}

fn format_coeff(c: Complex64) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else if c.im < 0.0 {
        format!("({}-{}i)", c.re, -c.im)
    } else {
        format!("({}+{}i)", c.re, c.im)
    }
}

/// Writes a polynomial in the input grammar; parsing it back is exact.
pub fn format_polynomial(p: &Polynomial, names: &[String]) -> String {
    if p.is_zero() {
        return "0".into();
    }
    let mut out = String::new();
    for (k, m) in p.monomials().iter().enumerate() {
        if k > 0 {
            out.push_str(" + ");
        }
        out.push_str(&format_coeff(m.coeff));
        for (i, &e) in m.exponents.iter().enumerate() {
            match e {
                0 => {}
                1 => write!(out, "*{}", names[i]).unwrap(),
                _ => write!(out, "*{}^{}", names[i], e).unwrap(),
            }
        }
    }
    out
}

pub fn format_system(sys: &PolySystem) -> String {
    let mut out = format!("vars: {};\n", sys.names().join(", "));
    for p in sys.polys() {
        out.push_str(&format_polynomial(p, sys.names()));
        out.push_str(";\n");
    }
    out
}
