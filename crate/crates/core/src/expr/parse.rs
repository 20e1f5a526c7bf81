//! Recursive-descent parser.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | name | name '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` is right-associative because its exponent is parsed as `unary`.

use std::fmt;

use super::{Expr, UnaryOp, Var};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// Byte offset into the input; equals the input length at end of input.
    pub offset: usize,
    pub expected: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at offset {}: expected {}", self.offset, self.expected)
    }
}

impl std::error::Error for ParseError {}

/// Which symbols the parser accepts besides numbers and function names.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseOptions {
    pub vars: Vec<Var>,
    /// Named constants substituted at parse time.
    pub constants: Vec<(String, f64)>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            vars: vec![Var::T],
            constants: vec![("pi".into(), std::f64::consts::PI), ("e".into(), std::f64::consts::E)],
        }
    }
}

impl ParseOptions {
    /// `t` and the state symbol `x`.
    pub fn ode_rhs() -> Self {
        let mut o = ParseOptions::default();
        o.vars.push(Var::X);
        o
    }

    /// `t`, the increment `h` and the order `alpha` as a constant.
    pub fn increment_map(alpha: f64) -> Self {
        let mut o = ParseOptions::default();
        o.vars.push(Var::H);
        o.constants.push(("alpha".into(), alpha));
        o
    }

    fn describe_names(&self) -> String {
        let mut names: Vec<&str> = self.vars.iter().map(|v| v.symbol()).collect();
        names.extend(self.constants.iter().map(|(n, _)| n.as_str()));
        names.extend(["sin", "cos", "tan", "exp", "ln", "sqrt", "abs"]);
        names.join(", ")
    }
}

pub(super) fn parse_with(text: &str, options: &ParseOptions) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src: text,
        bytes: text.as_bytes(),
        pos: 0,
        options,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.bytes.len() {
        return Err(p.error("an operator or end of input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    options: &'a ParseOptions,
}

impl Parser<'_> {
    fn error(&self, expected: impl Into<String>) -> ParseError {
        ParseError {
            offset: self.pos,
            expected: expected.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => super::BinaryOp::Add,
                Some(b'-') => super::BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => super::BinaryOp::Mul,
                Some(b'/') => super::BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            let inner = self.unary()?;
            return Ok(Expr::Unary(UnaryOp::Neg, Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.eat(b'^') {
            let exponent = self.unary()?;
            return Ok(Expr::Binary(super::BinaryOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("')'"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.name(),
            _ => Err(self.error("a number, variable, function call or '('")),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let b = self.bytes;
        let mut i = self.pos;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i < b.len() && b[i] == b'.' {
            i += 1;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
        }
        if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
            let mut j = i + 1;
            if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                j += 1;
            }
            if j < b.len() && b[j].is_ascii_digit() {
                while j < b.len() && b[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        let text = &self.src[start..i];
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => {
                self.pos = i;
                Ok(Expr::Const(v))
            }
            _ => Err(self.error("a finite decimal number")),
        }
    }

    fn name(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let b = self.bytes;
        let mut i = self.pos;
        while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
            i += 1;
        }
        let name = &self.src[start..i];
        self.pos = i;

        if self.peek() == Some(b'(') {
            let Some(op) = UnaryOp::from_function_name(name) else {
                self.pos = start;
                return Err(self.error(format!(
                    "a known function (sin, cos, tan, exp, ln, sqrt, abs), found `{name}`"
                )));
            };
            self.pos += 1;
            let arg = self.expr()?;
            if !self.eat(b')') {
                return Err(self.error("')'"));
            }
            return Ok(Expr::Unary(op, Box::new(arg)));
        }

        if let Some(v) = self.options.vars.iter().find(|v| v.symbol() == name) {
            return Ok(Expr::Var(*v));
        }
        if let Some((_, value)) = self.options.constants.iter().find(|(n, _)| n == name) {
            return Ok(Expr::Const(*value));
        }
        self.pos = start;
        Err(self.error(format!(
            "one of {}, found unknown identifier `{name}`",
            self.options.describe_names()
        )))
    }
}
