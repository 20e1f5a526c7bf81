//! Real-valued expressions of one variable: parsing, evaluation, a
//! canonical printer and exact symbolic differentiation.
//!
//! The primary variable is `t`. Two auxiliary symbols exist for the places
//! that need them: `x` (the state in an ODE right-hand side) and `h` (the
//! increment in a user-supplied increment map). Plain [`Expr::parse`] only
//! accepts `t`.

mod diff;
mod parse;

use std::fmt;

use thiserror::Error;

pub use diff::{diff_classical, DiffError};
pub use parse::{ParseError, ParseOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    T,
    X,
    H,
}

impl Var {
    pub fn symbol(self) -> &'static str {
        match self {
            Var::T => "t",
            Var::X => "x",
            Var::H => "h",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Abs,
}

impl UnaryOp {
    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Tan => "tan",
            UnaryOp::Exp => "exp",
            UnaryOp::Ln => "ln",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Abs => "abs",
        }
    }

    pub(crate) fn from_function_name(name: &str) -> Option<UnaryOp> {
        Some(match name {
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "tan" => UnaryOp::Tan,
            "exp" => UnaryOp::Exp,
            "ln" => UnaryOp::Ln,
            "sqrt" => UnaryOp::Sqrt,
            "abs" => UnaryOp::Abs,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
        }
    }
}

/// Expression tree. Immutable once built; cloning is a deep copy.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

/// Values for the symbols an expression may reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bindings {
    pub t: f64,
    pub x: Option<f64>,
    pub h: Option<f64>,
}

impl Bindings {
    pub fn t(t: f64) -> Self {
        Bindings { t, x: None, h: None }
    }

    pub fn tx(t: f64, x: f64) -> Self {
        Bindings { t, x: Some(x), h: None }
    }

    pub fn th(t: f64, h: f64) -> Self {
        Bindings { t, x: None, h: Some(h) }
    }

    fn get(&self, var: Var) -> Option<f64> {
        match var {
            Var::T => Some(self.t),
            Var::X => self.x,
            Var::H => self.h,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainReason {
    LogOfNonPositive,
    SqrtOfNegative,
    DivisionByZero,
    ZeroToNegativePower,
    NegativeBaseFractionalPower,
    NonFinite,
}

impl fmt::Display for DomainReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DomainReason::LogOfNonPositive => "logarithm of a non-positive value",
            DomainReason::SqrtOfNegative => "square root of a negative value",
            DomainReason::DivisionByZero => "division by zero",
            DomainReason::ZeroToNegativePower => "zero raised to a negative power",
            DomainReason::NegativeBaseFractionalPower => "negative base raised to a non-integer power",
            DomainReason::NonFinite => "non-finite result",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error in `{node}`: {reason}")]
    Domain { node: String, reason: DomainReason },
    #[error("variable `{}` is not bound", .0.symbol())]
    Unbound(Var),
    /// Raised by non-expression functions (quadrature-backed, solver-backed).
    #[error("evaluation failed at t = {t}: {message}")]
    Other { t: f64, message: String },
}

/// Anything that can be evaluated as a real function of `t`.
///
/// The numeric operators work against this trait, so the same limit
/// machinery applies to parsed expressions, closures and quadrature-backed
/// functions alike.
pub trait RealFunction: Sync {
    fn value(&self, t: f64) -> Result<f64, EvalError>;
}

impl RealFunction for Expr {
    fn value(&self, t: f64) -> Result<f64, EvalError> {
        self.eval(t)
    }
}

impl<F> RealFunction for F
where
    F: Fn(f64) -> Result<f64, EvalError> + Sync,
{
    fn value(&self, t: f64) -> Result<f64, EvalError> {
        self(t)
    }
}

impl Expr {
    /// Parse an expression in the single variable `t`.
    pub fn parse(text: &str) -> Result<Expr, ParseError> {
        parse::parse_with(text, &ParseOptions::default())
    }

    pub fn parse_with(text: &str, options: &ParseOptions) -> Result<Expr, ParseError> {
        parse::parse_with(text, options)
    }

    pub fn t() -> Expr {
        Expr::Var(Var::T)
    }

    pub fn constant(value: f64) -> Expr {
        Expr::Const(value)
    }

    pub fn eval(&self, t: f64) -> Result<f64, EvalError> {
        self.eval_with(&Bindings::t(t))
    }

    pub fn eval_with(&self, env: &Bindings) -> Result<f64, EvalError> {
        let value = match self {
            Expr::Const(c) => *c,
            Expr::Var(v) => env.get(*v).ok_or(EvalError::Unbound(*v))?,
            Expr::Unary(op, child) => {
                let u = child.eval_with(env)?;
                match op {
                    UnaryOp::Neg => -u,
                    UnaryOp::Sin => u.sin(),
                    UnaryOp::Cos => u.cos(),
                    UnaryOp::Tan => u.tan(),
                    UnaryOp::Exp => u.exp(),
                    UnaryOp::Ln => {
                        if u <= 0.0 {
                            return Err(self.domain(DomainReason::LogOfNonPositive));
                        }
                        u.ln()
                    }
                    UnaryOp::Sqrt => {
                        if u < 0.0 {
                            return Err(self.domain(DomainReason::SqrtOfNegative));
                        }
                        u.sqrt()
                    }
                    UnaryOp::Abs => u.abs(),
                }
            }
            Expr::Binary(op, l, r) => {
                let a = l.eval_with(env)?;
                let b = r.eval_with(env)?;
                match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Div => {
                        if b == 0.0 {
                            return Err(self.domain(DomainReason::DivisionByZero));
                        }
                        a / b
                    }
                    BinaryOp::Pow => pow_checked(a, b).map_err(|reason| self.domain(reason))?,
                }
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(self.domain(DomainReason::NonFinite))
        }
    }

    fn domain(&self, reason: DomainReason) -> EvalError {
        EvalError::Domain {
            node: self.to_string(),
            reason,
        }
    }

    /// True when no variable occurs in the tree.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Const(_) => true,
            Expr::Var(_) => false,
            Expr::Unary(_, c) => c.is_constant(),
            Expr::Binary(_, l, r) => l.is_constant() && r.is_constant(),
        }
    }

    pub fn contains(&self, var: Var) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Unary(_, c) => c.contains(var),
            Expr::Binary(_, l, r) => l.contains(var) || r.contains(var),
        }
    }

    /// Replace every occurrence of `var` by `replacement` (composition when
    /// `var` is `t`).
    pub fn substitute(&self, var: Var, replacement: &Expr) -> Expr {
        match self {
            Expr::Var(v) if *v == var => replacement.clone(),
            Expr::Const(_) | Expr::Var(_) => self.clone(),
            Expr::Unary(op, c) => Expr::Unary(*op, Box::new(c.substitute(var, replacement))),
            Expr::Binary(op, l, r) => Expr::Binary(
                *op,
                Box::new(l.substitute(var, replacement)),
                Box::new(r.substitute(var, replacement)),
            ),
        }
    }

    /// Composition `self ∘ inner`.
    pub fn compose(&self, inner: &Expr) -> Expr {
        self.substitute(Var::T, inner)
    }

    /// Rebuild the tree through the simplifying constructors.
    pub fn simplified(&self) -> Expr {
        match self {
            Expr::Const(_) | Expr::Var(_) => self.clone(),
            Expr::Unary(op, c) => build::unary(*op, c.simplified()),
            Expr::Binary(op, l, r) => build::binary(*op, l.simplified(), r.simplified()),
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Unary(_, c) => 1 + c.size(),
            Expr::Binary(_, l, r) => 1 + l.size() + r.size(),
        }
    }
}

fn pow_checked(base: f64, exponent: f64) -> Result<f64, DomainReason> {
    if base == 0.0 && exponent < 0.0 {
        return Err(DomainReason::ZeroToNegativePower);
    }
    if base < 0.0 && exponent.fract() != 0.0 {
        return Err(DomainReason::NegativeBaseFractionalPower);
    }
    if exponent == exponent.trunc() && exponent.abs() <= i32::MAX as f64 {
        Ok(base.powi(exponent as i32))
    } else {
        Ok(base.powf(exponent))
    }
}

/// Simplifying constructors: constant folding plus the identities
/// `0·x = 0`, `1·x = x`, `x + 0 = x`, `x - 0 = x`, `x / 1 = x`, `x^1 = x`,
/// `x^0 = 1`, `-(-x) = x`.
pub mod build {
    use super::{pow_checked, BinaryOp, Expr, UnaryOp};

    fn fold(value: f64, fallback: impl FnOnce() -> Expr) -> Expr {
        if value.is_finite() {
            Expr::Const(value)
        } else {
            fallback()
        }
    }

    pub fn constant_value(e: &Expr) -> Option<f64> {
        match e {
            Expr::Const(c) => Some(*c),
            Expr::Unary(UnaryOp::Neg, c) => constant_value(c).map(|v| -v),
            _ => None,
        }
    }

    pub fn unary(op: UnaryOp, child: Expr) -> Expr {
        if let Expr::Const(c) = child {
            let v = match op {
                UnaryOp::Neg => Some(-c),
                UnaryOp::Sin => Some(c.sin()),
                UnaryOp::Cos => Some(c.cos()),
                UnaryOp::Tan => Some(c.tan()),
                UnaryOp::Exp => Some(c.exp()),
                UnaryOp::Ln if c > 0.0 => Some(c.ln()),
                UnaryOp::Sqrt if c >= 0.0 => Some(c.sqrt()),
                UnaryOp::Abs => Some(c.abs()),
                _ => None,
            };
            if let Some(v) = v.filter(|v| v.is_finite()) {
                return Expr::Const(v);
            }
            return Expr::Unary(op, Box::new(Expr::Const(c)));
        }
        if op == UnaryOp::Neg {
            if let Expr::Unary(UnaryOp::Neg, inner) = child {
                return *inner;
            }
        }
        Expr::Unary(op, Box::new(child))
    }

    pub fn neg(e: Expr) -> Expr {
        unary(UnaryOp::Neg, e)
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        binary(BinaryOp::Add, a, b)
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        binary(BinaryOp::Sub, a, b)
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        binary(BinaryOp::Mul, a, b)
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        binary(BinaryOp::Div, a, b)
    }

    pub fn pow(a: Expr, b: Expr) -> Expr {
        binary(BinaryOp::Pow, a, b)
    }

    pub fn binary(op: BinaryOp, a: Expr, b: Expr) -> Expr {
        let (ca, cb) = (constant_value(&a), constant_value(&b));
        if let (Some(x), Some(y)) = (ca, cb) {
            let folded = match op {
                BinaryOp::Add => Some(x + y),
                BinaryOp::Sub => Some(x - y),
                BinaryOp::Mul => Some(x * y),
                BinaryOp::Div if y != 0.0 => Some(x / y),
                BinaryOp::Pow => pow_checked(x, y).ok(),
                _ => None,
            };
            if let Some(v) = folded {
                return fold(v, || Expr::Binary(op, Box::new(a.clone()), Box::new(b.clone())));
            }
        }
        match op {
            BinaryOp::Add => {
                if ca == Some(0.0) {
                    return b;
                }
                if cb == Some(0.0) {
                    return a;
                }
            }
            BinaryOp::Sub => {
                if cb == Some(0.0) {
                    return a;
                }
                if ca == Some(0.0) {
                    return neg(b);
                }
            }
            BinaryOp::Mul => {
                if ca == Some(0.0) || cb == Some(0.0) {
                    return Expr::Const(0.0);
                }
                if ca == Some(1.0) {
                    return b;
                }
                if cb == Some(1.0) {
                    return a;
                }
                if ca == Some(-1.0) {
                    return neg(b);
                }
                if cb == Some(-1.0) {
                    return neg(a);
                }
            }
            BinaryOp::Div => {
                if cb == Some(1.0) {
                    return a;
                }
                if ca == Some(0.0) && cb != Some(0.0) {
                    return Expr::Const(0.0);
                }
            }
            BinaryOp::Pow => {
                if cb == Some(1.0) {
                    return a;
                }
                if cb == Some(0.0) {
                    return Expr::Const(1.0);
                }
            }
        }
        // Normalise a folded exponent so `t^-0.5` carries a plain constant.
        let b = match (op, cb) {
            (BinaryOp::Pow, Some(v)) => Expr::Const(v),
            _ => b,
        };
        Expr::Binary(op, Box::new(a), Box::new(b))
    }
}

// Printer precedence levels.
const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => PREC_NEG,
        Expr::Const(_) | Expr::Var(_) => PREC_ATOM,
        Expr::Unary(UnaryOp::Neg, _) => PREC_NEG,
        Expr::Unary(_, _) => PREC_ATOM,
        Expr::Binary(BinaryOp::Add | BinaryOp::Sub, _, _) => PREC_ADD,
        Expr::Binary(BinaryOp::Mul | BinaryOp::Div, _, _) => PREC_MUL,
        Expr::Binary(BinaryOp::Pow, _, _) => PREC_POW,
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

/// Canonical printer. The output re-parses to a tree that evaluates
/// identically; parentheses are only emitted where precedence needs them.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(v) => f.write_str(v.symbol()),
            Expr::Unary(UnaryOp::Neg, c) => {
                f.write_str("-")?;
                write_child(f, c, precedence(c) < PREC_NEG)
            }
            Expr::Unary(op, c) => write!(f, "{}({c})", op.name()),
            Expr::Binary(op, l, r) => {
                let p = precedence(self);
                let (lp, rp) = match op {
                    BinaryOp::Pow => (precedence(l) <= PREC_POW, precedence(r) < PREC_NEG),
                    _ => (precedence(l) < p, precedence(r) <= p),
                };
                write_child(f, l, lp)?;
                match op {
                    BinaryOp::Pow => f.write_str("^")?,
                    _ => write!(f, " {} ", op.symbol())?,
                }
                write_child(f, r, rp)
            }
        }
    }
}
