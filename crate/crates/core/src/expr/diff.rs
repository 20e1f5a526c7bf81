//! Exact symbolic differentiation.
//!
//! Purely structural: the tree is rewritten rule by rule and only constant
//! subtrees are folded. Symbols other than the one being differentiated are
//! treated as constants (partial derivative).

use thiserror::Error;

use super::build::{self, add, constant_value, div, mul, neg, pow, sub};
use super::{BinaryOp, Expr, UnaryOp, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiffError {
    #[error("cannot differentiate `{0}`: exponent depends on the variable")]
    VariableExponent(String),
}

/// Classical derivative with respect to `t`.
pub fn diff_classical(e: &Expr) -> Result<Expr, DiffError> {
    e.diff(Var::T)
}

impl Expr {
    /// Partial derivative with respect to `var`.
    ///
    /// `|u|` differentiates to `u / |u| · u'`, which is a division-by-zero
    /// domain error wherever `u = 0`.
    pub fn diff(&self, var: Var) -> Result<Expr, DiffError> {
        Ok(self.diff_raw(var)?.simplified())
    }

    fn diff_raw(&self, var: Var) -> Result<Expr, DiffError> {
        Ok(match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(v) => Expr::Const(if *v == var { 1.0 } else { 0.0 }),
            Expr::Unary(op, u) => {
                let du = u.diff_raw(var)?;
                if constant_value(&du) == Some(0.0) {
                    return Ok(Expr::Const(0.0));
                }
                let u = (**u).clone();
                let outer = match op {
                    UnaryOp::Neg => return Ok(neg(du)),
                    UnaryOp::Sin => build::unary(UnaryOp::Cos, u),
                    UnaryOp::Cos => neg(build::unary(UnaryOp::Sin, u)),
                    UnaryOp::Tan => div(Expr::Const(1.0), pow(build::unary(UnaryOp::Cos, u), Expr::Const(2.0))),
                    UnaryOp::Exp => build::unary(UnaryOp::Exp, u),
                    UnaryOp::Ln => return Ok(div(du, u)),
                    UnaryOp::Sqrt => div(Expr::Const(1.0), mul(Expr::Const(2.0), build::unary(UnaryOp::Sqrt, u))),
                    UnaryOp::Abs => div(u.clone(), build::unary(UnaryOp::Abs, u)),
                };
                mul(outer, du)
            }
            Expr::Binary(op, l, r) => {
                let (a, b) = (&**l, &**r);
                match op {
                    BinaryOp::Add => add(a.diff_raw(var)?, b.diff_raw(var)?),
                    BinaryOp::Sub => sub(a.diff_raw(var)?, b.diff_raw(var)?),
                    BinaryOp::Mul => add(mul(a.diff_raw(var)?, b.clone()), mul(a.clone(), b.diff_raw(var)?)),
                    BinaryOp::Div => div(
                        sub(mul(a.diff_raw(var)?, b.clone()), mul(a.clone(), b.diff_raw(var)?)),
                        pow(b.clone(), Expr::Const(2.0)),
                    ),
                    BinaryOp::Pow => {
                        if b.contains(var) {
                            return Err(DiffError::VariableExponent(self.to_string()));
                        }
                        let da = a.diff_raw(var)?;
                        if constant_value(&da) == Some(0.0) {
                            return Ok(Expr::Const(0.0));
                        }
                        let exponent = b.simplified();
                        let lowered = pow(a.clone(), sub(exponent.clone(), Expr::Const(1.0)));
                        mul(mul(exponent, lowered), da)
                    }
                }
            }
        })
    }
}
