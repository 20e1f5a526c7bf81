//! Closed forms of the operators on differentiable inputs, e.g.
//! `N_F^α f = F(t,α)·f'(t)`.
//!
//! A closed form is a sum of `coefficient(t) · factor(t)` terms where each
//! factor is a symbolic derivative of `f`. Coefficients built from kernels
//! without an expression form (Mittag-Leffler kernels, user closures) are
//! evaluated numerically, so [`ClosedForm::to_expr`] may be `None` even when
//! [`ClosedForm::eval`] works.

use std::fmt;

use crate::expr::build::{add, constant_value, mul, pow};
use crate::expr::{diff_classical, Expr};
use crate::kernels::Kernel;

use super::richardson::{extrapolate, integer_exponents};
use super::{EvalConfig, IncrementMap, OperatorError, OperatorSpec};

#[derive(Debug, Clone)]
pub enum Coefficient {
    Const(f64),
    Expr(Expr),
    /// `F(t, α)^power`
    Kernel {
        kernel: Kernel,
        alpha: f64,
        power: u32,
    },
    /// `p_h(t, 0, α)`, differentiated numerically.
    IncrementRate(IncrementMap),
}

impl Coefficient {
    pub fn eval(&self, t: f64) -> Result<f64, OperatorError> {
        Ok(match self {
            Coefficient::Const(c) => *c,
            Coefficient::Expr(e) => e.eval(t)?,
            Coefficient::Kernel { kernel, alpha, power } => kernel.eval_any_order(t, *alpha)?.powi(*power as i32),
            Coefficient::IncrementRate(p) => numeric_rate(p, t)?,
        })
    }

    fn to_expr(&self) -> Option<Expr> {
        match self {
            Coefficient::Const(c) => Some(Expr::Const(*c)),
            Coefficient::Expr(e) => Some(e.clone()),
            Coefficient::Kernel { kernel, alpha, power } => {
                let k = kernel.symbolic(*alpha)?;
                Some(if *power == 1 {
                    k
                } else {
                    pow(k, Expr::Const(f64::from(*power)))
                })
            }
            Coefficient::IncrementRate(_) => None,
        }
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Kernel { kernel, alpha, power } => {
                write!(f, "{kernel}(t, {alpha})")?;
                if *power != 1 {
                    write!(f, "^{power}")?;
                }
                Ok(())
            }
            Coefficient::IncrementRate(p) => write!(f, "d/dh[{}](h=0)", p.label()),
            other => write!(f, "({})", other.to_expr().expect("symbolic")),
        }
    }
}

/// `p_h(t, 0)` by one-sided differences and extrapolation.
fn numeric_rate(p: &IncrementMap, t: f64) -> Result<f64, OperatorError> {
    let h0 = EvalConfig::default_step(t);
    let p0 = p.eval(t, 0.0)?;
    let mut q = Vec::with_capacity(6);
    for j in 0..6 {
        let h = h0 * 2f64.powi(-j);
        q.push((p.eval(t, h)? - p0) / h);
    }
    Ok(extrapolate(&q, 2.0, &integer_exponents(5, false)).value)
}

#[derive(Debug, Clone)]
pub struct Term {
    pub coefficient: Coefficient,
    pub factor: Expr,
}

#[derive(Debug, Clone)]
pub struct ClosedForm {
    pub terms: Vec<Term>,
}

impl ClosedForm {
    fn new(terms: Vec<(Coefficient, Expr)>) -> Self {
        ClosedForm {
            terms: terms
                .into_iter()
                .filter(|(_, e)| constant_value(e) != Some(0.0))
                .map(|(coefficient, factor)| Term { coefficient, factor })
                .collect(),
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64, OperatorError> {
        let mut sum = 0.0;
        for term in &self.terms {
            sum += term.coefficient.eval(t)? * term.factor.eval(t)?;
        }
        Ok(sum)
    }

    /// The closed form as one expression in `t`, when every coefficient has
    /// a symbolic form.
    pub fn to_expr(&self) -> Option<Expr> {
        let mut acc = Expr::Const(0.0);
        for term in &self.terms {
            acc = add(acc, mul(term.coefficient.to_expr()?, term.factor.clone()));
        }
        Some(acc)
    }
}

impl fmt::Display for ClosedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(e) = self.to_expr() {
            return write!(f, "{e}");
        }
        for (i, term) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{} * ({})", term.coefficient, term.factor)?;
        }
        Ok(())
    }
}

fn nth_derivative(f: &Expr, n: u32) -> Result<Expr, OperatorError> {
    let mut d = f.clone();
    for _ in 0..n {
        d = diff_classical(&d)?;
    }
    Ok(d)
}

/// Closed form of `spec` applied to `f`, or `None` for the quotient
/// operators (point and Yang), which have none in general.
pub fn closed_form(spec: &OperatorSpec, f: &Expr) -> Result<Option<ClosedForm>, OperatorError> {
    spec.validate()?;
    let kernel_coef = |kernel: &Kernel, alpha: f64, power: u32| Coefficient::Kernel {
        kernel: kernel.clone(),
        alpha,
        power,
    };
    let form = match spec {
        OperatorSpec::AdditiveN { kernel, alpha } => {
            ClosedForm::new(vec![(kernel_coef(kernel, *alpha, 1), diff_classical(f)?)])
        }
        OperatorSpec::Multiplicative { alpha } => ClosedForm::new(vec![(
            kernel_coef(&Kernel::conformable(), *alpha, 1),
            diff_classical(f)?,
        )]),
        OperatorSpec::HigherOrderG { kernel, alpha } => {
            let n = spec.order();
            ClosedForm::new(vec![(kernel_coef(kernel, *alpha, n), nth_derivative(f, n)?)])
        }
        OperatorSpec::GeneralP { p, .. } => {
            let coefficient = match p.rate_expr()? {
                Some(rate) => Coefficient::Expr(rate),
                None => Coefficient::IncrementRate(p.clone()),
            };
            ClosedForm::new(vec![(coefficient, diff_classical(f)?)])
        }
        OperatorSpec::WeightedDH { kernel, alpha, beta, h } => ClosedForm::new(vec![
            (kernel_coef(kernel, *alpha, 1), diff_classical(f)?),
            (Coefficient::Const(h.rate(*beta)), f.clone()),
        ]),
        OperatorSpec::PointQuotient { .. } | OperatorSpec::YangQuotient { .. } => return Ok(None),
    };
    Ok(Some(form))
}
