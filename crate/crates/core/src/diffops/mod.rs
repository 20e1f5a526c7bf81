//! Local derivative operators evaluated as limits of difference quotients.
//!
//! Every operator is reduced to a quotient `q(ε)` whose limit at `ε → 0` is
//! the derivative. The quotient is sampled at `ε_j = h₀·2^{-j}` and pushed to
//! the limit with Richardson extrapolation ([`richardson`]).

pub mod closed_form;
pub mod fractal;
pub mod richardson;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::build::mul;
use crate::expr::{diff_classical, Bindings, DiffError, EvalError, Expr, ParseError, ParseOptions, RealFunction, Var};
use crate::kernels::{Kernel, KernelError};
use crate::specfun::{gamma, SpecFunError};

pub use closed_form::{closed_form, ClosedForm, Coefficient};
pub use fractal::{mass_function, staircase};

/// Largest allowed `|α + β - 1|` for the weighted family.
pub const ALPHA_BETA_SUM_TOL: f64 = 1e-12;
/// How many times the base step is halved when increments leave the domain.
pub const MAX_STEP_RETRIES: u32 = 8;
/// Multiple of `f64::EPSILON · max|q_j|` below which an error estimate is
/// not trusted.
const ROUNDOFF_FACTOR: f64 = 16.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error(transparent)]
    Special(#[from] SpecFunError),
    #[error("invalid operator: {0}")]
    InvalidSpec(String),
    #[error("invalid evaluation config: {0}")]
    InvalidConfig(String),
    #[error("increment map: {0}")]
    IncrementMap(ParseError),
    #[error("{0}")]
    Unsupported(String),
}

/// Which side the increment approaches from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Plus,
    Minus,
    /// Mean of the `+ε` and `-ε` quotients; falls back to `Plus` when a
    /// `-ε` increment leaves the domain.
    Symmetric,
}

/// Side of the Yang quotient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// The weight `H(ε, β)` of the weighted family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum HVariant {
    /// `1 + εβ`
    Linear,
    /// `1 + εβ^r`, `r > 0`
    Power { r: f64 },
    /// `E_{1,1}(εβ) = e^{εβ}`
    Exponential,
}

impl HVariant {
    pub fn eval(self, eps: f64, beta: f64) -> f64 {
        match self {
            HVariant::Linear => 1.0 + eps * beta,
            HVariant::Power { r } => 1.0 + eps * beta.powf(r),
            HVariant::Exponential => (eps * beta).exp(),
        }
    }

    /// `∂H/∂ε` at `ε = 0`; the coefficient of `f` in the closed form.
    pub fn rate(self, beta: f64) -> f64 {
        match self {
            HVariant::Linear | HVariant::Exponential => beta,
            HVariant::Power { r } => beta.powf(r),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            HVariant::Linear => "linear",
            HVariant::Power { .. } => "power",
            HVariant::Exponential => "exp",
        }
    }
}

type IncrementFn = Arc<dyn Fn(f64, f64) -> Result<f64, EvalError> + Send + Sync>;

/// The map `(t, ε) ↦ p(t, ε, α)` of the p-derivative, with `α` fixed.
/// Must satisfy `p(t, 0, α) = t`.
#[derive(Clone)]
pub struct IncrementMap {
    label: String,
    expr: Option<Expr>,
    func: IncrementFn,
}

impl fmt::Debug for IncrementMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IncrementMap").field("label", &self.label).finish()
    }
}

impl IncrementMap {
    /// Parse `p` as an expression in `t` and `h` (the increment), where
    /// `alpha` is substituted by its value.
    pub fn parse(text: &str, alpha: f64) -> Result<IncrementMap, OperatorError> {
        let e = Expr::parse_with(text, &ParseOptions::increment_map(alpha)).map_err(OperatorError::IncrementMap)?;
        Ok(IncrementMap::from_expr(e))
    }

    /// From an expression in `t` and `h`.
    pub fn from_expr(e: Expr) -> IncrementMap {
        let shared = e.clone();
        IncrementMap {
            label: e.to_string(),
            expr: Some(e),
            func: Arc::new(move |t, h| shared.eval_with(&Bindings::th(t, h))),
        }
    }

    pub fn custom(
        label: impl Into<String>,
        f: impl Fn(f64, f64) -> Result<f64, EvalError> + Send + Sync + 'static,
    ) -> IncrementMap {
        IncrementMap {
            label: label.into(),
            expr: None,
            func: Arc::new(f),
        }
    }

    pub fn eval(&self, t: f64, h: f64) -> Result<f64, EvalError> {
        (self.func)(t, h)
    }

    pub fn expr(&self) -> Option<&Expr> {
        self.expr.as_ref()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `p_h(t, 0, α)` as an expression in `t`, when `p` is symbolic.
    pub fn rate_expr(&self) -> Result<Option<Expr>, DiffError> {
        let Some(e) = &self.expr else { return Ok(None) };
        Ok(Some(e.diff(Var::H)?.substitute(Var::H, &Expr::Const(0.0)).simplified()))
    }
}

/// One operator family together with its parameters.
#[derive(Debug, Clone)]
pub enum OperatorSpec {
    /// `lim (f(t + εF(t,α)) - f(t)) / ε`
    AdditiveN { kernel: Kernel, alpha: f64 },
    /// `lim (f(t·e^{εt^{-α}}) - f(t)) / ε`
    Multiplicative { alpha: f64 },
    /// `lim_{x→t} (f(x) - f(t)) / (x^α - t^α)`
    PointQuotient { alpha: f64 },
    /// `Γ(1+α)·Δf / |x - t|^α`, one-sided.
    YangQuotient { alpha: f64, side: Side },
    /// `lim h^{-n} Σ_k (-1)^k C(n,k) f(t - k h T(t,α))`, `n = ⌈α⌉`.
    HigherOrderG { kernel: Kernel, alpha: f64 },
    /// `lim (f(p(t,ε,α)) - f(t)) / ε`
    GeneralP { p: IncrementMap, alpha: f64 },
    /// `lim (H(ε,β) f(t + εF(t,α)) - f(t)) / ε`, `α + β = 1`.
    WeightedDH {
        kernel: Kernel,
        alpha: f64,
        beta: f64,
        h: HVariant,
    },
}

fn in_unit(alpha: f64, closed: bool) -> bool {
    alpha > 0.0 && (alpha < 1.0 || (closed && alpha == 1.0))
}

impl OperatorSpec {
    pub fn additive(kernel: Kernel, alpha: f64) -> Result<Self, OperatorError> {
        OperatorSpec::AdditiveN { kernel, alpha }.validated()
    }

    pub fn multiplicative(alpha: f64) -> Result<Self, OperatorError> {
        OperatorSpec::Multiplicative { alpha }.validated()
    }

    pub fn point_quotient(alpha: f64) -> Result<Self, OperatorError> {
        OperatorSpec::PointQuotient { alpha }.validated()
    }

    pub fn yang(alpha: f64, side: Side) -> Result<Self, OperatorError> {
        OperatorSpec::YangQuotient { alpha, side }.validated()
    }

    pub fn higher_order(kernel: Kernel, alpha: f64) -> Result<Self, OperatorError> {
        OperatorSpec::HigherOrderG { kernel, alpha }.validated()
    }

    pub fn general_p(p: IncrementMap, alpha: f64) -> Result<Self, OperatorError> {
        OperatorSpec::GeneralP { p, alpha }.validated()
    }

    /// Weighted family; `α` is taken as `1 - β`.
    pub fn weighted(kernel: Kernel, beta: f64, h: HVariant) -> Result<Self, OperatorError> {
        OperatorSpec::WeightedDH {
            kernel,
            alpha: 1.0 - beta,
            beta,
            h,
        }
        .validated()
    }

    fn validated(self) -> Result<Self, OperatorError> {
        self.validate()?;
        Ok(self)
    }

    /// Check the parameter ranges of the variant.
    pub fn validate(&self) -> Result<(), OperatorError> {
        let bad = |msg: String| Err(OperatorError::InvalidSpec(msg));
        match self {
            OperatorSpec::AdditiveN { alpha, .. }
            | OperatorSpec::PointQuotient { alpha }
            | OperatorSpec::YangQuotient { alpha, .. } => {
                if !in_unit(*alpha, true) {
                    return bad(format!("{} needs alpha in (0, 1], got {alpha}", self.op_name()));
                }
            }
            OperatorSpec::Multiplicative { alpha } | OperatorSpec::GeneralP { alpha, .. } => {
                if !in_unit(*alpha, false) {
                    return bad(format!("{} needs alpha in (0, 1), got {alpha}", self.op_name()));
                }
            }
            OperatorSpec::HigherOrderG { alpha, .. } => {
                if !(*alpha > 0.0 && alpha.is_finite()) {
                    return bad(format!("g needs a finite alpha > 0, got {alpha}"));
                }
            }
            OperatorSpec::WeightedDH { alpha, beta, h, .. } => {
                if !((0.0..=1.0).contains(alpha) && (0.0..=1.0).contains(beta)) {
                    return bad(format!("dh needs alpha and beta in [0, 1], got {alpha} and {beta}"));
                }
                if (alpha + beta - 1.0).abs() > ALPHA_BETA_SUM_TOL {
                    return bad(format!("dh needs alpha + beta = 1, got {alpha} + {beta}"));
                }
                if let HVariant::Power { r } = h {
                    if !(*r > 0.0 && r.is_finite()) {
                        return bad(format!("dh:power needs r > 0, got {r}"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Command-line operator name.
    pub fn op_name(&self) -> &'static str {
        match self {
            OperatorSpec::AdditiveN { .. } => "n",
            OperatorSpec::Multiplicative { .. } => "mult",
            OperatorSpec::PointQuotient { .. } => "point-quotient",
            OperatorSpec::YangQuotient { .. } => "yang",
            OperatorSpec::HigherOrderG { .. } => "g",
            OperatorSpec::GeneralP { .. } => "p",
            OperatorSpec::WeightedDH { h, .. } => match h {
                HVariant::Linear => "dh:linear",
                HVariant::Power { .. } => "dh:power",
                HVariant::Exponential => "dh:exp",
            },
        }
    }

    pub fn alpha(&self) -> f64 {
        match self {
            OperatorSpec::AdditiveN { alpha, .. }
            | OperatorSpec::Multiplicative { alpha }
            | OperatorSpec::PointQuotient { alpha }
            | OperatorSpec::YangQuotient { alpha, .. }
            | OperatorSpec::HigherOrderG { alpha, .. }
            | OperatorSpec::GeneralP { alpha, .. }
            | OperatorSpec::WeightedDH { alpha, .. } => *alpha,
        }
    }

    pub fn kernel(&self) -> Option<&Kernel> {
        match self {
            OperatorSpec::AdditiveN { kernel, .. }
            | OperatorSpec::HigherOrderG { kernel, .. }
            | OperatorSpec::WeightedDH { kernel, .. } => Some(kernel),
            _ => None,
        }
    }

    /// `n = ⌈α⌉` for the higher-order operator, 1 otherwise.
    pub fn order(&self) -> u32 {
        match self {
            OperatorSpec::HigherOrderG { alpha, .. } => alpha.ceil() as u32,
            _ => 1,
        }
    }
}

impl fmt::Display for OperatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.op_name())?;
        if let Some(k) = self.kernel() {
            write!(f, "[{k}]")?;
        }
        write!(f, "(alpha={}", self.alpha())?;
        match self {
            OperatorSpec::YangQuotient { side, .. } => {
                write!(f, ", side={}", if *side == Side::Left { "left" } else { "right" })?
            }
            OperatorSpec::GeneralP { p, .. } => write!(f, ", p={}", p.label())?,
            OperatorSpec::WeightedDH { beta, h, .. } => {
                write!(f, ", beta={beta}")?;
                if let HVariant::Power { r } = h {
                    write!(f, ", r={r}")?;
                }
            }
            _ => {}
        }
        f.write_str(")")
    }
}

/// Loose operator description as given on a command line or in a suite
/// file; [`OperatorArgs::build`] checks it against the variant.
#[derive(Debug, Clone, Default)]
pub struct OperatorArgs {
    pub op: String,
    pub kernel: Option<Kernel>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub r: Option<f64>,
    pub side: Option<Side>,
    pub p: Option<String>,
}

impl OperatorArgs {
    pub fn build(&self) -> Result<OperatorSpec, OperatorError> {
        let need_alpha = || {
            self.alpha
                .ok_or_else(|| OperatorError::InvalidSpec(format!("operator `{}` needs alpha", self.op)))
        };
        let need_kernel = || {
            self.kernel
                .clone()
                .ok_or_else(|| OperatorError::InvalidSpec(format!("operator `{}` needs a kernel", self.op)))
        };
        let (op, variant) = match self.op.split_once(':') {
            Some((o, v)) => (o, Some(v)),
            None => (self.op.as_str(), None),
        };
        let spec = match (op, variant) {
            ("n", None) => OperatorSpec::additive(need_kernel()?, need_alpha()?)?,
            ("mult", None) => OperatorSpec::multiplicative(need_alpha()?)?,
            ("point-quotient", None) => OperatorSpec::point_quotient(need_alpha()?)?,
            ("yang", None) => OperatorSpec::yang(need_alpha()?, self.side.unwrap_or(Side::Right))?,
            ("g", None) => OperatorSpec::higher_order(need_kernel()?, need_alpha()?)?,
            ("p", None) => {
                let alpha = need_alpha()?;
                let text = self
                    .p
                    .as_deref()
                    .ok_or_else(|| OperatorError::InvalidSpec("operator `p` needs an increment map".into()))?;
                OperatorSpec::general_p(IncrementMap::parse(text, alpha)?, alpha)?
            }
            ("dh", Some(v)) => {
                let beta = self
                    .beta
                    .ok_or_else(|| OperatorError::InvalidSpec("operator `dh` needs beta".into()))?;
                let h = match v {
                    "linear" => HVariant::Linear,
                    "exp" => HVariant::Exponential,
                    "power" => HVariant::Power {
                        r: self
                            .r
                            .ok_or_else(|| OperatorError::InvalidSpec("dh:power needs r".into()))?,
                    },
                    other => {
                        return Err(OperatorError::InvalidSpec(format!(
                            "unknown dh variant `{other}` (expected linear, power or exp)"
                        )))
                    }
                };
                let spec = OperatorSpec::weighted(need_kernel()?, beta, h)?;
                if let Some(alpha) = self.alpha {
                    if (alpha + beta - 1.0).abs() > ALPHA_BETA_SUM_TOL {
                        return Err(OperatorError::InvalidSpec(format!(
                            "dh needs alpha + beta = 1, got {alpha} + {beta}"
                        )));
                    }
                }
                spec
            }
            _ => {
                return Err(OperatorError::InvalidSpec(format!(
                "unknown operator `{}` (expected n, mult, point-quotient, yang, g, p, dh:linear, dh:power or dh:exp)",
                self.op
            )))
            }
        };
        Ok(spec)
    }
}

/// Settings of the limit engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalConfig {
    /// `h₀`; `None` means `2^-10·max(1, |t|)`.
    pub base_step: Option<f64>,
    pub levels: usize,
    pub rel_tol: f64,
    pub direction: Direction,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            base_step: None,
            levels: 6,
            rel_tol: 1e-7,
            direction: Direction::Plus,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), OperatorError> {
        if let Some(h) = self.base_step {
            if !(h > 0.0 && h.is_finite()) {
                return Err(OperatorError::InvalidConfig(format!("base step must be > 0, got {h}")));
            }
        }
        if !(2..=12).contains(&self.levels) {
            return Err(OperatorError::InvalidConfig(format!(
                "levels must be in [2, 12], got {}",
                self.levels
            )));
        }
        if !(self.rel_tol > 0.0) {
            return Err(OperatorError::InvalidConfig(format!(
                "rel_tol must be > 0, got {}",
                self.rel_tol
            )));
        }
        Ok(())
    }

    pub fn default_step(t: f64) -> f64 {
        2f64.powi(-10) * t.abs().max(1.0)
    }
}

/// A limit value with its error estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivResult {
    pub value: f64,
    pub error_estimate: f64,
    pub converged: bool,
    /// `(ε, quotient)` pairs, or `(t, value)` pairs for [`eval_at_zero`].
    pub samples: Vec<(f64, f64)>,
}

/// Quantities fixed for one evaluation point.
enum Prepared<'a> {
    Additive { step: f64 },
    Multiplicative { rate: f64 },
    Point { t_alpha: f64, alpha: f64 },
    Yang { scale: f64, alpha: f64, side: Side },
    Binomial { step: f64, coeffs: Vec<f64> },
    General { p: &'a IncrementMap },
    Weighted { step: f64, beta: f64, h: HVariant },
}

impl<'a> Prepared<'a> {
    fn new(spec: &'a OperatorSpec, t: f64) -> Result<Self, OperatorError> {
        Ok(match spec {
            OperatorSpec::AdditiveN { kernel, alpha } => Prepared::Additive {
                step: kernel.eval(t, *alpha)?,
            },
            OperatorSpec::Multiplicative { alpha } => {
                positive_t(t)?;
                Prepared::Multiplicative { rate: t.powf(-alpha) }
            }
            OperatorSpec::PointQuotient { alpha } => {
                positive_t(t)?;
                Prepared::Point {
                    t_alpha: t.powf(*alpha),
                    alpha: *alpha,
                }
            }
            OperatorSpec::YangQuotient { alpha, side } => Prepared::Yang {
                scale: gamma(1.0 + alpha)?,
                alpha: *alpha,
                side: *side,
            },
            OperatorSpec::HigherOrderG { kernel, alpha } => {
                let n = spec.order();
                let mut coeffs = Vec::with_capacity(n as usize + 1);
                let mut c = 1.0;
                for k in 0..=n {
                    coeffs.push(if k % 2 == 0 { c } else { -c });
                    c = c * f64::from(n - k) / f64::from(k + 1);
                }
                Prepared::Binomial {
                    step: kernel.eval_any_order(t, *alpha)?,
                    coeffs,
                }
            }
            OperatorSpec::GeneralP { p, .. } => {
                let p0 = p.eval(t, 0.0)?;
                if (p0 - t).abs() > 1e-12 * t.abs().max(1.0) {
                    return Err(OperatorError::InvalidSpec(format!(
                        "increment map must satisfy p(t, 0) = t; p({t}, 0) = {p0}"
                    )));
                }
                Prepared::General { p }
            }
            OperatorSpec::WeightedDH { kernel, alpha, beta, h } => Prepared::Weighted {
                step: kernel.eval_any_order(t, *alpha)?,
                beta: *beta,
                h: *h,
            },
        })
    }

    /// Factor between `ε` and the argument increment, where one exists.
    fn increment_scale(&self) -> f64 {
        match self {
            Prepared::Additive { step } | Prepared::Binomial { step, .. } | Prepared::Weighted { step, .. } => *step,
            _ => 1.0,
        }
    }

    fn is_yang(&self) -> bool {
        matches!(self, Prepared::Yang { .. })
    }

    /// The quotient at signed increment `eps`; `ft = f(t)`.
    fn quotient<F: RealFunction + ?Sized>(&self, f: &F, t: f64, ft: f64, eps: f64) -> Result<f64, OperatorError> {
        let q = match self {
            Prepared::Additive { step } => (f.value(t + eps * step)? - ft) / eps,
            Prepared::Multiplicative { rate } => (f.value(t * (eps * rate).exp())? - ft) / eps,
            Prepared::Point { t_alpha, alpha } => {
                let x = t + eps;
                if !(x > 0.0) {
                    return Err(EvalError::Other {
                        t: x,
                        message: "point quotient needs x > 0".into(),
                    }
                    .into());
                }
                // x^α - t^α without cancellation
                let denom = t_alpha * (alpha * (eps / t).ln_1p()).exp_m1();
                (f.value(x)? - ft) / denom
            }
            Prepared::Yang { scale, alpha, side } => {
                let d = eps.abs();
                let delta = match side {
                    Side::Right => f.value(t + d)? - ft,
                    Side::Left => ft - f.value(t - d)?,
                };
                scale * delta / d.powf(*alpha)
            }
            Prepared::Binomial { step, coeffs } => {
                let n = coeffs.len() - 1;
                let mut sum = coeffs[0] * ft;
                for (k, c) in coeffs.iter().enumerate().skip(1) {
                    sum += c * f.value(t - k as f64 * eps * step)?;
                }
                sum / eps.powi(n as i32)
            }
            Prepared::General { p } => (f.value(p.eval(t, eps)?)? - ft) / eps,
            Prepared::Weighted { step, beta, h } => (h.eval(eps, *beta) * f.value(t + eps * step)? - ft) / eps,
        };
        if q.is_finite() {
            Ok(q)
        } else {
            Err(EvalError::Other {
                t,
                message: format!("non-finite difference quotient at increment {eps}"),
            }
            .into())
        }
    }
}

fn positive_t(t: f64) -> Result<(), OperatorError> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(OperatorError::Eval(EvalError::Other {
            t,
            message: "operator is defined for t > 0".into(),
        }))
    }
}

fn sample_quotients<F: RealFunction + ?Sized>(
    prep: &Prepared<'_>,
    f: &F,
    t: f64,
    ft: f64,
    h0: f64,
    levels: usize,
    direction: Direction,
) -> Result<Vec<(f64, f64)>, OperatorError> {
    let mut out = Vec::with_capacity(levels);
    for j in 0..levels {
        let eps = h0 * 2f64.powi(-(j as i32));
        let q = match direction {
            Direction::Plus => prep.quotient(f, t, ft, eps)?,
            Direction::Minus => prep.quotient(f, t, ft, -eps)?,
            Direction::Symmetric => 0.5 * (prep.quotient(f, t, ft, eps)? + prep.quotient(f, t, ft, -eps)?),
        };
        out.push((eps, q));
    }
    Ok(out)
}

/// Evaluate the operator at `t` as an extrapolated limit.
///
/// If an increment point falls outside the domain of `f` (or produces a
/// non-finite quotient) the base step is halved, up to
/// [`MAX_STEP_RETRIES`] times. Errors at `t` itself are returned directly.
pub fn eval_operator<F: RealFunction + ?Sized>(
    spec: &OperatorSpec,
    f: &F,
    t: f64,
    cfg: &EvalConfig,
) -> Result<DerivResult, OperatorError> {
    spec.validate()?;
    cfg.validate()?;
    let prep = Prepared::new(spec, t)?;
    let ft = f.value(t)?;

    let mut direction = if prep.is_yang() { Direction::Plus } else { cfg.direction };
    // A large kernel value would otherwise stretch the sampled increments
    // far past the default step.
    let mut h0 = cfg
        .base_step
        .unwrap_or_else(|| EvalConfig::default_step(t) / prep.increment_scale().max(1.0));
    let mut attempt = 0;
    let samples = loop {
        match sample_quotients(&prep, f, t, ft, h0, cfg.levels, direction) {
            Ok(s) => break s,
            Err(_) if direction == Direction::Symmetric => direction = Direction::Plus,
            Err(e) => {
                if attempt == MAX_STEP_RETRIES {
                    return Err(e);
                }
                attempt += 1;
                h0 *= 0.5;
            }
        }
    };

    let count = cfg.levels - 1;
    let exponents = match (&prep, direction) {
        (Prepared::Yang { alpha, .. }, _) => richardson::holder_exponents(count, *alpha),
        (_, Direction::Symmetric) => richardson::integer_exponents(count, true),
        _ => richardson::integer_exponents(count, false),
    };
    let q: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let ex = richardson::extrapolate(&q, 2.0, &exponents);
    // The tableau cannot resolve anything below the rounding level of its
    // largest entry; a smaller correction is cancellation, not accuracy.
    let floor = ROUNDOFF_FACTOR * f64::EPSILON * q.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let error_estimate = ex.error_estimate.max(floor);
    let converged = ex.value.is_finite() && error_estimate <= cfg.rel_tol * ex.value.abs().max(1.0);
    Ok(DerivResult {
        value: ex.value,
        error_estimate,
        converged,
        samples,
    })
}

/// Number of points `t_k = t₁·2^{-k}` used by [`eval_at_zero`].
pub const ZERO_LIMIT_LEVELS: usize = 16;
/// First point of the `t → 0⁺` sequence.
pub const ZERO_LIMIT_START: f64 = 0.5;
/// Required agreement of the last two accelerated values, relative to
/// `max(1, |value|)`.
pub const ZERO_LIMIT_TOL: f64 = 1e-6;

/// The value at `0` defined as `lim_{t→0⁺}` of the operator.
///
/// The operator is evaluated at `t_k = 0.5·2^{-k}` and the tail is
/// accelerated with Aitken's Δ². The result is flagged converged only when
/// every inner limit converged, the tail contracts geometrically and the last
/// two accelerated values agree. An inner failure after the first point ends
/// the sequence with `converged = false`.
pub fn eval_at_zero<F: RealFunction + ?Sized>(
    spec: &OperatorSpec,
    f: &F,
    cfg: &EvalConfig,
) -> Result<DerivResult, OperatorError> {
    let mut samples = Vec::with_capacity(ZERO_LIMIT_LEVELS);
    let mut all_converged = true;
    for k in 0..ZERO_LIMIT_LEVELS {
        let t = ZERO_LIMIT_START * 2f64.powi(-(k as i32));
        // Keep the increment εF small against t; F may be huge near 0.
        let scale = spec
            .kernel()
            .and_then(|k| k.eval_any_order(t, spec.alpha()).ok())
            .unwrap_or(1.0)
            .max(1.0);
        let inner = EvalConfig {
            base_step: Some(cfg.base_step.unwrap_or(f64::INFINITY).min(2f64.powi(-10) * t / scale)),
            ..*cfg
        };
        match eval_operator(spec, f, t, &inner) {
            Ok(r) => {
                all_converged &= r.converged;
                samples.push((t, r.value));
            }
            Err(e) if samples.is_empty() => return Err(e),
            Err(_) => {
                all_converged = false;
                break;
            }
        }
    }

    let v: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let last = *v.last().expect("at least one sample");
    let scale = last.abs().max(1.0);
    let n = v.len();
    if n < 4 {
        return Ok(DerivResult {
            value: last,
            error_estimate: f64::INFINITY,
            converged: false,
            samples,
        });
    }

    // Settled tail: nothing left to accelerate.
    let d1 = v[n - 1] - v[n - 2];
    let d2 = v[n - 2] - v[n - 3];
    let d3 = v[n - 3] - v[n - 4];
    if d1.abs().max(d2.abs()) <= cfg.rel_tol * scale {
        return Ok(DerivResult {
            value: last,
            error_estimate: d1.abs(),
            converged: all_converged,
            samples,
        });
    }

    let contracting = [d1 / d2, d2 / d3].iter().all(|r| r.is_finite() && r.abs() < 1.0);
    let aitken = |a: f64, b: f64, c: f64| {
        let denom = (c - b) - (b - a);
        if denom == 0.0 {
            c
        } else {
            c - (c - b) * (c - b) / denom
        }
    };
    let a1 = aitken(v[n - 3], v[n - 2], v[n - 1]);
    let a0 = aitken(v[n - 4], v[n - 3], v[n - 2]);
    let err = (a1 - a0).abs();
    let converged = all_converged && contracting && a1.is_finite() && err <= ZERO_LIMIT_TOL * a1.abs().max(1.0);
    Ok(DerivResult {
        value: a1,
        error_estimate: err,
        converged,
        samples,
    })
}

fn product(f: &Expr, g: &Expr) -> Expr {
    mul(f.clone(), g.clone())
}

/// `D(f·g) - D(f)·g - f·D(g)` at `t`.
pub fn leibniz_defect(spec: &OperatorSpec, f: &Expr, g: &Expr, t: f64, cfg: &EvalConfig) -> Result<f64, OperatorError> {
    let dfg = eval_operator(spec, &product(f, g), t, cfg)?.value;
    let df = eval_operator(spec, f, t, cfg)?.value;
    let dg = eval_operator(spec, g, t, cfg)?.value;
    Ok(dfg - df * g.eval(t)? - f.eval(t)? * dg)
}

/// `N(f∘g)(t) - f'(g(t))·N(g)(t)`. Only defined for the additive operator.
pub fn chain_rule_residual(
    spec: &OperatorSpec,
    f: &Expr,
    g: &Expr,
    t: f64,
    cfg: &EvalConfig,
) -> Result<f64, OperatorError> {
    if !matches!(spec, OperatorSpec::AdditiveN { .. }) {
        return Err(OperatorError::Unsupported(format!(
            "chain rule residual is defined for the additive operator only, got `{}`",
            spec.op_name()
        )));
    }
    let fg = f.compose(g);
    let lhs = eval_operator(spec, &fg, t, cfg)?.value;
    let dg = eval_operator(spec, g, t, cfg)?.value;
    let fprime = diff_classical(f)?;
    Ok(lhs - fprime.eval(g.eval(t)?)? * dg)
}
