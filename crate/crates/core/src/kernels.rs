//! Kernel functions `F(t, α)` that scale the increment of the generalized
//! N-derivative, and a registry of named kernels.
//!
//! Every kernel lives on `t > 0`; evaluating at `t <= 0` is an error, never
//! a NaN. Values are checked to be finite and strictly positive.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::expr::build::{add, div, pow, unary};
use crate::expr::{Expr, UnaryOp};
use crate::specfun::{self, SpecFunError};

/// Largest exponent accepted by the `e^{t^{-α}}` kernel.
pub const EXP_KERNEL_MAX_EXPONENT: f64 = 700.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("kernel `{kernel}` is defined for t > 0, got t = {t}")]
    Domain { kernel: String, t: f64 },
    #[error("kernel `{kernel}`: order alpha = {alpha} is not admissible")]
    InvalidOrder { kernel: String, alpha: f64 },
    #[error("kernel `{kernel}` overflows at t = {t}, alpha = {alpha}")]
    Overflow { kernel: String, t: f64, alpha: f64 },
    #[error("kernel `{kernel}` is not positive at t = {t}, alpha = {alpha} (value {value})")]
    NonPositive {
        kernel: String,
        t: f64,
        alpha: f64,
        value: f64,
    },
    #[error("kernel `{kernel}`: {source}")]
    Special {
        kernel: String,
        #[source]
        source: SpecFunError,
    },
    #[error("unknown kernel `{0}`")]
    Unknown(String),
    #[error("invalid kernel specification `{spec}`: {reason}")]
    BadSpec { spec: String, reason: String },
    #[error("a kernel named `{0}` is already registered")]
    Duplicate(String),
}

/// What happens to `N_F^α f` as `α → 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitBehavior {
    /// `F(t, 1) = 1`: the ordinary slope is recovered.
    ClassicalSlope,
    /// `F(t, 1) ≠ 1` in general.
    NonClassical,
    Other,
}

type KernelFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Shape {
    Classical,
    Conformable,
    NonconformableExp,
    ReciprocalPower,
    OnePlusReciprocal,
    MellinRoss { a: f64 },
    Robotov { beta: f64 },
    Custom(KernelFn),
}

impl fmt::Debug for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Classical => f.write_str("Classical"),
            Shape::Conformable => f.write_str("Conformable"),
            Shape::NonconformableExp => f.write_str("NonconformableExp"),
            Shape::ReciprocalPower => f.write_str("ReciprocalPower"),
            Shape::OnePlusReciprocal => f.write_str("OnePlusReciprocal"),
            Shape::MellinRoss { a } => write!(f, "MellinRoss {{ a: {a} }}"),
            Shape::Robotov { beta } => write!(f, "Robotov {{ beta: {beta} }}"),
            Shape::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// A named positive kernel `F(t, α)`.
#[derive(Debug, Clone)]
pub struct Kernel {
    name: String,
    params: Vec<(String, f64)>,
    shape: Shape,
    limit: LimitBehavior,
    limit_note: String,
}

impl Kernel {
    /// `F ≡ 1`: the ordinary derivative.
    pub fn classical() -> Kernel {
        Kernel::builtin(
            "classical",
            Shape::Classical,
            LimitBehavior::ClassicalSlope,
            "F = 1 for every order",
        )
    }

    /// `t^{1-α}`.
    pub fn conformable() -> Kernel {
        Kernel::builtin(
            "conformable",
            Shape::Conformable,
            LimitBehavior::ClassicalSlope,
            "F(t, 1) = 1, so the ordinary derivative is recovered as alpha -> 1",
        )
    }

    /// `e^{t^{-α}}`.
    pub fn nonconformable_exp() -> Kernel {
        Kernel::builtin(
            "nonconformable_exp",
            Shape::NonconformableExp,
            LimitBehavior::NonClassical,
            "F(t, 1) = e^{1/t}; the ordinary derivative is not recovered as alpha -> 1",
        )
    }

    /// `1 / t^α`.
    pub fn reciprocal_power() -> Kernel {
        Kernel::builtin(
            "reciprocal_power",
            Shape::ReciprocalPower,
            LimitBehavior::Other,
            "N f -> 0 as t -> infinity whenever f' stays bounded",
        )
    }

    /// `1 + 1 / t^α`.
    pub fn one_plus_reciprocal() -> Kernel {
        Kernel::builtin(
            "one_plus_reciprocal",
            Shape::OnePlusReciprocal,
            LimitBehavior::Other,
            "F -> 1 as t -> infinity: coincides with f' at infinity",
        )
    }

    /// Mellin-Ross kernel `t^α E_{1,α+1}(a t)`.
    pub fn mellin_ross(a: f64) -> Kernel {
        Kernel {
            name: format!("mellin_ross(a={a})"),
            params: vec![("a".into(), a)],
            shape: Shape::MellinRoss { a },
            limit: LimitBehavior::NonClassical,
            limit_note: "alpha -> 1 gives t E_{1,2}(a t) f'(t)".into(),
        }
    }

    /// Robotov kernel `t^α E_{α+1,α+1}(β t^{α+1})`.
    pub fn robotov(beta: f64) -> Kernel {
        Kernel {
            name: format!("robotov(beta={beta})"),
            params: vec![("beta".into(), beta)],
            shape: Shape::Robotov { beta },
            limit: LimitBehavior::NonClassical,
            limit_note: "alpha -> 1 gives t E_{2,2}(beta t^2) f'(t)".into(),
        }
    }

    /// A user kernel. The function is still checked for positivity on every
    /// evaluation.
    pub fn custom(
        name: impl Into<String>,
        limit: LimitBehavior,
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Kernel {
        Kernel {
            name: name.into(),
            params: Vec::new(),
            shape: Shape::Custom(Arc::new(f)),
            limit,
            limit_note: String::new(),
        }
    }

    fn builtin(name: &str, shape: Shape, limit: LimitBehavior, note: &str) -> Kernel {
        Kernel {
            name: name.into(),
            params: Vec::new(),
            shape,
            limit,
            limit_note: note.into(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &[(String, f64)] {
        &self.params
    }

    pub fn limit_alpha_to_1(&self) -> LimitBehavior {
        self.limit
    }

    pub fn limit_note(&self) -> &str {
        &self.limit_note
    }

    /// Open interval on which the kernel is defined.
    pub fn t_domain(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }

    pub fn is_conformable(&self) -> bool {
        matches!(self.shape, Shape::Conformable)
    }

    /// `F(t, α)` for `α ∈ (0, 1]`.
    pub fn eval(&self, t: f64, alpha: f64) -> Result<f64, KernelError> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(self.bad_order(alpha));
        }
        self.eval_any_order(t, alpha)
    }

    /// `F(t, α)` for any finite `α >= 0`. Used by the higher-order operator
    /// (orders above one) and by the weighted family (`α = 0` when `β = 1`).
    pub fn eval_any_order(&self, t: f64, alpha: f64) -> Result<f64, KernelError> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(self.bad_order(alpha));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(KernelError::Domain {
                kernel: self.name.clone(),
                t,
            });
        }
        let value = match &self.shape {
            Shape::Classical => 1.0,
            Shape::Conformable => t.powf(1.0 - alpha),
            Shape::NonconformableExp => {
                let s = t.powf(-alpha);
                if s > EXP_KERNEL_MAX_EXPONENT {
                    return Err(KernelError::Overflow {
                        kernel: self.name.clone(),
                        t,
                        alpha,
                    });
                }
                s.exp()
            }
            Shape::ReciprocalPower => t.powf(-alpha),
            Shape::OnePlusReciprocal => 1.0 + t.powf(-alpha),
            Shape::MellinRoss { a } => specfun::mellin_ross(alpha, *a, t).map_err(|e| self.special(e))?,
            Shape::Robotov { beta } => specfun::robotov(alpha, *beta, t).map_err(|e| self.special(e))?,
            Shape::Custom(f) => f(t, alpha),
        };
        if value.is_infinite() {
            return Err(KernelError::Overflow {
                kernel: self.name.clone(),
                t,
                alpha,
            });
        }
        if !(value > 0.0) {
            return Err(KernelError::NonPositive {
                kernel: self.name.clone(),
                t,
                alpha,
                value,
            });
        }
        Ok(value)
    }

    /// The quadrature weight `1 / F(s, α)`, extended to `s = 0` by its limit
    /// where that limit is finite.
    ///
    /// For `e^{s^{-α}}` the weight is computed as `e^{-s^{-α}}` directly, so it
    /// underflows gracefully instead of tripping the overflow guard.
    pub fn weight(&self, s: f64, alpha: f64) -> Result<f64, KernelError> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(self.bad_order(alpha));
        }
        if s == 0.0 {
            return match self.shape {
                Shape::Classical => Ok(1.0),
                Shape::NonconformableExp | Shape::ReciprocalPower | Shape::OnePlusReciprocal if alpha > 0.0 => Ok(0.0),
                _ => Err(KernelError::Domain {
                    kernel: self.name.clone(),
                    t: s,
                }),
            };
        }
        match self.shape {
            Shape::NonconformableExp if s > 0.0 && s.is_finite() => Ok((-s.powf(-alpha)).exp()),
            _ => Ok(1.0 / self.eval_any_order(s, alpha)?),
        }
    }

    /// `F(·, α)` as an expression in `t`, when it has one in the expression
    /// grammar. The Mittag-Leffler kernels and user closures do not.
    pub fn symbolic(&self, alpha: f64) -> Option<Expr> {
        let t = Expr::t();
        Some(match self.shape {
            Shape::Classical => Expr::Const(1.0),
            Shape::Conformable => pow(t, Expr::Const(1.0 - alpha)),
            Shape::NonconformableExp => unary(UnaryOp::Exp, pow(t, Expr::Const(-alpha))),
            Shape::ReciprocalPower => div(Expr::Const(1.0), pow(t, Expr::Const(alpha))),
            Shape::OnePlusReciprocal => add(Expr::Const(1.0), div(Expr::Const(1.0), pow(t, Expr::Const(alpha)))),
            Shape::MellinRoss { .. } | Shape::Robotov { .. } | Shape::Custom(_) => return None,
        })
    }

    fn bad_order(&self, alpha: f64) -> KernelError {
        KernelError::InvalidOrder {
            kernel: self.name.clone(),
            alpha,
        }
    }

    fn special(&self, source: SpecFunError) -> KernelError {
        KernelError::Special {
            kernel: self.name.clone(),
            source,
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// The seven built-in kernels. The Mellin-Ross and Robotov entries use
/// `a = 1` and `β = 1`; other parameters are available through
/// [`KernelRegistry::resolve`].
pub fn builtin_kernels() -> Vec<Kernel> {
    vec![
        Kernel::conformable(),
        Kernel::nonconformable_exp(),
        Kernel::reciprocal_power(),
        Kernel::one_plus_reciprocal(),
        Kernel::mellin_ross(1.0),
        Kernel::robotov(1.0),
        Kernel::classical(),
    ]
}

/// Name → kernel map. Built-ins cannot be replaced; new kernels must use a
/// fresh name.
#[derive(Debug, Clone)]
pub struct KernelRegistry {
    kernels: BTreeMap<String, Kernel>,
}

impl Default for KernelRegistry {
    fn default() -> Self {
        KernelRegistry::with_builtins()
    }
}

impl KernelRegistry {
    pub fn with_builtins() -> Self {
        let kernels = builtin_kernels().into_iter().map(|k| (k.name.clone(), k)).collect();
        KernelRegistry { kernels }
    }

    pub fn register(&mut self, kernel: Kernel) -> Result<(), KernelError> {
        if self.kernels.contains_key(&kernel.name) {
            return Err(KernelError::Duplicate(kernel.name));
        }
        self.kernels.insert(kernel.name.clone(), kernel);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Kernel> {
        self.kernels.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.kernels.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    /// Resolve a command-line kernel spec: a registered name
    /// (`conformable`, `mellin_ross(a=1)`), or a parametric family written
    /// `mellin_ross:a=2.5` / `robotov:beta=0.5`. A bare `mellin_ross` or
    /// `robotov` means the default parameter 1.
    pub fn resolve(&self, spec: &str) -> Result<Kernel, KernelError> {
        let spec = spec.trim();
        if let Some(k) = self.kernels.get(spec) {
            return Ok(k.clone());
        }
        let (family, args) = match spec.split_once(':') {
            Some((f, a)) => (f.trim(), Some(a)),
            None => (spec, None),
        };
        let bad = |reason: String| KernelError::BadSpec {
            spec: spec.to_string(),
            reason,
        };
        let mut params = BTreeMap::new();
        if let Some(args) = args {
            for pair in args.split(',').filter(|p| !p.trim().is_empty()) {
                let (k, v) = pair
                    .split_once('=')
                    .ok_or_else(|| bad(format!("expected key=value, got `{pair}`")))?;
                let v: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| bad(format!("`{}` is not a number", v.trim())))?;
                if !v.is_finite() {
                    return Err(bad(format!("parameter `{}` must be finite", k.trim())));
                }
                params.insert(k.trim().to_string(), v);
            }
        }
        let take = |params: &mut BTreeMap<String, f64>, key: &str| -> Result<f64, KernelError> {
            let v = params.remove(key).unwrap_or(1.0);
            if let Some(extra) = params.keys().next() {
                return Err(bad(format!("unexpected parameter `{extra}`")));
            }
            Ok(v)
        };
        match family {
            "mellin_ross" => Ok(Kernel::mellin_ross(take(&mut params, "a")?)),
            "robotov" => Ok(Kernel::robotov(take(&mut params, "beta")?)),
            _ if args.is_some() => match self.kernels.get(family) {
                Some(_) => Err(bad(format!("kernel `{family}` takes no parameters"))),
                None => Err(KernelError::Unknown(family.to_string())),
            },
            _ => Err(KernelError::Unknown(spec.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kernel_values() {
        assert_relative_eq!(Kernel::conformable().eval(4.0, 0.5).unwrap(), 2.0);
        assert_relative_eq!(
            Kernel::nonconformable_exp().eval(1.0, 0.7).unwrap(),
            std::f64::consts::E,
            max_relative = 1e-15
        );
        for &(t, a) in &[(0.1, 0.2), (3.0, 1.0), (100.0, 0.5)] {
            assert_eq!(Kernel::classical().eval(t, a).unwrap(), 1.0);
        }
    }

    #[test]
    fn builtin_lookups() {
        let reg = KernelRegistry::with_builtins();
        assert_eq!(reg.len(), 7);
        assert_relative_eq!(
            reg.get("reciprocal_power").unwrap().eval(8.0, 1.0 / 3.0).unwrap(),
            0.5,
            max_relative = 1e-15
        );
        let v = reg.get("one_plus_reciprocal").unwrap().eval(1e12, 0.5).unwrap();
        assert!((1.0..=1.0 + 1e-6).contains(&v));
        assert_relative_eq!(
            reg.get("mellin_ross(a=1)").unwrap().eval(1.0, 1.0).unwrap(),
            std::f64::consts::E - 1.0,
            max_relative = 1e-12
        );
        assert!(reg.get("robotov(beta=1)").is_some());
    }

    #[test]
    fn builtin_names_are_unique() {
        let names: std::collections::BTreeSet<String> =
            builtin_kernels().iter().map(|k| k.name().to_string()).collect();
        assert_eq!(names.len(), builtin_kernels().len());
    }

    #[test]
    fn domain_and_order_errors() {
        let k = Kernel::conformable();
        assert!(matches!(k.eval(0.0, 0.5), Err(KernelError::Domain { .. })));
        assert!(matches!(k.eval(-1.0, 0.5), Err(KernelError::Domain { .. })));
        assert!(matches!(k.eval(1.0, 0.0), Err(KernelError::InvalidOrder { .. })));
        assert!(matches!(k.eval(1.0, 1.5), Err(KernelError::InvalidOrder { .. })));
        assert!(k.eval_any_order(1.0, 1.5).is_ok());
    }

    #[test]
    fn exponential_kernel_overflow_guard() {
        let k = Kernel::nonconformable_exp();
        // t^{-1} = 1000 > 700
        assert!(matches!(k.eval(1e-3, 1.0), Err(KernelError::Overflow { .. })));
        assert!(k.eval(1.0 / 699.0, 1.0).is_ok());
        // The weight keeps working and tends to 0.
        assert_eq!(k.weight(1e-3, 1.0).unwrap(), (-1000.0f64).exp());
        assert_eq!(k.weight(0.0, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn custom_kernels_are_checked_for_positivity() {
        let k = Kernel::custom("shifted", LimitBehavior::Other, |t, _| t - 1.0);
        assert!(k.eval(2.0, 0.5).is_ok());
        assert!(matches!(k.eval(0.5, 0.5), Err(KernelError::NonPositive { .. })));
        // Robotov with a negative β changes sign (E_{2,2}(-x^2) = sin x / x).
        let r = Kernel::robotov(-1.0);
        assert!(matches!(r.eval(4.0, 1.0), Err(KernelError::NonPositive { .. })));
    }

    #[test]
    fn registry_rejects_duplicates() {
        let mut reg = KernelRegistry::with_builtins();
        let dup = Kernel::custom("conformable", LimitBehavior::Other, |_, _| 2.0);
        assert!(matches!(reg.register(dup), Err(KernelError::Duplicate(_))));
        reg.register(Kernel::custom("two", LimitBehavior::Other, |_, _| 2.0))
            .unwrap();
        assert_eq!(reg.get("two").unwrap().eval(1.0, 0.5).unwrap(), 2.0);
        // built-ins are still intact
        assert_eq!(reg.get("conformable").unwrap().eval(4.0, 0.5).unwrap(), 2.0);
    }

    #[test]
    fn resolve_parametric_specs() {
        let reg = KernelRegistry::with_builtins();
        let k = reg.resolve("mellin_ross:a=1.0").unwrap();
        assert_eq!(k.name(), "mellin_ross(a=1)");
        let k = reg.resolve("robotov:beta=0.5").unwrap();
        assert_eq!(k.params(), &[("beta".to_string(), 0.5)]);
        assert_eq!(reg.resolve("mellin_ross").unwrap().name(), "mellin_ross(a=1)");
        assert!(matches!(reg.resolve("nope"), Err(KernelError::Unknown(_))));
        assert!(matches!(
            reg.resolve("mellin_ross:b=2"),
            Err(KernelError::BadSpec { .. })
        ));
        assert!(matches!(
            reg.resolve("mellin_ross:a=x"),
            Err(KernelError::BadSpec { .. })
        ));
        assert!(matches!(
            reg.resolve("conformable:a=1"),
            Err(KernelError::BadSpec { .. })
        ));
    }

    #[test]
    fn symbolic_forms_agree_with_numeric() {
        for k in builtin_kernels() {
            let Some(e) = k.symbolic(0.4) else { continue };
            for &t in &[0.3, 1.0, 2.7] {
                assert_relative_eq!(e.eval(t).unwrap(), k.eval(t, 0.4).unwrap(), max_relative = 1e-14);
            }
        }
        assert!(Kernel::mellin_ross(1.0).symbolic(0.5).is_none());
    }

    #[test]
    fn limit_tags_are_truthful() {
        let conf = Kernel::conformable();
        assert_eq!(conf.limit_alpha_to_1(), LimitBehavior::ClassicalSlope);
        for &t in &[0.01, 0.5, 1.0, 7.0, 1e6] {
            assert_eq!(conf.eval(t, 1.0).unwrap(), 1.0);
        }
        let nc = Kernel::nonconformable_exp();
        assert_eq!(nc.limit_alpha_to_1(), LimitBehavior::NonClassical);
        let at_one = nc.eval(1.0, 1.0).unwrap();
        assert_relative_eq!(at_one, std::f64::consts::E, max_relative = 1e-15);
        assert!((at_one - 1.0).abs() > 1.0);
    }

    #[test]
    fn builtins_are_positive_on_random_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for k in builtin_kernels() {
            for _ in 0..10_000 {
                let t = rng.gen_range(0.01..5.0);
                let alpha = rng.gen_range(f64::EPSILON..=1.0);
                let v = k
                    .eval(t, alpha)
                    .unwrap_or_else(|e| panic!("{k} at ({t}, {alpha}): {e}"));
                assert!(v > 0.0 && v.is_finite());
            }
        }
    }
}
