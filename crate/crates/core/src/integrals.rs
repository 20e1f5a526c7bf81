//! The integral `J f(t) = ∫_{t0}^{t} f(s) / F(s, α) ds` and the
//! fundamental-theorem residuals that tie it to the N-derivative.

use serde::Serialize;
use thiserror::Error;

use crate::diffops::{closed_form, eval_operator, EvalConfig, OperatorError, OperatorSpec};
use crate::expr::{EvalError, Expr, RealFunction};
use crate::kernels::{Kernel, KernelError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("invalid quadrature config: {0}")]
    InvalidConfig(String),
    #[error("invalid interval [{t0}, {t}]: {reason}")]
    InvalidInterval { t0: f64, t: f64, reason: String },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("refinement stalled near s = {at}: integrand looks non-integrable")]
    NonIntegrableSingularity { at: f64 },
    #[error("subdivision limit {limit} reached (error estimate {error_estimate:e})")]
    SubdivisionLimit { limit: usize, error_estimate: f64 },
    #[error("error estimate {error_estimate:e} above target {target:e} after tightening")]
    ToleranceNotMet { error_estimate: f64, target: f64 },
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_subdivisions: 100_000,
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<(), QuadError> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(QuadError::InvalidConfig(format!(
                "tolerances must be > 0 (abs {}, rel {})",
                self.abs_tol, self.rel_tol
            )));
        }
        if !(10..=1_000_000).contains(&self.max_subdivisions) {
            return Err(QuadError::InvalidConfig(format!(
                "max_subdivisions must be in [10, 1e6], got {}",
                self.max_subdivisions
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub subdivisions_used: usize,
}

const MAX_DEPTH: u32 = 60;
/// Tightening passes when the first pass misses the relative target.
const MAX_PASSES: u32 = 4;

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn finite(v: f64, s: f64) -> Result<f64, QuadError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(QuadError::NonIntegrableSingularity { at: s })
    }
}

fn simpson_pass<G>(g: &G, a: f64, b: f64, tol: f64, cfg: &QuadConfig) -> Result<QuadResult, QuadError>
where
    G: Fn(f64) -> Result<f64, QuadError>,
{
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (finite(g(a)?, a)?, finite(g(m)?, m)?, finite(g(b)?, b)?);
    let mut stack = vec![Panel {
        a,
        b,
        fa,
        fm,
        fb,
        whole: simpson(a, b, fa, fm, fb),
        tol,
        depth: 0,
    }];
    let mut value = 0.0;
    let mut error = 0.0;
    let mut splits = 0usize;
    while let Some(p) = stack.pop() {
        let m = 0.5 * (p.a + p.b);
        let (lm, rm) = (0.5 * (p.a + m), 0.5 * (m + p.b));
        let (flm, frm) = (finite(g(lm)?, lm)?, finite(g(rm)?, rm)?);
        let left = simpson(p.a, m, p.fa, flm, p.fm);
        let right = simpson(m, p.b, p.fm, frm, p.fb);
        let delta = left + right - p.whole;
        if delta.abs() <= 15.0 * p.tol || p.depth >= MAX_DEPTH {
            if p.depth >= MAX_DEPTH && delta.abs() > 15.0 * p.tol {
                return Err(QuadError::NonIntegrableSingularity { at: m });
            }
            value += left + right + delta / 15.0;
            error += delta.abs() / 15.0;
            continue;
        }
        if !(lm > p.a && m > lm && rm > m && p.b > rm) {
            // no room left to bisect in double precision
            return Err(QuadError::NonIntegrableSingularity { at: m });
        }
        splits += 1;
        if splits > cfg.max_subdivisions {
            return Err(QuadError::SubdivisionLimit {
                limit: cfg.max_subdivisions,
                error_estimate: error + delta.abs(),
            });
        }
        let tol = 0.5 * p.tol;
        // right first so the left half is processed first
        stack.push(Panel {
            a: m,
            b: p.b,
            fa: p.fm,
            fm: frm,
            fb: p.fb,
            whole: right,
            tol,
            depth: p.depth + 1,
        });
        stack.push(Panel {
            a: p.a,
            b: m,
            fa: p.fa,
            fm: flm,
            fb: p.fm,
            whole: left,
            tol,
            depth: p.depth + 1,
        });
    }
    Ok(QuadResult {
        value,
        error_estimate: error,
        subdivisions_used: splits,
    })
}

/// Adaptive Simpson quadrature of `g` on `[a, b]` (`a ≤ b`) with
/// `error_estimate ≤ max(abs_tol, rel_tol·|value|)`.
///
/// The local tolerance is derived from a first estimate of `|value|`; if the
/// finished pass misses the relative target the pass is repeated with a
/// tighter tolerance.
pub fn adaptive_simpson<G>(g: G, a: f64, b: f64, cfg: &QuadConfig) -> Result<QuadResult, QuadError>
where
    G: Fn(f64) -> Result<f64, QuadError>,
{
    cfg.validate()?;
    if !(a.is_finite() && b.is_finite() && a <= b) {
        return Err(QuadError::InvalidInterval {
            t0: a,
            t: b,
            reason: "need finite a <= b".into(),
        });
    }
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error_estimate: 0.0,
            subdivisions_used: 0,
        });
    }
    let m = 0.5 * (a + b);
    let coarse = simpson(a, b, g(a)?, g(m)?, g(b)?);
    let mut tol = cfg.abs_tol.max(cfg.rel_tol * coarse.abs());
    let mut result = simpson_pass(&g, a, b, tol, cfg)?;
    for _ in 0..MAX_PASSES {
        let target = cfg.abs_tol.max(cfg.rel_tol * result.value.abs());
        if result.error_estimate <= target {
            return Ok(result);
        }
        tol = tol.min(target) * 0.1;
        result = simpson_pass(&g, a, b, tol, cfg)?;
    }
    let target = cfg.abs_tol.max(cfg.rel_tol * result.value.abs());
    if result.error_estimate <= target {
        Ok(result)
    } else {
        Err(QuadError::ToleranceNotMet {
            error_estimate: result.error_estimate,
            target,
        })
    }
}

fn check_interval(t0: f64, t: f64) -> Result<(), QuadError> {
    if !(t0.is_finite() && t.is_finite()) || t0 > t || t0 < 0.0 {
        return Err(QuadError::InvalidInterval {
            t0,
            t,
            reason: "need 0 <= t0 <= t".into(),
        });
    }
    Ok(())
}

fn check_order(kernel: &Kernel, alpha: f64) -> Result<(), QuadError> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(KernelError::InvalidOrder {
            kernel: kernel.name().to_string(),
            alpha,
        }
        .into())
    }
}

/// `∫_{t0}^{t} f(s) / F(s, α) ds` for `0 ≤ t0 ≤ t`.
///
/// With the conformable kernel and `t0 = 0` the integrable endpoint
/// singularity `s^{α-1}` is removed by `u = s^α`. At `s = 0` the weights of
/// the kernels with a finite limit there are extended by that limit.
pub fn j_integral<F: RealFunction + ?Sized>(
    kernel: &Kernel,
    alpha: f64,
    f: &F,
    t0: f64,
    t: f64,
    cfg: &QuadConfig,
) -> Result<QuadResult, QuadError> {
    check_interval(t0, t)?;
    check_order(kernel, alpha)?;
    if t0 == 0.0 && kernel.is_conformable() && alpha < 1.0 {
        let inv = 1.0 / alpha;
        let r = adaptive_simpson(|u| Ok(f.value(u.powf(inv))?), 0.0, t.powf(alpha), cfg)?;
        return Ok(QuadResult {
            value: r.value * inv,
            error_estimate: r.error_estimate * inv,
            ..r
        });
    }
    adaptive_simpson(
        |s| {
            let w = kernel.weight(s, alpha)?;
            // 0 · f(s) is 0 even where f is undefined (the weight vanishes)
            if w == 0.0 {
                return Ok(0.0);
            }
            Ok(f.value(s)? * w)
        },
        t0,
        t,
        cfg,
    )
}

/// Tolerances for [`fundamental_pair_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairConfig {
    pub eval: EvalConfig,
    pub quad: QuadConfig,
    /// Used for the inner integrals that `N` differentiates; they are short
    /// and must be far more accurate than the outer check.
    pub inner_quad: QuadConfig,
}

impl Default for PairConfig {
    fn default() -> Self {
        PairConfig {
            eval: EvalConfig::default(),
            quad: QuadConfig::default(),
            inner_quad: QuadConfig {
                abs_tol: 1e-15,
                rel_tol: 1e-13,
                max_subdivisions: 100_000,
            },
        }
    }
}

/// `(J(N f)(t) - (f(t) - f(t0)), N(J f)(t) - f(t))` with `J` anchored at
/// `t0 > 0`.
///
/// `N f` is the closed form `F·f'`. In the second residual `J f` differs from
/// `s ↦ ∫_t^s f/F` only by a constant, which `N` annihilates, so the latter
/// is differentiated: it avoids subtracting two large nearly equal
/// integrals inside the difference quotient.
pub fn fundamental_pair_check(
    kernel: &Kernel,
    alpha: f64,
    f: &Expr,
    t0: f64,
    t: f64,
    cfg: &PairConfig,
) -> Result<(f64, f64), QuadError> {
    if !(t0 > 0.0) {
        return Err(QuadError::InvalidInterval {
            t0,
            t,
            reason: "the fundamental pair needs t0 > 0".into(),
        });
    }
    check_interval(t0, t)?;
    let spec = OperatorSpec::additive(kernel.clone(), alpha)?;
    let nf = closed_form(&spec, f)?.expect("additive operators have a closed form");
    let ja = j_integral(
        kernel,
        alpha,
        &|s: f64| -> Result<f64, EvalError> { nf.eval(s).map_err(|e| to_eval(s, e)) },
        t0,
        t,
        &cfg.quad,
    )?;
    let residual_a = ja.value - (f.eval(t)? - f.eval(t0)?);

    let partial = |s: f64| -> Result<f64, EvalError> {
        let signed = if s >= t {
            j_integral(kernel, alpha, f, t, s, &cfg.inner_quad).map(|r| r.value)
        } else {
            j_integral(kernel, alpha, f, s, t, &cfg.inner_quad).map(|r| -r.value)
        };
        signed.map_err(|e| EvalError::Other {
            t: s,
            message: e.to_string(),
        })
    };
    let njf = eval_operator(&spec, &partial, t, &cfg.eval)?;
    let residual_b = njf.value - f.eval(t)?;
    Ok((residual_a, residual_b))
}

fn to_eval(s: f64, e: OperatorError) -> EvalError {
    match e {
        OperatorError::Eval(e) => e,
        other => EvalError::Other {
            t: s,
            message: other.to_string(),
        },
    }
}
