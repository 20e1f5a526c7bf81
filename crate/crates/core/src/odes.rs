//! Initial value problems `N_F^α x = g(t, x)`, `x(t0) = x0`.
//!
//! For differentiable solutions the equation is `F(t,α)·x' = g`, so it is
//! integrated as `x' = g(t, x) / F(t, α)` with classical RK4 and step
//! doubling. [`picard_residual`] checks a trajectory against the integral
//! form `x(t) = x0 + J_{t0}(g(·, x(·)))(t)`.

use serde::Serialize;
use thiserror::Error;

use crate::expr::{Bindings, EvalError, Expr, ParseError, ParseOptions};
use crate::integrals::{j_integral, QuadConfig, QuadError};
use crate::kernels::{Kernel, KernelError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("invalid step config: {0}")]
    InvalidConfig(String),
    #[error("right-hand side: {0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("step limit {0} reached")]
    TooManySteps(usize),
    #[error("t = {t} is outside the trajectory [{t0}, {t_end}]")]
    OutOfRange { t: f64, t0: f64, t_end: f64 },
    #[error(transparent)]
    Quad(#[from] QuadError),
}

#[derive(Debug, Clone)]
pub struct IVProblem {
    kernel: Kernel,
    alpha: f64,
    rhs: Expr,
    t0: f64,
    x0: f64,
    t_end: f64,
}

impl IVProblem {
    /// `rhs` may use `t` and `x`.
    pub fn new(kernel: Kernel, alpha: f64, rhs: Expr, t0: f64, x0: f64, t_end: f64) -> Result<Self, OdeError> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(OdeError::InvalidProblem(format!(
                "alpha must be in (0, 1], got {alpha}"
            )));
        }
        if !(t0 > 0.0 && t0.is_finite()) {
            return Err(OdeError::InvalidProblem(format!(
                "t0 must be > 0 (every kernel lives on t > 0), got {t0}"
            )));
        }
        if !(t_end > t0 && t_end.is_finite()) {
            return Err(OdeError::InvalidProblem(format!(
                "t_end must exceed t0, got [{t0}, {t_end}]"
            )));
        }
        if !x0.is_finite() {
            return Err(OdeError::InvalidProblem(format!("x0 must be finite, got {x0}")));
        }
        Ok(IVProblem {
            kernel,
            alpha,
            rhs,
            t0,
            x0,
            t_end,
        })
    }

    /// Parse the right-hand side with the `t, x` grammar.
    pub fn parse(kernel: Kernel, alpha: f64, rhs: &str, t0: f64, x0: f64, t_end: f64) -> Result<Self, OdeError> {
        let rhs = Expr::parse_with(rhs, &ParseOptions::ode_rhs())?;
        IVProblem::new(kernel, alpha, rhs, t0, x0, t_end)
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn rhs(&self) -> &Expr {
        &self.rhs
    }
    pub fn t0(&self) -> f64 {
        self.t0
    }
    pub fn x0(&self) -> f64 {
        self.x0
    }
    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    /// `g(t, x)`.
    pub fn g(&self, t: f64, x: f64) -> Result<f64, OdeError> {
        Ok(self.rhs.eval_with(&Bindings::tx(t, x))?)
    }

    /// `x' = g(t, x) / F(t, α)`.
    pub fn slope(&self, t: f64, x: f64) -> Result<f64, OdeError> {
        let v = self.g(t, x)? / self.kernel.eval(t, self.alpha)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::Other {
                t,
                message: format!("non-finite slope at x = {x}"),
            }
            .into())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// `None`: 1% of the interval.
    pub initial_step: Option<f64>,
    pub max_steps: usize,
    /// Plain RK4 on a uniform grid of (at most) this step, no error control.
    pub fixed_step: Option<f64>,
}

impl Default for StepConfig {
    fn default() -> Self {
        StepConfig {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            initial_step: None,
            max_steps: 1_000_000,
            fixed_step: None,
        }
    }
}

impl StepConfig {
    pub fn validate(&self) -> Result<(), OdeError> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(OdeError::InvalidConfig("tolerances must be > 0".into()));
        }
        for h in [self.initial_step, self.fixed_step].into_iter().flatten() {
            if !(h > 0.0 && h.is_finite()) {
                return Err(OdeError::InvalidConfig(format!("steps must be > 0, got {h}")));
            }
        }
        if self.max_steps == 0 {
            return Err(OdeError::InvalidConfig("max_steps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    /// `(t_i, x_i)`, strictly increasing in `t`, from `t0` to `t_end`.
    pub samples: Vec<(f64, f64)>,
    /// `x'(t_i)`, used by the dense output.
    pub slopes: Vec<f64>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub max_local_error_estimate: f64,
}

impl Trajectory {
    pub fn t0(&self) -> f64 {
        self.samples[0].0
    }

    pub fn t_end(&self) -> f64 {
        self.samples[self.samples.len() - 1].0
    }

    pub fn final_value(&self) -> f64 {
        self.samples[self.samples.len() - 1].1
    }

    /// Cubic Hermite interpolation between the samples.
    pub fn dense(&self, t: f64) -> Result<f64, OdeError> {
        let (t0, t_end) = (self.t0(), self.t_end());
        if !(t >= t0 && t <= t_end) {
            return Err(OdeError::OutOfRange { t, t0, t_end });
        }
        let i = self
            .samples
            .partition_point(|s| s.0 <= t)
            .clamp(1, self.samples.len() - 1);
        let ((ta, xa), (tb, xb)) = (self.samples[i - 1], self.samples[i]);
        let (da, db) = (self.slopes[i - 1], self.slopes[i]);
        let h = tb - ta;
        let s = (t - ta) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        Ok((2.0 * s3 - 3.0 * s2 + 1.0) * xa
            + (s3 - 2.0 * s2 + s) * h * da
            + (-2.0 * s3 + 3.0 * s2) * xb
            + (s3 - s2) * h * db)
    }
}

fn rk4(p: &IVProblem, t: f64, x: f64, k1: f64, h: f64) -> Result<f64, OdeError> {
    let k2 = p.slope(t + 0.5 * h, x + 0.5 * h * k1)?;
    let k3 = p.slope(t + 0.5 * h, x + 0.5 * h * k2)?;
    let k4 = p.slope(t + h, x + h * k3)?;
    Ok(x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
}

/// Integrate the problem from `t0` to `t_end`.
pub fn solve_ivp(p: &IVProblem, cfg: &StepConfig) -> Result<Trajectory, OdeError> {
    cfg.validate()?;
    if let Some(h) = cfg.fixed_step {
        return solve_fixed(p, h, cfg.max_steps);
    }
    let span = p.t_end - p.t0;
    let mut h = cfg.initial_step.unwrap_or(0.01 * span).min(span);
    let (mut t, mut x) = (p.t0, p.x0);
    let mut k = p.slope(t, x)?;
    let mut traj = Trajectory {
        samples: vec![(t, x)],
        slopes: vec![k],
        accepted_steps: 0,
        rejected_steps: 0,
        max_local_error_estimate: 0.0,
    };
    while t < p.t_end {
        if traj.accepted_steps + traj.rejected_steps >= cfg.max_steps {
            return Err(OdeError::TooManySteps(cfg.max_steps));
        }
        let last = t + h >= p.t_end;
        let step = if last { p.t_end - t } else { h };
        if step < 1e-13 * t.abs().max(1.0) {
            return Err(OdeError::StepUnderflow { t, h: step });
        }
        // One full step against two half steps.
        let attempt = (|| -> Result<(f64, f64), OdeError> {
            let full = rk4(p, t, x, k, step)?;
            let half = rk4(p, t, x, k, 0.5 * step)?;
            let mid = t + 0.5 * step;
            let two = rk4(p, mid, half, p.slope(mid, half)?, 0.5 * step)?;
            Ok((full, two))
        })();
        let (full, two) = match attempt {
            Ok(v) => v,
            // A stage left the domain: retry with a smaller step.
            Err(OdeError::Eval(_) | OdeError::Kernel(_)) if step > 1e-13 * t.abs().max(1.0) => {
                traj.rejected_steps += 1;
                h = 0.25 * step;
                continue;
            }
            Err(e) => return Err(e),
        };
        let err = (two - full).abs() / 15.0;
        let tol = cfg.abs_tol + cfg.rel_tol * x.abs().max(two.abs());
        let factor = if err == 0.0 {
            4.0
        } else {
            (0.9 * (tol / err).powf(0.2)).clamp(0.2, 4.0)
        };
        if err <= tol {
            t = if last { p.t_end } else { t + step };
            x = two + (two - full) / 15.0;
            k = p.slope(t, x)?;
            traj.samples.push((t, x));
            traj.slopes.push(k);
            traj.accepted_steps += 1;
            traj.max_local_error_estimate = traj.max_local_error_estimate.max(err);
            if !last {
                h = step * factor;
            }
        } else {
            traj.rejected_steps += 1;
            h = step * factor;
        }
    }
    Ok(traj)
}

fn solve_fixed(p: &IVProblem, h: f64, max_steps: usize) -> Result<Trajectory, OdeError> {
    let span = p.t_end - p.t0;
    let n = (span / h).ceil().max(1.0) as usize;
    if n > max_steps {
        return Err(OdeError::TooManySteps(max_steps));
    }
    let h = span / n as f64;
    let mut x = p.x0;
    let mut k = p.slope(p.t0, x)?;
    let mut traj = Trajectory {
        samples: Vec::with_capacity(n + 1),
        slopes: Vec::with_capacity(n + 1),
        accepted_steps: n,
        rejected_steps: 0,
        max_local_error_estimate: f64::NAN,
    };
    traj.samples.push((p.t0, x));
    traj.slopes.push(k);
    for i in 0..n {
        let t = p.t0 + i as f64 * h;
        x = rk4(p, t, x, k, h)?;
        let tn = if i + 1 == n { p.t_end } else { p.t0 + (i + 1) as f64 * h };
        k = p.slope(tn, x)?;
        traj.samples.push((tn, x));
        traj.slopes.push(k);
    }
    Ok(traj)
}

/// `max_i |x_i - x0 - J_{t0}(g(·, x(·)))(t_i)|` with the dense output inside
/// the quadrature. The integral is accumulated sample interval by sample
/// interval, so each piece sees a single cubic.
pub fn picard_residual(p: &IVProblem, traj: &Trajectory, cfg: &QuadConfig) -> Result<f64, OdeError> {
    let integrand = |s: f64| -> Result<f64, EvalError> {
        let x = traj.dense(s).map_err(|e| EvalError::Other {
            t: s,
            message: e.to_string(),
        })?;
        p.rhs.eval_with(&Bindings::tx(s, x))
    };
    let mut acc = 0.0;
    let mut worst = (traj.samples[0].1 - p.x0).abs();
    for w in traj.samples.windows(2) {
        let (a, b) = (w[0].0, w[1].0);
        acc += j_integral(&p.kernel, p.alpha, &integrand, a, b, cfg)?.value;
        worst = worst.max((w[1].1 - p.x0 - acc).abs());
    }
    Ok(worst)
}
