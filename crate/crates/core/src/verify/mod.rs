//! Property harness: runs algebraic-rule checks over operator, kernel and
//! function grids and collects a pass/fail report.
//!
//! Cases are independent and run in parallel; the report keeps input order,
//! so identical suites give identical reports.

pub mod corpus;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diffops::{
    chain_rule_residual, closed_form, eval_operator, leibniz_defect, EvalConfig, OperatorArgs, OperatorError,
    OperatorSpec, Side,
};
use crate::expr::build::{add, div, mul};
use crate::expr::{diff_classical, Expr};
use crate::integrals::{fundamental_pair_check, PairConfig, QuadError};
use crate::kernels::{Kernel, KernelRegistry};

pub use corpus::{default_suite, CORPUS, DEFAULT_SEED};

/// Smallest `|g(t)|` at which the quotient rule is checked.
pub const QUOTIENT_MIN_DENOMINATOR: f64 = 0.1;
/// A violation property passes when the measured violation exceeds this
/// multiple of its tolerance.
pub const VIOLATION_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropertyId {
    Linearity,
    PowerRule,
    Constant,
    Product,
    Quotient,
    Chain,
    ClosedFormMatch,
    FundamentalA,
    FundamentalB,
    LeibnizDefectModel,
    NonSemigroup,
    KernelDecay,
    KernelClassicalAtInfinity,
}

/// Operator as written in a suite file; mirrors the command-line flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CaseOperator {
    pub op: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<Side>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<String>,
}

impl CaseOperator {
    fn kernel(&self, registry: &KernelRegistry) -> Result<Option<Kernel>, CaseError> {
        match &self.kernel {
            Some(k) => Ok(Some(
                registry.resolve(k).map_err(|e| CaseError::Invalid(e.to_string()))?,
            )),
            None => Ok(None),
        }
    }

    fn build(&self, registry: &KernelRegistry) -> Result<OperatorSpec, CaseError> {
        let args = OperatorArgs {
            op: self.op.clone(),
            kernel: self.kernel(registry)?,
            alpha: self.alpha,
            beta: self.beta,
            r: self.r,
            side: self.side,
            p: self.p.clone(),
        };
        args.build().map_err(|e| CaseError::Invalid(e.to_string()))
    }
}

/// One check.
///
/// `points` are evaluation points, except for the fundamental properties
/// where they are `[t0, t]`. `params` carries property-specific numbers:
/// the exponent `p` for `power_rule`, `[a, b]` for `linearity`, and
/// `sup |f'|` for `kernel_decay`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyCase {
    pub property: PropertyId,
    #[serde(default)]
    pub label: String,
    pub operator: CaseOperator,
    #[serde(default)]
    pub functions: Vec<String>,
    #[serde(default)]
    pub points: Vec<f64>,
    pub tolerance: f64,
    #[serde(default)]
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Suite {
    /// Seed the sampled points came from, recorded in the report.
    #[serde(default)]
    pub seed: Option<u64>,
    pub cases: Vec<PropertyCase>,
}

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("invalid suite file: {0}")]
    Json(#[from] serde_json::Error),
}

impl Suite {
    pub fn from_json(text: &str) -> Result<Suite, SuiteError> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseOutcome {
    pub index: usize,
    pub property: PropertyId,
    pub label: String,
    pub status: Status,
    /// Measured residual (or violation, for the violation properties).
    pub residual: Option<f64>,
    /// Threshold the residual was compared against.
    pub tolerance: f64,
    /// Reason for a skip or failure.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Totals {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub seed: Option<u64>,
    pub totals: Totals,
    pub cases: Vec<CaseOutcome>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.totals.failed == 0
    }
}

#[derive(Debug, Error)]
enum CaseError {
    #[error("invalid case: {0}")]
    Invalid(String),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error("not converged: {0}")]
    NotConverged(String),
}

impl From<crate::expr::EvalError> for CaseError {
    fn from(e: crate::expr::EvalError) -> Self {
        CaseError::Operator(e.into())
    }
}

enum Verdict {
    /// Residual must stay at or below the threshold.
    Within {
        residual: f64,
        threshold: f64,
    },
    /// Violation must exceed the threshold (and the model residual, if any,
    /// must stay within tolerance).
    Violates {
        violation: f64,
        threshold: f64,
        model_residual: Option<(f64, f64)>,
    },
    Skip(String),
}

struct Ctx<'a> {
    case: &'a PropertyCase,
    registry: &'a KernelRegistry,
    cfg: EvalConfig,
}

impl Ctx<'_> {
    fn functions(&self, count: usize) -> Result<Vec<Expr>, CaseError> {
        if self.case.functions.len() != count {
            return Err(CaseError::Invalid(format!(
                "expected {count} function(s), got {}",
                self.case.functions.len()
            )));
        }
        self.case
            .functions
            .iter()
            .map(|s| Expr::parse(s).map_err(|e| CaseError::Invalid(format!("`{s}`: {e}"))))
            .collect()
    }

    fn points(&self) -> Result<&[f64], CaseError> {
        if self.case.points.is_empty() {
            return Err(CaseError::Invalid("no evaluation points".into()));
        }
        Ok(&self.case.points)
    }

    fn spec(&self) -> Result<OperatorSpec, CaseError> {
        self.case.operator.build(self.registry)
    }

    fn additive(&self) -> Result<(OperatorSpec, Kernel, f64), CaseError> {
        let spec = self.spec()?;
        match &spec {
            OperatorSpec::AdditiveN { kernel, alpha } => {
                let (k, a) = (kernel.clone(), *alpha);
                Ok((spec, k, a))
            }
            _ => Err(CaseError::Invalid(format!(
                "{:?} needs the additive operator `n`",
                self.case.property
            ))),
        }
    }

    fn d(&self, spec: &OperatorSpec, f: &Expr, t: f64) -> Result<f64, CaseError> {
        let r = eval_operator(spec, f, t, &self.cfg)?;
        if !r.converged {
            return Err(CaseError::NotConverged(format!(
                "{spec} applied to {f} at t = {t} (value {}, error {:e})",
                r.value, r.error_estimate
            )));
        }
        Ok(r.value)
    }

    fn param(&self, i: usize, what: &str) -> Result<f64, CaseError> {
        self.case
            .params
            .get(i)
            .copied()
            .ok_or_else(|| CaseError::Invalid(format!("missing parameter {what}")))
    }
}

fn scaled(diff: f64, reference: f64) -> f64 {
    diff.abs() / reference.abs().max(1.0)
}

fn max_over<I: IntoIterator<Item = Result<f64, CaseError>>>(it: I) -> Result<f64, CaseError> {
    let mut worst = 0.0f64;
    for r in it {
        let r = r?;
        worst = if r.is_nan() { f64::NAN } else { worst.max(r) };
    }
    Ok(worst)
}

fn evaluate(ctx: &Ctx<'_>) -> Result<Verdict, CaseError> {
    use PropertyId::*;
    let case = ctx.case;
    let tol = case.tolerance;
    let within = |residual: f64| Verdict::Within {
        residual,
        threshold: tol,
    };
    Ok(match case.property {
        ClosedFormMatch => {
            let spec = ctx.spec()?;
            let [f] = <[Expr; 1]>::try_from(ctx.functions(1)?).unwrap();
            let cf = closed_form(&spec, &f)?.ok_or_else(|| CaseError::Invalid(format!("{spec} has no closed form")))?;
            within(max_over(ctx.points()?.iter().map(|&t| {
                let exact = cf.eval(t)?;
                Ok(scaled(ctx.d(&spec, &f, t)? - exact, exact))
            }))?)
        }
        Constant => {
            let spec = ctx.spec()?;
            let [f] = <[Expr; 1]>::try_from(ctx.functions(1)?).unwrap();
            if !f.is_constant() {
                return Err(CaseError::Invalid(format!("`{f}` is not constant")));
            }
            within(max_over(ctx.points()?.iter().map(|&t| Ok(ctx.d(&spec, &f, t)?.abs())))?)
        }
        PowerRule => {
            let (spec, kernel, alpha) = ctx.additive()?;
            let p = ctx.param(0, "p")?;
            let f = Expr::parse(&format!("t^({p})")).map_err(|e| CaseError::Invalid(e.to_string()))?;
            within(max_over(ctx.points()?.iter().map(|&t| {
                let exact = kernel.eval(t, alpha).map_err(OperatorError::from)? * p * t.powf(p - 1.0);
                Ok(scaled(ctx.d(&spec, &f, t)? - exact, exact))
            }))?)
        }
        Linearity => {
            let spec = ctx.spec()?;
            let [f, g] = <[Expr; 2]>::try_from(ctx.functions(2)?).unwrap();
            let (a, b) = (ctx.param(0, "a")?, ctx.param(1, "b")?);
            let combo = add(mul(Expr::Const(a), f.clone()), mul(Expr::Const(b), g.clone()));
            within(max_over(ctx.points()?.iter().map(|&t| {
                let lhs = ctx.d(&spec, &combo, t)?;
                let rhs = a * ctx.d(&spec, &f, t)? + b * ctx.d(&spec, &g, t)?;
                Ok(scaled(lhs - rhs, lhs))
            }))?)
        }
        Product => {
            let (spec, ..) = ctx.additive()?;
            let [f, g] = <[Expr; 2]>::try_from(ctx.functions(2)?).unwrap();
            within(max_over(ctx.points()?.iter().map(|&t| {
                let defect = leibniz_defect(&spec, &f, &g, t, &ctx.cfg)?;
                let reference = ctx.d(&spec, &mul(f.clone(), g.clone()), t)?;
                Ok(scaled(defect, reference))
            }))?)
        }
        Quotient => {
            let (spec, ..) = ctx.additive()?;
            let [f, g] = <[Expr; 2]>::try_from(ctx.functions(2)?).unwrap();
            let mut worst = 0.0f64;
            let mut checked = 0;
            for &t in ctx.points()? {
                let gv = g.eval(t)?;
                if gv.abs() < QUOTIENT_MIN_DENOMINATOR {
                    continue;
                }
                checked += 1;
                let lhs = ctx.d(&spec, &div(f.clone(), g.clone()), t)?;
                let rhs = (gv * ctx.d(&spec, &f, t)? - f.eval(t)? * ctx.d(&spec, &g, t)?) / (gv * gv);
                worst = worst.max(scaled(lhs - rhs, lhs));
            }
            if checked == 0 {
                Verdict::Skip(format!("|g(t)| < {QUOTIENT_MIN_DENOMINATOR} at every point"))
            } else {
                within(worst)
            }
        }
        Chain => {
            let (spec, ..) = ctx.additive()?;
            let [f, g] = <[Expr; 2]>::try_from(ctx.functions(2)?).unwrap();
            within(max_over(ctx.points()?.iter().map(|&t| {
                let residual = chain_rule_residual(&spec, &f, &g, t, &ctx.cfg)?;
                let reference = ctx.d(&spec, &f.compose(&g), t)?;
                Ok(scaled(residual, reference))
            }))?)
        }
        FundamentalA | FundamentalB => {
            let (_, kernel, alpha) = ctx.additive()?;
            let [f] = <[Expr; 1]>::try_from(ctx.functions(1)?).unwrap();
            let [t0, t] = <[f64; 2]>::try_from(ctx.points()?)
                .map_err(|_| CaseError::Invalid("fundamental checks take points [t0, t]".into()))?;
            let pc = PairConfig {
                eval: ctx.cfg,
                ..PairConfig::default()
            };
            let (a, b) = fundamental_pair_check(&kernel, alpha, &f, t0, t, &pc)?;
            within(if case.property == FundamentalA {
                a.abs()
            } else {
                b.abs()
            })
        }
        LeibnizDefectModel => {
            let spec = ctx.spec()?;
            let OperatorSpec::WeightedDH { beta, h, .. } = &spec else {
                return Err(CaseError::Invalid("leibniz_defect_model needs a dh operator".into()));
            };
            let c = h.rate(*beta);
            let [f, g] = <[Expr; 2]>::try_from(ctx.functions(2)?).unwrap();
            let mut model_residual = 0.0f64;
            let mut smallest_violation = f64::INFINITY;
            for &t in ctx.points()? {
                let defect = leibniz_defect(&spec, &f, &g, t, &ctx.cfg)?;
                let model = -c * f.eval(t)? * g.eval(t)?;
                model_residual = model_residual.max((defect - model).abs());
                if model != 0.0 {
                    smallest_violation = smallest_violation.min(defect.abs());
                }
            }
            if smallest_violation.is_infinite() {
                within(model_residual)
            } else {
                Verdict::Violates {
                    violation: smallest_violation,
                    threshold: VIOLATION_FACTOR * tol,
                    model_residual: Some((model_residual, tol)),
                }
            }
        }
        NonSemigroup => {
            let (_, kernel, alpha) = ctx.additive()?;
            let [f] = <[Expr; 1]>::try_from(ctx.functions(1)?).unwrap();
            let big_f = kernel
                .symbolic(alpha)
                .ok_or_else(|| CaseError::Invalid(format!("kernel {kernel} has no symbolic form")))?;
            let df = diff_classical(&f).map_err(OperatorError::from)?;
            let ddf = diff_classical(&df).map_err(OperatorError::from)?;
            let twice = mul(
                big_f.clone(),
                diff_classical(&mul(big_f.clone(), df)).map_err(OperatorError::from)?,
            );
            let squared = mul(mul(big_f.clone(), big_f), ddf);
            let mut smallest = f64::INFINITY;
            for &t in ctx.points()? {
                let (a, b) = (twice.eval(t)?, squared.eval(t)?);
                smallest = smallest.min(scaled(a - b, b));
            }
            Verdict::Violates {
                violation: smallest,
                threshold: VIOLATION_FACTOR * tol,
                model_residual: None,
            }
        }
        KernelDecay => {
            let (spec, _, alpha) = ctx.additive()?;
            let [f] = <[Expr; 1]>::try_from(ctx.functions(1)?).unwrap();
            let sup = ctx.param(0, "sup |f'|")?;
            // the bound itself, checked at every point as |N f| / bound <= 1
            let mut worst = 0.0f64;
            for &t in ctx.points()? {
                let bound = 2.0 * sup * t.powf(-alpha);
                worst = worst.max(ctx.d(&spec, &f, t)?.abs() / bound);
            }
            Verdict::Within {
                residual: worst,
                threshold: 1.0,
            }
        }
        KernelClassicalAtInfinity => {
            let kernel = ctx
                .case
                .operator
                .kernel(ctx.registry)?
                .ok_or_else(|| CaseError::Invalid("needs a kernel".into()))?;
            let alpha = ctx
                .case
                .operator
                .alpha
                .ok_or_else(|| CaseError::Invalid("needs alpha".into()))?;
            within(max_over(ctx.points()?.iter().map(|&t| {
                Ok((kernel.eval(t, alpha).map_err(OperatorError::from)? - 1.0).abs())
            }))?)
        }
    })
}

fn run_case(index: usize, case: &PropertyCase, registry: &KernelRegistry) -> CaseOutcome {
    let mut outcome = CaseOutcome {
        index,
        property: case.property,
        label: case.label.clone(),
        status: Status::Fail,
        residual: None,
        tolerance: case.tolerance,
        detail: None,
    };
    if !(case.tolerance > 0.0) {
        outcome.detail = Some(format!("invalid case: tolerance must be > 0, got {}", case.tolerance));
        return outcome;
    }
    let ctx = Ctx {
        case,
        registry,
        cfg: EvalConfig::default(),
    };
    match evaluate(&ctx) {
        Ok(Verdict::Within { residual, threshold }) => {
            outcome.residual = Some(residual);
            outcome.tolerance = threshold;
            outcome.status = if residual <= threshold {
                Status::Pass
            } else {
                Status::Fail
            };
        }
        Ok(Verdict::Violates {
            violation,
            threshold,
            model_residual,
        }) => {
            outcome.residual = Some(violation);
            outcome.tolerance = threshold;
            let model_ok = model_residual.is_none_or(|(r, tol)| r <= tol);
            outcome.status = if violation > threshold && model_ok {
                Status::Pass
            } else {
                Status::Fail
            };
            if let Some((r, tol)) = model_residual {
                outcome.detail = Some(format!("model residual {r:e} (tolerance {tol:e})"));
            }
        }
        Ok(Verdict::Skip(reason)) => {
            outcome.status = Status::Skipped;
            outcome.detail = Some(reason);
        }
        Err(e) => outcome.detail = Some(e.to_string()),
    }
    outcome
}

/// Run every case and assemble the report in input order.
pub fn run_suite(suite: &Suite) -> Report {
    let registry = KernelRegistry::with_builtins();
    let cases: Vec<CaseOutcome> = suite
        .cases
        .par_iter()
        .enumerate()
        .map(|(i, c)| run_case(i, c, &registry))
        .collect();
    let mut totals = Totals {
        total: cases.len(),
        ..Totals::default()
    };
    for c in &cases {
        match c.status {
            Status::Pass => totals.passed += 1,
            Status::Fail => totals.failed += 1,
            Status::Skipped => totals.skipped += 1,
        }
    }
    Report {
        seed: suite.seed,
        totals,
        cases,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_suite() {
        let r = run_suite(&Suite::default());
        assert_eq!(r.totals, Totals::default());
        assert!(r.cases.is_empty());
    }

    #[test]
    fn leibniz_model_case() {
        let suite = Suite {
            seed: None,
            cases: vec![PropertyCase {
                property: PropertyId::LeibnizDefectModel,
                label: "dh".into(),
                operator: CaseOperator {
                    op: "dh:linear".into(),
                    kernel: Some("classical".into()),
                    beta: Some(0.5),
                    ..Default::default()
                },
                functions: vec!["t".into(), "t".into()],
                points: vec![1.0],
                tolerance: 1e-5,
                params: vec![],
            }],
        };
        let r = run_suite(&suite);
        let c = &r.cases[0];
        assert_eq!(c.status, Status::Pass, "{c:?}");
        assert!((c.residual.unwrap() - 0.5).abs() < 1e-5);
    }

    #[test]
    fn bad_cases_fail_with_detail() {
        let mut case = PropertyCase {
            property: PropertyId::Product,
            label: String::new(),
            operator: CaseOperator {
                op: "mult".into(),
                alpha: Some(0.5),
                ..Default::default()
            },
            functions: vec!["t".into(), "t".into()],
            points: vec![1.0],
            tolerance: 1e-6,
            params: vec![],
        };
        let r = run_suite(&Suite {
            seed: None,
            cases: vec![case.clone()],
        });
        assert_eq!(r.cases[0].status, Status::Fail);
        assert!(r.cases[0].detail.as_deref().unwrap().contains("additive"));
        case.tolerance = 0.0;
        case.operator.op = "n".into();
        case.operator.kernel = Some("nope".into());
        let r = run_suite(&Suite {
            seed: None,
            cases: vec![case],
        });
        assert_eq!(r.totals.failed, 1);
    }

    #[test]
    fn quotient_with_small_denominator_is_skipped() {
        let case = PropertyCase {
            property: PropertyId::Quotient,
            label: String::new(),
            operator: CaseOperator {
                op: "n".into(),
                kernel: Some("conformable".into()),
                alpha: Some(0.5),
                ..Default::default()
            },
            functions: vec!["t".into(), "t - 1".into()],
            points: vec![1.05],
            tolerance: 1e-6,
            params: vec![],
        };
        let r = run_suite(&Suite {
            seed: None,
            cases: vec![case],
        });
        assert_eq!(r.cases[0].status, Status::Skipped);
        assert_eq!(r.totals.skipped, 1);
    }

    #[test]
    fn suite_json_round_trip() {
        let suite = default_suite(3);
        let text = serde_json::to_string(&suite).unwrap();
        assert_eq!(Suite::from_json(&text).unwrap(), suite);
        assert!(Suite::from_json("{\"cases\": 3}").is_err());
    }

    #[test]
    fn default_suite_covers_every_rule_per_kernel() {
        use PropertyId::*;
        let suite = default_suite(DEFAULT_SEED);
        for kernel in corpus::SUITE_KERNELS {
            let of_kernel: Vec<&PropertyCase> = suite
                .cases
                .iter()
                .filter(|c| c.operator.kernel.as_deref() == Some(kernel))
                .collect();
            for p in [Linearity, PowerRule, Constant, Product, Quotient, ClosedFormMatch] {
                assert!(of_kernel.iter().any(|c| c.property == p), "{kernel}: {p:?}");
            }
            assert!(of_kernel
                .iter()
                .any(|c| c.property == ClosedFormMatch && c.operator.alpha == Some(1.0)));
        }
    }

    #[test]
    fn default_suite_depends_only_on_seed() {
        assert_eq!(default_suite(11), default_suite(11));
        assert_ne!(default_suite(11), default_suite(12));
    }
}
