//! One function per subcommand. Each returns an [`Output`] plus an optional
//! deferred failure (for results that are printed and still flagged).

use std::time::Instant;

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use localfrac::diffops::{eval_at_zero, eval_operator, Direction, EvalConfig, OperatorArgs, OperatorSpec, Side};
use localfrac::expr::Expr;
use localfrac::integrals::{j_integral, QuadConfig};
use localfrac::kernels::KernelRegistry;
use localfrac::odes::{picard_residual, solve_ivp, IVProblem, StepConfig};
use localfrac::specfun::{mittag_leffler, SeriesConfig};
use localfrac::verify::{default_suite, run_suite, Status, Suite, DEFAULT_SEED};

use crate::config::Config;
use crate::error::CliError;
use crate::format::{Cell, Format, Output};

/// Picard residual above which `solve --picard-check` fails.
pub const PICARD_LIMIT: f64 = 1e-4;
/// Environment variable overriding the default verify seed.
pub const SEED_ENV: &str = "LOCALFRAC_SEED";

pub struct Done {
    pub output: Output,
    pub default_format: Format,
    /// Reported after the output is written.
    pub failure: Option<CliError>,
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Object builder that skips absent values.
#[derive(Default)]
struct Inputs(Map<String, Value>);

impl Inputs {
    fn put(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.0.insert(key.into(), v.into());
        self
    }

    fn opt<T: Into<Value>>(self, key: &str, v: Option<T>) -> Self {
        match v {
            Some(v) => self.put(key, v),
            None => self,
        }
    }

    fn value(self) -> Value {
        Value::Object(self.0)
    }
}

fn parse_expr(text: &str) -> Result<Expr, CliError> {
    Expr::parse(text).map_err(|e| CliError::Input(format!("`{text}`: {e}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    Left,
    Right,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Side {
        match s {
            SideArg::Left => Side::Left,
            SideArg::Right => Side::Right,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Plus,
    Minus,
    Symmetric,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Direction {
        match d {
            DirectionArg::Plus => Direction::Plus,
            DirectionArg::Minus => Direction::Minus,
            DirectionArg::Symmetric => Direction::Symmetric,
        }
    }
}

/// Limit-engine settings.
#[derive(Debug, Clone, Args)]
pub struct EngineFlags {
    /// Initial increment h0 [default: 2^-10 max(1, |t|), scaled down by large kernel values]
    #[arg(long)]
    pub base_step: Option<f64>,
    /// Richardson levels (2 to 12) [default: 6]
    #[arg(long)]
    pub levels: Option<usize>,
    /// Convergence tolerance relative to max(1, |value|) [default: 1e-7]
    #[arg(long)]
    pub rel_tol: Option<f64>,
    /// Side the increments approach from
    #[arg(long, value_enum, default_value = "plus")]
    pub direction: DirectionArg,
}

impl EngineFlags {
    fn config(&self, cfg: &Config) -> Result<EvalConfig, CliError> {
        let d = EvalConfig::default();
        let c = EvalConfig {
            base_step: self.base_step.or(cfg.base_step),
            levels: self.levels.or(cfg.levels).unwrap_or(d.levels),
            rel_tol: self.rel_tol.or(cfg.rel_tol).unwrap_or(d.rel_tol),
            direction: self.direction.into(),
        };
        c.validate()?;
        Ok(c)
    }

    fn echo(&self, c: &EvalConfig) -> Value {
        Inputs::default()
            .opt("base_step", c.base_step)
            .put("levels", c.levels)
            .put("rel_tol", c.rel_tol)
            .put("direction", format!("{:?}", self.direction).to_lowercase())
            .value()
    }
}

/// Operator selection shared by `deriv` and `compare`.
#[derive(Debug, Clone, Args)]
pub struct OperatorFlags {
    /// Weighted family parameter (dh:*); alpha = 1 - beta
    #[arg(long)]
    pub beta: Option<f64>,
    /// Exponent of dh:power
    #[arg(long)]
    pub r: Option<f64>,
    /// Side of the yang quotient
    #[arg(long, value_enum)]
    pub side: Option<SideArg>,
    /// Increment map p(t, h) of operator p, e.g. "t + h*t^(1-alpha)"
    #[arg(long)]
    pub p: Option<String>,
}

fn build_operator(
    registry: &KernelRegistry,
    op: &str,
    kernel: Option<&str>,
    alpha: Option<f64>,
    flags: &OperatorFlags,
) -> Result<OperatorSpec, CliError> {
    let kernel = kernel.map(|k| registry.resolve(k)).transpose()?;
    let args = OperatorArgs {
        op: op.to_string(),
        kernel,
        alpha,
        beta: flags.beta,
        r: flags.r,
        side: flags.side.map(Side::from),
        p: flags.p.clone(),
    };
    Ok(args.build()?)
}

fn evaluate(spec: &OperatorSpec, f: &Expr, t: f64, cfg: &EvalConfig) -> Result<(f64, f64, bool), CliError> {
    let r = if t == 0.0 {
        eval_at_zero(spec, f, cfg)?
    } else {
        eval_operator(spec, f, t, cfg)?
    };
    Ok((r.value, r.error_estimate, r.converged))
}

fn unconverged(what: String) -> CliError {
    CliError::Numeric(format!("{what} did not converge (pass --allow-unconverged to accept)"))
}

// ---------------------------------------------------------------- ml

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct MlArgs {
    #[arg(long)]
    pub a: f64,
    #[arg(long)]
    pub b: f64,
    #[arg(long)]
    pub z: f64,
    /// Series truncation tolerance [default: 1e-12]
    #[arg(long)]
    pub tol: Option<f64>,
    /// Maximum series terms [default: 1000]
    #[arg(long)]
    pub max_terms: Option<usize>,
}

pub fn ml(args: &MlArgs, cfg: &Config) -> Result<Done, CliError> {
    let start = Instant::now();
    let d = SeriesConfig::default();
    let series = SeriesConfig::new(
        args.tol.or(cfg.ml_tol).unwrap_or(d.tol),
        args.max_terms.or(cfg.ml_max_terms).unwrap_or(d.max_terms),
    )?;
    let value = mittag_leffler(args.a, args.b, args.z, &series)?;
    let json = json!({
        "command": "ml",
        "inputs": {"a": args.a, "b": args.b, "z": args.z, "tol": series.tol, "max_terms": series.max_terms},
        "value": value,
        "converged": true,
        "elapsed_ms": elapsed_ms(start),
    });
    Ok(Done {
        output: Output {
            json,
            header: vec!["a", "b", "z", "value"],
            rows: vec![vec![args.a.into(), args.b.into(), args.z.into(), value.into()]],
        },
        default_format: Format::Json,
        failure: None,
    })
}

// ---------------------------------------------------------------- deriv

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
#[group(id = "where", required = true, args = ["at", "grid"])]
pub struct DerivArgs {
    /// Operator: n, mult, point-quotient, yang, g, p, dh:linear, dh:power, dh:exp
    #[arg(long, default_value = "n")]
    pub op: String,
    /// Kernel name, optionally with parameters, e.g. mellin_ross:a=2
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[command(flatten)]
    pub operator: OperatorFlags,
    /// Function of t
    #[arg(long)]
    pub expr: String,
    /// Evaluation point; 0 evaluates the limit t -> 0+
    #[arg(long)]
    pub at: Option<f64>,
    /// Grid start:stop:n (n equally spaced points, endpoints included)
    #[arg(long)]
    pub grid: Option<String>,
    /// Exit 0 even when a limit is not converged
    #[arg(long)]
    pub allow_unconverged: bool,
    #[command(flatten)]
    pub engine: EngineFlags,
}

pub fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Input(format!("grid must be start:stop:n, got `{text}`"));
    let parts: Vec<&str> = text.split(':').collect();
    let [a, b, n] = parts[..] else { return Err(bad()) };
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if n == 0 || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
}

pub fn deriv(args: &DerivArgs, cfg: &Config) -> Result<Done, CliError> {
    let start = Instant::now();
    let registry = KernelRegistry::with_builtins();
    let spec = build_operator(&registry, &args.op, args.kernel.as_deref(), args.alpha, &args.operator)?;
    let eval_cfg = args.engine.config(cfg)?;
    let f = parse_expr(&args.expr)?;
    let points = match (&args.grid, args.at) {
        (Some(g), _) => parse_grid(g)?,
        (None, Some(t)) => vec![t],
        (None, None) => return Err(CliError::Input("one of --at or --grid is required".into())),
    };
    let results: Vec<(f64, f64, bool)> = points
        .par_iter()
        .map(|&t| evaluate(&spec, &f, t, &eval_cfg))
        .collect::<Result<_, _>>()?;

    let inputs = Inputs::default()
        .put("op", args.op.clone())
        .opt("kernel", args.kernel.clone())
        .opt("alpha", args.alpha)
        .opt("beta", args.operator.beta)
        .opt("r", args.operator.r)
        .opt("side", args.operator.side.map(|s| format!("{s:?}").to_lowercase()))
        .opt("p", args.operator.p.clone())
        .put("expr", args.expr.clone())
        .opt("at", args.at)
        .opt("grid", args.grid.clone())
        .put("engine", args.engine.echo(&eval_cfg))
        .value();
    let all_converged = results.iter().all(|r| r.2);
    let mut json = json!({
        "command": "deriv",
        "inputs": inputs,
        "operator": spec.to_string(),
    });
    let obj = json.as_object_mut().expect("object");
    if args.grid.is_some() {
        let pts: Vec<Value> = points
            .iter()
            .zip(&results)
            .map(|(t, (v, e, c))| json!({"t": t, "value": v, "error_estimate": e, "converged": c}))
            .collect();
        obj.insert("points".into(), Value::Array(pts));
    } else {
        let (v, e, _) = results[0];
        obj.insert("t".into(), json!(points[0]));
        obj.insert("value".into(), json!(v));
        obj.insert("error_estimate".into(), json!(e));
    }
    obj.insert("converged".into(), json!(all_converged));
    obj.insert("elapsed_ms".into(), json!(elapsed_ms(start)));

    let rows = points
        .iter()
        .zip(&results)
        .map(|(t, (v, e, c))| vec![(*t).into(), (*v).into(), (*e).into(), (*c).into()])
        .collect();
    let failure =
        (!all_converged && !args.allow_unconverged).then(|| unconverged(format!("{spec} on `{}`", args.expr)));
    Ok(Done {
        output: Output {
            json,
            header: vec!["t", "value", "err", "converged"],
            rows,
        },
        default_format: if args.grid.is_some() { Format::Csv } else { Format::Json },
        failure,
    })
}

// ---------------------------------------------------------------- compare

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct CompareArgs {
    /// Function of t
    #[arg(long)]
    pub expr: String,
    #[arg(long)]
    pub at: f64,
    /// Order for every definition except dh:*, whose order is 1 - beta
    #[arg(long)]
    pub alpha: f64,
    /// Definition to compare (repeatable): a kernel name (operator n), an
    /// operator name, or OP/KERNEL [default: the seven built-in kernels and mult]
    #[arg(long = "def")]
    pub defs: Vec<String>,
    #[command(flatten)]
    pub operator: OperatorFlags,
    /// Exit 0 even when a limit is not converged
    #[arg(long)]
    pub allow_unconverged: bool,
    #[command(flatten)]
    pub engine: EngineFlags,
}

const OPERATOR_NAMES: [&str; 9] = [
    "n",
    "mult",
    "point-quotient",
    "yang",
    "g",
    "p",
    "dh:linear",
    "dh:power",
    "dh:exp",
];

fn default_defs() -> Vec<String> {
    let mut defs: Vec<String> = localfrac::kernels::builtin_kernels()
        .iter()
        .map(|k| k.name().split('(').next().unwrap_or_default().to_string())
        .collect();
    defs.push("mult".into());
    defs
}

fn split_def(def: &str) -> (String, Option<String>) {
    if let Some((op, kernel)) = def.split_once('/') {
        return (op.trim().to_string(), Some(kernel.trim().to_string()));
    }
    if OPERATOR_NAMES.contains(&def.trim()) {
        (def.trim().to_string(), None)
    } else {
        ("n".to_string(), Some(def.trim().to_string()))
    }
}

pub fn compare(args: &CompareArgs, cfg: &Config) -> Result<Done, CliError> {
    let start = Instant::now();
    let registry = KernelRegistry::with_builtins();
    let eval_cfg = args.engine.config(cfg)?;
    let f = parse_expr(&args.expr)?;
    let defs = if args.defs.is_empty() {
        default_defs()
    } else {
        args.defs.clone()
    };
    let specs: Vec<(String, OperatorSpec)> = defs
        .iter()
        .map(|d| {
            let (op, kernel) = split_def(d);
            let alpha = (!op.starts_with("dh")).then_some(args.alpha);
            build_operator(&registry, &op, kernel.as_deref(), alpha, &args.operator).map(|s| (d.clone(), s))
        })
        .collect::<Result<_, _>>()?;
    let results: Vec<(f64, f64, bool)> = specs
        .par_iter()
        .map(|(_, s)| evaluate(s, &f, args.at, &eval_cfg))
        .collect::<Result<_, _>>()?;

    let all_converged = results.iter().all(|r| r.2);
    let rows_json: Vec<Value> = specs
        .iter()
        .zip(&results)
        .map(|((d, s), (v, e, c))| {
            json!({"definition": d, "operator": s.to_string(), "value": v, "error_estimate": e, "converged": c})
        })
        .collect();
    let json = json!({
        "command": "compare",
        "inputs": Inputs::default()
            .put("expr", args.expr.clone())
            .put("at", args.at)
            .put("alpha", args.alpha)
            .opt("beta", args.operator.beta)
            .opt("r", args.operator.r)
            .opt("p", args.operator.p.clone())
            .put("definitions", defs.clone())
            .put("engine", args.engine.echo(&eval_cfg))
            .value(),
        "rows": rows_json,
        "converged": all_converged,
        "elapsed_ms": elapsed_ms(start),
    });
    let rows = specs
        .iter()
        .zip(&results)
        .map(|((d, s), (v, e, c))| {
            vec![
                d.as_str().into(),
                s.to_string().into(),
                (*v).into(),
                (*e).into(),
                (*c).into(),
            ]
        })
        .collect();
    let failure =
        (!all_converged && !args.allow_unconverged).then(|| unconverged(format!("a definition on `{}`", args.expr)));
    Ok(Done {
        output: Output {
            json,
            header: vec!["definition", "operator", "value", "err", "converged"],
            rows,
        },
        default_format: Format::Csv,
        failure,
    })
}

// ---------------------------------------------------------------- integrate

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct IntegrateArgs {
    #[arg(long)]
    pub kernel: String,
    #[arg(long)]
    pub alpha: f64,
    /// Integrand, a function of t
    #[arg(long)]
    pub expr: String,
    /// Lower limit t0
    #[arg(long)]
    pub from: f64,
    /// Upper limit t
    #[arg(long)]
    pub to: f64,
    /// [default: 1e-10]
    #[arg(long)]
    pub abs_tol: Option<f64>,
    /// [default: 1e-8]
    #[arg(long)]
    pub rel_tol: Option<f64>,
    /// [default: 100000]
    #[arg(long)]
    pub max_subdivisions: Option<usize>,
}

fn quad_config(abs: Option<f64>, rel: Option<f64>, max: Option<usize>, cfg: &Config) -> QuadConfig {
    let d = QuadConfig::default();
    QuadConfig {
        abs_tol: abs.or(cfg.quad_abs_tol).unwrap_or(d.abs_tol),
        rel_tol: rel.or(cfg.quad_rel_tol).unwrap_or(d.rel_tol),
        max_subdivisions: max.or(cfg.max_subdivisions).unwrap_or(d.max_subdivisions),
    }
}

pub fn integrate(args: &IntegrateArgs, cfg: &Config) -> Result<Done, CliError> {
    let start = Instant::now();
    let kernel = KernelRegistry::with_builtins().resolve(&args.kernel)?;
    let f = parse_expr(&args.expr)?;
    let quad = quad_config(args.abs_tol, args.rel_tol, args.max_subdivisions, cfg);
    let r = j_integral(&kernel, args.alpha, &f, args.from, args.to, &quad)?;
    let json = json!({
        "command": "integrate",
        "inputs": {
            "kernel": args.kernel, "alpha": args.alpha, "expr": args.expr, "from": args.from, "to": args.to,
            "abs_tol": quad.abs_tol, "rel_tol": quad.rel_tol, "max_subdivisions": quad.max_subdivisions,
        },
        "value": r.value,
        "error_estimate": r.error_estimate,
        "subdivisions_used": r.subdivisions_used,
        "converged": true,
        "elapsed_ms": elapsed_ms(start),
    });
    Ok(Done {
        output: Output {
            json,
            header: vec!["from", "to", "value", "err", "subdivisions"],
            rows: vec![vec![
                args.from.into(),
                args.to.into(),
                r.value.into(),
                r.error_estimate.into(),
                Cell::Int(r.subdivisions_used as u64),
            ]],
        },
        default_format: Format::Json,
        failure: None,
    })
}

// ---------------------------------------------------------------- solve

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct SolveArgs {
    #[arg(long)]
    pub kernel: String,
    #[arg(long)]
    pub alpha: f64,
    /// Right-hand side g(t, x)
    #[arg(long)]
    pub rhs: String,
    #[arg(long)]
    pub t0: f64,
    #[arg(long)]
    pub x0: f64,
    #[arg(long)]
    pub t_end: f64,
    /// Also compute the Picard residual; exit 3 if it exceeds 1e-4
    #[arg(long)]
    pub picard_check: bool,
    /// [default: 1e-8]
    #[arg(long)]
    pub rel_tol: Option<f64>,
    /// [default: 1e-10]
    #[arg(long)]
    pub abs_tol: Option<f64>,
    /// First trial step [default: 1% of the interval]
    #[arg(long)]
    pub initial_step: Option<f64>,
    /// Plain RK4 with this step, no error control
    #[arg(long)]
    pub fixed_step: Option<f64>,
    /// [default: 1000000]
    #[arg(long)]
    pub max_steps: Option<usize>,
}

pub fn solve(args: &SolveArgs, cfg: &Config) -> Result<Done, CliError> {
    let start = Instant::now();
    let kernel = KernelRegistry::with_builtins().resolve(&args.kernel)?;
    let p = IVProblem::parse(kernel, args.alpha, &args.rhs, args.t0, args.x0, args.t_end)?;
    let d = StepConfig::default();
    let step = StepConfig {
        rel_tol: args.rel_tol.or(cfg.ode_rel_tol).unwrap_or(d.rel_tol),
        abs_tol: args.abs_tol.or(cfg.ode_abs_tol).unwrap_or(d.abs_tol),
        initial_step: args.initial_step,
        max_steps: args.max_steps.or(cfg.max_steps).unwrap_or(d.max_steps),
        fixed_step: args.fixed_step,
    };
    let traj = solve_ivp(&p, &step)?;
    let picard = if args.picard_check {
        Some(picard_residual(&p, &traj, &quad_config(None, None, None, cfg))?)
    } else {
        None
    };
    let (ts, xs): (Vec<f64>, Vec<f64>) = traj.samples.iter().copied().unzip();
    let mut json = json!({
        "command": "solve",
        "inputs": Inputs::default()
            .put("kernel", args.kernel.clone())
            .put("alpha", args.alpha)
            .put("rhs", args.rhs.clone())
            .put("t0", args.t0)
            .put("x0", args.x0)
            .put("t_end", args.t_end)
            .put("rel_tol", step.rel_tol)
            .put("abs_tol", step.abs_tol)
            .opt("initial_step", step.initial_step)
            .opt("fixed_step", step.fixed_step)
            .put("max_steps", step.max_steps)
            .value(),
        "t": ts,
        "x": xs,
        "final_value": traj.final_value(),
        "accepted_steps": traj.accepted_steps,
        "rejected_steps": traj.rejected_steps,
        "max_local_error_estimate": traj.max_local_error_estimate,
        "converged": true,
    });
    let obj = json.as_object_mut().expect("object");
    if let Some(r) = picard {
        obj.insert("picard_residual".into(), json!(r));
    }
    obj.insert("elapsed_ms".into(), json!(elapsed_ms(start)));
    let failure = picard
        .filter(|r| !(*r <= PICARD_LIMIT))
        .map(|r| CliError::Numeric(format!("Picard residual {r:e} exceeds {PICARD_LIMIT:e}")));
    Ok(Done {
        output: Output {
            json,
            header: vec!["t", "x"],
            rows: traj
                .samples
                .iter()
                .map(|(t, x)| vec![(*t).into(), (*x).into()])
                .collect(),
        },
        default_format: Format::Csv,
        failure,
    })
}

/// Picard residual of a finished `solve` run, for the non-JSON formats.
pub fn picard_note(done: &Done) -> Option<String> {
    done.output
        .json
        .get("picard_residual")
        .map(|r| format!("picard_residual = {r}"))
}

// ---------------------------------------------------------------- verify

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// `default` or a path to a JSON suite file
    #[arg(long, default_value = "default")]
    pub suite: String,
    /// Seed of the default suite [default: $LOCALFRAC_SEED, then the built-in seed]
    #[arg(long)]
    pub seed: Option<u64>,
}

fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Input(format!("{SEED_ENV} must be an unsigned integer, got `{s}`"))),
        Err(_) => Ok(None),
    }
}

pub fn verify(args: &VerifyArgs, cfg: &Config) -> Result<Done, CliError> {
    let suite = if args.suite == "default" {
        let seed = match args.seed {
            Some(s) => s,
            None => env_seed()?.or(cfg.seed).unwrap_or(DEFAULT_SEED),
        };
        default_suite(seed)
    } else {
        let text = std::fs::read_to_string(&args.suite)
            .map_err(|e| CliError::Input(format!("cannot read suite {}: {e}", args.suite)))?;
        Suite::from_json(&text)?
    };
    let report = run_suite(&suite);
    let report_json = serde_json::to_value(&report).map_err(|e| CliError::Numeric(e.to_string()))?;
    // No timing field: reports of identical runs are byte-identical.
    let json = json!({
        "command": "verify",
        "inputs": Inputs::default().put("suite", args.suite.clone()).opt("seed", report.seed).value(),
        "converged": report.all_passed(),
        "report": report_json,
    });
    let rows = report
        .cases
        .iter()
        .map(|c| {
            let status = match c.status {
                Status::Pass => "pass",
                Status::Fail => "fail",
                Status::Skipped => "skipped",
            };
            vec![
                Cell::Int(c.index as u64),
                serde_json::to_value(c.property)
                    .ok()
                    .and_then(|v| v.as_str().map(String::from))
                    .unwrap_or_default()
                    .into(),
                status.into(),
                c.residual.into(),
                c.tolerance.into(),
                c.label.as_str().into(),
                c.detail.clone().unwrap_or_default().into(),
            ]
        })
        .collect();
    let failure = (!report.all_passed()).then(|| {
        CliError::Numeric(format!(
            "{} of {} cases failed",
            report.totals.failed, report.totals.total
        ))
    });
    Ok(Done {
        output: Output {
            json,
            header: vec![
                "index",
                "property",
                "status",
                "residual",
                "tolerance",
                "label",
                "detail",
            ],
            rows,
        },
        default_format: Format::Json,
        failure,
    })
}
