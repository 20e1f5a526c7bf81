//! Default function corpus and the default property suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CaseOperator, PropertyCase, PropertyId, Suite};

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 0x5eed_1a2b;

/// Sampling range for evaluation points.
pub const CORPUS_RANGE: (f64, f64) = (0.25, 5.0);

/// The twelve corpus functions. All are smooth on `t > 0`.
pub const CORPUS: [&str; 12] = [
    "t",
    "t^2",
    "t^3",
    "t^0.5",
    "sin(t)",
    "cos(t)",
    "exp(t)",
    "ln(t)",
    "1/(1+t^2)",
    "t*sin(t)",
    "exp(-t)",
    "7",
];

/// Orders used by the default suite.
pub const SUITE_ALPHAS: [f64; 3] = [0.1, 0.5, 0.9];
/// Kernels swept by the default suite.
pub const SUITE_KERNELS: [&str; 2] = ["conformable", "nonconformable_exp"];

const POWERS: [f64; 4] = [2.0, 3.0, 0.5, -1.0];
const PAIRS: [(&str, &str); 4] = [
    ("t^2", "sin(t)"),
    ("exp(t)", "t^3"),
    ("ln(t)", "cos(t)"),
    ("t*sin(t)", "1/(1+t^2)"),
];
const QUOTIENTS: [(&str, &str); 4] = [
    ("sin(t)", "t^2"),
    ("exp(t)", "1/(1+t^2)"),
    ("t^0.5", "exp(-t)"),
    ("ln(t)", "cos(t)"),
];
const CHAINS: [(&str, &str); 4] = [
    ("sin(t)", "t^2"),
    ("exp(t)", "ln(t)"),
    ("t^3", "cos(t)"),
    ("cos(t)", "t^0.5"),
];

struct Sampler(ChaCha8Rng);

impl Sampler {
    fn point(&mut self) -> f64 {
        self.0.gen_range(CORPUS_RANGE.0..CORPUS_RANGE.1)
    }

    fn points(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.point()).collect()
    }

    fn coefficient(&mut self) -> f64 {
        self.0.gen_range(-3.0..3.0)
    }
}

fn n_op(kernel: &str, alpha: f64) -> CaseOperator {
    CaseOperator {
        op: "n".into(),
        kernel: Some(kernel.into()),
        alpha: Some(alpha),
        ..Default::default()
    }
}

fn case(
    property: PropertyId,
    label: String,
    operator: CaseOperator,
    functions: &[&str],
    points: Vec<f64>,
    tolerance: f64,
    params: Vec<f64>,
) -> PropertyCase {
    PropertyCase {
        property,
        label,
        operator,
        functions: functions.iter().map(|s| s.to_string()).collect(),
        points,
        tolerance,
        params,
    }
}

/// The default suite: linearity, power, constant, product and quotient rules and the
/// integer-order closed form for every suite kernel and order, plus
/// the chain rule and fundamental pair, and the model cases for the weighted
/// family, composition and kernel limits.
pub fn default_suite(seed: u64) -> Suite {
    use PropertyId::*;
    let mut rng = Sampler(ChaCha8Rng::seed_from_u64(seed));
    let mut cases = Vec::new();

    for kernel in SUITE_KERNELS {
        for alpha in SUITE_ALPHAS {
            let op = || n_op(kernel, alpha);
            let tag = format!("{kernel} alpha={alpha}");
            for f in CORPUS {
                cases.push(case(
                    ClosedFormMatch,
                    format!("{tag}: N({f}) = F f'"),
                    op(),
                    &[f],
                    rng.points(3),
                    1e-6,
                    vec![],
                ));
            }
            for c in ["7", "-2.5"] {
                cases.push(case(
                    Constant,
                    format!("{tag}: N({c}) = 0"),
                    op(),
                    &[c],
                    rng.points(3),
                    1e-9,
                    vec![],
                ));
            }
            for p in POWERS {
                let f = format!("t^{p}");
                cases.push(case(
                    PowerRule,
                    format!("{tag}: N({f})"),
                    op(),
                    &[&f],
                    rng.points(3),
                    1e-6,
                    vec![p],
                ));
            }
            for (f, g) in PAIRS {
                let (a, b) = (rng.coefficient(), rng.coefficient());
                cases.push(case(
                    Linearity,
                    format!("{tag}: N(a {f} + b {g})"),
                    op(),
                    &[f, g],
                    rng.points(3),
                    1e-6,
                    vec![a, b],
                ));
                cases.push(case(
                    Product,
                    format!("{tag}: N({f} * {g})"),
                    op(),
                    &[f, g],
                    rng.points(3),
                    1e-6,
                    vec![],
                ));
            }
            for (f, g) in QUOTIENTS {
                cases.push(case(
                    Quotient,
                    format!("{tag}: N({f} / {g})"),
                    op(),
                    &[f, g],
                    rng.points(3),
                    1e-6,
                    vec![],
                ));
            }
            for (f, g) in CHAINS {
                cases.push(case(
                    Chain,
                    format!("{tag}: N({f} o {g})"),
                    op(),
                    &[f, g],
                    rng.points(3),
                    1e-5,
                    vec![],
                ));
            }
            for f in CORPUS {
                let t0 = rng.0.gen_range(0.25..1.0);
                let t = rng.0.gen_range(t0 + 0.5..CORPUS_RANGE.1);
                cases.push(case(
                    FundamentalA,
                    format!("{tag}: J(N {f})"),
                    op(),
                    &[f],
                    vec![t0, t],
                    1e-5,
                    vec![],
                ));
                cases.push(case(
                    FundamentalB,
                    format!("{tag}: N(J {f})"),
                    op(),
                    &[f],
                    vec![t0, t],
                    1e-5,
                    vec![],
                ));
            }
        }
        // Integer order.
        for f in CORPUS {
            cases.push(case(
                ClosedFormMatch,
                format!("{kernel} alpha=1: N({f}) = F(t,1) f'"),
                n_op(kernel, 1.0),
                &[f],
                rng.points(3),
                1e-6,
                vec![],
            ));
        }
    }

    // F ≡ 1 reduces to the ordinary derivative.
    for f in CORPUS {
        cases.push(case(
            ClosedFormMatch,
            format!("classical: N({f}) = f'"),
            n_op("classical", 0.5),
            &[f],
            rng.points(3),
            1e-6,
            vec![],
        ));
    }

    let dh = |beta: f64| CaseOperator {
        op: "dh:linear".into(),
        kernel: Some("classical".into()),
        beta: Some(beta),
        ..Default::default()
    };
    cases.push(case(
        LeibnizDefectModel,
        "dh:linear beta=0.5: f = g = t".into(),
        dh(0.5),
        &["t", "t"],
        vec![1.0],
        1e-5,
        vec![],
    ));
    cases.push(case(
        LeibnizDefectModel,
        "dh:linear beta=0.25: f = sin(t), g = t^2".into(),
        dh(0.25),
        &["sin(t)", "t^2"],
        rng.points(3),
        1e-5,
        vec![],
    ));
    cases.push(case(
        NonSemigroup,
        "nonconformable_exp alpha=0.5: F (F f')' vs F^2 f'' on t^3".into(),
        n_op("nonconformable_exp", 0.5),
        &["t^3"],
        vec![1.0],
        1e-4,
        vec![],
    ));
    for f in ["sin(t)", "cos(t)", "exp(-t)"] {
        cases.push(case(
            KernelDecay,
            format!("reciprocal_power alpha=0.5: |N {f}| <= 2 sup|f'| t^-alpha"),
            n_op("reciprocal_power", 0.5),
            &[f],
            vec![1e3, 1e6],
            1e-6,
            vec![1.0],
        ));
    }
    cases.push(case(
        KernelClassicalAtInfinity,
        "one_plus_reciprocal alpha=0.5: F(1e12) -> 1".into(),
        n_op("one_plus_reciprocal", 0.5),
        &[],
        vec![1e12],
        1e-6,
        vec![],
    ));

    Suite {
        seed: Some(seed),
        cases,
    }
}
