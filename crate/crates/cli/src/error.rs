//! Command errors and their exit codes.

use localfrac::diffops::OperatorError;
use localfrac::expr::{EvalError, ParseError};
use localfrac::integrals::QuadError;
use localfrac::kernels::KernelError;
use localfrac::odes::OdeError;
use localfrac::specfun::SpecFunError;
use localfrac::verify::SuiteError;

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad flags, unknown names, unparsable input, domain violations.
    Input(String),
    /// The computation ran but did not produce a trustworthy number.
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Numeric(m) => m,
        }
    }
}

fn numeric_if(numeric: bool, message: String) -> CliError {
    if numeric {
        CliError::Numeric(message)
    } else {
        CliError::Input(message)
    }
}

fn special_is_numeric(e: &SpecFunError) -> bool {
    matches!(e, SpecFunError::NonConvergence { .. } | SpecFunError::Overflow(_))
}

fn kernel_is_numeric(e: &KernelError) -> bool {
    match e {
        KernelError::Overflow { .. } | KernelError::NonPositive { .. } => true,
        KernelError::Special { source, .. } => special_is_numeric(source),
        _ => false,
    }
}

fn eval_is_numeric(e: &EvalError) -> bool {
    matches!(e, EvalError::Other { .. })
}

fn operator_is_numeric(e: &OperatorError) -> bool {
    match e {
        OperatorError::Kernel(k) => kernel_is_numeric(k),
        OperatorError::Eval(v) => eval_is_numeric(v),
        OperatorError::Special(s) => special_is_numeric(s),
        _ => false,
    }
}

fn quad_is_numeric(e: &QuadError) -> bool {
    match e {
        QuadError::Kernel(k) => kernel_is_numeric(k),
        QuadError::Eval(v) => eval_is_numeric(v),
        QuadError::Operator(o) => operator_is_numeric(o),
        QuadError::NonIntegrableSingularity { .. }
        | QuadError::SubdivisionLimit { .. }
        | QuadError::ToleranceNotMet { .. } => true,
        QuadError::InvalidConfig(_) | QuadError::InvalidInterval { .. } => false,
    }
}

fn ode_is_numeric(e: &OdeError) -> bool {
    match e {
        OdeError::StepUnderflow { .. } | OdeError::TooManySteps(_) => true,
        OdeError::Kernel(k) => kernel_is_numeric(k),
        OdeError::Eval(v) => eval_is_numeric(v),
        OdeError::Quad(q) => quad_is_numeric(q),
        _ => false,
    }
}

impl From<SpecFunError> for CliError {
    fn from(e: SpecFunError) -> Self {
        numeric_if(special_is_numeric(&e), e.to_string())
    }
}

impl From<KernelError> for CliError {
    fn from(e: KernelError) -> Self {
        numeric_if(kernel_is_numeric(&e), e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        numeric_if(eval_is_numeric(&e), e.to_string())
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<OperatorError> for CliError {
    fn from(e: OperatorError) -> Self {
        numeric_if(operator_is_numeric(&e), e.to_string())
    }
}

impl From<QuadError> for CliError {
    fn from(e: QuadError) -> Self {
        numeric_if(quad_is_numeric(&e), e.to_string())
    }
}

impl From<OdeError> for CliError {
    fn from(e: OdeError) -> Self {
        numeric_if(ode_is_numeric(&e), e.to_string())
    }
}

impl From<SuiteError> for CliError {
    fn from(e: SuiteError) -> Self {
        CliError::Input(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification() {
        let nc = SpecFunError::NonConvergence {
            a: 0.5,
            b: 1.0,
            z: 1e9,
            detail: String::new(),
        };
        assert_eq!(CliError::from(nc).exit_code(), EXIT_NUMERIC);
        assert_eq!(CliError::from(SpecFunError::Pole(0.0)).exit_code(), EXIT_INPUT);
        assert_eq!(CliError::from(KernelError::Unknown("x".into())).exit_code(), EXIT_INPUT);
        assert_eq!(
            CliError::from(OdeError::StepUnderflow { t: 1.0, h: 0.0 }).exit_code(),
            EXIT_NUMERIC
        );
        let q = QuadError::SubdivisionLimit {
            limit: 10,
            error_estimate: 1.0,
        };
        assert_eq!(CliError::from(OdeError::Quad(q)).exit_code(), EXIT_NUMERIC);
        assert_eq!(
            CliError::from(OperatorError::InvalidSpec("x".into())).exit_code(),
            EXIT_INPUT
        );
    }
}
