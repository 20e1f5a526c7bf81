//! Numerical toolkit for generalized N-derivatives `N_F^α`: kernels, operator
//! evaluation with Richardson extrapolation, the associated integral, ODE
//! solving and a property verification harness.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diffops;
pub mod expr;
pub mod integrals;
pub mod kernels;
pub mod odes;
pub mod specfun;
pub mod verify;
