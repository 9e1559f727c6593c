//! Numerical verification toolkit for the fractional Laplacian on exterior domains.
//!
//! Modules build bottom-up: quadrature and profiles feed the operator
//! evaluator in [`frackernel`], which drives barrier checks in
//! [`estimates`], the 1D solver in [`maxprinciple`], hypothesis sampling in
//! [`hypotheses`] and the supersolution scans in [`liouville`].

// `!(x > 0.0)` is used throughout to reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimates;
pub mod frackernel;
pub mod fundamentals;
pub mod gamma;
pub mod hypotheses;
pub mod liouville;
pub mod maxprinciple;
pub mod profile;
pub mod quadrature;

pub use error::{FracError, Result};
pub use frackernel::{eval_pointwise, eval_radial, FracParams, OperatorValue, QuadSpec};
pub use profile::{RadialProfile, Term};
