//! Recovery of the Faber-Schauder coefficients of `f` from samples of its
//! antiderivative `F` on a dyadic grid.
//!
//! The quadratic spline through the samples has a closed-form derivative
//! expansion ([`spline_estimator::estimate`]). All coefficients below the
//! finest generation are local and exact for Takagi-class input; the finest
//! generation depends on the assumed `f(0)` and can be dropped with
//! [`spline_estimator::truncate`]. The remaining modules rebuild the
//! underlying matrices and check the error theory numerically.

pub mod dyadic;
pub mod error;
pub mod error_lab;
pub mod faber_basis;
pub mod generators;
pub mod matrix_lab;
pub mod numeric;
pub mod spline_estimator;

pub use dyadic::DyadicIndex;
pub use error::{Error, Result};
pub use faber_basis::{BasisIndex, CoeffSet};
pub use generators::{FunctionSpec, TakagiSpec};
pub use numeric::Norm;
pub use spline_estimator::{EstimateResult, SampleVector};
