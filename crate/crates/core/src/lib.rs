//! Total-variation density estimation under shape constraints.
//!
//! The crate is organised bottom-up:
//!
//! * [`density`]: piecewise constant, piecewise linear and log-linear densities,
//!   generic evaluator-backed densities, exact TV/L1 distances and the
//!   `{q > p}` region algebra.
//! * [`estimator`]: the TV test statistics and the ε-minimizer selection rule.
//! * [`builders`]: data-driven candidate sets and the Grenander baseline.
//! * [`approx`]: constructive approximations with certified L1 bounds, tail
//!   functionals and the budget/bound functions.
//! * [`sim`]: scenario generation, Monte Carlo risk and rate fitting.
//! * [`checks`]: the invariant suites driven by `tvdens check`.
#![forbid(unsafe_code)]
// NaN must fail validation, so `!(x > 0.0)` is deliberate throughout
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod builders;
pub mod checks;
pub mod density;
pub mod estimator;
pub mod interval;
pub mod numeric;
pub mod polyline;
pub mod sample;
pub mod serde_ext;
pub mod sim;

pub use density::{Density, GenericDensity, LogLinear, PiecewiseConstant, PiecewiseLinear};
pub use interval::{Interval, IntervalUnion};
pub use polyline::Polyline;
pub use sample::{Origin, Sample};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("too many candidates: {got} exceeds the cap of {cap}")]
    TooManyCandidates { got: usize, cap: usize },
    #[error("invalid specification: {0}")]
    Spec(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
