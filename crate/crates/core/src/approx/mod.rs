//! Constructive approximations with certified L1 bounds, the tail
//! functionals of monotone densities and the budget/bound functions used by
//! the risk inequalities.

mod budget;
mod convex;
mod curve;
mod logconcave;
mod monotone;
mod tails;

pub use budget::{
    bound_b, bound_b_cvx, bound_b_lc, bound_b_mono, budget_r0, budget_r1, BoundKind, Constants, MixtureComponent,
    MixtureSpec,
};
pub use convex::{
    approx_convex_concave, approx_convex_monotone, approx_convex_strict, chord_error_bounds, linear_index,
    linear_interpolate, ChordBounds, ConvexConcaveApprox,
};
pub use curve::Curve;
pub use logconcave::{approx_logconcave, guerin_interpolation, GuerinCase};
pub use monotone::approx_monotone_pc;
pub use tails::{r_n, tails, tau, tau_infinity, tau_x, tau_y, tilde, truncate_tail, Tails, Truncation};

use serde::Serialize;

use crate::density::Density;
use crate::polyline::Polyline;

/// What an approximation produced: a density, or a plain piecewise-linear
/// function when the construction interpolates a sub-density.
#[derive(Clone, Debug)]
pub enum Approximant {
    Density(Density),
    Polyline(Polyline),
}

impl Approximant {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Approximant::Density(d) => d.eval(x),
            Approximant::Polyline(p) => {
                let (a, b) = p.domain();
                if x < a || x > b {
                    0.0
                } else {
                    p.eval(x)
                }
            }
        }
    }

    /// Breakpoints of the approximant (finite ones only).
    pub fn knots(&self) -> Vec<f64> {
        match self {
            Approximant::Density(d) => d.breakpoints(),
            Approximant::Polyline(p) => p.xs().to_vec(),
        }
    }

    pub fn as_density(&self) -> Option<&Density> {
        match self {
            Approximant::Density(d) => Some(d),
            Approximant::Polyline(_) => None,
        }
    }

    pub fn as_polyline(&self) -> Option<&Polyline> {
        match self {
            Approximant::Polyline(p) => Some(p),
            Approximant::Density(_) => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CertifiedApproximant {
    pub approximant: Approximant,
    /// Certified upper bound on the L1 error.
    pub bound: f64,
    /// Quadrature-measured L1 error.
    pub measured: Option<f64>,
    pub pieces: usize,
}

/// JSON summary of an approximation (what `tvdens approx` prints).
#[derive(Clone, Debug, Serialize)]
pub struct ApproxReport {
    pub method: String,
    pub pieces: usize,
    pub bound: f64,
    pub measured: Option<f64>,
    pub knots: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl CertifiedApproximant {
    /// `measured ≤ bound + tol`, vacuous when nothing was measured.
    pub fn is_sound(&self, tol: f64) -> bool {
        self.measured.map_or(true, |m| m <= self.bound + tol)
    }

    pub fn report(&self, method: &str) -> ApproxReport {
        let (levels, values) = match &self.approximant {
            Approximant::Density(Density::Constant(p)) => (Some(p.levels().to_vec()), None),
            Approximant::Density(Density::Linear(p)) => (None, p.continuous_values()),
            Approximant::Density(Density::LogLinear(p)) => {
                // log-density at each finite knot, from the piece on its right
                // (the last one from the piece on its left)
                let k = p.knots();
                let m = p.pieces();
                let v = (0..=m)
                    .filter(|&j| k[j].is_finite())
                    .map(|j| {
                        let i = j.min(m - 1);
                        p.intercepts()[i] + p.slopes()[i] * k[j]
                    })
                    .collect();
                (None, Some(v))
            }
            Approximant::Polyline(p) => (None, Some(p.ys().to_vec())),
            Approximant::Density(_) => (None, None),
        };
        ApproxReport {
            method: method.to_string(),
            pieces: self.pieces,
            bound: self.bound,
            measured: self.measured,
            knots: self.approximant.knots(),
            levels,
            values,
        }
    }
}
