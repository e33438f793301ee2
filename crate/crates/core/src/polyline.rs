//! Continuous piecewise-linear functions (not necessarily densities), hulls
//! and chord interpolation.

use crate::{domain, Result};

/// Continuous piecewise-linear function through `(xs[i], ys[i])`, defined on
/// `[xs[0], xs[last]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polyline {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Polyline {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != ys.len() {
            return domain("a polyline needs at least two vertices and one value per vertex");
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) || xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return domain("polyline vertices must be finite with increasing abscissae");
        }
        Ok(Polyline { xs, ys })
    }

    /// The D-linear interpolation of `f` at `knots`.
    pub fn interpolate(f: impl Fn(f64) -> f64, knots: &[f64]) -> Result<Self> {
        Polyline::new(knots.to_vec(), knots.iter().map(|&x| f(x)).collect())
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn pieces(&self) -> usize {
        self.xs.len() - 1
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    pub fn slope(&self, j: usize) -> f64 {
        (self.ys[j + 1] - self.ys[j]) / (self.xs[j + 1] - self.xs[j])
    }

    pub fn slopes(&self) -> Vec<f64> {
        (0..self.pieces()).map(|j| self.slope(j)).collect()
    }

    /// Value at `x`, with the end pieces extended affinely outside the domain.
    pub fn eval(&self, x: f64) -> f64 {
        let m = self.pieces();
        let i = self.xs.partition_point(|&k| k <= x).clamp(1, m) - 1;
        if x == self.xs[i + 1] {
            return self.ys[i + 1];
        }
        let t = (x - self.xs[i]) / (self.xs[i + 1] - self.xs[i]);
        self.ys[i] + t * (self.ys[i + 1] - self.ys[i])
    }

    fn slope_trend(&self, tol: f64) -> (bool, bool) {
        let s = self.slopes();
        let convex = s.windows(2).all(|w| w[1] >= w[0] - tol * (1.0 + w[0].abs()));
        let concave = s.windows(2).all(|w| w[1] <= w[0] + tol * (1.0 + w[0].abs()));
        (convex, concave)
    }

    pub fn is_convex(&self) -> bool {
        self.slope_trend(1e-12).0
    }

    pub fn is_concave(&self) -> bool {
        self.slope_trend(1e-12).1
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.ys.windows(2).all(|w| w[1] >= w[0])
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.ys.windows(2).all(|w| w[1] <= w[0])
    }

    /// Inverse of a strictly monotone polyline, as a polyline on the range.
    pub fn inverse(&self) -> Result<Self> {
        if self.ys.windows(2).all(|w| w[1] > w[0]) {
            Polyline::new(self.ys.clone(), self.xs.clone())
        } else if self.ys.windows(2).all(|w| w[1] < w[0]) {
            let mut xs = self.ys.clone();
            let mut ys = self.xs.clone();
            xs.reverse();
            ys.reverse();
            Polyline::new(xs, ys)
        } else {
            domain("only strictly monotone polylines are invertible")
        }
    }

    /// `∫|f − self|` over the domain, by quadrature split at the vertices.
    pub fn l1_error(&self, f: impl Fn(f64) -> f64, tol: f64) -> f64 {
        let g = |x: f64| (f(x) - self.eval(x)).abs();
        crate::numeric::kahan_sum(
            self.xs.windows(2).map(|w| crate::numeric::simpson(&g, w[0], w[1], tol / self.pieces() as f64)),
        )
    }

    /// Least concave majorant of the points (upper hull), as indices kept.
    pub fn upper_hull(xs: &[f64], ys: &[f64]) -> Vec<usize> {
        hull(xs, ys, |c| c >= 0.0)
    }

    /// Greatest convex minorant of the points (lower hull), as indices kept.
    pub fn lower_hull(xs: &[f64], ys: &[f64]) -> Vec<usize> {
        hull(xs, ys, |c| c <= 0.0)
    }

    pub fn least_concave_majorant(&self) -> Self {
        let keep = Polyline::upper_hull(&self.xs, &self.ys);
        Polyline { xs: keep.iter().map(|&i| self.xs[i]).collect(), ys: keep.iter().map(|&i| self.ys[i]).collect() }
    }

    pub fn greatest_convex_minorant(&self) -> Self {
        let keep = Polyline::lower_hull(&self.xs, &self.ys);
        Polyline { xs: keep.iter().map(|&i| self.xs[i]).collect(), ys: keep.iter().map(|&i| self.ys[i]).collect() }
    }

    /// Values of the polyline at `knots`.
    pub fn sample_at(&self, knots: &[f64]) -> Vec<f64> {
        knots.iter().map(|&x| self.eval(x)).collect()
    }
}

/// Monotone chain; `drop(cross)` tells when the middle point is to be removed.
fn hull(xs: &[f64], ys: &[f64], drop: impl Fn(f64) -> bool) -> Vec<usize> {
    let mut st: Vec<usize> = Vec::with_capacity(xs.len());
    for i in 0..xs.len() {
        while st.len() >= 2 {
            let a = st[st.len() - 2];
            let b = st[st.len() - 1];
            // cross product of (b − a) × (i − a)
            let c = (xs[b] - xs[a]) * (ys[i] - ys[a]) - (ys[b] - ys[a]) * (xs[i] - xs[a]);
            if drop(c) {
                st.pop();
            } else {
                break;
            }
        }
        st.push(i);
    }
    st
}
