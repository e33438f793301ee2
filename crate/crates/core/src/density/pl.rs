use super::piece::Piece;
use crate::{domain, Error, Result};

pub const PL_MASS_TOL: f64 = 1e-12;

/// Piecewise affine density, left-continuous: piece `j` runs on
/// `(knots[j], knots[j+1]]` from `left[j]` to `right[j]`. Adjacent pieces may
/// disagree at a knot; the value there is the left piece's `right`.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseLinear {
    knots: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
    sub: bool,
    cum: Vec<f64>,
}

fn validate(knots: &[f64], left: &[f64], right: &[f64]) -> Result<()> {
    if knots.len() < 2 || left.len() + 1 != knots.len() || right.len() != left.len() {
        return domain("need m+1 knots and m left/right values, m ≥ 1");
    }
    if knots.iter().any(|k| !k.is_finite()) {
        return domain("knots must be finite");
    }
    if knots.windows(2).any(|w| !(w[1] > w[0])) {
        return domain("knots must be strictly increasing");
    }
    if left.iter().chain(right).any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return domain("values must be finite and nonnegative");
    }
    Ok(())
}

fn cumulative(knots: &[f64], left: &[f64], right: &[f64]) -> Vec<f64> {
    let mut acc = crate::numeric::Kahan::default();
    let mut cum = Vec::with_capacity(knots.len());
    cum.push(0.0);
    for j in 0..left.len() {
        acc.add(0.5 * (left[j] + right[j]) * (knots[j + 1] - knots[j]));
        cum.push(acc.sum());
    }
    cum
}

impl PiecewiseLinear {
    pub fn new(knots: Vec<f64>, left: Vec<f64>, right: Vec<f64>) -> Result<Self> {
        validate(&knots, &left, &right)?;
        let cum = cumulative(&knots, &left, &right);
        let total = cum[cum.len() - 1];
        if (total - 1.0).abs() > PL_MASS_TOL {
            return domain(format!("piecewise linear density integrates to {total}, not 1"));
        }
        Ok(PiecewiseLinear { knots, left, right, sub: false, cum })
    }

    pub fn new_sub(knots: Vec<f64>, left: Vec<f64>, right: Vec<f64>) -> Result<Self> {
        validate(&knots, &left, &right)?;
        let cum = cumulative(&knots, &left, &right);
        let total = cum[cum.len() - 1];
        if total > 1.0 + PL_MASS_TOL {
            return domain(format!("sub-density integrates to {total} > 1"));
        }
        Ok(PiecewiseLinear { knots, left, right, sub: true, cum })
    }

    /// Continuous interpolant of `values` at `knots`, as a unit-mass density.
    pub fn continuous(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != knots.len() || values.len() < 2 {
            return domain("one value per knot is required");
        }
        let left = values[..values.len() - 1].to_vec();
        let right = values[1..].to_vec();
        PiecewiseLinear::new(knots, left, right)
    }

    /// Rescales to unit mass.
    pub fn from_unnormalized(knots: Vec<f64>, left: Vec<f64>, right: Vec<f64>) -> Result<Self> {
        validate(&knots, &left, &right)?;
        let total = cumulative(&knots, &left, &right).last().copied().unwrap_or(0.0);
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Degenerate("piecewise linear function has zero integral".into()));
        }
        let left: Vec<f64> = left.iter().map(|v| v / total).collect();
        let right: Vec<f64> = right.iter().map(|v| v / total).collect();
        let cum = cumulative(&knots, &left, &right);
        Ok(PiecewiseLinear { knots, left, right, sub: false, cum })
    }

    pub fn continuous_unnormalized(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != knots.len() || values.len() < 2 {
            return domain("one value per knot is required");
        }
        let left = values[..values.len() - 1].to_vec();
        let right = values[1..].to_vec();
        PiecewiseLinear::from_unnormalized(knots, left, right)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn left_values(&self) -> &[f64] {
        &self.left
    }

    pub fn right_values(&self) -> &[f64] {
        &self.right
    }

    pub fn is_sub(&self) -> bool {
        self.sub
    }

    pub fn pieces(&self) -> usize {
        self.left.len()
    }

    pub fn total_mass(&self) -> f64 {
        self.cum[self.cum.len() - 1]
    }

    pub fn support(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }

    /// Values at knots when the function is continuous.
    pub fn continuous_values(&self) -> Option<Vec<f64>> {
        for j in 1..self.left.len() {
            if !crate::numeric::close(self.right[j - 1], self.left[j], 1e-12) {
                return None;
            }
        }
        let mut v = self.left.clone();
        v.push(self.right[self.right.len() - 1]);
        Some(v)
    }

    pub fn slope(&self, j: usize) -> f64 {
        (self.right[j] - self.left[j]) / (self.knots[j + 1] - self.knots[j])
    }

    fn piece_value(&self, j: usize, x: f64) -> f64 {
        let t = (x - self.knots[j]) / (self.knots[j + 1] - self.knots[j]);
        (self.left[j] + (self.right[j] - self.left[j]) * t).max(0.0)
    }

    fn piece_left_continuous(&self, x: f64) -> Option<usize> {
        let i = self.knots.partition_point(|&k| k < x);
        (i >= 1 && i < self.knots.len()).then(|| i - 1)
    }

    fn piece_right_continuous(&self, x: f64) -> Option<usize> {
        let i = self.knots.partition_point(|&k| k <= x);
        (i >= 1 && i < self.knots.len()).then(|| i - 1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.piece_left_continuous(x).map_or(0.0, |j| self.piece_value(j, x))
    }

    pub fn eval_right(&self, x: f64) -> f64 {
        self.piece_right_continuous(x).map_or(0.0, |j| self.piece_value(j, x))
    }

    /// One-sided derivative; at knots the side selects the piece.
    pub fn derivative(&self, x: f64, side: super::Side) -> f64 {
        let j = match side {
            super::Side::Left => self.piece_left_continuous(x),
            super::Side::Right => self.piece_right_continuous(x),
        };
        j.map_or(0.0, |j| self.slope(j))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.knots[0] {
            return 0.0;
        }
        match self.piece_left_continuous(x) {
            None => self.total_mass(),
            Some(j) => {
                let h = x - self.knots[j];
                self.cum[j] + 0.5 * h * (self.left[j] + self.piece_value(j, x))
            }
        }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let j = self.cum.partition_point(|&c| c < u);
        if j == 0 {
            return self.knots[0];
        }
        if j >= self.cum.len() {
            return self.knots[self.knots.len() - 1];
        }
        let p = j - 1;
        let du = u - self.cum[p];
        let y0 = self.left[p];
        let s = self.slope(p);
        // solve y0·h + s·h²/2 = du
        let disc = (y0 * y0 + 2.0 * s * du).max(0.0);
        let denom = y0 + disc.sqrt();
        let h = if denom > 0.0 { 2.0 * du / denom } else { 0.0 };
        (self.knots[p] + h).min(self.knots[p + 1])
    }

    pub fn piece_at(&self, x: f64) -> Piece {
        match self.piece_left_continuous(x) {
            Some(j) => {
                if self.left[j] == 0.0 && self.right[j] == 0.0 {
                    Piece::Zero
                } else {
                    let b = self.slope(j);
                    Piece::Affine { a: self.left[j] - b * self.knots[j], b }
                }
            }
            None => Piece::Zero,
        }
    }

    pub fn pushforward(&self, sigma: f64, m: f64) -> Self {
        let knots: Vec<f64> = self.knots.iter().map(|x| sigma * x + m).collect();
        let left: Vec<f64> = self.left.iter().map(|v| v / sigma).collect();
        let right: Vec<f64> = self.right.iter().map(|v| v / sigma).collect();
        let cum = cumulative(&knots, &left, &right);
        PiecewiseLinear { knots, left, right, sub: self.sub, cum }
    }

    pub fn scaled(&self, w: f64) -> Self {
        let left: Vec<f64> = self.left.iter().map(|v| v * w).collect();
        let right: Vec<f64> = self.right.iter().map(|v| v * w).collect();
        let cum = cumulative(&self.knots, &left, &right);
        PiecewiseLinear { knots: self.knots.clone(), left, right, sub: true, cum }
    }

    /// Merges consecutive pieces that are continuous and collinear.
    pub fn canonical(&self) -> Self {
        let mut knots = vec![self.knots[0]];
        let mut left: Vec<f64> = vec![];
        let mut right: Vec<f64> = vec![];
        for j in 0..self.left.len() {
            if let (Some(&lprev), Some(&rprev)) = (left.last(), right.last()) {
                let k0 = knots[knots.len() - 2];
                let k1 = knots[knots.len() - 1];
                let s_prev = (rprev - lprev) / (k1 - k0);
                let s_cur = self.slope(j);
                let continuous = crate::numeric::close(rprev, self.left[j], 1e-12);
                let collinear = crate::numeric::close(s_prev, s_cur, 1e-9)
                    || (s_prev - s_cur).abs() <= 1e-12 * (lprev.abs() + rprev.abs() + 1.0);
                if continuous && collinear {
                    *knots.last_mut().unwrap() = self.knots[j + 1];
                    *right.last_mut().unwrap() = self.right[j];
                    continue;
                }
            }
            left.push(self.left[j]);
            right.push(self.right[j]);
            knots.push(self.knots[j + 1]);
        }
        let cum = cumulative(&knots, &left, &right);
        PiecewiseLinear { knots, left, right, sub: self.sub, cum }
    }

    /// Minimal number of intervals on which the function (extended by 0 outside
    /// its support) is continuous, monotone and convex or concave.
    pub fn shape_segments(&self) -> usize {
        // (slope, value at left end, value at right end) of each piece, plus
        // the zero pieces outside the support
        let c = self.canonical();
        let mut pieces: Vec<(f64, f64, f64)> = Vec::with_capacity(c.pieces() + 2);
        pieces.push((0.0, 0.0, 0.0));
        for j in 0..c.pieces() {
            pieces.push((c.slope(j), c.left[j], c.right[j]));
        }
        pieces.push((0.0, 0.0, 0.0));
        let scale = c.left.iter().chain(&c.right).fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        shape_segment_count(&pieces, scale)
    }

    /// Membership in the class of continuous-on-pieces affine densities with at
    /// most `d` bounded pieces that are monotone convex-concave on `k` intervals.
    pub fn in_class(&self, d: usize, k: usize) -> bool {
        self.canonical().pieces() <= d && self.shape_segments() <= k
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Trend {
    Unknown,
    Up,
    Down,
}

/// Greedy minimal segmentation of a sequence of affine pieces into runs that
/// are continuous, monotone, and convex or concave. The property is inherited
/// by sub-runs, so the greedy cut is optimal.
pub(crate) fn shape_segment_count(pieces: &[(f64, f64, f64)], scale: f64) -> usize {
    let tol = 1e-9 * scale;
    let mut segments = 1;
    let mut mono = Trend::Unknown;
    let mut curv = Trend::Unknown;
    let mut prev: Option<(f64, f64, f64)> = None;
    for &(s, l, r) in pieces {
        if let Some((ps, _, pr)) = prev {
            let continuous = (pr - l).abs() <= tol;
            let ms = if s > 0.0 {
                Trend::Up
            } else if s < 0.0 {
                Trend::Down
            } else {
                Trend::Unknown
            };
            let cs = if s > ps + 1e-9 * (s.abs() + ps.abs()) {
                Trend::Up
            } else if s < ps - 1e-9 * (s.abs() + ps.abs()) {
                Trend::Down
            } else {
                Trend::Unknown
            };
            let mono_ok = ms == Trend::Unknown || mono == Trend::Unknown || ms == mono;
            let curv_ok = cs == Trend::Unknown || curv == Trend::Unknown || cs == curv;
            if continuous && mono_ok && curv_ok {
                if ms != Trend::Unknown {
                    mono = ms;
                }
                if cs != Trend::Unknown {
                    curv = cs;
                }
            } else {
                segments += 1;
                mono = if s > 0.0 {
                    Trend::Up
                } else if s < 0.0 {
                    Trend::Down
                } else {
                    Trend::Unknown
                };
                curv = Trend::Unknown;
            }
        } else if s != 0.0 {
            mono = if s > 0.0 { Trend::Up } else { Trend::Down };
        }
        prev = Some((s, l, r));
    }
    segments
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tent() -> PiecewiseLinear {
        PiecewiseLinear::continuous(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.0]).unwrap()
    }

    #[test]
    fn evaluation_and_cdf() {
        let t = tent();
        assert_eq!(t.eval(0.5), 0.5);
        assert_eq!(t.eval(1.0), 1.0);
        assert!((t.cdf(1.0) - 0.5).abs() < 1e-15);
        assert!((t.cdf(1.5) - 0.875).abs() < 1e-15);
        for u in [0.01, 0.3, 0.5, 0.77, 0.999] {
            assert!((t.cdf(t.quantile(u)) - u).abs() < 1e-13);
        }
    }

    #[test]
    fn tent_is_two_segments() {
        let t = tent();
        assert_eq!(t.shape_segments(), 2);
        assert!(t.in_class(2, 2));
        let lin = PiecewiseLinear::continuous(vec![0.0, 1.0], vec![2.0, 0.0]).unwrap();
        // jump at 0 then decreasing: the zero piece on the left is its own run
        assert_eq!(lin.shape_segments(), 2);
        let w = PiecewiseLinear::continuous_unnormalized(
            vec![0.0, 1.0, 2.0, 3.0, 4.0],
            vec![0.0, 1.0, 0.2, 1.0, 0.0],
        )
        .unwrap();
        assert_eq!(w.shape_segments(), 4);
    }

    #[test]
    fn canonical_merges_collinear() {
        let p = PiecewiseLinear::continuous(vec![0.0, 0.5, 1.0], vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(p.canonical().pieces(), 1);
    }
}
