use super::piece::{exp_integral, Piece};
use crate::{domain, Error, Result};

pub const LL_MASS_TOL: f64 = 1e-10;

/// Density whose logarithm is affine on each piece `(knots[j], knots[j+1]]`
/// and `−∞` outside `(knots[0], knots[m]]`. The outer knots may be infinite.
#[derive(Clone, Debug, PartialEq)]
pub struct LogLinear {
    knots: Vec<f64>,
    slopes: Vec<f64>,
    intercepts: Vec<f64>,
    cum: Vec<f64>,
}

fn validate(knots: &[f64], slopes: &[f64], intercepts: &[f64]) -> Result<()> {
    let m = slopes.len();
    if m == 0 || knots.len() != m + 1 || intercepts.len() != m {
        return domain("need m+1 knots and m slopes/intercepts, m ≥ 1");
    }
    if knots.windows(2).any(|w| !(w[1] > w[0])) {
        return domain("knots must be strictly increasing");
    }
    if knots[1..m].iter().any(|k| !k.is_finite()) {
        return domain("interior knots must be finite");
    }
    if knots.iter().any(|k| k.is_nan()) || slopes.iter().chain(intercepts).any(|v| !v.is_finite()) {
        return domain("slopes and intercepts must be finite");
    }
    if knots[0] == f64::NEG_INFINITY && !(slopes[0] > 0.0) {
        return domain("an infinite left tail needs a positive slope");
    }
    if knots[m] == f64::INFINITY && !(slopes[m - 1] < 0.0) {
        return domain("an infinite right tail needs a negative slope");
    }
    Ok(())
}

fn cumulative(knots: &[f64], slopes: &[f64], intercepts: &[f64]) -> Vec<f64> {
    let mut acc = crate::numeric::Kahan::default();
    let mut cum = vec![0.0];
    for j in 0..slopes.len() {
        acc.add(exp_integral(intercepts[j], slopes[j], knots[j], knots[j + 1]));
        cum.push(acc.sum());
    }
    cum
}

impl LogLinear {
    pub fn new(knots: Vec<f64>, slopes: Vec<f64>, intercepts: Vec<f64>) -> Result<Self> {
        validate(&knots, &slopes, &intercepts)?;
        let cum = cumulative(&knots, &slopes, &intercepts);
        let total = cum[cum.len() - 1];
        if (total - 1.0).abs() > LL_MASS_TOL {
            return domain(format!("log-linear density integrates to {total}, not 1"));
        }
        Ok(LogLinear { knots, slopes, intercepts, cum })
    }

    /// Shifts the intercepts so that the density has unit mass.
    pub fn from_unnormalized(knots: Vec<f64>, slopes: Vec<f64>, intercepts: Vec<f64>) -> Result<Self> {
        validate(&knots, &slopes, &intercepts)?;
        let total = cumulative(&knots, &slopes, &intercepts)[slopes.len()];
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Degenerate("log-linear function is not integrable".into()));
        }
        let shift = total.ln();
        let intercepts: Vec<f64> = intercepts.iter().map(|c| c - shift).collect();
        let cum = cumulative(&knots, &slopes, &intercepts);
        Ok(LogLinear { knots, slopes, intercepts, cum })
    }

    /// Continuous log-density through `(knots[j], log_values[j])`, renormalized.
    pub fn from_log_values(knots: &[f64], log_values: &[f64]) -> Result<Self> {
        if knots.len() != log_values.len() || knots.len() < 2 {
            return domain("one log-value per knot is required");
        }
        let mut slopes = Vec::with_capacity(knots.len() - 1);
        let mut intercepts = Vec::with_capacity(knots.len() - 1);
        for j in 0..knots.len() - 1 {
            let s = (log_values[j + 1] - log_values[j]) / (knots[j + 1] - knots[j]);
            slopes.push(s);
            intercepts.push(log_values[j] - s * knots[j]);
        }
        LogLinear::from_unnormalized(knots.to_vec(), slopes, intercepts)
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return domain("rate must be positive");
        }
        LogLinear::new(vec![0.0, f64::INFINITY], vec![-rate], vec![rate.ln()])
    }

    pub fn laplace(loc: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() || !loc.is_finite() {
            return domain("laplace needs finite location and positive scale");
        }
        let c = -(2.0 * scale).ln();
        LogLinear::new(
            vec![f64::NEG_INFINITY, loc, f64::INFINITY],
            vec![1.0 / scale, -1.0 / scale],
            vec![c - loc / scale, c + loc / scale],
        )
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn intercepts(&self) -> &[f64] {
        &self.intercepts
    }

    pub fn pieces(&self) -> usize {
        self.slopes.len()
    }

    /// Finite knots, including finite support ends.
    pub fn finite_knots(&self) -> Vec<f64> {
        self.knots.iter().copied().filter(|k| k.is_finite()).collect()
    }

    pub fn support(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }

    pub fn total_mass(&self) -> f64 {
        self.cum[self.cum.len() - 1]
    }

    fn piece_left_continuous(&self, x: f64) -> Option<usize> {
        let i = self.knots.partition_point(|&k| k < x);
        (i >= 1 && i < self.knots.len()).then(|| i - 1)
    }

    fn piece_right_continuous(&self, x: f64) -> Option<usize> {
        let i = self.knots.partition_point(|&k| k <= x);
        (i >= 1 && i < self.knots.len()).then(|| i - 1)
    }

    pub fn log_eval(&self, x: f64) -> f64 {
        self.piece_left_continuous(x)
            .map_or(f64::NEG_INFINITY, |j| self.intercepts[j] + self.slopes[j] * x)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.log_eval(x).exp()
    }

    pub fn eval_right(&self, x: f64) -> f64 {
        self.piece_right_continuous(x)
            .map_or(0.0, |j| (self.intercepts[j] + self.slopes[j] * x).exp())
    }

    pub fn log_derivative(&self, x: f64, side: super::Side) -> f64 {
        let j = match side {
            super::Side::Left => self.piece_left_continuous(x),
            super::Side::Right => self.piece_right_continuous(x),
        };
        j.map_or(0.0, |j| self.slopes[j])
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.knots[0] {
            return 0.0;
        }
        match self.piece_left_continuous(x) {
            None => self.total_mass(),
            Some(j) => self.cum[j] + exp_integral(self.intercepts[j], self.slopes[j], self.knots[j], x),
        }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let m = self.slopes.len();
        let j = self.cum.partition_point(|&c| c < u);
        if j == 0 {
            return self.knots[0];
        }
        if j > m {
            return self.knots[m];
        }
        let p = j - 1;
        let (a, b) = (self.intercepts[p], self.slopes[p]);
        let (l, r) = (self.knots[p], self.knots[p + 1]);
        let x = if l.is_finite() {
            let du = u - self.cum[p];
            let el = (a + b * l).exp();
            if b == 0.0 {
                l + du / el
            } else {
                l + (du * b / el).ln_1p() / b
            }
        } else {
            // left-unbounded piece: measure from its right end
            let dr = self.cum[p + 1] - u;
            let er = (a + b * r).exp();
            r + (-dr * b / er).ln_1p() / b
        };
        x.clamp(l, r)
    }

    pub fn piece_at(&self, x: f64) -> Piece {
        match self.piece_left_continuous(x) {
            Some(j) => Piece::Exp { a: self.intercepts[j], b: self.slopes[j] },
            None => Piece::Zero,
        }
    }

    /// Concave log-density: continuous across interior knots and slopes
    /// nonincreasing.
    pub fn is_log_concave(&self) -> bool {
        let m = self.slopes.len();
        for j in 1..m {
            let k = self.knots[j];
            let lv = self.intercepts[j - 1] + self.slopes[j - 1] * k;
            let rv = self.intercepts[j] + self.slopes[j] * k;
            if (lv - rv).abs() > 1e-9 * (1.0 + lv.abs().max(rv.abs())) {
                return false;
            }
            let tol = 1e-9 * (1.0 + self.slopes[j].abs().max(self.slopes[j - 1].abs()));
            if self.slopes[j] > self.slopes[j - 1] + tol {
                return false;
            }
        }
        true
    }

    pub fn pushforward(&self, sigma: f64, m: f64) -> Self {
        let knots: Vec<f64> = self.knots.iter().map(|x| sigma * x + m).collect();
        let slopes: Vec<f64> = self.slopes.iter().map(|b| b / sigma).collect();
        let intercepts: Vec<f64> = self
            .intercepts
            .iter()
            .zip(&self.slopes)
            .map(|(a, b)| a - b * m / sigma - sigma.ln())
            .collect();
        let cum = cumulative(&knots, &slopes, &intercepts);
        LogLinear { knots, slopes, intercepts, cum }
    }

    pub fn scaled(&self, w: f64) -> Self {
        let lw = w.ln();
        let intercepts: Vec<f64> = self.intercepts.iter().map(|a| a + lw).collect();
        let cum = cumulative(&self.knots, &self.slopes, &intercepts);
        LogLinear { knots: self.knots.clone(), slopes: self.slopes.clone(), intercepts, cum }
    }
}
