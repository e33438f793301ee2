use super::piece::Piece;
use crate::{domain, Error, Result};

/// Integral tolerance of a (unit-mass) piecewise constant density.
pub const PC_MASS_TOL: f64 = 1e-12;

/// Step density: `levels[j]` on `(breaks[j], breaks[j+1]]`, zero elsewhere.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseConstant {
    breaks: Vec<f64>,
    levels: Vec<f64>,
    sub: bool,
    cum: Vec<f64>,
}

fn validate(breaks: &[f64], levels: &[f64]) -> Result<()> {
    if breaks.len() < 2 || levels.len() + 1 != breaks.len() {
        return domain("need m+1 breakpoints for m levels, m ≥ 1");
    }
    if breaks.iter().any(|b| !b.is_finite()) {
        return domain("breakpoints must be finite");
    }
    if breaks.windows(2).any(|w| !(w[1] > w[0])) {
        return domain("breakpoints must be strictly increasing");
    }
    if levels.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return domain("levels must be finite and nonnegative");
    }
    Ok(())
}

fn cumulative(breaks: &[f64], levels: &[f64]) -> Vec<f64> {
    let mut cum = Vec::with_capacity(breaks.len());
    let mut acc = crate::numeric::Kahan::default();
    cum.push(0.0);
    for (j, v) in levels.iter().enumerate() {
        acc.add(v * (breaks[j + 1] - breaks[j]));
        cum.push(acc.sum());
    }
    cum
}

impl PiecewiseConstant {
    /// A unit-mass step density.
    pub fn new(breaks: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        validate(&breaks, &levels)?;
        let cum = cumulative(&breaks, &levels);
        let total = cum[cum.len() - 1];
        if (total - 1.0).abs() > PC_MASS_TOL {
            return domain(format!("step density integrates to {total}, not 1"));
        }
        Ok(PiecewiseConstant { breaks, levels, sub: false, cum })
    }

    /// A step sub-density (integral at most one).
    pub fn new_sub(breaks: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        validate(&breaks, &levels)?;
        let cum = cumulative(&breaks, &levels);
        let total = cum[cum.len() - 1];
        if total > 1.0 + PC_MASS_TOL {
            return domain(format!("sub-density integrates to {total} > 1"));
        }
        Ok(PiecewiseConstant { breaks, levels, sub: true, cum })
    }

    /// Rescales nonnegative levels to unit mass.
    pub fn from_unnormalized(breaks: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        validate(&breaks, &levels)?;
        let total = cumulative(&breaks, &levels).last().copied().unwrap_or(0.0);
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Degenerate("step function has zero integral".into()));
        }
        let levels: Vec<f64> = levels.iter().map(|v| v / total).collect();
        let cum = cumulative(&breaks, &levels);
        Ok(PiecewiseConstant { breaks, levels, sub: false, cum })
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return domain("uniform needs a finite interval a < b");
        }
        Ok(PiecewiseConstant {
            breaks: vec![a, b],
            levels: vec![1.0 / (b - a)],
            sub: false,
            cum: vec![0.0, 1.0],
        })
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn is_sub(&self) -> bool {
        self.sub
    }

    pub fn cells(&self) -> usize {
        self.levels.len()
    }

    pub fn total_mass(&self) -> f64 {
        self.cum[self.cum.len() - 1]
    }

    pub fn support(&self) -> (f64, f64) {
        (self.breaks[0], self.breaks[self.breaks.len() - 1])
    }

    fn cell_left_continuous(&self, x: f64) -> Option<usize> {
        let i = self.breaks.partition_point(|&b| b < x);
        (i >= 1 && i < self.breaks.len()).then(|| i - 1)
    }

    fn cell_right_continuous(&self, x: f64) -> Option<usize> {
        let i = self.breaks.partition_point(|&b| b <= x);
        (i >= 1 && i < self.breaks.len()).then(|| i - 1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.cell_left_continuous(x).map_or(0.0, |j| self.levels[j])
    }

    pub fn eval_right(&self, x: f64) -> f64 {
        self.cell_right_continuous(x).map_or(0.0, |j| self.levels[j])
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.breaks[0] {
            return 0.0;
        }
        match self.cell_left_continuous(x) {
            None => self.total_mass(),
            Some(j) => self.cum[j] + self.levels[j] * (x - self.breaks[j]),
        }
    }

    /// Generalized inverse of the CDF: the smallest `x` with `F(x) ≥ u`.
    pub fn quantile(&self, u: f64) -> f64 {
        let j = self.cum.partition_point(|&c| c < u);
        if j == 0 {
            return self.breaks[0];
        }
        if j >= self.cum.len() {
            return self.breaks[self.breaks.len() - 1];
        }
        let cell = j - 1;
        let x = self.breaks[cell] + (u - self.cum[cell]) / self.levels[cell];
        x.min(self.breaks[cell + 1])
    }

    pub fn piece_at(&self, x: f64) -> Piece {
        match self.cell_left_continuous(x) {
            Some(j) if self.levels[j] > 0.0 => Piece::Affine { a: self.levels[j], b: 0.0 },
            _ => Piece::Zero,
        }
    }

    pub fn pushforward(&self, sigma: f64, m: f64) -> Self {
        let breaks: Vec<f64> = self.breaks.iter().map(|x| sigma * x + m).collect();
        let levels: Vec<f64> = self.levels.iter().map(|v| v / sigma).collect();
        let cum = cumulative(&breaks, &levels);
        PiecewiseConstant { breaks, levels, sub: self.sub, cum }
    }

    pub fn scaled(&self, w: f64) -> Self {
        let levels: Vec<f64> = self.levels.iter().map(|v| v * w).collect();
        let cum = cumulative(&self.breaks, &levels);
        PiecewiseConstant { breaks: self.breaks.clone(), levels, sub: true, cum }
    }

    /// Merges adjacent cells with equal levels.
    pub fn canonical(&self) -> Self {
        let mut breaks = vec![self.breaks[0]];
        let mut levels: Vec<f64> = Vec::new();
        for (j, &v) in self.levels.iter().enumerate() {
            if levels.last() == Some(&v) {
                *breaks.last_mut().unwrap() = self.breaks[j + 1];
            } else {
                levels.push(v);
                breaks.push(self.breaks[j + 1]);
            }
        }
        let cum = cumulative(&breaks, &levels);
        PiecewiseConstant { breaks, levels, sub: self.sub, cum }
    }

    /// Number of changes of monotonicity direction along `0, v_1, …, v_m, 0`.
    pub fn monotonicity_switches(&self) -> usize {
        let mut seq = Vec::with_capacity(self.levels.len() + 2);
        seq.push(0.0);
        seq.extend_from_slice(&self.levels);
        seq.push(0.0);
        count_switches(&seq)
    }

    /// Membership in the class of unit-mass step densities with at most `d`
    /// bounded cells that are monotone on at most `k` intervals.
    pub fn in_class(&self, d: usize, k: usize) -> bool {
        let c = self.canonical();
        c.cells() <= d && c.monotonicity_switches() + 1 <= k
    }
}

pub(crate) fn count_switches(seq: &[f64]) -> usize {
    let mut last = 0i8;
    let mut switches = 0;
    for w in seq.windows(2) {
        let s = if w[1] > w[0] {
            1
        } else if w[1] < w[0] {
            -1
        } else {
            0
        };
        if s != 0 {
            if last != 0 && s != last {
                switches += 1;
            }
            last = s;
        }
    }
    switches
}
