use std::fmt;
use std::sync::{Arc, OnceLock};

use super::Side;
use crate::numeric::{integrate, simpson};

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type SidedFn = Arc<dyn Fn(f64, Side) -> f64 + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Monotone {
    Increasing,
    Decreasing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Convexity {
    Convex,
    Concave,
}

/// Declared shape of a generic density; used for routing, never trusted for
/// bounds without the numbers below.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Shape {
    pub monotone: Option<Monotone>,
    pub convexity: Option<Convexity>,
    pub log_concave: bool,
}

const TABLE_NODES: usize = 1024;

#[derive(Debug)]
struct CdfTable {
    nodes: Vec<f64>,
    cum: Vec<f64>,
}

/// Density given by an evaluator on a declared support `(lo, hi]`, with
/// optional closed forms for the CDF, quantile, derivative and log-density.
#[derive(Clone)]
pub struct GenericDensity {
    name: String,
    lo: f64,
    hi: f64,
    pdf: RealFn,
    cdf: Option<RealFn>,
    quantile: Option<RealFn>,
    log_pdf: Option<RealFn>,
    deriv: Option<SidedFn>,
    tilde: Option<RealFn>,
    kinks: Vec<f64>,
    shape: Shape,
    spec: Option<super::spec::DensitySpec>,
    table: Arc<OnceLock<CdfTable>>,
}

impl fmt::Debug for GenericDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GenericDensity")
            .field("name", &self.name)
            .field("support", &(self.lo, self.hi))
            .field("shape", &self.shape)
            .finish()
    }
}

impl PartialEq for GenericDensity {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.pdf, &other.pdf) && self.lo == other.lo && self.hi == other.hi
    }
}

impl GenericDensity {
    /// `pdf` is evaluated on the closed support `[lo, hi]` (continuous
    /// extension at the ends); outside it the density is zero.
    pub fn new(name: impl Into<String>, lo: f64, hi: f64, pdf: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        GenericDensity {
            name: name.into(),
            lo,
            hi,
            pdf: Arc::new(pdf),
            cdf: None,
            quantile: None,
            log_pdf: None,
            deriv: None,
            tilde: None,
            kinks: vec![],
            shape: Shape::default(),
            spec: None,
            table: Arc::new(OnceLock::new()),
        }
    }

    pub fn with_cdf(mut self, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.cdf = Some(Arc::new(f));
        self
    }

    pub fn with_quantile(mut self, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.quantile = Some(Arc::new(f));
        self
    }

    pub fn with_log_pdf(mut self, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.log_pdf = Some(Arc::new(f));
        self
    }

    /// One-sided derivative of the pdf on the closed support.
    pub fn with_derivative(mut self, f: impl Fn(f64, Side) -> f64 + Send + Sync + 'static) -> Self {
        self.deriv = Some(Arc::new(f));
        self
    }

    /// Generalized inverse `y ↦ inf{x > 0 : p(lo + x) < y}` for monotone densities.
    pub fn with_tilde(mut self, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.tilde = Some(Arc::new(f));
        self
    }

    pub fn with_kinks(mut self, kinks: Vec<f64>) -> Self {
        self.kinks = kinks;
        self
    }

    pub fn with_shape(mut self, shape: Shape) -> Self {
        self.shape = shape;
        self
    }

    pub(crate) fn with_spec(mut self, spec: super::spec::DensitySpec) -> Self {
        self.spec = Some(spec);
        self
    }

    /// Image under `x ↦ σx + m`.
    pub fn pushforward(&self, sigma: f64, m: f64) -> Self {
        let map = move |x: f64| (x - m) / sigma;
        let pdf = self.pdf.clone();
        let mut g = GenericDensity::new(
            self.name.clone(),
            sigma * self.lo + m,
            sigma * self.hi + m,
            move |x| pdf(map(x)) / sigma,
        );
        if let Some(c) = self.cdf.clone() {
            g.cdf = Some(Arc::new(move |x| c(map(x))));
        }
        if let Some(q) = self.quantile.clone() {
            g.quantile = Some(Arc::new(move |u| sigma * q(u) + m));
        }
        if let Some(l) = self.log_pdf.clone() {
            g.log_pdf = Some(Arc::new(move |x| l(map(x)) - sigma.ln()));
        }
        if let Some(d) = self.deriv.clone() {
            g.deriv = Some(Arc::new(move |x, s| d(map(x), s) / (sigma * sigma)));
        }
        if let Some(t) = self.tilde.clone() {
            g.tilde = Some(Arc::new(move |y| sigma * t(sigma * y)));
        }
        g.kinks = self.kinks.iter().map(|k| sigma * k + m).collect();
        g.shape = self.shape;
        g
    }

    /// `w · p`, a sub-density when `w < 1`.
    pub fn scaled(&self, w: f64) -> Self {
        let pdf = self.pdf.clone();
        let mut g = GenericDensity::new(self.name.clone(), self.lo, self.hi, move |x| w * pdf(x));
        if let Some(c) = self.cdf.clone() {
            g.cdf = Some(Arc::new(move |x| w * c(x)));
        }
        if let Some(q) = self.quantile.clone() {
            g.quantile = Some(Arc::new(move |u| q(u / w)));
        }
        if let Some(l) = self.log_pdf.clone() {
            g.log_pdf = Some(Arc::new(move |x| l(x) + w.ln()));
        }
        if let Some(d) = self.deriv.clone() {
            g.deriv = Some(Arc::new(move |x, s| w * d(x, s)));
        }
        if let Some(t) = self.tilde.clone() {
            g.tilde = Some(Arc::new(move |y| t(y / w)));
        }
        g.kinks = self.kinks.clone();
        g.shape = self.shape;
        g
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    pub(crate) fn spec(&self) -> Option<&super::spec::DensitySpec> {
        self.spec.as_ref()
    }

    pub fn has_closed_tilde(&self) -> bool {
        self.tilde.is_some()
    }

    pub fn closed_tilde(&self, y: f64) -> Option<f64> {
        self.tilde.as_ref().map(|t| t(y))
    }

    /// The evaluator on the closed support.
    pub fn pdf(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            0.0
        } else {
            (self.pdf)(x).max(0.0)
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x > self.lo && x <= self.hi {
            (self.pdf)(x).max(0.0)
        } else {
            0.0
        }
    }

    pub fn eval_right(&self, x: f64) -> f64 {
        if x >= self.lo && x < self.hi {
            (self.pdf)(x).max(0.0)
        } else {
            0.0
        }
    }

    pub fn log_eval(&self, x: f64) -> f64 {
        if !(x >= self.lo && x <= self.hi) {
            return f64::NEG_INFINITY;
        }
        match &self.log_pdf {
            Some(l) => l(x),
            None => (self.pdf)(x).ln(),
        }
    }

    /// One-sided derivative, by the declared closed form when present and by
    /// one-sided differences otherwise.
    pub fn derivative(&self, x: f64, side: Side) -> f64 {
        if let Some(d) = &self.deriv {
            return d(x, side);
        }
        let h = 1e-6 * (1.0 + x.abs());
        match side {
            Side::Right => (self.pdf(x + h) - self.pdf(x)) / h,
            Side::Left => (self.pdf(x) - self.pdf(x - h)) / h,
        }
    }

    pub fn log_derivative(&self, x: f64, side: Side) -> f64 {
        self.derivative(x, side) / self.pdf(x)
    }

    fn table(&self) -> &CdfTable {
        self.table.get_or_init(|| {
            let f = |x: f64| self.pdf(x);
            let mut nodes: Vec<f64> = Vec::with_capacity(TABLE_NODES + self.kinks.len() + 1);
            for i in 0..=TABLE_NODES {
                let t = i as f64 / TABLE_NODES as f64;
                let x = match (self.lo.is_finite(), self.hi.is_finite()) {
                    (true, true) => self.lo + (self.hi - self.lo) * t,
                    (true, false) => {
                        let s = 1.0 - t;
                        if s == 0.0 {
                            f64::INFINITY
                        } else {
                            self.lo + t / s
                        }
                    }
                    (false, true) => {
                        let s = t;
                        if s == 0.0 {
                            f64::NEG_INFINITY
                        } else {
                            self.hi - (1.0 - t) / s
                        }
                    }
                    (false, false) => {
                        let u = 2.0 * t - 1.0;
                        let s = 1.0 - u.abs();
                        if s == 0.0 {
                            u.signum() * f64::INFINITY
                        } else {
                            u / s
                        }
                    }
                };
                nodes.push(x);
            }
            nodes.extend(self.kinks.iter().copied().filter(|k| *k > self.lo && *k < self.hi));
            nodes.sort_by(f64::total_cmp);
            nodes.dedup();
            let mut cum = vec![0.0];
            let mut acc = crate::numeric::Kahan::default();
            for w in nodes.windows(2) {
                acc.add(integrate(&f, w[0], w[1], 1e-13));
                cum.push(acc.sum());
            }
            CdfTable { nodes, cum }
        })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if let Some(c) = &self.cdf {
            return c(x.min(self.hi));
        }
        let t = self.table();
        if x >= self.hi {
            return t.cum[t.cum.len() - 1];
        }
        let i = t.nodes.partition_point(|&n| n <= x).saturating_sub(1);
        let f = |y: f64| self.pdf(y);
        t.cum[i] + simpson(&f, t.nodes[i], x, 1e-13)
    }

    pub fn total_mass(&self) -> f64 {
        if self.cdf.is_some() {
            return self.cdf(self.hi);
        }
        let t = self.table();
        t.cum[t.cum.len() - 1]
    }

    pub fn quantile(&self, u: f64) -> f64 {
        if let Some(q) = &self.quantile {
            return q(u);
        }
        let (mut a, mut b) = if let Some(_) = &self.cdf {
            bracket(self, u)
        } else {
            let t = self.table();
            let i = t.cum.partition_point(|&c| c < u);
            if i == 0 {
                return self.lo;
            }
            if i >= t.cum.len() {
                return self.hi;
            }
            (t.nodes[i - 1], t.nodes[i])
        };
        // safeguarded Newton on the CDF
        let mut x = 0.5 * (a + b);
        if !x.is_finite() {
            x = if a.is_finite() { a + 1.0 } else { b - 1.0 };
        }
        for _ in 0..100 {
            let fx = self.cdf(x) - u;
            if fx.abs() <= 1e-15 {
                return x;
            }
            if fx > 0.0 {
                b = x;
            } else {
                a = x;
            }
            let d = self.pdf(x);
            let mut next = if d > 0.0 { x - fx / d } else { f64::NAN };
            if !(next > a && next < b) {
                next = if a.is_finite() && b.is_finite() {
                    0.5 * (a + b)
                } else if a.is_finite() {
                    a + 2.0 * (x - a).abs().max(1.0)
                } else {
                    b - 2.0 * (b - x).abs().max(1.0)
                };
            }
            if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) {
                return next;
            }
            x = next;
        }
        x
    }
}

fn bracket(g: &GenericDensity, u: f64) -> (f64, f64) {
    let mut a = g.lo;
    let mut b = g.hi;
    if !a.is_finite() {
        a = -1.0;
        while g.cdf(a) > u {
            a *= 2.0;
        }
    }
    if !b.is_finite() {
        b = a.abs().max(1.0);
        while g.cdf(b) < u {
            b *= 2.0;
        }
    }
    (a, b)
}

/// Inverts a closed-form CDF on `[lo, hi]` by bisection (for closures that
/// are handed to `with_quantile`).
pub fn invert_cdf(cdf: impl Fn(f64) -> f64, lo: f64, hi: f64, u: f64) -> f64 {
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if !(m > a && m < b) {
            break;
        }
        if cdf(m) < u {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
