use std::sync::Arc;

use crate::density::generic::{RealFn, SidedFn};
use crate::density::{Density, Side};
use crate::numeric::{bisect_root, simpson};
use crate::{domain, Result};

/// A continuous function on a bounded interval `[a, b]` together with its
/// one-sided derivatives (extended reals allowed).
#[derive(Clone)]
pub struct Curve {
    f: RealFn,
    d: SidedFn,
    a: f64,
    b: f64,
}

impl std::fmt::Debug for Curve {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Curve").field("a", &self.a).field("b", &self.b).finish()
    }
}

impl Curve {
    pub fn new(
        a: f64,
        b: f64,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d: impl Fn(f64, Side) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return domain("a curve needs a bounded nontrivial interval");
        }
        Ok(Curve { f: Arc::new(f), d: Arc::new(d), a, b })
    }

    /// The restriction of a density to `[a, b]`, continuous at both ends.
    pub fn from_density(p: &Density, a: f64, b: f64) -> Result<Self> {
        let (p1, p2) = (p.clone(), p.clone());
        Curve::new(
            a,
            b,
            move |x| if x <= a { p1.eval_right(a) } else { p1.eval(x) },
            move |x, s| p2.derivative(x, s),
        )
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.f)(x.clamp(self.a, self.b))
    }

    pub fn derivative(&self, x: f64, side: Side) -> f64 {
        (self.d)(x, side)
    }

    /// `f′_r(a)`.
    pub fn right_slope(&self) -> f64 {
        self.derivative(self.a, Side::Right)
    }

    /// `f′_l(b)`.
    pub fn left_slope(&self) -> f64 {
        self.derivative(self.b, Side::Left)
    }

    pub fn ends(&self) -> (f64, f64) {
        (self.value(self.a), self.value(self.b))
    }

    pub fn variation(&self) -> f64 {
        let (fa, fb) = self.ends();
        (fb - fa).abs()
    }

    /// Chord slope `(f(b) − f(a))/(b − a)`.
    pub fn chord_slope(&self) -> f64 {
        let (fa, fb) = self.ends();
        (fb - fa) / self.length()
    }

    pub fn integral(&self, tol: f64) -> f64 {
        let f = |x: f64| self.value(x);
        simpson(&f, self.a, self.b, tol)
    }

    /// `x ↦ f(a + b − x)`.
    pub fn reflect(&self) -> Curve {
        let s = self.a + self.b;
        let (f, d) = (self.f.clone(), self.d.clone());
        Curve {
            f: Arc::new(move |x| f(s - x)),
            d: Arc::new(move |x, side| {
                let other = match side {
                    Side::Left => Side::Right,
                    Side::Right => Side::Left,
                };
                -d(s - x, other)
            }),
            a: self.a,
            b: self.b,
        }
    }

    /// `x ↦ m − f(x)`.
    pub fn flip(&self, m: f64) -> Curve {
        let (f, d) = (self.f.clone(), self.d.clone());
        Curve { f: Arc::new(move |x| m - f(x)), d: Arc::new(move |x, s| -d(x, s)), a: self.a, b: self.b }
    }

    pub fn restrict(&self, a: f64, b: f64) -> Result<Curve> {
        if !(a >= self.a && b <= self.b && a < b) {
            return domain("restriction outside the curve's interval");
        }
        Ok(Curve { f: self.f.clone(), d: self.d.clone(), a, b })
    }

    /// Preimage of `y` for a strictly monotone curve.
    pub(crate) fn inverse_at(&self, y: f64) -> f64 {
        let (fa, fb) = self.ends();
        if y == fa {
            return self.a;
        }
        if y == fb {
            return self.b;
        }
        bisect_root(|x| self.value(x) - y, self.a, self.b).clamp(self.a, self.b)
    }
}
