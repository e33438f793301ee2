use serde::Serialize;

use crate::density::generic::{Monotone, Shape};
use crate::density::{Density, GenericDensity};
use crate::numeric::{bisect_predicate, golden_min, integrate, integrate_split};
use crate::{domain, Error, Result};

const TAIL_TOL: f64 = 1e-10;

/// A monotone density seen from its anchor `a`: `x ↦ p(a + dir·x)` is
/// nonincreasing on `(0, ∞)`.
struct HalfLine<'a> {
    p: &'a Density,
    a: f64,
    dir: f64,
}

impl<'a> HalfLine<'a> {
    fn new(p: &'a Density) -> Result<Self> {
        let (lo, hi) = p.support();
        let dir = match (lo.is_finite(), hi.is_finite()) {
            (true, false) => 1.0,
            (false, true) => -1.0,
            (true, true) => {
                if p.eval_right(lo) >= p.eval(hi) {
                    1.0
                } else {
                    -1.0
                }
            }
            (false, false) => return domain("a monotone density on a half-line needs a finite end"),
        };
        Ok(HalfLine { p, a: if dir > 0.0 { lo } else { hi }, dir })
    }

    fn val(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return self.top();
        }
        self.p.eval(self.a + self.dir * x)
    }

    /// `p(a+)`, infinite when the density blows up at its anchor.
    fn top(&self) -> f64 {
        let at = if self.dir > 0.0 { self.p.eval_right(self.a) } else { self.p.eval(self.a) };
        let near = self.p.eval(self.a + self.dir * 1e-300);
        let far = self.p.eval(self.a + self.dir * 1e-150);
        // still growing across 150 decades: a pole at the anchor
        if near > 2.0 * far && near > 1.0 {
            f64::INFINITY
        } else {
            at.max(near)
        }
    }

    /// `∫_0^x p(a + s) ds`.
    fn head(&self, x: f64) -> f64 {
        if self.dir > 0.0 {
            self.p.cdf(self.a + x) - self.p.cdf(self.a)
        } else {
            self.p.cdf(self.a) - self.p.cdf(self.a - x)
        }
    }

    fn tau_x(&self, t: f64) -> f64 {
        let r = if self.dir > 0.0 { 1.0 - self.p.cdf(self.a + t) } else { self.p.cdf(self.a - t) };
        r.max(0.0)
    }

    fn tilde(&self, y: f64) -> f64 {
        if !(y > 0.0) {
            return f64::INFINITY;
        }
        if self.top() < y {
            return 0.0;
        }
        if let Density::Generic(g) = self.p {
            if self.dir > 0.0 && self.a == g.support().0 {
                if let Some(v) = g.closed_tilde(y) {
                    return v;
                }
            }
        }
        let below = |x: f64| x > 0.0 && self.val(x) < y;
        let mut hi = 1.0;
        while !below(hi) {
            hi *= 2.0;
            if !hi.is_finite() {
                return f64::INFINITY;
            }
        }
        bisect_predicate(below, 0.0, hi, 200)
    }

    fn tau_y(&self, b: f64) -> f64 {
        if b <= 0.0 {
            return self.tau_x(0.0);
        }
        let top = self.top();
        if b >= top {
            return 0.0;
        }
        integrate(&|y: f64| self.tilde(y), b, top, TAIL_TOL)
    }

    /// `τ_x(st) + ∫_0^s [p(a+x) − p(a+s)]dx`, the second term being
    /// `τ_y(p(a+s))` by the layer-cake identity.
    fn objective(&self, s: f64, t: f64) -> f64 {
        self.tau_x(s * t) + (self.head(s) - s * self.val(s)).max(0.0)
    }

    fn tau(&self, t: f64) -> (f64, f64) {
        let (u, v) = golden_min(|u: f64| self.objective(u.exp(), t), 1e-8f64.ln(), 1e8f64.ln(), 64);
        let at_one = self.objective(1.0, t);
        if at_one <= v {
            (1.0, at_one)
        } else {
            (u.exp(), v)
        }
    }
}

/// `p̃(y) = inf{x > 0 : p(a + x) < y}` (mirrored for nondecreasing densities).
pub fn tilde(p: &Density, y: f64) -> Result<f64> {
    Ok(HalfLine::new(p)?.tilde(y))
}

/// `∫_t^∞ p(a + x) dx`.
pub fn tau_x(p: &Density, t: f64) -> Result<f64> {
    Ok(HalfLine::new(p)?.tau_x(t))
}

/// `∫_B^∞ p̃(y) dy`, by quadrature of `p̃`.
pub fn tau_y(p: &Density, b: f64) -> Result<f64> {
    Ok(HalfLine::new(p)?.tau_y(b))
}

/// `τ(p, t) = inf_{s>0}[τ_x(st) + τ_y(p(a+s))]`, `t ≥ 1`, as the best value of
/// a golden-section search over `log s ∈ [log 1e-8, log 1e8]` (an upper bound
/// on the infimum).
pub fn tau(p: &Density, t: f64) -> Result<f64> {
    Ok(tails(p, t)?.tau)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tails {
    pub tau_x: f64,
    pub tau_y: f64,
    pub tau: f64,
    /// Minimizing scale found by the search.
    pub s: f64,
}

pub fn tails(p: &Density, t: f64) -> Result<Tails> {
    if !(t >= 1.0) {
        return domain("the tail function is defined for t ≥ 1");
    }
    let h = HalfLine::new(p)?;
    let (s, tau) = h.tau(t);
    Ok(Tails { tau_x: h.tau_x(t), tau_y: h.tau_y(t), tau, s })
}

/// `max_i τ(p_i, t)` over the monotone pieces of a decomposition.
pub fn tau_infinity(components: &[Density], t: f64) -> Result<f64> {
    if components.is_empty() {
        return domain("at least one component is required");
    }
    let mut m: f64 = 0.0;
    for c in components {
        m = m.max(tau(c, t)?);
    }
    Ok(m)
}

/// `r_n = inf{t ≥ 1 : τ_∞(t) ≤ (ℓ log(1+t)/n)^{1/3}}`, by bisection.
pub fn r_n(components: &[Density], ell: usize, n: usize) -> Result<f64> {
    if n == 0 || ell == 0 {
        return domain("r_n needs n ≥ 1 and ℓ ≥ 1");
    }
    let hs = components.iter().map(HalfLine::new).collect::<Result<Vec<_>>>()?;
    if hs.is_empty() {
        return domain("at least one component is required");
    }
    let ok = |t: f64| {
        let tinf = hs.iter().map(|h| h.tau(t).1).fold(0.0, f64::max);
        tinf <= (ell as f64 * t.ln_1p() / n as f64).cbrt()
    };
    if ok(1.0) {
        return Ok(1.0);
    }
    let mut hi = 2.0;
    while !ok(hi) {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::Degenerate("the tail condition never holds".into()));
        }
    }
    Ok(bisect_predicate(ok, hi / 2.0, hi, 100))
}

/// The truncated density `(p ∧ B)1_I / ∫_I(p ∧ B)` and its certified bound
/// `2[∫_I(p − B)₊ + ∫_{I^c} p]`.
#[derive(Clone, Debug)]
pub struct Truncation {
    pub density: Density,
    pub bound: f64,
    /// `∫_I (p ∧ B)`.
    pub mass: f64,
}

pub fn truncate_tail(p: &Density, b: f64, lo: f64, hi: f64) -> Result<Truncation> {
    if !(b > 0.0) {
        return domain("the truncation level must be positive");
    }
    if !(hi > lo) {
        return domain("the interval must be nontrivial");
    }
    let h = HalfLine::new(p)?;
    let in_i = p.cdf(hi) - p.cdf(lo);
    // p crosses B at a single point (monotone), which is a kink of p ∧ B
    let x = h.tilde(b);
    let cross = h.a + h.dir * x;
    let mut cuts = p.breakpoints();
    if cross.is_finite() {
        cuts.push(cross);
    }
    let capped = |y: f64| p.eval(y).min(b);
    let mass = if lo.is_finite() && hi.is_finite() {
        integrate_split(&capped, lo, hi, &cuts, TAIL_TOL)
    } else {
        // split the infinite range at the finite kinks
        let mut pts: Vec<f64> = cuts.into_iter().filter(|c| c.is_finite() && *c > lo && *c < hi).collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let mut edges = vec![lo];
        edges.extend(pts);
        edges.push(hi);
        edges.windows(2).map(|w| integrate(&capped, w[0], w[1], TAIL_TOL)).sum()
    };
    if !(mass > 0.0) {
        return Err(Error::Degenerate("p ∧ B vanishes on the interval".into()));
    }
    let excess = (in_i - mass).max(0.0);
    let bound = (2.0 * (excess + (1.0 - in_i).max(0.0))).min(2.0);
    let pc = p.clone();
    let (slo, shi) = p.support();
    let (dlo, dhi) = (lo.max(slo), hi.min(shi));
    let monotone = if h.dir > 0.0 { Monotone::Decreasing } else { Monotone::Increasing };
    let g = GenericDensity::new("truncated", dlo, dhi, move |y| pc.eval(y).min(b) / mass)
        .with_shape(Shape { monotone: Some(monotone), ..Shape::default() });
    Ok(Truncation { density: Density::Generic(g), bound, mass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{fixtures, l1_by_quadrature, LogLinear, PiecewiseConstant};

    fn exp1() -> Density {
        LogLinear::exponential(1.0).unwrap().into()
    }

    #[test]
    fn tilde_of_exponential() {
        let p = exp1();
        for y in [0.01, 0.3, 0.9] {
            assert!((tilde(&p, y).unwrap() + f64::ln(y)).abs() < 1e-12);
        }
        assert!(tilde(&p, 1.0).unwrap() < 1e-12);
        assert_eq!(tilde(&p, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn tilde_of_uniform() {
        let p: Density = PiecewiseConstant::uniform(0.0, 1.0).unwrap().into();
        assert!((tilde(&p, 0.5).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(tilde(&p, 1.5).unwrap(), 0.0);
    }

    #[test]
    fn exponential_tails() {
        let p = exp1();
        for t in [0.0, 0.5, 2.0, 7.0] {
            assert!((tau_x(&p, t).unwrap() - (-t).exp()).abs() < 1e-12);
        }
        for b in [0.05, 0.2, 0.7] {
            let expect = 1.0 - b + b * f64::ln(b);
            assert!((tau_y(&p, b).unwrap() - expect).abs() < 1e-8, "{b}");
        }
        let tl = tails(&p, 1.0).unwrap();
        let at_one = (-1.0f64).exp() + tau_y(&p, (-1.0f64).exp()).unwrap();
        assert!(tl.tau <= at_one + 1e-9);
    }

    #[test]
    fn layer_cake_identity() {
        let ps: Vec<Density> = vec![
            exp1(),
            fixtures::half_gaussian(1.0).unwrap().into(),
            fixtures::heavytail(1.0, 0.0, 0.5).unwrap().into(),
        ];
        for p in &ps {
            let h = HalfLine::new(p).unwrap();
            for i in 0..20 {
                let b = 0.02 + 0.1 * i as f64;
                let x = h.tilde(b);
                let lhs = integrate(&|x: f64| if x > 0.0 { (h.val(x) - b).max(0.0) } else { 0.0 }, 0.0, x, 1e-11);
                let direct = (h.head(x) - b * x).max(0.0);
                let rhs = h.tau_y(b);
                assert!((lhs - rhs).abs() < 1e-6, "{} B={b}: {lhs} vs {rhs}", p.kind());
                assert!((direct - rhs).abs() < 1e-6, "{} B={b}: {direct} vs {rhs}", p.kind());
            }
        }
    }

    #[test]
    fn tau_is_nonincreasing() {
        let p: Density = fixtures::heavytail(0.5, 0.0, 0.5).unwrap().into();
        let mut prev = f64::INFINITY;
        for t in [1.0, 2.0, 5.0, 20.0, 100.0, 1e4] {
            let v = tau(&p, t).unwrap();
            assert!(v <= prev + 1e-12, "t={t}");
            prev = v;
        }
        assert!(tau(&p, 0.5).is_err());
    }

    #[test]
    fn mirrored_density() {
        let p: Density = LogLinear::new(vec![f64::NEG_INFINITY, 0.0], vec![1.0], vec![0.0]).unwrap().into();
        assert!((tau_x(&p, 2.0).unwrap() - (-2.0f64).exp()).abs() < 1e-12);
        assert!((tilde(&p, 0.5).unwrap() - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn rn_condition_holds() {
        let comps = vec![exp1()];
        let r = r_n(&comps, 2, 1000).unwrap();
        assert!(r >= 1.0);
        let tinf = tau_infinity(&comps, r * (1.0 + 1e-9)).unwrap();
        assert!(tinf <= (2.0 * r.ln_1p() / 1000.0).cbrt() + 1e-9);
    }

    #[test]
    fn truncation_bounds() {
        let p = exp1();
        for t in [1.0, 3.0, 6.0] {
            let tr = truncate_tail(&p, 1.0, 0.0, t).unwrap();
            assert!((tr.bound - 2.0 * (-t).exp()).abs() < 1e-8);
            let err = l1_by_quadrature(&p, &tr.density, 1e-10);
            assert!(err <= tr.bound + 1e-8);
        }
        let u: Density = PiecewiseConstant::uniform(0.0, 1.0).unwrap().into();
        let tr = truncate_tail(&u, 0.5, 0.0, 1.0).unwrap();
        assert!((tr.bound - 1.0).abs() < 1e-10);
        assert!(l1_by_quadrature(&u, &tr.density, 1e-10) < 1e-9);
        let same = truncate_tail(&p, 5.0, 0.0, f64::INFINITY).unwrap();
        assert!(same.bound < 1e-9);
        assert!(matches!(truncate_tail(&u, 0.5, 2.0, 3.0), Err(Error::Degenerate(_))));
    }
}
