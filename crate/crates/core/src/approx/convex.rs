use super::{Approximant, CertifiedApproximant, Curve};
use crate::density::{Density, PiecewiseLinear, Side};
use crate::numeric::{bisect_predicate, integrate_split, ratio00, recip, TOL_MEAN, TOL_MEASURE};
use crate::polyline::Polyline;
use crate::{domain, Result};

/// Mass tolerance for sub-densities and densities handed to the constructions.
const MASS_TOL: f64 = 1e-9;

/// The two single-chord error bounds; `bound_ii` is `None` when its
/// preconditions (strict monotonicity, nonzero end slopes) fail.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChordBounds {
    pub bound_i: f64,
    pub bound_ii: Option<f64>,
}

/// Chord interpolation of `f` at `knots`, which must start at `a` and end at `b`.
pub fn linear_interpolate(f: &Curve, knots: &[f64]) -> Result<Polyline> {
    if knots.first() != Some(&f.a()) || knots.last() != Some(&f.b()) {
        return domain("the knots must include both ends of the interval");
    }
    Polyline::interpolate(|x| f.value(x), knots)
}

pub fn chord_error_bounds(f: &Curve) -> ChordBounds {
    let (dr, dl) = (f.right_slope(), f.left_slope());
    let (fa, fb) = f.ends();
    let l = f.length();
    let gap = (dr - dl).abs();
    let bound_i = if gap == 0.0 { 0.0 } else { l * l / 8.0 * gap };
    let bound_ii = if fa != fb && dr != 0.0 && dl != 0.0 && (dr > 0.0) == (dl > 0.0) {
        let g = (recip(dr) - recip(dl)).abs();
        Some(if g == 0.0 { 0.0 } else { (fb - fa).powi(2) / 8.0 * g })
    } else {
        None
    };
    ChordBounds { bound_i, bound_ii }
}

/// Linear index `Γ = 1 − ½(min|f′|/|Δ| + |Δ|/max|f′|)` over the two end slopes,
/// with `0/0 = 1` and `1/∞ = 0`.
pub fn linear_index(f: &Curve) -> f64 {
    let (dr, dl) = (f.right_slope().abs(), f.left_slope().abs());
    let delta = f.chord_slope().abs();
    let g = 1.0 - 0.5 * (ratio00(dr.min(dl), delta) + ratio00(delta, dr.max(dl)));
    if g.is_nan() {
        0.0
    } else {
        g.clamp(0.0, 1.0)
    }
}

fn is_convex(f: &Curve) -> bool {
    f.right_slope() <= f.left_slope()
}

fn is_increasing(f: &Curve) -> bool {
    let (fa, fb) = f.ends();
    fb >= fa
}

fn uniform_knots(a: f64, b: f64, d: usize) -> Vec<f64> {
    (0..=d).map(|i| if i == d { b } else { a + (b - a) * i as f64 / d as f64 }).collect()
}

/// `a = x_0 < … < x_d = b` with widths shrinking by `1/q` from left to right
/// (`ln_q = ln q`); reversed when `reflect` is set.
fn geometric_knots(a: f64, b: f64, d: usize, ln_q: f64, reflect: bool) -> Vec<f64> {
    if !(ln_q > 0.0) || !ln_q.is_finite() {
        return uniform_knots(a, b, d);
    }
    let l = b - a;
    let den = -(-(d as f64) * ln_q).exp_m1();
    let t: Vec<f64> = (0..=d)
        .map(|i| if i == d { l } else { l * (-(-(i as f64) * ln_q).exp_m1()) / den })
        .collect();
    let mut xs: Vec<f64> = if reflect {
        t.iter().rev().map(|&s| if s == l { a } else { b - s }).collect()
    } else {
        t.iter().map(|&s| if s == l { b } else { a + s }).collect()
    };
    dedup_increasing(&mut xs);
    xs
}

/// Drop knots that are not strictly above their predecessor, keeping the last one.
fn dedup_increasing(xs: &mut Vec<f64>) {
    let last = *xs.last().unwrap();
    let mut out: Vec<f64> = Vec::with_capacity(xs.len());
    for &x in xs.iter() {
        if out.last().map_or(true, |&p| x > p) && x < last {
            out.push(x);
        }
    }
    out.push(last);
    *xs = out;
}

/// `w·(4/3)[(1 + s√(g/w))^{1/d} − 1]²` and `ln q = ln(1 + s√(g/w))/d`.
fn scaled_bound(w: f64, s: f64, gap: f64, d: usize) -> (f64, f64) {
    if gap == 0.0 || w <= 0.0 {
        return (0.0, 0.0);
    }
    let ln_q = (s * (gap / w).sqrt()).ln_1p() / d as f64;
    (w * 4.0 / 3.0 * ln_q.exp_m1().powi(2), ln_q)
}

/// Knots and certified bound for a monotone convex-concave sub-density with
/// finite end slopes and mass `w`.
fn plan_finite_slopes(f: &Curve, d: usize, w: f64) -> Result<(Vec<f64>, f64)> {
    let (dr, dl) = (f.right_slope(), f.left_slope());
    if !dr.is_finite() || !dl.is_finite() {
        return domain("the end slopes must be finite");
    }
    let (bound, ln_q) = scaled_bound(w, f.length(), (dl - dr).abs(), d);
    // reduce to the nondecreasing convex case: reflect when exactly one of
    // convexity and monotonicity is "decreasing"
    let reflect = is_convex(f) != is_increasing(f);
    Ok((geometric_knots(f.a(), f.b(), d, ln_q, reflect), bound))
}

/// Knots and certified bound through the inverse function, for a strictly
/// monotone convex-concave sub-density with nonzero end slopes and mass `w`.
fn plan_inverse(f: &Curve, d: usize, w: f64) -> Result<(Vec<f64>, f64)> {
    let (fa, fb) = f.ends();
    if !(fa != fb) {
        return domain("the function must be strictly monotone");
    }
    if fb > fa {
        let (knots, bound) = plan_inverse(&f.reflect(), d, w)?;
        let s = f.a() + f.b();
        let mut xs: Vec<f64> = knots.iter().rev().map(|&x| s - x).collect();
        *xs.first_mut().unwrap() = f.a();
        *xs.last_mut().unwrap() = f.b();
        return Ok((xs, bound));
    }
    let (dr, dl) = (f.right_slope(), f.left_slope());
    if dr == 0.0 || dl == 0.0 || dr.is_nan() || dl.is_nan() {
        return domain("the end slopes must be nonzero");
    }
    if !(w > 0.0) {
        return domain("the sub-density must have positive mass");
    }
    let v = fa - fb;
    let (bound, ln_q) = scaled_bound(w, v, (recip(dr) - recip(dl)).abs(), d);
    // the inverse is decreasing on [f(b), f(a)] and convex iff f is
    let ys = geometric_knots(fb, fa, d, ln_q, is_convex(f));
    let mut xs: Vec<f64> = ys
        .iter()
        .rev()
        .map(|&y| if y == fa { f.a() } else if y == fb { f.b() } else { f.inverse_at(y) })
        .collect();
    dedup_increasing(&mut xs);
    *xs.first_mut().unwrap() = f.a();
    Ok((xs, bound))
}

fn sub_density_mass(p: &Curve) -> Result<f64> {
    let w = p.integral(TOL_MEAN);
    if w > 1.0 + MASS_TOL {
        return domain(format!("expected a sub-density, the mass is {w}"));
    }
    Ok(w.max(0.0))
}

fn certify(p: &Curve, knots: &[f64], bound: f64) -> Result<CertifiedApproximant> {
    let poly = linear_interpolate(p, knots)?;
    let measured = poly.l1_error(|x| p.value(x), TOL_MEASURE);
    let pieces = poly.pieces();
    Ok(CertifiedApproximant { approximant: Approximant::Polyline(poly), bound, measured: Some(measured), pieces })
}

/// D-linear interpolation of a monotone convex-concave sub-density on a
/// geometric grid, with bound `(4/3)[(1 + L√|p′_l(b) − p′_r(a)|)^{1/D} − 1]²`
/// (mass-scaled, hence never larger). Infinite end slopes are routed to
/// [`approx_convex_strict`].
pub fn approx_convex_monotone(p: &Curve, d: usize) -> Result<CertifiedApproximant> {
    if d == 0 {
        return domain("at least one piece is required");
    }
    if !p.right_slope().is_finite() || !p.left_slope().is_finite() {
        return approx_convex_strict(p, d);
    }
    let w = sub_density_mass(p)?;
    let (knots, bound) = plan_finite_slopes(p, d, w)?;
    certify(p, &knots, bound)
}

/// D-linear interpolation of a strictly monotone convex-concave sub-density
/// obtained by interpolating its inverse, with bound
/// `(4/3)[(1 + V√|1/p′_r(a) − 1/p′_l(b)|)^{1/D} − 1]²` (mass-scaled).
pub fn approx_convex_strict(p: &Curve, d: usize) -> Result<CertifiedApproximant> {
    if d == 0 {
        return domain("at least one piece is required");
    }
    let w = sub_density_mass(p)?;
    let (knots, bound) = plan_inverse(p, d, w)?;
    certify(p, &knots, bound)
}

/// Result of the two-sided construction: the 2D-linear interpolation and its
/// renormalized density.
#[derive(Clone, Debug)]
pub struct ConvexConcaveApprox {
    pub interpolant: CertifiedApproximant,
    pub density: CertifiedApproximant,
    /// Split point in the original coordinates.
    pub split: f64,
    pub gamma: f64,
    /// Sum of the two per-side bounds, which the closed form dominates.
    pub certificate: f64,
}

/// 2D-linear interpolation of a monotone convex-concave density on `[a, b]`,
/// with bound `(4/3)[(1+√(2LVΓ))^{1/D} − 1]²`, and its renormalized density
/// with bound `5.14 log²(1+√(2LVΓ))/D²`.
pub fn approx_convex_concave(p: &Curve, d: usize) -> Result<ConvexConcaveApprox> {
    if d == 0 {
        return domain("at least one piece is required");
    }
    let mass = p.integral(TOL_MEAN);
    if (mass - 1.0).abs() > 1e-6 {
        return domain(format!("expected a density on the interval, the mass is {mass}"));
    }
    let (a, b) = (p.a(), p.b());
    let (l, v, gamma) = (p.length(), p.variation(), linear_index(p));

    // h is nondecreasing and convex; `reflected` records whether x ↦ a+b−x
    // is needed to return to the original coordinates
    let convex = is_convex(p);
    let g = if convex { p.clone() } else { p.flip(2.0 * mass / l) };
    let reflected = !is_increasing(&g);
    let h = if reflected { g.reflect() } else { g };

    let slope = h.chord_slope();
    let (mut knots, split, certificate) = if !(slope > 0.0) || h.right_slope() >= slope {
        // affine
        (uniform_knots(a, b, 2 * d), 0.5 * (a + b), 0.0)
    } else {
        let c = bisect_predicate(|x| h.derivative(x, Side::Right) >= slope, a, b, 80);
        two_sided_knots(&h, c, d)?
    };
    if reflected {
        knots = knots.iter().rev().map(|&x| a + b - x).collect();
        *knots.first_mut().unwrap() = a;
        *knots.last_mut().unwrap() = b;
    }
    let split = if reflected { a + b - split } else { split };

    let z = (2.0 * l * v * gamma).sqrt().ln_1p();
    let bound = 4.0 / 3.0 * (z / d as f64).exp_m1().powi(2);
    let interpolant = certify(p, &knots, bound)?;

    let poly = interpolant.approximant.as_polyline().unwrap();
    let values: Vec<f64> = poly.ys().iter().map(|y| y.max(0.0)).collect();
    let q = PiecewiseLinear::continuous_unnormalized(poly.xs().to_vec(), values)?;
    let err = integrate_split(&|x: f64| (p.value(x) - q.eval(x)).abs(), a, b, poly.xs(), TOL_MEASURE);
    let pieces = q.pieces();
    let density = CertifiedApproximant {
        approximant: Approximant::Density(Density::Linear(q)),
        bound: 5.14 * z * z / (d * d) as f64,
        measured: Some(err),
        pieces,
    };
    Ok(ConvexConcaveApprox { interpolant, density, split, gamma, certificate })
}

/// Finite-slope construction on `[a, c]`, inverse construction on `[c, b]`.
fn two_sided_knots(h: &Curve, c: f64, d: usize) -> Result<(Vec<f64>, f64, f64)> {
    let (a, b) = (h.a(), h.b());
    if !(c > a && c < b) {
        // the split degenerated to an end: one side carries everything
        let w = h.integral(TOL_MEAN);
        let (k, bound) = plan_inverse(h, 2 * d, w)?;
        return Ok((k, c, bound));
    }
    let left = h.restrict(a, c)?;
    let right = h.restrict(c, b)?;
    let w1 = left.integral(TOL_MEAN).max(0.0);
    let w2 = right.integral(TOL_MEAN).max(0.0);
    let (k1, b1) = if w1 > 0.0 { plan_finite_slopes(&left, d, w1)? } else { (uniform_knots(a, c, d), 0.0) };
    let (k2, b2) = plan_inverse(&right, d, w2)?;
    let mut knots = k1;
    knots.extend_from_slice(&k2[1..]);
    Ok((knots, c, b1 + b2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::fixtures;

    fn curve(f: impl Fn(f64) -> f64 + Send + Sync + 'static, df: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Curve {
        Curve::new(0.0, 1.0, f, move |x, _| df(x)).unwrap()
    }

    fn quadratic() -> Curve {
        curve(|x| 1.5 * (1.0 - x * x), |x| -3.0 * x)
    }

    #[test]
    fn chord_of_square() {
        let f = curve(|x| x * x, |x| 2.0 * x);
        let p = linear_interpolate(&f, &[0.0, 1.0]).unwrap();
        assert!((p.eval(0.5) - 0.5).abs() < 1e-15);
        assert!((p.eval(0.5) - 0.25 - 0.25).abs() < 1e-15);
        let cb = chord_error_bounds(&f);
        assert_eq!(cb.bound_i, 0.25);
        let m = p.l1_error(|x| x * x, 1e-12);
        assert!((m - 1.0 / 6.0).abs() < 1e-10);
    }

    #[test]
    fn chord_of_root() {
        let f = curve(|x| x.sqrt(), |x| if x == 0.0 { f64::INFINITY } else { 0.5 / x.sqrt() });
        let cb = chord_error_bounds(&f);
        assert_eq!(cb.bound_i, f64::INFINITY);
        assert!((cb.bound_ii.unwrap() - 0.25).abs() < 1e-15);
        let p = linear_interpolate(&f, &[0.0, 1.0]).unwrap();
        assert!((p.l1_error(|x| x.sqrt(), 1e-12) - 1.0 / 6.0).abs() < 1e-8);
    }

    #[test]
    fn affine_chords_are_exact() {
        let f = curve(|x| 2.0 - x, |_| -1.0);
        let cb = chord_error_bounds(&f);
        assert_eq!(cb, ChordBounds { bound_i: 0.0, bound_ii: Some(0.0) });
        let p = linear_interpolate(&f, &[0.0, 0.3, 1.0]).unwrap();
        assert!(p.l1_error(|x| 2.0 - x, 1e-12) < 1e-14);
        assert!(linear_interpolate(&f, &[0.1, 1.0]).is_err());
    }

    #[test]
    fn concave_interpolant_lies_below() {
        let f = quadratic();
        let p = linear_interpolate(&f, &[0.0, 0.2, 0.7, 1.0]).unwrap();
        for i in 0..=10_000 {
            let x = i as f64 / 10_000.0;
            assert!(p.eval(x) <= f.value(x) + 1e-14);
        }
    }

    #[test]
    fn linear_index_values() {
        assert!((linear_index(&quadratic()) - 0.75).abs() < 1e-15);
        assert_eq!(linear_index(&curve(|x| 1.0 + x, |_| 1.0)), 0.0);
        assert_eq!(linear_index(&curve(|_| 1.0, |_| 0.0)), 0.0);
        let (a, b, c, v) = (0.0, 1.0, 0.4, 2.0);
        let hinge = Curve::new(
            a,
            b,
            move |x: f64| v * (x - c).max(0.0) / (b - c),
            move |x, s| {
                if x > c || (x == c && s == Side::Right) {
                    v / (b - c)
                } else {
                    0.0
                }
            },
        )
        .unwrap();
        assert!((linear_index(&hinge) - (1.0 - (b - c) / (2.0 * (b - a)))).abs() < 1e-12);
    }

    #[test]
    fn finite_slopes_on_quadratic() {
        let c = approx_convex_monotone(&quadratic(), 4).unwrap();
        let expect = 4.0 / 3.0 * ((1.0 + 3f64.sqrt()).powf(0.25) - 1.0).powi(2);
        assert!((c.bound - expect).abs() < 1e-9, "{} vs {expect}", c.bound);
        assert!(c.measured.unwrap() <= c.bound);
        assert_eq!(c.pieces, 4);
    }

    #[test]
    fn affine_inputs_are_reproduced() {
        let f = curve(|x| 2.0 * x, |_| 2.0);
        let c = approx_convex_monotone(&f, 3).unwrap();
        assert_eq!(c.bound, 0.0);
        assert!(c.measured.unwrap() < 1e-14);
        let g = curve(|x| 2.0 * (1.0 - x), |_| -2.0);
        let c = approx_convex_strict(&g, 3).unwrap();
        assert_eq!(c.bound, 0.0);
        assert!(c.measured.unwrap() < 1e-12);
    }

    #[test]
    fn zero_end_slope_rejected_by_inverse_construction() {
        let f = curve(|x| 3.0 * x * x, |x| 6.0 * x);
        assert!(approx_convex_strict(&f, 3).is_err());
        let g = curve(|x| 3.0 * (1.0 - x).powi(2), |x| -6.0 * (1.0 - x));
        assert!(approx_convex_strict(&g, 3).is_err());
        // the finite-slope construction covers both
        assert!(approx_convex_monotone(&f, 3).unwrap().is_sound(1e-9));
        assert!(approx_convex_monotone(&g, 3).unwrap().is_sound(1e-9));
    }

    #[test]
    fn infinite_slope_is_routed() {
        let f = curve(|x| 1.5 * x.sqrt(), |x| if x == 0.0 { f64::INFINITY } else { 0.75 / x.sqrt() });
        let c = approx_convex_monotone(&f, 4).unwrap();
        let expect = 4.0 / 3.0 * ((1.0 + 1.5 * (4.0f64 / 3.0).sqrt()).powf(0.25) - 1.0).powi(2);
        assert!((c.bound - expect).abs() < 1e-8);
        assert!(c.measured.unwrap() <= c.bound);
    }

    #[test]
    fn super_density_rejected() {
        let f = curve(|x| 3.0 * (1.0 - x), |_| -3.0);
        assert!(approx_convex_monotone(&f, 2).is_err());
    }

    #[test]
    fn affine_density_gives_zero() {
        let p: Density = fixtures::linear_decreasing().into();
        let r = approx_convex_concave(&Curve::from_density(&p, 0.0, 1.0).unwrap(), 3).unwrap();
        assert_eq!(r.gamma, 0.0);
        assert_eq!(r.interpolant.bound, 0.0);
        assert!(r.interpolant.measured.unwrap() < 1e-12);
        assert!(r.density.measured.unwrap() < 1e-10);
    }

    #[test]
    fn quadratic_density_two_sided() {
        let r = approx_convex_concave(&quadratic(), 2).unwrap();
        assert!((r.gamma - 0.75).abs() < 1e-15);
        let z = (2.0f64 * 1.5 * 0.75).sqrt().ln_1p();
        assert!((r.density.bound - 5.14 * z * z / 4.0).abs() < 1e-15);
        assert!(r.density.measured.unwrap() <= r.density.bound);
        assert!(r.interpolant.measured.unwrap() <= r.interpolant.bound);
        assert!(r.certificate <= r.interpolant.bound + 1e-12);
        assert_eq!(r.interpolant.pieces, 4);
        let r4 = approx_convex_concave(&quadratic(), 4).unwrap();
        assert!((r.density.bound / r4.density.bound - 4.0).abs() < 1e-12);
    }

    #[test]
    fn fixture_sweep_is_sound() {
        for fx in fixtures::convex_concave_fixtures() {
            let c = Curve::from_density(&fx.density, fx.lo, fx.hi).unwrap();
            for d in [1, 2, 4, 8, 16, 32] {
                let r = approx_convex_concave(&c, d).unwrap();
                for (what, x) in [("interpolant", &r.interpolant), ("density", &r.density)] {
                    assert!(x.is_sound(1e-6), "{} {what} d={d}: {:?} > {}", fx.name, x.measured, x.bound);
                }
                assert!(r.certificate <= r.interpolant.bound * (1.0 + 1e-9) + 1e-12, "{} d={d}", fx.name);
                assert!(r.interpolant.pieces <= 2 * d);
                let q = r.density.approximant.as_density().unwrap();
                if let Density::Linear(pl) = q {
                    // one shape interval inside, plus the two zero ends
                    assert!(pl.in_class(2 * d, 3), "{} d={d}", fx.name);
                }
                let m = approx_convex_monotone(&c, d).unwrap();
                assert!(m.is_sound(1e-6), "{} finite d={d}: {:?} > {}", fx.name, m.measured, m.bound);
            }
        }
    }
}
