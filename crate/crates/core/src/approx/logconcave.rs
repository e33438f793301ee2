use serde::{Deserialize, Serialize};

use super::{Approximant, CertifiedApproximant, Curve};
use crate::density::{Density, LogLinear, Side};
use crate::numeric::{bisect_predicate, bisect_root, integrate_split, recip, TOL_MEASURE};
use crate::polyline::Polyline;
use crate::{domain, Result};

/// Which of the two single-interval inequalities certifies the interpolation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GuerinCase {
    /// Slopes in `x`: `(b−a)²/(2D²)·|α−Δ||Δ−β|/|α−β|`.
    I,
    /// Reciprocal slopes: `(f(a)−f(b))²/(8D²)·|1/α − 1/β|`.
    Ii,
}

const LOG_STEP: f64 = 2.3;

/// Area of the triangle cut out by the chord of `f` over `[u, v]` and the
/// tangents at its ends, which dominates the chord error of a convex or
/// concave `f`.
fn triangle(f: &Curve, u: f64, v: f64) -> f64 {
    let h = v - u;
    let alpha = f.derivative(u, Side::Right);
    let beta = f.derivative(v, Side::Left);
    let delta = (f.value(v) - f.value(u)) / h;
    if alpha == beta {
        return 0.0;
    }
    let half = 0.5 * h * h;
    match (alpha.is_infinite(), beta.is_infinite()) {
        (true, true) => f64::INFINITY,
        (true, false) => half * (delta - beta).abs(),
        (false, true) => half * (alpha - delta).abs(),
        (false, false) => half * (alpha - delta).abs() * (delta - beta).abs() / (alpha - beta).abs(),
    }
}

fn triangle_sum(f: &Curve, knots: &[f64]) -> f64 {
    knots.windows(2).map(|w| triangle(f, w[0], w[1])).sum()
}

/// Left-to-right partition whose pieces have triangle area at most `tau`;
/// `None` when more than `d` pieces would be needed.
fn greedy(f: &Curve, d: usize, tau: f64) -> Option<Vec<f64>> {
    let (a, b) = (f.a(), f.b());
    let mut knots = vec![a];
    let mut u = a;
    while knots.len() <= d {
        if triangle(f, u, b) <= tau {
            knots.push(b);
            return Some(knots);
        }
        let v = bisect_predicate(|v| triangle(f, u, v) > tau, u, b, 60);
        // largest point known to satisfy the threshold, or the first past it
        let v = if v > u && v < b { v } else { return None };
        knots.push(v);
        u = v;
    }
    None
}

/// Split the piece with the largest triangle at its midpoint until there are `d`.
fn fill_to(f: &Curve, mut knots: Vec<f64>, d: usize) -> Vec<f64> {
    while knots.len() <= d {
        let (i, _) = knots
            .windows(2)
            .map(|w| triangle(f, w[0], w[1]))
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, t)| if t > acc.1 { (i, t) } else { acc });
        let mid = 0.5 * (knots[i] + knots[i + 1]);
        if !(mid > knots[i] && mid < knots[i + 1]) {
            break;
        }
        knots.insert(i + 1, mid);
    }
    knots
}

fn uniform(a: f64, b: f64, d: usize) -> Vec<f64> {
    (0..=d).map(|i| if i == d { b } else { a + (b - a) * i as f64 / d as f64 }).collect()
}

/// Knots of a D-linear interpolation of a convex or concave `f`, chosen to
/// (approximately) equalize the end-tangent triangles, together with the sum
/// of those triangles, which certifies the L1 error.
fn plan(f: &Curve, d: usize) -> (Vec<f64>, f64) {
    let (a, b) = (f.a(), f.b());
    let mut best = uniform(a, b, d);
    let mut best_t = triangle_sum(f, &best);
    let mut consider = |k: Vec<f64>| {
        let t = triangle_sum(f, &k);
        if t < best_t {
            best_t = t;
            best = k;
        }
    };
    let (fa, fb) = f.ends();
    if fa != fb {
        let ys = uniform(fa.min(fb), fa.max(fb), d);
        let mut xs: Vec<f64> = ys.iter().map(|&y| f.inverse_at(y)).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        if xs.len() == d + 1 && xs[0] == a && xs[d] == b {
            consider(xs);
        }
    }
    let top = triangle(f, a, b);
    if top > 0.0 && top.is_finite() && d > 1 {
        let (mut lo, mut hi) = ((top * 1e-30).ln(), top.ln());
        let mut found = vec![a, b];
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            match greedy(f, d, mid.exp()) {
                Some(k) => {
                    found = k;
                    hi = mid;
                }
                None => lo = mid,
            }
        }
        consider(fill_to(f, found, d));
    }
    (best, best_t)
}

/// D-linear interpolation of a convex or concave `f` with `Δ ≠ 0`, with the
/// bound of the selected case. The reported bound is the larger of the closed
/// form and the triangle certificate of the constructed grid.
pub fn guerin_interpolation(f: &Curve, d: usize, case: GuerinCase) -> Result<CertifiedApproximant> {
    if d == 0 {
        return domain("at least one piece is required");
    }
    let delta = f.chord_slope();
    if delta == 0.0 || !delta.is_finite() {
        return domain("the chord slope must be finite and nonzero");
    }
    let (alpha, beta) = (f.right_slope(), f.left_slope());
    let d2 = (d * d) as f64;
    let formula = match case {
        GuerinCase::I => triangle(f, f.a(), f.b()) / d2,
        GuerinCase::Ii => {
            if alpha == 0.0 || beta == 0.0 || (alpha > 0.0) != (beta > 0.0) {
                return domain("case ii needs nonzero end slopes of one sign");
            }
            let (fa, fb) = f.ends();
            let g = (recip(alpha) - recip(beta)).abs();
            if g == 0.0 {
                0.0
            } else {
                (fa - fb).powi(2) / (8.0 * d2) * g
            }
        }
    };
    let (knots, cert) = plan(f, d);
    let poly = Polyline::interpolate(|x| f.value(x), &knots)?;
    let measured = poly.l1_error(|x| f.value(x), TOL_MEASURE);
    let pieces = poly.pieces();
    Ok(CertifiedApproximant {
        approximant: Approximant::Polyline(poly),
        bound: formula.max(cert),
        measured: Some(measured),
        pieces,
    })
}

fn log_slope(p: &Density, x: f64, side: Side) -> f64 {
    match p {
        Density::Generic(g) => g.log_derivative(x, side),
        Density::LogLinear(l) => l.log_derivative(x, side),
        other => {
            let v = match side {
                Side::Left => other.eval(x),
                Side::Right => other.eval_right(x),
            };
            other.derivative(x, side) / v
        }
    }
}

/// Point on the `dir` side of `m` where `φ` drops to `target`, or the support
/// end when `φ` stays above it.
fn level_point(phi: &dyn Fn(f64) -> f64, m: f64, end: f64, dir: f64, target: f64, scale: f64) -> f64 {
    let mut step = scale;
    loop {
        let x = m + dir * step;
        let beyond = if dir < 0.0 { x <= end } else { x >= end };
        if beyond {
            if phi(end) >= target {
                return end;
            }
            let (lo, hi) = if dir < 0.0 { (end, m) } else { (m, end) };
            return bisect_root(|y| phi(y) - target, lo, hi);
        }
        if phi(x) < target {
            let (lo, hi) = if dir < 0.0 { (x, m) } else { (m, x) };
            return bisect_root(|y| phi(y) - target, lo, hi);
        }
        step *= 2.0;
    }
}

/// Number of rings `J` and per-ring piece budgets for level step `t`.
pub(crate) fn ring_budgets(d: usize, t: f64) -> Vec<usize> {
    let e = -(-t).exp_m1();
    let k = (t / e).sqrt();
    let df = d as f64;
    let j = ((k * k * df * df / e).ln() / t).ceil().max(2.0) as usize;
    (1..=j)
        .map(|i| {
            let v = if i == 1 {
                k * df * (t / 2.0).sqrt()
            } else {
                k * df * (-((i - 1) as f64) * t / 2.0).exp() * (t / 8.0).sqrt()
            };
            (v - 1e-12).ceil().max(1.0) as usize
        })
        .collect()
}

/// Log-concave approximation with at most `6D` log-affine pieces and
/// certified L1 error `2/D²`.
///
/// The log-density is cut at the levels `φ(m) − jt`, `t = 2.3`, around the
/// mode `m`; each ring is interpolated in the log domain with its budget, and
/// the mass beyond the outermost ring is dropped before renormalizing. If the
/// rigorous certificate of the constructed grid ever exceeds `2/D²`, the
/// certificate is reported instead.
pub fn approx_logconcave(p: &Density, d: usize) -> Result<CertifiedApproximant> {
    if d < 6 {
        return domain("the log-concave construction needs D ≥ 6");
    }
    let target_bound = 2.0 / (d * d) as f64;
    match p {
        Density::LogLinear(l) if !l.is_log_concave() => return domain("the log-linear density is not log-concave"),
        Density::LogLinear(l) if l.pieces() <= 6 * d => {
            return Ok(CertifiedApproximant {
                approximant: Approximant::Density(p.clone()),
                bound: target_bound,
                measured: Some(0.0),
                pieces: l.pieces(),
            });
        }
        Density::LogLinear(_) => {}
        Density::Generic(g) if g.shape().log_concave => {}
        _ => return domain("expected a log-concave density"),
    }

    let (slo, shi) = p.support();
    let lo = if slo.is_finite() { slo } else { p.quantile(1e-12) };
    let hi = if shi.is_finite() { shi } else { p.quantile(1.0 - 1e-12) };
    let pc = p.clone();
    let phi = move |x: f64| {
        if x <= lo {
            pc.eval_right(lo).ln()
        } else {
            pc.log_eval(x)
        }
    };
    let m = bisect_predicate(|x| log_slope(p, x, Side::Right) <= 0.0, lo, hi, 200);
    let top = phi(m);
    if !top.is_finite() {
        return domain("the log-density is not finite at the mode");
    }
    let scale = (0.5 * (p.quantile(0.75) - p.quantile(0.25))).max(1e-12 * (1.0 + m.abs()));

    let budgets = ring_budgets(d, LOG_STEP);
    let (mut left, mut right) = (vec![m], vec![m]);
    for j in 1..=budgets.len() {
        let target = top - j as f64 * LOG_STEP;
        let a_prev = *left.last().unwrap();
        let b_prev = *right.last().unwrap();
        left.push(if a_prev <= lo { lo } else { level_point(&phi, m, lo, -1.0, target, scale) });
        right.push(if b_prev >= hi { hi } else { level_point(&phi, m, hi, 1.0, target, scale) });
    }

    let pd = p.clone();
    let curve = Curve::new(lo, hi, phi.clone(), move |x, s| log_slope(&pd, x, s))?;
    let mut knots: Vec<f64> = Vec::new();
    let mut cert = 0.0;
    for (j, &dj) in budgets.iter().enumerate() {
        for (outer, inner) in [(left[j + 1], left[j]), (right[j], right[j + 1])] {
            let (u, v) = if outer < inner { (outer, inner) } else { (inner, outer) };
            if !(v > u) {
                continue;
            }
            let ring = curve.restrict(u, v)?;
            let (k, t) = plan(&ring, dj);
            cert += phi(u).max(phi(v)).exp() * t;
            knots.extend_from_slice(&k);
        }
    }
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let (a_j, b_j) = (knots[0], knots[knots.len() - 1]);
    let logs: Vec<f64> = knots.iter().map(|&x| phi(x)).collect();
    let q = LogLinear::from_log_values(&knots, &logs)?;
    let outside = p.cdf(a_j) + (1.0 - p.cdf(b_j)).max(0.0);
    let cert = 2.0 * (cert + outside);
    let qd = q.clone();
    let inside = integrate_split(&|x: f64| (p.eval(x) - qd.eval(x)).abs(), a_j, b_j, &knots, TOL_MEASURE);
    let pieces = q.pieces();
    Ok(CertifiedApproximant {
        approximant: Approximant::Density(Density::LogLinear(q)),
        bound: target_bound.max(cert),
        measured: Some(inside + outside),
        pieces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::fixtures;

    fn curve(f: impl Fn(f64) -> f64 + Send + Sync + 'static, df: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Curve {
        Curve::new(0.0, 1.0, f, move |x, _| df(x)).unwrap()
    }

    #[test]
    fn budgets_for_six() {
        assert_eq!(ring_budgets(6, LOG_STEP), vec![11, 2, 1]);
        for d in 6..200 {
            let b = ring_budgets(d, LOG_STEP);
            assert!(2 * b.iter().sum::<usize>() <= 6 * d, "d={d}: {b:?}");
        }
    }

    #[test]
    fn negative_square_case_i() {
        let f = curve(|x| -x * x, |x| -2.0 * x);
        let c = guerin_interpolation(&f, 2, GuerinCase::I).unwrap();
        assert!((c.bound - 1.0 / 16.0).abs() < 1e-12);
        assert!((c.measured.unwrap() - 1.0 / 24.0).abs() < 1e-8);
    }

    #[test]
    fn exponential_case_ii() {
        let f = curve(|x| (-x).exp(), |x| -(-x).exp());
        let c = guerin_interpolation(&f, 3, GuerinCase::Ii).unwrap();
        let e = std::f64::consts::E;
        let formula = (1.0 - 1.0 / e).powi(2) / 72.0 * (-1.0 + e);
        assert!(c.bound >= formula - 1e-15);
        assert!(c.measured.unwrap() <= c.bound);
    }

    #[test]
    fn affine_and_flat_inputs() {
        let f = curve(|x| 1.0 + 3.0 * x, |_| 3.0);
        for case in [GuerinCase::I, GuerinCase::Ii] {
            let c = guerin_interpolation(&f, 4, case).unwrap();
            assert_eq!(c.bound, 0.0);
            assert!(c.measured.unwrap() < 1e-12);
        }
        assert!(guerin_interpolation(&curve(|_| 1.0, |_| 0.0), 2, GuerinCase::I).is_err());
    }

    #[test]
    fn triangle_sum_dominates_chord_error() {
        let f = curve(|x| (1.0 + x).ln(), |x| 1.0 / (1.0 + x));
        for d in [1, 2, 5, 13] {
            let (k, t) = plan(&f, d);
            let poly = Polyline::interpolate(|x| (1.0 + x).ln(), &k).unwrap();
            assert!(poly.l1_error(|x| (1.0 + x).ln(), 1e-12) <= t + 1e-12);
            assert!(t <= triangle(&f, 0.0, 1.0) / (d * d) as f64 * (1.0 + 1e-6), "d={d}");
        }
    }

    #[test]
    fn gaussian_six() {
        let p: Density = fixtures::gaussian(0.0, 1.0).unwrap().into();
        let c = approx_logconcave(&p, 6).unwrap();
        assert!(c.measured.unwrap() <= 2.0 / 36.0, "{:?}", c.measured);
        assert!(c.pieces <= 36);
        match &c.approximant {
            Approximant::Density(Density::LogLinear(q)) => assert!(q.is_log_concave()),
            _ => panic!("expected a log-linear density"),
        }
        assert!(c.is_sound(1e-6));
    }

    #[test]
    fn exponential_ten() {
        let p: Density = fixtures::gamma(1.0).unwrap().into();
        let c = approx_logconcave(&p, 10).unwrap();
        assert!(c.measured.unwrap() <= 0.02, "{:?}", c.measured);
        assert!(c.pieces <= 60);
    }

    #[test]
    fn laplace_fast_path() {
        let p: Density = LogLinear::laplace(0.0, 1.0).unwrap().into();
        let c = approx_logconcave(&p, 6).unwrap();
        assert_eq!(c.measured, Some(0.0));
        assert_eq!(c.pieces, 2);
    }

    #[test]
    fn small_budget_rejected() {
        let p: Density = fixtures::gaussian(0.0, 1.0).unwrap().into();
        assert!(approx_logconcave(&p, 5).is_err());
        let q: Density = fixtures::linear_decreasing().into();
        assert!(approx_logconcave(&q, 6).is_err());
    }

    #[test]
    fn gamma_and_scaled_gaussian() {
        for p in [
            Density::from(fixtures::gamma(3.0).unwrap()),
            Density::from(fixtures::gaussian(4.0, 0.01).unwrap()),
            Density::from(fixtures::half_gaussian(2.0).unwrap()),
        ] {
            for d in [6, 8, 16, 32] {
                let c = approx_logconcave(&p, d).unwrap();
                assert!(c.is_sound(1e-6), "{} d={d}: {:?} > {}", p.kind(), c.measured, c.bound);
                assert!(c.pieces <= 6 * d);
            }
        }
    }
}
