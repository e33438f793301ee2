//! Independent oracles and random generators shared by the integration tests.
//! Nothing here calls the library's own quadrature or distance code.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use tvdens::{LogLinear, PiecewiseConstant, PiecewiseLinear, Polyline};

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

thread_local! {
    static GL20: Vec<(f64, f64)> = gauss_legendre(20);
}

/// Composite 20-point Gauss–Legendre on `panels` equal panels.
pub fn gl(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    GL20.with(|nodes| {
        let h = (b - a) / panels as f64;
        let mut s = 0.0;
        for j in 0..panels {
            let (lo, hi) = (a + j as f64 * h, a + (j + 1) as f64 * h);
            let (m, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            for &(x, w) in nodes {
                s += w * r * f(m + r * x);
            }
        }
        s
    })
}

/// Root of `g` in `[a, b]` given a sign change.
pub fn bisect(g: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let ga = g(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if (g(m) > 0.0) == (ga > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// `∫_a^b |f − g|` where both are smooth between the given breakpoints.
/// Sign changes are located on a 64-point scan per cell and refined by
/// bisection, so the integrand is smooth on every quadrature panel.
pub fn l1_on(f: &dyn Fn(f64) -> f64, g: &dyn Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64]) -> f64 {
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|x| *x > a && *x < b).collect();
    cuts.push(a);
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let diff = |x: f64| f(x) - g(x);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        // stay strictly inside the cell so left/right conventions do not matter
        let h = (hi - lo) / 64.0;
        let mut pts = vec![lo];
        let mut prev = (lo + 1e-3 * h, diff(lo + 1e-3 * h));
        for i in 1..=64 {
            let x = if i == 64 { hi - 1e-3 * h } else { lo + i as f64 * h };
            let v = diff(x);
            if (v > 0.0 && prev.1 < 0.0) || (v < 0.0 && prev.1 > 0.0) {
                pts.push(bisect(&diff, prev.0, x));
            }
            prev = (x, v);
        }
        pts.push(hi);
        for s in pts.windows(2) {
            total += gl(&|x| diff(x).abs(), s[0], s[1], 16);
        }
    }
    total
}

/// Exact `∫|f − g|` for two polylines on the same domain.
pub fn polyline_l1(f: &Polyline, g: &Polyline) -> f64 {
    let mut xs: Vec<f64> = f.xs().iter().chain(g.xs()).copied().collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let d = |x: f64| f.eval(x) - g.eval(x);
    let mut total = 0.0;
    for w in xs.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (da, db) = (d(a), d(b));
        if da * db >= 0.0 {
            total += 0.5 * (b - a) * (da.abs() + db.abs());
        } else {
            // crossing inside the cell: two triangles
            let t = da.abs() / (da.abs() + db.abs());
            total += 0.5 * (b - a) * (t * da.abs() + (1.0 - t) * db.abs());
        }
    }
    total
}

pub fn random_pc(r: &mut ChaCha8Rng, max_cells: usize) -> PiecewiseConstant {
    let m = r.gen_range(1..=max_cells);
    let mut breaks = vec![r.gen_range(-1.0..0.5)];
    for _ in 0..m {
        let last = *breaks.last().unwrap();
        breaks.push(last + r.gen_range(0.05..1.0));
    }
    let levels: Vec<f64> = (0..m).map(|_| if r.gen_bool(0.15) { 0.0 } else { r.gen_range(0.01..2.0) }).collect();
    if levels.iter().all(|v| *v == 0.0) {
        return PiecewiseConstant::from_unnormalized(breaks, vec![1.0; m]).unwrap();
    }
    PiecewiseConstant::from_unnormalized(breaks, levels).unwrap()
}

/// One monotone run that is convex or concave: `m` affine pieces with
/// sorted slopes of a common sign.
fn shape_run(r: &mut ChaCha8Rng, m: usize, width: f64) -> (Vec<f64>, Vec<f64>) {
    let up = r.gen_bool(0.5);
    let convex = r.gen_bool(0.5);
    let sign = if up { 1.0 } else { -1.0 };
    let mut slopes: Vec<f64> = (0..m).map(|_| sign * r.gen_range(0.0..3.0)).collect();
    // convex: slopes increasing; concave: decreasing
    slopes.sort_by(f64::total_cmp);
    if !convex {
        slopes.reverse();
    }
    let mut widths: Vec<f64> = (0..m).map(|_| r.gen_range(0.2..1.0)).collect();
    let tw: f64 = widths.iter().sum();
    widths.iter_mut().for_each(|w| *w *= width / tw);
    let mut ys = vec![0.0];
    for j in 0..m {
        let last = *ys.last().unwrap();
        ys.push(last + slopes[j] * widths[j]);
    }
    (widths, ys)
}

/// A piecewise linear density made of `segments` monotone convex-concave
/// runs of up to `per_run` pieces each. Runs join continuously unless
/// `jumps`, in which case each run starts at a fresh level.
pub fn random_shape_pl(r: &mut ChaCha8Rng, segments: usize, per_run: usize, jumps: bool) -> PiecewiseLinear {
    let start = r.gen_range(-0.5..0.5);
    let mut knots = vec![start];
    let mut left = vec![];
    let mut right = vec![];
    let mut level = r.gen_range(0.0..2.0);
    for _ in 0..segments {
        let m = r.gen_range(1..=per_run);
        let width = r.gen_range(0.3..1.5);
        let (widths, ys) = shape_run(r, m, width);
        if jumps {
            level = r.gen_range(0.0..2.0);
        }
        let base = level;
        for j in 0..m {
            let last = *knots.last().unwrap();
            knots.push(last + widths[j]);
            left.push(base + ys[j]);
            right.push(base + ys[j + 1]);
        }
        level = base + ys[m];
    }
    let lowest = left.iter().chain(&right).copied().fold(f64::INFINITY, f64::min);
    let lift = if lowest < 0.0 { -lowest + r.gen_range(0.0..0.5) } else { 0.0 };
    left.iter_mut().for_each(|v| *v += lift);
    right.iter_mut().for_each(|v| *v += lift);
    PiecewiseLinear::from_unnormalized(knots, left, right).unwrap()
}

/// A log-concave log-linear density with `pieces` pieces; the outer ends are
/// infinite with probability 1/2 each.
pub fn random_log_concave(r: &mut ChaCha8Rng, pieces: usize) -> LogLinear {
    let inf_left = r.gen_bool(0.5);
    let inf_right = r.gen_bool(0.5) && !(inf_left && pieces == 1);
    let mut slopes: Vec<f64> = (0..pieces).map(|_| r.gen_range(-4.0..4.0)).collect();
    slopes.sort_by(|a, b| b.total_cmp(a));
    if inf_left && !(slopes[0] > 0.0) {
        slopes[0] = r.gen_range(0.1..2.0);
    }
    if inf_right && !(slopes[pieces - 1] < 0.0) {
        slopes[pieces - 1] = -r.gen_range(0.1..2.0);
    }
    slopes.sort_by(|a, b| b.total_cmp(a));
    let mut inner = vec![r.gen_range(-2.0..0.0)];
    while inner.len() + 1 < pieces {
        let last = *inner.last().unwrap();
        inner.push(last + r.gen_range(0.1..1.0));
    }
    inner.truncate(pieces - 1);
    let first = inner.first().copied().unwrap_or(0.0);
    let last = inner.last().copied().unwrap_or(0.0);
    let mut knots = vec![if inf_left { f64::NEG_INFINITY } else { first - r.gen_range(0.2..1.0) }];
    knots.extend_from_slice(&inner);
    knots.push(if inf_right { f64::INFINITY } else { last + r.gen_range(0.2..1.0) });
    // continuous log-density: intercepts chained from the first piece
    let mut intercepts = vec![r.gen_range(-1.0..1.0)];
    for j in 1..pieces {
        let x = knots[j];
        let v = slopes[j - 1] * x + intercepts[j - 1];
        intercepts.push(v - slopes[j] * x);
    }
    LogLinear::from_unnormalized(knots, slopes, intercepts).unwrap()
}

/// Strictly decreasing polyline on `[0, 1]` from `top` to `bottom`.
pub fn random_decreasing(r: &mut ChaCha8Rng, top: f64, bottom: f64, max_pieces: usize) -> Polyline {
    let m = r.gen_range(1..=max_pieces);
    let mut xs: Vec<f64> = (0..m - 1).map(|_| r.gen_range(0.01..0.99)).collect();
    xs.push(0.0);
    xs.push(1.0);
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    let m = xs.len() - 1;
    let mut drops: Vec<f64> = (0..m).map(|_| r.gen_range(0.05..1.0)).collect();
    let t: f64 = drops.iter().sum();
    drops.iter_mut().for_each(|d| *d *= (top - bottom) / t);
    let mut ys = vec![top];
    for d in &drops[..m - 1] {
        let last = *ys.last().unwrap();
        ys.push(last - d);
    }
    ys.push(bottom);
    Polyline::new(xs, ys).unwrap()
}

/// Grenander levels from the least concave majorant of the empirical CDF,
/// found by the quadratic "steepest chord from the current vertex" rule in
/// exact integer arithmetic. Observations are integers, the support starts
/// at 0. Returns (breaks, levels).
pub fn lcm_oracle(sample: &[i64]) -> (Vec<f64>, Vec<f64>) {
    let n = sample.len() as i64;
    let mut pts: Vec<(i64, i64)> = vec![(0, 0)];
    let mut sorted = sample.to_vec();
    sorted.sort();
    let mut c = 0;
    for (i, &x) in sorted.iter().enumerate() {
        c += 1;
        if i + 1 == sorted.len() || sorted[i + 1] != x {
            pts.push((x, c));
        }
    }
    let mut breaks = vec![0.0];
    let mut levels = vec![];
    let mut i = 0;
    while i + 1 < pts.len() {
        let mut best = i + 1;
        for j in i + 2..pts.len() {
            // slope(i, j) ≥ slope(i, best), the farthest one on ties
            let lhs = (pts[j].1 - pts[i].1) * (pts[best].0 - pts[i].0);
            let rhs = (pts[best].1 - pts[i].1) * (pts[j].0 - pts[i].0);
            if lhs >= rhs {
                best = j;
            }
        }
        let (dc, dx) = (pts[best].1 - pts[i].1, pts[best].0 - pts[i].0);
        breaks.push(pts[best].0 as f64);
        levels.push(dc as f64 / (n as f64 * dx as f64));
        i = best;
    }
    (breaks, levels)
}

/// Exact `∫|f − g|` for step functions given by (breaks, levels), either of
/// which may have any total mass.
pub fn step_l1(f: (&[f64], &[f64]), g: (&[f64], &[f64])) -> f64 {
    let at = |(b, l): (&[f64], &[f64]), x: f64| -> f64 {
        match b.windows(2).position(|w| x > w[0] && x < w[1]) {
            Some(j) => l[j],
            None => 0.0,
        }
    };
    let mut xs: Vec<f64> = f.0.iter().chain(g.0).copied().collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs.windows(2)
        .map(|w| {
            let m = 0.5 * (w[0] + w[1]);
            (at(f, m) - at(g, m)).abs() * (w[1] - w[0])
        })
        .sum()
}
