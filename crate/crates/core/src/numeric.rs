//! Quadrature, root finding and summation helpers.

/// Absolute tolerance used when measuring approximation errors.
pub const TOL_MEASURE: f64 = 1e-8;
/// Absolute tolerance used for cell means.
pub const TOL_MEAN: f64 = 1e-10;
/// Subdivision budget of one adaptive Simpson call.
pub const MAX_SUBDIVISIONS: usize = 1 << 20;

const MAX_DEPTH: u32 = 60;

fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    (a, fa): (f64, f64),
    (m, fm): (f64, f64),
    (b, fb): (f64, f64),
    whole: f64,
    tol: f64,
    depth: u32,
    budget: &mut usize,
) -> f64 {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth >= MAX_DEPTH || *budget == 0 || delta.abs() <= 15.0 * tol || !(lm > a && rm < b) {
        return left + right + delta / 15.0;
    }
    *budget -= 1;
    simpson_rec(f, (a, fa), (lm, flm), (m, fm), left, 0.5 * tol, depth + 1, budget)
        + simpson_rec(f, (m, fm), (rm, frm), (b, fb), right, 0.5 * tol, depth + 1, budget)
}

/// Adaptive Simpson quadrature of `f` over a finite interval `[a, b]`.
///
/// The interval is first cut into 8 panels so that features narrower than the
/// initial 5-point stencil are not missed.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    const PANELS: usize = 8;
    let mut budget = MAX_SUBDIVISIONS;
    let h = (b - a) / PANELS as f64;
    let mut total = Kahan::default();
    let mut x0 = a;
    let mut f0 = f(a);
    for i in 0..PANELS {
        let x1 = if i + 1 == PANELS { b } else { a + h * (i + 1) as f64 };
        let m = 0.5 * (x0 + x1);
        let fm = f(m);
        let f1 = f(x1);
        let whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
        total.add(simpson_rec(
            f,
            (x0, f0),
            (m, fm),
            (x1, f1),
            whole,
            tol / PANELS as f64,
            0,
            &mut budget,
        ));
        x0 = x1;
        f0 = f1;
    }
    total.sum()
}

/// Quadrature over an interval whose ends may be infinite.
///
/// Infinite ranges are mapped through `x = t/(1-|t|)` (and its one-sided
/// analogues); the integrand is assumed to vanish at infinity.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    match (a.is_finite(), b.is_finite()) {
        (true, true) => simpson(f, a, b, tol),
        (false, false) => {
            let g = |t: f64| {
                let s = 1.0 - t.abs();
                if s <= 0.0 {
                    return 0.0;
                }
                let v = f(t / s);
                if v == 0.0 {
                    0.0
                } else {
                    v / (s * s)
                }
            };
            simpson(&g, -1.0, 0.0, 0.5 * tol) + simpson(&g, 0.0, 1.0, 0.5 * tol)
        }
        (true, false) => {
            let g = |t: f64| {
                let s = 1.0 - t;
                if s <= 0.0 {
                    return 0.0;
                }
                let v = f(a + t / s);
                if v == 0.0 {
                    0.0
                } else {
                    v / (s * s)
                }
            };
            simpson(&g, 0.0, 1.0, tol)
        }
        (false, true) => {
            let g = |t: f64| {
                let s = 1.0 - t;
                if s <= 0.0 {
                    return 0.0;
                }
                let v = f(b - t / s);
                if v == 0.0 {
                    0.0
                } else {
                    v / (s * s)
                }
            };
            simpson(&g, 0.0, 1.0, tol)
        }
    }
}

/// Quadrature over `[a, b]` split at the given interior points.
pub fn integrate_split<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, cuts: &[f64], tol: f64) -> f64 {
    let mut pts: Vec<f64> = Vec::with_capacity(cuts.len() + 2);
    pts.push(a);
    pts.extend(cuts.iter().copied().filter(|&c| c > a && c < b));
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut acc = Kahan::default();
    for w in pts.windows(2) {
        acc.add(integrate(f, w[0], w[1], tol));
    }
    acc.sum()
}

/// Compensated summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    pub fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn sum(&self) -> f64 {
        self.sum
    }
}

pub fn kahan_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut k = Kahan::default();
    for x in xs {
        k.add(x);
    }
    k.sum()
}

/// Smallest `x` in `[lo, hi]` (up to `iters` halvings) such that `pred(x)` holds,
/// assuming `pred` is monotone (false then true).
pub fn bisect_predicate<P: Fn(f64) -> bool>(pred: P, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    if pred(lo) {
        return lo;
    }
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Root of a continuous `f` with `f(lo)` and `f(hi)` of opposite signs.
pub fn bisect_root<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section search for a minimum of `f` on `[lo, hi]`; returns `(x, f(x))`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    for _ in 0..iters {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
        for c in [(x1, f1), (x2, f2)] {
            if c.1 < best.1 {
                best = c;
            }
        }
    }
    best
}

/// The splitmix64 output function, used to derive child seeds.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed of stream `index` under `master`.
pub fn child_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

/// `1/x` on the extended reals, with `1/(±∞) = 0`.
pub fn recip(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        1.0 / x
    }
}

/// `a/b` with the conventions `0/0 = 1` and `finite/∞ = 0`.
pub fn ratio00(a: f64, b: f64) -> f64 {
    if a == 0.0 && b == 0.0 {
        1.0
    } else if b.is_infinite() && a.is_finite() {
        0.0
    } else {
        a / b
    }
}

/// Relative closeness with a floor for values near zero.
pub fn close(a: f64, b: f64, rel: f64) -> bool {
    if a == b {
        return true;
    }
    let scale = a.abs().max(b.abs());
    (a - b).abs() <= rel * scale || (a - b).abs() <= 1e-300
}
