//! Elementary pieces and the crossing-point sweep shared by TV distances,
//! `{q > p}` regions and sign-interval counts.

use crate::interval::{Interval, IntervalUnion};
use crate::numeric::bisect_root;

/// Relative tolerance under which two values (or log-values) are a tie.
pub const TIE_REL: f64 = 1e-12;

/// A density restricted to one cell of a merged breakpoint grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Piece {
    Zero,
    /// `a + b·x`
    Affine { a: f64, b: f64 },
    /// `exp(a + b·x)`
    Exp { a: f64, b: f64 },
}

impl Piece {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Piece::Zero => 0.0,
            Piece::Affine { a, b } => a + b * x,
            Piece::Exp { a, b } => (a + b * x).exp(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Piece::Zero)
    }

    /// Exact integral over `(l, r)`; the ends may be infinite for exponential pieces.
    pub fn integral(&self, l: f64, r: f64) -> f64 {
        if !(r > l) {
            return 0.0;
        }
        match *self {
            Piece::Zero => 0.0,
            Piece::Affine { a, b } => {
                if a == 0.0 && b == 0.0 {
                    0.0
                } else if !(l.is_finite() && r.is_finite()) {
                    f64::INFINITY
                } else {
                    (r - l) * (a + b * 0.5 * (l + r))
                }
            }
            Piece::Exp { a, b } => exp_integral(a, b, l, r),
        }
    }
}

/// `∫_l^r exp(a + b x) dx` in a form that stays accurate for tiny slopes.
pub fn exp_integral(a: f64, b: f64, l: f64, r: f64) -> f64 {
    if !(r > l) {
        return 0.0;
    }
    if b == 0.0 {
        return if (r - l).is_finite() { a.exp() * (r - l) } else { f64::INFINITY };
    }
    if b > 0.0 {
        if !r.is_finite() {
            return f64::INFINITY;
        }
        (a + b * r).exp() * (-(-b * (r - l)).exp_m1()) / b
    } else {
        if !l.is_finite() {
            return f64::INFINITY;
        }
        (a + b * l).exp() * (b * (r - l)).exp_m1() / b
    }
}

fn tie_zero(d: f64, scale: f64) -> f64 {
    if d.abs() <= TIE_REL * scale || d == 0.0 {
        0.0
    } else {
        d
    }
}

fn sgn(d: f64) -> i8 {
    if d > 0.0 {
        1
    } else if d < 0.0 {
        -1
    } else {
        0
    }
}

/// Sign of `g(x) − f(x)` with the tie tolerance; log-scale when both are exponential.
pub fn sign_at(f: &Piece, g: &Piece, x: f64) -> i8 {
    match (f, g) {
        (Piece::Zero, Piece::Zero) => 0,
        (Piece::Exp { a: a1, b: b1 }, Piece::Exp { a: a2, b: b2 }) => {
            let lf = a1 + b1 * x;
            let lg = a2 + b2 * x;
            sgn(tie_zero(lg - lf, lf.abs().max(lg.abs()).max(1.0)))
        }
        (Piece::Zero, Piece::Exp { .. }) => 1,
        (Piece::Exp { .. }, Piece::Zero) => -1,
        _ => {
            let fv = f.eval(x);
            let gv = g.eval(x);
            sgn(tie_zero(gv - fv, fv.abs().max(gv.abs())))
        }
    }
}

/// Points strictly inside `(l, r)` where `g − f` changes sign, sorted.
pub fn crossings(f: &Piece, g: &Piece, l: f64, r: f64) -> Vec<f64> {
    match (f, g) {
        (Piece::Zero, Piece::Zero) => vec![],
        (Piece::Zero, Piece::Exp { .. }) | (Piece::Exp { .. }, Piece::Zero) => vec![],
        (Piece::Exp { a: a1, b: b1 }, Piece::Exp { a: a2, b: b2 }) => {
            // log g − log f is affine
            linear_crossing(a2 - a1, b2 - b1, l, r, a1.abs().max(a2.abs()), b1.abs().max(b2.abs()))
        }
        (Piece::Exp { a, b }, other) => exp_affine_crossings(*a, *b, other, l, r),
        (other, Piece::Exp { a, b }) => exp_affine_crossings(*a, *b, other, l, r),
        _ => {
            let (a1, b1) = affine_coeffs(f);
            let (a2, b2) = affine_coeffs(g);
            if !(l.is_finite() && r.is_finite()) {
                return linear_crossing(a2 - a1, b2 - b1, l, r, a1.abs().max(a2.abs()), b1.abs().max(b2.abs()));
            }
            // endpoint values determine an affine difference on a bounded cell
            let fl = f.eval(l);
            let fr = f.eval(r);
            let gl = g.eval(l);
            let gr = g.eval(r);
            let dl = tie_zero(gl - fl, fl.abs().max(gl.abs()));
            let dr = tie_zero(gr - fr, fr.abs().max(gr.abs()));
            if dl != 0.0 && dr != 0.0 && (dl > 0.0) != (dr > 0.0) {
                let x = l + (r - l) * dl / (dl - dr);
                if x > l && x < r {
                    return vec![x];
                }
            }
            vec![]
        }
    }
}

fn affine_coeffs(p: &Piece) -> (f64, f64) {
    match *p {
        Piece::Zero => (0.0, 0.0),
        Piece::Affine { a, b } => (a, b),
        Piece::Exp { .. } => unreachable!("exponential piece has no affine coefficients"),
    }
}

fn linear_crossing(da: f64, db: f64, l: f64, r: f64, sa: f64, sb: f64) -> Vec<f64> {
    if db.abs() <= TIE_REL * sb || db == 0.0 {
        return vec![];
    }
    if da.abs() <= TIE_REL * sa && db.abs() <= TIE_REL * sb {
        return vec![];
    }
    let x = -da / db;
    if x > l && x < r {
        vec![x]
    } else {
        vec![]
    }
}

fn exp_affine_crossings(a: f64, b: f64, aff: &Piece, l: f64, r: f64) -> Vec<f64> {
    let (c, d) = affine_coeffs(aff);
    if !(l.is_finite() && r.is_finite()) {
        // affine pieces only live on bounded cells; a zero piece never crosses
        return vec![];
    }
    let h = |x: f64| (a + b * x).exp() - (c + d * x);
    let hz = |x: f64| {
        let e = (a + b * x).exp();
        let v = c + d * x;
        tie_zero(e - v, e.abs().max(v.abs()))
    };
    // h is convex; find its minimiser on [l, r]
    // otherwise h is monotone on the cell and a single bracket suffices
    let xm = if b != 0.0 && d / b > 0.0 { (((d / b).ln() - a) / b).clamp(l, r) } else { l };
    let (hl, hm, hr) = (hz(l), hz(xm), hz(r));
    let mut out = Vec::new();
    if xm > l && hl != 0.0 && hm != 0.0 && (hl > 0.0) != (hm > 0.0) {
        out.push(bisect_root(h, l, xm));
    }
    if xm < r && hm != 0.0 && hr != 0.0 && (hm > 0.0) != (hr > 0.0) {
        out.push(bisect_root(h, xm, r));
    }
    out.retain(|&x| x > l && x < r);
    out
}

/// One open stretch of the real line on which `sign(q − p)` is constant,
/// followed by its right endpoint.
#[derive(Clone, Copy, Debug)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    /// Sign of `q − p` on `(lo, hi)`.
    pub sign: i8,
    /// Sign of `q − p` at the point `hi` (meaningful when `hi` is finite).
    pub hi_sign: i8,
    /// Both densities vanish on the segment (and at `hi`).
    pub both_zero: bool,
    pub int_p: f64,
    pub int_q: f64,
}

/// Sweeps the merged grid of two piecewise densities described by their
/// breakpoints and a piece lookup.
pub fn sweep<P, Q>(bp: &[f64], piece_p: P, bq: &[f64], piece_q: Q) -> Vec<Segment>
where
    P: Fn(f64) -> Piece,
    Q: Fn(f64) -> Piece,
{
    let mut grid: Vec<f64> = bp.iter().chain(bq.iter()).copied().filter(|x| x.is_finite()).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut cells: Vec<(f64, f64)> = Vec::with_capacity(grid.len() + 1);
    if grid.is_empty() {
        cells.push((f64::NEG_INFINITY, f64::INFINITY));
    } else {
        cells.push((f64::NEG_INFINITY, grid[0]));
        for w in grid.windows(2) {
            cells.push((w[0], w[1]));
        }
        cells.push((grid[grid.len() - 1], f64::INFINITY));
    }
    let mut segs = Vec::with_capacity(cells.len() + 4);
    for (l, r) in cells {
        let probe = match (l.is_finite(), r.is_finite()) {
            (true, true) => 0.5 * (l + r),
            (false, true) => r - 1.0 - r.abs(),
            (true, false) => l + 1.0 + l.abs(),
            (false, false) => 0.0,
        };
        let f = piece_p(probe);
        let g = piece_q(probe);
        let both_zero = f.is_zero() && g.is_zero();
        let roots = crossings(&f, &g, l, r);
        let mut start = l;
        let n = roots.len();
        for i in 0..=n {
            let end = if i < n { roots[i] } else { r };
            let mid = match (start.is_finite(), end.is_finite()) {
                (true, true) => 0.5 * (start + end),
                (false, true) => end - 1.0 - end.abs(),
                (true, false) => start + 1.0 + start.abs(),
                (false, false) => 0.0,
            };
            let sign = sign_at(&f, &g, mid);
            let hi_sign = if i < n {
                0
            } else if end.is_finite() {
                sign_at(&f, &g, end)
            } else {
                0
            };
            segs.push(Segment {
                lo: start,
                hi: end,
                sign,
                hi_sign,
                both_zero,
                int_p: f.integral(start, end),
                int_q: g.integral(start, end),
            });
            start = end;
        }
    }
    segs
}

/// Which points of a sweep belong to a region.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegionRule {
    /// `{q > p}`
    Above,
    /// `{p > q}`
    Below,
    /// `{q ≥ p} ∩ ({p > 0} ∪ {q > 0})`
    AboveOrEqualOnSupport,
    /// `{p ≥ q} ∩ ({p > 0} ∪ {q > 0})`
    BelowOrEqualOnSupport,
}

impl RegionRule {
    fn admits(self, sign: i8, both_zero: bool) -> bool {
        match self {
            RegionRule::Above => sign > 0,
            RegionRule::Below => sign < 0,
            RegionRule::AboveOrEqualOnSupport => sign >= 0 && !both_zero,
            RegionRule::BelowOrEqualOnSupport => sign <= 0 && !both_zero,
        }
    }
}

/// Region of a sweep together with the masses the two densities give it.
#[derive(Clone, Debug)]
pub struct Region {
    pub union: IntervalUnion,
    pub mass_p: f64,
    pub mass_q: f64,
}

pub fn region(segs: &[Segment], rule: RegionRule) -> Region {
    let mut union = IntervalUnion::empty();
    let mut mass_p = crate::numeric::Kahan::default();
    let mut mass_q = crate::numeric::Kahan::default();
    for s in segs {
        if rule.admits(s.sign, s.both_zero) {
            union.push(Interval::open(s.lo, s.hi));
            mass_p.add(s.int_p);
            mass_q.add(s.int_q);
        }
        if s.hi.is_finite() && rule.admits(s.hi_sign, s.both_zero) {
            union.push(Interval::point(s.hi));
        }
    }
    Region { union, mass_p: mass_p.sum(), mass_q: mass_q.sum() }
}

/// `∫|q − p|` from a sweep.
pub fn l1_from(segs: &[Segment]) -> f64 {
    crate::numeric::kahan_sum(segs.iter().map(|s| (s.int_q - s.int_p).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_integrals() {
        assert!((exp_integral(0.0, -1.0, 0.0, f64::INFINITY) - 1.0).abs() < 1e-15);
        assert!((exp_integral(0.0, 1.0, f64::NEG_INFINITY, 0.0) - 1.0).abs() < 1e-15);
        let v = exp_integral(0.3, 1e-14, 0.0, 2.0);
        assert!((v - 0.3f64.exp() * 2.0).abs() < 1e-12);
    }

    #[test]
    fn exp_vs_affine_two_roots() {
        // the chord of e^x through x = −1 and x = 1
        let e = std::f64::consts::E;
        let slope = (e - 1.0 / e) / 2.0;
        let icpt = (e + 1.0 / e) / 2.0;
        let f = Piece::Exp { a: 0.0, b: 1.0 };
        let g = Piece::Affine { a: icpt, b: slope };
        let roots = crossings(&f, &g, -2.0, 2.0);
        assert_eq!(roots.len(), 2);
        assert!((roots[0] + 1.0).abs() < 1e-10);
        assert!((roots[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn ties_are_not_crossings() {
        let f = Piece::Affine { a: 1.0, b: 0.0 };
        assert!(crossings(&f, &f, 0.0, 1.0).is_empty());
        assert_eq!(sign_at(&f, &f, 0.5), 0);
        let e = Piece::Exp { a: -1.0, b: 2.0 };
        assert!(crossings(&e, &e, f64::NEG_INFINITY, 0.0).is_empty());
    }
}
