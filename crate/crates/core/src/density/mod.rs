//! Density representations, exact distances and the `{q > p}` region algebra.

pub mod fixtures;
pub mod generic;
pub mod loglinear;
pub mod pc;
pub mod piece;
pub mod pl;
pub mod spec;

pub use generic::{Convexity, GenericDensity, Monotone, Shape};
pub use loglinear::LogLinear;
pub use pc::PiecewiseConstant;
pub use piece::Piece;
pub use pl::PiecewiseLinear;
pub use spec::DensitySpec;

use std::borrow::Cow;

use crate::interval::IntervalUnion;
use crate::numeric::{integrate_split, kahan_sum, TOL_MEASURE};
use crate::{domain, Error, Result};
use piece::{region, sweep, RegionRule, Segment};

/// Side of a one-sided derivative.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Any density (or sub-density) handled by the crate.
#[derive(Clone, Debug, PartialEq)]
pub enum Density {
    Constant(PiecewiseConstant),
    Linear(PiecewiseLinear),
    LogLinear(LogLinear),
    Generic(GenericDensity),
    /// Finite mixture `Σ w_i p_i`; weights are not required to sum to one.
    Mixture(Vec<(f64, Density)>),
}

impl From<PiecewiseConstant> for Density {
    fn from(p: PiecewiseConstant) -> Self {
        Density::Constant(p)
    }
}

impl From<PiecewiseLinear> for Density {
    fn from(p: PiecewiseLinear) -> Self {
        Density::Linear(p)
    }
}

impl From<LogLinear> for Density {
    fn from(p: LogLinear) -> Self {
        Density::LogLinear(p)
    }
}

impl From<GenericDensity> for Density {
    fn from(p: GenericDensity) -> Self {
        Density::Generic(p)
    }
}

impl Density {
    pub fn kind(&self) -> &'static str {
        match self {
            Density::Constant(_) => "pc",
            Density::Linear(_) => "pl",
            Density::LogLinear(_) => "loglinear",
            Density::Generic(_) => "generic",
            Density::Mixture(_) => "mixture",
        }
    }

    /// Value with the left-continuity convention.
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Density::Constant(p) => p.eval(x),
            Density::Linear(p) => p.eval(x),
            Density::LogLinear(p) => p.eval(x),
            Density::Generic(p) => p.eval(x),
            Density::Mixture(c) => kahan_sum(c.iter().map(|(w, d)| w * d.eval(x))),
        }
    }

    pub fn eval_right(&self, x: f64) -> f64 {
        match self {
            Density::Constant(p) => p.eval_right(x),
            Density::Linear(p) => p.eval_right(x),
            Density::LogLinear(p) => p.eval_right(x),
            Density::Generic(p) => p.eval_right(x),
            Density::Mixture(c) => kahan_sum(c.iter().map(|(w, d)| w * d.eval_right(x))),
        }
    }

    pub fn log_eval(&self, x: f64) -> f64 {
        match self {
            Density::LogLinear(p) => p.log_eval(x),
            Density::Generic(p) if x > p.support().0 && x <= p.support().1 => p.log_eval(x),
            _ => self.eval(x).ln(),
        }
    }

    /// One-sided derivative of the density.
    pub fn derivative(&self, x: f64, side: Side) -> f64 {
        match self {
            Density::Constant(_) => 0.0,
            Density::Linear(p) => p.derivative(x, side),
            Density::LogLinear(p) => {
                let v = match side {
                    Side::Left => p.eval(x),
                    Side::Right => p.eval_right(x),
                };
                v * p.log_derivative(x, side)
            }
            Density::Generic(p) => p.derivative(x, side),
            Density::Mixture(c) => kahan_sum(c.iter().map(|(w, d)| w * d.derivative(x, side))),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Density::Constant(p) => p.cdf(x),
            Density::Linear(p) => p.cdf(x),
            Density::LogLinear(p) => p.cdf(x),
            Density::Generic(p) => p.cdf(x),
            Density::Mixture(c) => kahan_sum(c.iter().map(|(w, d)| w * d.cdf(x))),
        }
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            Density::Constant(p) => p.total_mass(),
            Density::Linear(p) => p.total_mass(),
            Density::LogLinear(p) => p.total_mass(),
            Density::Generic(p) => p.total_mass(),
            Density::Mixture(c) => kahan_sum(c.iter().map(|(w, d)| w * d.total_mass())),
        }
    }

    /// Generalized inverse of the CDF.
    pub fn quantile(&self, u: f64) -> f64 {
        match self {
            Density::Constant(p) => p.quantile(u),
            Density::Linear(p) => p.quantile(u),
            Density::LogLinear(p) => p.quantile(u),
            Density::Generic(p) => p.quantile(u),
            Density::Mixture(_) => {
                let (mut lo, mut hi) = self.support();
                if !lo.is_finite() {
                    lo = -1.0;
                    while self.cdf(lo) >= u && lo > -1e300 {
                        lo *= 2.0;
                    }
                }
                if !hi.is_finite() {
                    hi = 1.0f64.max(lo.abs());
                    while self.cdf(hi) < u && hi < 1e300 {
                        hi *= 2.0;
                    }
                }
                crate::numeric::bisect_predicate(|x| self.cdf(x) >= u, lo, hi, 200)
            }
        }
    }

    /// Smallest closed interval outside of which the density vanishes.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Density::Constant(p) => p.support(),
            Density::Linear(p) => p.support(),
            Density::LogLinear(p) => p.support(),
            Density::Generic(p) => p.support(),
            Density::Mixture(c) => c
                .iter()
                .filter(|(w, _)| *w > 0.0)
                .map(|(_, d)| d.support())
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (l, r)| (a.min(l), b.max(r))),
        }
    }

    /// Finite breakpoints and kinks, sorted.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v: Vec<f64> = match self {
            Density::Constant(p) => p.breaks().to_vec(),
            Density::Linear(p) => p.knots().to_vec(),
            Density::LogLinear(p) => p.finite_knots(),
            Density::Generic(p) => {
                let (l, r) = p.support();
                let mut k = p.kinks().to_vec();
                k.extend([l, r].into_iter().filter(|x| x.is_finite()));
                k
            }
            Density::Mixture(c) => c.iter().flat_map(|(_, d)| d.breakpoints()).collect(),
        };
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    pub fn is_piecewise(&self) -> bool {
        self.as_piecewise().is_some()
    }

    /// A pc, pl or log-linear view of the density when one exists exactly;
    /// mixtures of pc and pl components are flattened.
    pub fn as_piecewise(&self) -> Option<Cow<'_, Density>> {
        match self {
            Density::Constant(_) | Density::Linear(_) | Density::LogLinear(_) => Some(Cow::Borrowed(self)),
            Density::Generic(_) => None,
            Density::Mixture(_) => self.flatten().ok().map(Cow::Owned),
        }
    }

    /// Flattens a mixture of pc/pl components (nested mixtures allowed) into
    /// a single pc or pl density. Mixtures with one component are unwrapped.
    pub fn flatten(&self) -> Result<Density> {
        let Density::Mixture(c) = self else {
            return Ok(self.clone());
        };
        let live: Vec<(f64, Density)> = c
            .iter()
            .filter(|(w, _)| *w > 0.0)
            .map(|(w, d)| d.flatten().map(|f| (*w, f)))
            .collect::<Result<_>>()?;
        if live.len() == 1 && (live[0].0 - 1.0).abs() < 1e-15 {
            return Ok(live[0].1.clone());
        }
        if live.is_empty() {
            return Err(Error::Degenerate("mixture without positive weights".into()));
        }
        let mut grid: Vec<f64> = vec![];
        let mut all_pc = true;
        for (_, d) in &live {
            match d {
                Density::Constant(p) => grid.extend_from_slice(p.breaks()),
                Density::Linear(p) => {
                    all_pc = false;
                    grid.extend_from_slice(p.knots())
                }
                _ => return Err(Error::Unsupported(format!("cannot flatten a mixture with a {} component", d.kind()))),
            }
        }
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let total = kahan_sum(live.iter().map(|(w, d)| w * d.total_mass()));
        let sub = live.iter().any(|(_, d)| matches!(d, Density::Constant(p) if p.is_sub()) || matches!(d, Density::Linear(p) if p.is_sub()))
            || (total - 1.0).abs() > 1e-9;
        if all_pc {
            let levels: Vec<f64> = grid
                .windows(2)
                .map(|w| kahan_sum(live.iter().map(|(wt, d)| wt * d.eval(0.5 * (w[0] + w[1])))))
                .collect();
            let p = if sub {
                PiecewiseConstant::new_sub(grid, levels)?
            } else {
                PiecewiseConstant::from_unnormalized(grid, levels)?
            };
            Ok(Density::Constant(p))
        } else {
            let mut left = vec![];
            let mut right = vec![];
            for w in grid.windows(2) {
                left.push(kahan_sum(live.iter().map(|(wt, d)| wt * d.eval_right(w[0]))));
                right.push(kahan_sum(live.iter().map(|(wt, d)| wt * d.eval(w[1]))));
            }
            let p = if sub {
                PiecewiseLinear::new_sub(grid, left, right)?
            } else {
                PiecewiseLinear::from_unnormalized(grid, left, right)?
            };
            Ok(Density::Linear(p))
        }
    }

    fn piece_at(&self, x: f64) -> Piece {
        match self {
            Density::Constant(p) => p.piece_at(x),
            Density::Linear(p) => p.piece_at(x),
            Density::LogLinear(p) => p.piece_at(x),
            _ => unreachable!("piece lookup on a non-piecewise density"),
        }
    }

    /// Image under `x ↦ σx + m`, σ > 0.
    pub fn pushforward(&self, sigma: f64, m: f64) -> Result<Density> {
        if !(sigma > 0.0) || !sigma.is_finite() || !m.is_finite() {
            return domain("pushforward needs σ > 0 and finite m");
        }
        Ok(match self {
            Density::Constant(p) => Density::Constant(p.pushforward(sigma, m)),
            Density::Linear(p) => Density::Linear(p.pushforward(sigma, m)),
            Density::LogLinear(p) => Density::LogLinear(p.pushforward(sigma, m)),
            Density::Generic(p) => Density::Generic(p.pushforward(sigma, m)),
            Density::Mixture(c) => Density::Mixture(
                c.iter().map(|(w, d)| d.pushforward(sigma, m).map(|d| (*w, d))).collect::<Result<_>>()?,
            ),
        })
    }

    pub fn to_spec(&self) -> Result<DensitySpec> {
        DensitySpec::from_density(self)
    }

    pub fn from_json(s: &str) -> Result<Density> {
        let spec: DensitySpec = serde_json::from_str(s)?;
        spec.build()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_spec()?)?)
    }
}

pub(crate) fn sweep_pair(p: &Density, q: &Density) -> Option<Vec<Segment>> {
    let pp = p.as_piecewise()?;
    let qq = q.as_piecewise()?;
    let bp = pp.breakpoints();
    let bq = qq.breakpoints();
    Some(sweep(&bp, |x| pp.piece_at(x), &bq, |x| qq.piece_at(x)))
}

fn check_integrable(d: &Density) -> Result<()> {
    let m = d.total_mass();
    if !m.is_finite() || m > 1.0 + 1e-6 || m < 0.0 {
        return domain(format!("{} input is not a (sub-)density: mass {m}", d.kind()));
    }
    Ok(())
}

/// `∫|p − q|`. Exact for piecewise pairs; adaptive quadrature (abs tol 1e-8)
/// when a generic density is involved.
pub fn l1_distance(p: &Density, q: &Density) -> Result<f64> {
    check_integrable(p)?;
    check_integrable(q)?;
    if let Some(segs) = sweep_pair(p, q) {
        return Ok(piece::l1_from(&segs));
    }
    Ok(l1_by_quadrature(p, q, TOL_MEASURE))
}

/// `∫|p − q|` by quadrature; used as an oracle and as the generic fallback.
pub fn l1_by_quadrature(p: &Density, q: &Density, tol: f64) -> f64 {
    let (a1, b1) = p.support();
    let (a2, b2) = q.support();
    let (a, b) = (a1.min(a2), b1.max(b2));
    let mut cuts = p.breakpoints();
    cuts.extend(q.breakpoints());
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let f = |x: f64| (p.eval(x) - q.eval(x)).abs();
    integrate_split(&f, a, b, &cuts, tol)
}

/// Total variation distance `½∫|p − q|`, clamped to `[0, 1]`.
pub fn tv_distance(p: &Density, q: &Density) -> Result<f64> {
    Ok((0.5 * l1_distance(p, q)?).clamp(0.0, 1.0))
}

fn unsupported(p: &Density, q: &Density) -> Error {
    Error::Unsupported(format!("region of a {} / {} pair", p.kind(), q.kind()))
}

/// `{x : q(x) > p(x)}` as a union of maximal intervals.
pub fn region_above(p: &Density, q: &Density) -> Result<IntervalUnion> {
    let segs = sweep_pair(p, q).ok_or_else(|| unsupported(p, q))?;
    Ok(region(&segs, RegionRule::Above).union)
}

/// `{q ≥ p} ∩ ({p > 0} ∪ {q > 0})`, the region of the Devroye–Lugosi statistic.
pub fn region_ge(p: &Density, q: &Density) -> Result<IntervalUnion> {
    let segs = sweep_pair(p, q).ok_or_else(|| unsupported(p, q))?;
    Ok(region(&segs, RegionRule::AboveOrEqualOnSupport).union)
}

/// Region `{q > p}` together with its `P` and `Q` masses, from one sweep.
pub fn region_with_masses(p: &Density, q: &Density, rule: RegionRule) -> Result<piece::Region> {
    let segs = sweep_pair(p, q).ok_or_else(|| unsupported(p, q))?;
    Ok(region(&segs, rule))
}

/// `P(U)` for a disjoint union `U`.
pub fn probability_of(p: &Density, u: &IntervalUnion) -> f64 {
    kahan_sum(u.intervals().iter().map(|iv| (p.cdf(iv.hi) - p.cdf(iv.lo)).max(0.0)))
}

/// `(#maximal intervals of {p > q}, #maximal intervals of {p < q})`.
pub fn count_sign_intervals(p: &Density, q: &Density) -> Result<(usize, usize)> {
    let segs = sweep_pair(p, q).ok_or_else(|| unsupported(p, q))?;
    Ok((region(&segs, RegionRule::Below).union.count(), region(&segs, RegionRule::Above).union.count()))
}

/// `f / ∫f` in the representation of `f`.
pub fn renormalize(f: &Density) -> Result<Density> {
    let total = f.total_mass();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Degenerate("cannot renormalize a function with zero integral".into()));
    }
    Ok(match f {
        Density::Constant(p) => Density::Constant(PiecewiseConstant::from_unnormalized(p.breaks().to_vec(), p.levels().to_vec())?),
        Density::Linear(p) => Density::Linear(PiecewiseLinear::from_unnormalized(
            p.knots().to_vec(),
            p.left_values().to_vec(),
            p.right_values().to_vec(),
        )?),
        Density::LogLinear(p) => Density::LogLinear(LogLinear::from_unnormalized(
            p.knots().to_vec(),
            p.slopes().to_vec(),
            p.intercepts().to_vec(),
        )?),
        Density::Generic(p) => Density::Generic(p.scaled(1.0 / total)),
        Density::Mixture(c) => Density::Mixture(c.iter().map(|(w, d)| (w / total, d.clone())).collect()),
    })
}

/// `w · f` as a sub-density of the same representation.
pub fn scale(f: &Density, w: f64) -> Density {
    match f {
        Density::Constant(p) => Density::Constant(p.scaled(w)),
        Density::Linear(p) => Density::Linear(p.scaled(w)),
        Density::LogLinear(p) => Density::LogLinear(p.scaled(w)),
        Density::Generic(p) => Density::Generic(p.scaled(w)),
        Density::Mixture(c) => Density::Mixture(c.iter().map(|(v, d)| (v * w, d.clone())).collect()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::Interval;

    fn u(a: f64, b: f64) -> Density {
        PiecewiseConstant::uniform(a, b).unwrap().into()
    }

    #[test]
    fn tv_examples() {
        assert_eq!(tv_distance(&u(0.0, 1.0), &u(0.0, 1.0)).unwrap(), 0.0);
        assert!((tv_distance(&u(0.0, 1.0), &u(1.0, 2.0)).unwrap() - 1.0).abs() < 1e-15);
        assert!((tv_distance(&u(0.0, 1.0), &u(0.0, 2.0)).unwrap() - 0.5).abs() < 1e-15);
        assert!((l1_distance(&u(0.0, 1.0), &u(0.0, 2.0)).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn l1_exp_vs_truncated_exp() {
        let t = 2.0f64;
        let e: Density = LogLinear::exponential(1.0).unwrap().into();
        let z = 1.0 - (-t).exp();
        let tr: Density = LogLinear::new(vec![0.0, t], vec![-1.0], vec![-z.ln()]).unwrap().into();
        // oracle: quadrature of |e^{-x} − e^{-x}/z| on (0,T) plus the tail
        let f = |x: f64| ((-x).exp() * (1.0 / z - 1.0)).abs();
        let oracle = crate::numeric::integrate(&f, 0.0, t, 1e-13) + (-t).exp();
        assert!((l1_distance(&e, &tr).unwrap() - oracle).abs() < 1e-10);
    }

    #[test]
    fn region_examples() {
        let r = region_above(&u(0.0, 1.0), &u(0.5, 1.5)).unwrap();
        assert_eq!(r.intervals(), &[Interval::left_open(1.0, 1.5)]);
        assert!(region_above(&u(0.0, 1.0), &u(0.0, 1.0)).unwrap().is_empty());
        let p: Density = PiecewiseConstant::new(vec![0.0, 0.5, 1.0], vec![2.0, 0.0]).unwrap().into();
        let r = region_above(&p, &u(0.0, 1.0)).unwrap();
        assert_eq!(r.count(), 1);
        assert!(r.contains(0.75) && r.contains(1.0) && !r.contains(0.5));
    }

    #[test]
    fn probability_examples() {
        let iv = IntervalUnion::from_sorted([Interval::left_open(1.0, 1.5)]).unwrap();
        assert_eq!(probability_of(&u(0.0, 1.0), &iv), 0.0);
        assert!((probability_of(&u(0.0, 2.0), &iv) - 0.25).abs() < 1e-15);
        let e: Density = LogLinear::exponential(1.0).unwrap().into();
        let tail = IntervalUnion::from_sorted([Interval::open(2f64.ln(), f64::INFINITY)]).unwrap();
        assert!((probability_of(&e, &tail) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sign_counts() {
        assert_eq!(count_sign_intervals(&u(0.0, 1.0), &u(0.0, 1.0)).unwrap(), (0, 0));
        assert_eq!(count_sign_intervals(&u(0.0, 1.0), &u(0.0, 2.0)).unwrap(), (1, 1));
    }

    #[test]
    fn renormalize_examples() {
        let f: Density = PiecewiseConstant::new_sub(vec![0.0, 0.5], vec![1.0]).unwrap().into();
        let g = renormalize(&f).unwrap();
        assert!((g.eval(0.25) - 2.0).abs() < 1e-15);
        let p = u(0.0, 1.0);
        assert!((l1_distance(&p, &f).unwrap() - 0.5).abs() < 1e-15);
        assert!((l1_distance(&p, &g).unwrap() - 1.0).abs() < 1e-15);
        let zero: Density = PiecewiseConstant::new_sub(vec![0.0, 1.0], vec![0.0]).unwrap().into();
        assert!(matches!(renormalize(&zero), Err(Error::Degenerate(_))));
    }

    #[test]
    fn mixture_flattens_to_pc() {
        let m = Density::Mixture(vec![(0.5, u(0.0, 1.0)), (0.5, u(0.5, 1.5))]);
        let f = m.flatten().unwrap();
        assert_eq!(f.kind(), "pc");
        assert!((f.eval(0.75) - 1.0).abs() < 1e-15);
        assert!((f.total_mass() - 1.0).abs() < 1e-12);
        assert!((tv_distance(&m, &u(0.0, 1.0)).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn generic_falls_back_to_quadrature() {
        let g: Density = GenericDensity::new("u", 0.0, 1.0, |_| 1.0).into();
        assert!(tv_distance(&g, &u(0.0, 2.0)).unwrap() - 0.5 < 1e-8);
        assert!(matches!(region_above(&g, &u(0.0, 2.0)), Err(Error::Unsupported(_))));
    }
}
