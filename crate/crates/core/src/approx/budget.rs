use serde::{Deserialize, Serialize};

use super::{linear_index, Curve};
use crate::density::Density;
use crate::{domain, Result};

/// Weight tolerance for `Σ w_i = 1`.
const WEIGHT_TOL: f64 = 1e-9;
/// Largest dimension examined by the integer scans.
const SCAN_CAP: usize = 10_000_000;

/// One piece `w_i p_i 1_{(x_{i−1}, x_i)}` of a mixture decomposition, with the
/// length, variation and linear index of the normalized piece `p_i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub lo: f64,
    pub hi: f64,
    pub variation: f64,
    #[serde(default)]
    pub gamma: f64,
}

impl MixtureComponent {
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    /// Uniform piece: no variation.
    pub fn uniform(weight: f64, lo: f64, hi: f64) -> Self {
        MixtureComponent { weight, lo, hi, variation: 0.0, gamma: 0.0 }
    }

    /// `p_i` given as a curve on its interval (a density there).
    pub fn from_curve(weight: f64, p: &Curve) -> Self {
        MixtureComponent { weight, lo: p.a(), hi: p.b(), variation: p.variation(), gamma: linear_index(p) }
    }

    /// `p_i` given as a density supported on `[lo, hi]`.
    pub fn from_density(weight: f64, p: &Density, lo: f64, hi: f64) -> Result<Self> {
        Ok(MixtureComponent::from_curve(weight, &Curve::from_density(p, lo, hi)?))
    }

    fn r0_term(&self) -> f64 {
        (self.weight * (self.length() * self.variation).ln_1p()).sqrt()
    }

    fn r1_term(&self) -> f64 {
        let z = (2.0 * self.length() * self.variation * self.gamma).sqrt().ln_1p();
        (self.weight * z * z).cbrt()
    }
}

/// A decomposition `p = Σ w_i p_i 1_{(x_{i−1}, x_i)}` with increasing,
/// non-overlapping bounded intervals and weights summing to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub components: Vec<MixtureComponent>,
}

impl MixtureSpec {
    pub fn new(components: Vec<MixtureComponent>) -> Result<Self> {
        if components.is_empty() {
            return domain("a decomposition needs at least one component");
        }
        for c in &components {
            if !(c.weight >= 0.0) || !c.lo.is_finite() || !c.hi.is_finite() || !(c.hi > c.lo) {
                return domain("components need nonnegative weights and bounded nontrivial intervals");
            }
            if !(c.variation >= 0.0) || !c.variation.is_finite() || !(0.0..=1.0).contains(&c.gamma) {
                return domain("components need finite variation and a linear index in [0, 1]");
            }
        }
        if components.windows(2).any(|w| w[1].lo < w[0].hi) {
            return domain("component intervals must be increasing and disjoint");
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return domain(format!("weights sum to {total}, not 1"));
        }
        Ok(MixtureSpec { components })
    }

    pub fn singleton(c: MixtureComponent) -> Result<Self> {
        MixtureSpec::new(vec![MixtureComponent { weight: 1.0, ..c }])
    }

    /// Number of pieces `k` of the piecewise shape: the pieces plus the two
    /// unbounded ends.
    pub fn k(&self) -> usize {
        self.components.len() + 2
    }
}

/// `[Σ √(w_i log(1 + L_i V_i))]²` on the given decomposition.
pub fn budget_r0(m: &MixtureSpec) -> f64 {
    m.components.iter().map(MixtureComponent::r0_term).sum::<f64>().powi(2)
}

/// `[Σ (w_i log²(1 + √(2 L_i V_i Γ_i)))^{1/3}]^{3/2}` on the given decomposition.
pub fn budget_r1(m: &MixtureSpec) -> f64 {
    m.components.iter().map(MixtureComponent::r1_term).sum::<f64>().powf(1.5)
}

/// Numerical constants of the risk and approximation bounds. Every field can be
/// overridden from JSON; missing fields take the published values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Constants {
    /// `48` in the generic deviation bound `48√(D/n)`.
    pub risk_dim: f64,
    /// `83.2` multiplying `√((D+k+1)/n)` for piecewise monotone models.
    pub mono_dim: f64,
    /// `41.3` multiplying `(R/n)^{1/3}`.
    pub mono_rate: f64,
    /// `82.6` and `166.4` in the monotone risk bound.
    pub mono_risk_rate: f64,
    pub mono_risk_dim: f64,
    /// `68` multiplying `√((D+2k−1)/n)` for convex-concave models.
    pub cvx_dim: f64,
    /// `7.71`, `15.06` and `8.82` in the convex-concave rate bound.
    pub cvx_outer: f64,
    pub cvx_rate: f64,
    pub cvx_inner: f64,
    /// `5.14` in the renormalized convex-concave approximation bound.
    pub cvx_approx: f64,
    /// `320` and `451` in the concave-density risk bound.
    pub concave_risk_rate: f64,
    pub concave_risk_dim: f64,
    /// `48√2` multiplying `√((D+2)/n)` for log-concave models.
    pub lc_dim: f64,
    /// `300` and `837` in the log-concave risk bound.
    pub lc_risk_rate: f64,
    pub lc_risk_dim: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            risk_dim: 48.0,
            mono_dim: 83.2,
            mono_rate: 41.3,
            mono_risk_rate: 82.6,
            mono_risk_dim: 166.4,
            cvx_dim: 68.0,
            cvx_outer: 7.71,
            cvx_rate: 15.06,
            cvx_inner: 8.82,
            cvx_approx: 5.14,
            concave_risk_rate: 320.0,
            concave_risk_dim: 451.0,
            lc_dim: 48.0 * std::f64::consts::SQRT_2,
            lc_risk_rate: 300.0,
            lc_risk_dim: 837.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Mono,
    Cvx,
    Lc,
}

fn scan(lo: usize, n: usize, f: impl Fn(f64) -> f64) -> (f64, usize) {
    let hi = n.clamp(lo, SCAN_CAP.max(lo));
    let mut best = (f64::INFINITY, lo);
    for d in lo..=hi {
        let v = f(d as f64);
        if v < best.0 {
            best = (v, d);
        }
    }
    best
}

/// `min_D [1.5·min(2R/D, 2) + c√((D+2k−1)/n)]` over integers `D ∈ [1, n]`:
/// the approximation with `D` monotone-histogram cells spread over the
/// pieces lives in a model of dimension `D + k − 2`. Returns the value and
/// the minimizing `D`.
pub fn bound_b_mono(r: f64, n: usize, k: usize, c: &Constants) -> (f64, usize) {
    let (nf, kf) = (n.max(1) as f64, k as f64);
    scan(1, n.max(1), |d| 1.5 * (2.0 * r / d).min(2.0) + c.mono_dim * ((d + 2.0 * kf - 1.0) / nf).sqrt())
}

/// `min_D [1.5·min(5.14R²/D², 2) + 68√((2D+4k−5)/n)]`, with `R = R_{k,1}`.
pub fn bound_b_cvx(r: f64, n: usize, k: usize, c: &Constants) -> (f64, usize) {
    let (nf, kf) = (n.max(1) as f64, k as f64);
    scan(1, n.max(1), |d| {
        1.5 * (c.cvx_approx * r * r / (d * d)).min(2.0) + c.cvx_dim * ((2.0 * d + 4.0 * kf - 5.0).max(0.0) / nf).sqrt()
    })
}

/// `min_{D ≥ 6} [3/D² + 48√2·√((6D+2)/n)]`.
pub fn bound_b_lc(n: usize, c: &Constants) -> (f64, usize) {
    let nf = n.max(1) as f64;
    scan(6, n.max(6), |d| 3.0 / (d * d) + c.lc_dim * ((6.0 * d + 2.0) / nf).sqrt())
}

/// Dispatch on the model kind; `r` is `R_{k,0}` for `mono`, `R_{k,1}` for
/// `cvx` and ignored (with `k`) for `lc`.
pub fn bound_b(kind: BoundKind, r: f64, n: usize, k: usize, c: &Constants) -> (f64, usize) {
    match kind {
        BoundKind::Mono => bound_b_mono(r, n, k, c),
        BoundKind::Cvx => bound_b_cvx(r, n, k, c),
        BoundKind::Lc => bound_b_lc(n, c),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::Side;
    use proptest::prelude::*;

    #[test]
    fn uniform_pieces_have_zero_budget() {
        let m = MixtureSpec::new(vec![MixtureComponent::uniform(0.3, 0.0, 1.0), MixtureComponent::uniform(0.7, 2.0, 5.0)])
            .unwrap();
        assert_eq!(budget_r0(&m), 0.0);
        assert_eq!(budget_r1(&m), 0.0);
        assert_eq!(m.k(), 4);
    }

    #[test]
    fn unit_budget() {
        let e1 = std::f64::consts::E - 1.0;
        let m = MixtureSpec::singleton(MixtureComponent { weight: 1.0, lo: 0.0, hi: 1.0, variation: e1, gamma: 0.0 })
            .unwrap();
        assert!((budget_r0(&m) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_specs() {
        assert!(MixtureSpec::new(vec![]).is_err());
        assert!(MixtureSpec::new(vec![MixtureComponent::uniform(0.5, 0.0, 1.0)]).is_err());
        assert!(MixtureSpec::new(vec![MixtureComponent::uniform(0.5, 0.0, 1.0), MixtureComponent::uniform(0.5, 0.5, 2.0)])
            .is_err());
    }

    #[test]
    fn linear_density_component() {
        let p: Density = crate::density::fixtures::linear_decreasing().into();
        let c = MixtureComponent::from_density(1.0, &p, 0.0, 1.0).unwrap();
        assert_eq!((c.length(), c.variation, c.gamma), (1.0, 2.0, 0.0));
    }

    /// `c(1 − β(x−m)²)` split at its maximum `m`, renormalized on each side.
    fn concave_split(beta: f64, m: f64) -> MixtureSpec {
        let z = 1.0 - beta * ((1.0 - m).powi(3) + m.powi(3)) / 3.0;
        let side = |lo: f64, hi: f64| {
            let w = ((hi - lo) - beta * ((hi - m).powi(3) - (lo - m).powi(3)) / 3.0) / z;
            let s = 1.0 / (z * w);
            let curve = Curve::new(
                lo,
                hi,
                move |x: f64| s * (1.0 - beta * (x - m).powi(2)),
                move |x: f64, _: Side| -2.0 * s * beta * (x - m),
            )
            .unwrap();
            MixtureComponent::from_curve(w, &curve)
        };
        MixtureSpec::new(vec![side(0.0, m), side(m, 1.0)]).unwrap()
    }

    proptest! {
        #[test]
        fn concave_budget_is_bounded(beta in 0.01f64..1.0, m in 0.05f64..0.95) {
            let spec = concave_split(beta, m);
            let r = budget_r1(&spec);
            prop_assert!(r.powf(2.0 / 3.0) <= (2.0 * 3f64.ln()).powf(2.0 / 3.0) + 1e-12);
        }

        #[test]
        fn bounds_decrease_in_n(r in 0.0f64..5.0, k in 3usize..8, n in 10usize..4000) {
            let c = Constants::default();
            for kind in [BoundKind::Mono, BoundKind::Cvx, BoundKind::Lc] {
                prop_assert!(bound_b(kind, r, 2 * n, k, &c).0 <= bound_b(kind, r, n, k, &c).0 + 1e-12);
            }
        }
    }

    #[test]
    fn zero_budget_monotone() {
        let c = Constants::default();
        for (n, k) in [(100, 3), (1000, 5), (12345, 4)] {
            let (v, d) = bound_b_mono(0.0, n, k, &c);
            assert_eq!(d, 1);
            assert!((v - 83.2 * (2.0 * k as f64 / n as f64).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn monotone_scan_against_corrected_chain() {
        // the term 2R/D carries 3R/D into the bound; its optimized constant is
        // c^{2/3}(3·6^{−2/3} + 6^{1/3}) ≈ 51.95 for c = 83.2
        let c = Constants::default();
        let k1 = c.mono_dim.powf(2.0 / 3.0) * (3.0 * 6f64.powf(-2.0 / 3.0) + 6f64.cbrt());
        assert!((k1 - 51.95).abs() < 0.01);
        for r in [0.1, 0.5, 1.0, 3.0] {
            for n in [100usize, 1000, 10_000, 100_000] {
                let (v, _) = bound_b_mono(r, n, 3, &c);
                let closed = k1 * (r / n as f64).cbrt() + c.mono_dim * (6.0 / n as f64).sqrt();
                assert!(v <= closed + 1e-9, "r={r} n={n}: {v} > {closed}");
            }
        }
    }

    #[test]
    fn convex_scan_below_closed_form() {
        let c = Constants::default();
        for r in [0.05, 0.5, 1.0, 2.0] {
            for n in [50usize, 500, 5000, 50_000] {
                for k in [3, 4, 6] {
                    let (v, _) = bound_b_cvx(r, n, k, &c);
                    let nf = n as f64;
                    let closed = c.cvx_outer
                        * (c.cvx_rate * (r / nf).powf(0.4) + c.cvx_inner * ((4 * k - 5) as f64 / nf).sqrt());
                    assert!(v <= closed + 1e-9, "r={r} n={n} k={k}: {v} > {closed}");
                }
            }
        }
    }

    #[test]
    fn log_concave_headline_rate() {
        let c = Constants::default();
        for n in [10usize, 100, 1000, 10_000, 100_000, 1_000_000] {
            let nf = n as f64;
            let d = ((3.0 * nf / (96.0 * 96.0)).powf(0.2).ceil() as usize).max(6) as f64;
            let at_d = 3.0 / (d * d) + c.lc_dim * ((6.0 * d + 2.0) / nf).sqrt();
            let target = c.lc_risk_rate / nf.powf(0.4) + c.lc_risk_dim / nf.sqrt();
            assert!(2.0 * at_d <= target, "n={n}");
            assert!(bound_b_lc(n, &c).0 <= at_d + 1e-15);
        }
    }
}
