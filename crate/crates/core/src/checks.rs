//! Invariant suites run by `tvdens check`.
//!
//! A suite file selects checks by suite or by name and may override the
//! numerical constants; checks that derive one constant from others then
//! fail when an override breaks the derivation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::approx::{
    approx_convex_concave, approx_logconcave, approx_monotone_pc, bound_b_cvx, bound_b_lc, bound_b_mono, tau_y,
    Constants, Curve,
};
use crate::builders::grenander;
use crate::density::{fixtures, probability_of, region_above, tv_distance, Density};
use crate::numeric::integrate;
use crate::sim::{draw, fit_rate, Scenario};
use crate::{Error, PiecewiseConstant, Result};

type Outcome = std::result::Result<String, String>;

struct Check {
    suite: &'static str,
    name: &'static str,
    run: fn(&Constants) -> Outcome,
}

const REGISTRY: &[Check] = &[
    Check { suite: "constants", name: "monotone_dim_covers_parametric", run: monotone_dim_covers_parametric },
    Check { suite: "constants", name: "monotone_rate_constant", run: monotone_rate_constant },
    Check { suite: "constants", name: "monotone_risk_doubling", run: monotone_risk_doubling },
    Check { suite: "constants", name: "monotone_chain_as_written", run: monotone_chain_as_written },
    Check { suite: "constants", name: "monotone_scan_corrected_chain", run: monotone_scan_corrected_chain },
    Check { suite: "constants", name: "cvx_dim_covers_parametric", run: cvx_dim_covers_parametric },
    Check { suite: "constants", name: "cvx_outer_constant", run: cvx_outer_constant },
    Check { suite: "constants", name: "cvx_inner_constant", run: cvx_inner_constant },
    Check { suite: "constants", name: "cvx_rate_constant", run: cvx_rate_constant },
    Check { suite: "constants", name: "cvx_scan_closed_form", run: cvx_scan_closed_form },
    Check { suite: "constants", name: "concave_risk_constants", run: concave_risk_constants },
    Check { suite: "constants", name: "cvx_approx_constant", run: cvx_approx_constant },
    Check { suite: "constants", name: "parametric_constant", run: parametric_constant },
    Check { suite: "constants", name: "lc_dim_constant", run: lc_dim_constant },
    Check { suite: "constants", name: "lc_risk_grid", run: lc_risk_grid },
    Check { suite: "approx", name: "monotone_fixtures_sound", run: monotone_fixtures_sound },
    Check { suite: "approx", name: "convex_concave_fixtures_sound", run: convex_concave_fixtures_sound },
    Check { suite: "approx", name: "log_concave_fixtures_sound", run: log_concave_fixtures_sound },
    Check { suite: "tails", name: "layer_cake_identity", run: layer_cake_identity },
    Check { suite: "estimator", name: "expected_statistic_sandwich", run: expected_statistic_sandwich },
    Check { suite: "builders", name: "grenander_is_a_decreasing_density", run: grenander_is_a_decreasing_density },
    Check { suite: "sim", name: "mixture_of_marginals", run: mixture_of_marginals },
    Check { suite: "sim", name: "power_law_fit", run: power_law_fit },
];

/// Which checks to run. With neither list given every check runs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suites: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<String>>,
    #[serde(default)]
    pub constants: Constants,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub suite: String,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub passed: usize,
    pub failed: usize,
    pub results: Vec<CheckResult>,
}

impl CheckReport {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

/// `(suite, name)` of every registered check.
pub fn available() -> Vec<(&'static str, &'static str)> {
    REGISTRY.iter().map(|c| (c.suite, c.name)).collect()
}

pub fn run_suite(spec: &SuiteSpec) -> Result<CheckReport> {
    let known_suite = |s: &str| REGISTRY.iter().any(|c| c.suite == s);
    let known_name = |s: &str| REGISTRY.iter().any(|c| c.name == s);
    if let Some(bad) = spec.suites.iter().flatten().find(|s| !known_suite(s)) {
        return Err(Error::Spec(format!("unknown suite {bad:?}")));
    }
    if let Some(bad) = spec.checks.iter().flatten().find(|s| !known_name(s)) {
        return Err(Error::Spec(format!("unknown check {bad:?}")));
    }
    let selected: Vec<&Check> = match (&spec.suites, &spec.checks) {
        (None, None) => REGISTRY.iter().collect(),
        (s, n) => REGISTRY
            .iter()
            .filter(|c| {
                s.iter().flatten().any(|x| x == c.suite) || n.iter().flatten().any(|x| x == c.name)
            })
            .collect(),
    };
    if selected.is_empty() {
        return Err(Error::Spec("empty suite".into()));
    }
    let results: Vec<CheckResult> = selected
        .iter()
        .map(|c| {
            let (passed, detail) = match (c.run)(&spec.constants) {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            CheckResult { suite: c.suite.into(), name: c.name.into(), passed, detail }
        })
        .collect();
    let passed = results.iter().filter(|r| r.passed).count();
    Ok(CheckReport { passed, failed: results.len() - passed, results })
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn at_least(lhs: f64, rhs: f64, what: &str) -> Outcome {
    verdict(lhs >= rhs, format!("{what}: {lhs} >= {rhs}"))
}

fn about(lhs: f64, rhs: f64, rel: f64, what: &str) -> Outcome {
    verdict((lhs - rhs).abs() <= rel * rhs.abs().max(lhs.abs()), format!("{what}: {lhs} ≈ {rhs} (rel {rel})"))
}

fn all(parts: Vec<Outcome>) -> Outcome {
    let mut details = vec![];
    let mut ok = true;
    for p in parts {
        match p {
            Ok(d) => details.push(d),
            Err(d) => {
                ok = false;
                details.push(format!("FAILED {d}"));
            }
        }
    }
    verdict(ok, details.join("; "))
}

fn lib<T>(r: Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

// the monotone model has degree at most 3(D+k+1)
fn monotone_dim_covers_parametric(c: &Constants) -> Outcome {
    at_least(c.mono_dim, c.risk_dim * 3f64.sqrt(), "mono_dim vs risk_dim·√3")
}

fn monotone_rate_constant(c: &Constants) -> Outcome {
    at_least(c.mono_rate, 1.5 * 3f64.cbrt() * c.mono_dim.powf(2.0 / 3.0), "mono_rate vs 1.5·3^{1/3}·mono_dim^{2/3}")
}

fn monotone_risk_doubling(c: &Constants) -> Outcome {
    all(vec![
        about(c.mono_risk_rate, 2.0 * c.mono_rate, 1e-12, "mono_risk_rate = 2·mono_rate"),
        about(c.mono_risk_dim, 2.0 * c.mono_dim, 1e-12, "mono_risk_dim = 2·mono_dim"),
    ])
}

/// The optimization step with the approximation term `3R/(2D)` as printed.
fn monotone_chain_as_written(c: &Constants) -> Outcome {
    let mut parts = vec![];
    for r in [0.05, 0.5, 1.0, 4.0] {
        for n in [100.0, 1e3, 1e4, 1e6] {
            for k in [2.0, 3.0, 6.0] {
                let d = (9.0 * r * r * n / (c.mono_dim * c.mono_dim)).cbrt().ceil().max(1.0);
                let lhs = 1.5 * r / d + c.mono_dim * ((d - 1.0 + 2.0 * k) / n).sqrt();
                let rhs = c.mono_rate * (r / n).cbrt() + c.mono_dim * (2.0 * k / n).sqrt();
                if lhs > rhs {
                    parts.push(Err(format!("R={r} n={n} k={k}: {lhs} > {rhs}")));
                }
            }
        }
    }
    if parts.is_empty() {
        Ok("48 grid points".into())
    } else {
        all(parts)
    }
}

/// With the full `2R/D` approximation term the optimized constant is
/// `c^{2/3}(3·6^{−2/3} + 6^{1/3})`.
fn monotone_scan_corrected_chain(c: &Constants) -> Outcome {
    let k1 = c.mono_dim.powf(2.0 / 3.0) * (3.0 * 6f64.powf(-2.0 / 3.0) + 6f64.cbrt());
    for r in [0.05, 0.5, 1.0, 4.0] {
        for n in [100usize, 1000, 10_000, 100_000] {
            let (v, _) = bound_b_mono(r, n, 3, c);
            let closed = k1 * (r / n as f64).cbrt() + c.mono_dim * (6.0 / n as f64).sqrt();
            if v > closed + 1e-12 {
                return Err(format!("R={r} n={n}: scan {v} > {closed}"));
            }
        }
    }
    Ok(format!("scan ≤ {k1:.3}(R/n)^(1/3) + mono_dim·√(2k/n)"))
}

// the convex-concave model has degree at most 2(D+2k−1)
fn cvx_dim_covers_parametric(c: &Constants) -> Outcome {
    at_least(c.cvx_dim, c.risk_dim * 2f64.sqrt(), "cvx_dim vs risk_dim·√2")
}

fn cvx_outer_constant(c: &Constants) -> Outcome {
    about(c.cvx_outer, 1.5 * c.cvx_approx, 1e-12, "cvx_outer = 1.5·cvx_approx")
}

fn cvx_inner_constant(c: &Constants) -> Outcome {
    about(c.cvx_inner, c.cvx_dim / c.cvx_outer, 1e-3, "cvx_inner = cvx_dim/cvx_outer")
}

fn cvx_rate_constant(c: &Constants) -> Outcome {
    about(c.cvx_rate, 2.0 * (2.0 * c.cvx_inner * c.cvx_inner).powf(0.4), 1e-3, "cvx_rate = 2(2·cvx_inner²)^{2/5}")
}

fn cvx_scan_closed_form(c: &Constants) -> Outcome {
    for r in [0.05, 0.5, 1.0, 2.0] {
        for n in [50usize, 500, 5000, 50_000] {
            for k in [3usize, 4, 6] {
                let (v, _) = bound_b_cvx(r, n, k, c);
                let nf = n as f64;
                let closed =
                    c.cvx_outer * (c.cvx_rate * (r / nf).powf(0.4) + c.cvx_inner * ((4 * k - 5) as f64 / nf).sqrt());
                if v > closed + 1e-12 {
                    return Err(format!("R={r} n={n} k={k}: scan {v} > {closed}"));
                }
            }
        }
    }
    Ok("48 grid points".into())
}

// a concave density splits into two monotone pieces with R ≤ 2 log 3, k = 4
fn concave_risk_constants(c: &Constants) -> Outcome {
    let rate = 2.0 * c.cvx_outer * c.cvx_rate * (2.0 * 3f64.ln()).powf(0.4);
    all(vec![
        at_least(c.concave_risk_rate, rate, "concave_risk_rate vs 2·cvx_outer·cvx_rate·(2 log 3)^{2/5}"),
        about(c.concave_risk_dim, 2.0 * c.cvx_outer * c.cvx_inner * 11f64.sqrt(), 1e-3, "concave_risk_dim ≈ 2·cvx_outer·cvx_inner·√11"),
    ])
}

fn cvx_approx_constant(c: &Constants) -> Outcome {
    let z0 = (1.0 + 0.75f64.sqrt()).ln();
    let rhs = 8.0 / 3.0 * (z0.exp_m1() / z0).powi(2);
    verdict(c.cvx_approx >= rhs * (1.0 - 1e-3), format!("cvx_approx {} vs (8/3)((e^z0 − 1)/z0)² = {rhs}", c.cvx_approx))
}

fn parametric_constant(c: &Constants) -> Outcome {
    at_least(c.risk_dim, 20.0 * 5f64.sqrt() + (2.0 * (1.0 + 2f64.ln())).sqrt(), "risk_dim vs 20√5 + √(2(1 + log 2))")
}

// the log-concave model has degree at most 2(D+2)
fn lc_dim_constant(c: &Constants) -> Outcome {
    at_least(c.lc_dim, c.risk_dim * 2f64.sqrt() * (1.0 - 1e-12), "lc_dim vs risk_dim·√2")
}

fn lc_risk_grid(c: &Constants) -> Outcome {
    for n in [10usize, 100, 1000, 10_000, 100_000, 1_000_000, 100_000_000] {
        let nf = n as f64;
        let d = ((3.0 * nf / (96.0 * 96.0)).powf(0.2).ceil()).max(6.0);
        let at_d = 3.0 / (d * d) + c.lc_dim * ((6.0 * d + 2.0) / nf).sqrt();
        let target = c.lc_risk_rate / nf.powf(0.4) + c.lc_risk_dim / nf.sqrt();
        if 2.0 * at_d > target {
            return Err(format!("n={n}: 2·{at_d} > {target}"));
        }
        let scan = bound_b_lc(n, c).0;
        if scan > at_d + 1e-15 {
            return Err(format!("n={n}: scan {scan} above the closed-form D"));
        }
    }
    Ok("7 sample sizes".into())
}

fn monotone_fixtures_sound(_: &Constants) -> Outcome {
    for fx in fixtures::monotone_fixtures() {
        for d in [1, 4, 16, 64] {
            let a = lib(approx_monotone_pc(&fx.density, fx.lo, fx.hi, d))?;
            if !a.is_sound(1e-6) {
                return Err(format!("{} D={d}: {:?} > {}", fx.name, a.measured, a.bound));
            }
        }
    }
    Ok("13 fixtures × 4 dimensions".into())
}

fn convex_concave_fixtures_sound(_: &Constants) -> Outcome {
    for fx in fixtures::convex_concave_fixtures() {
        let curve = lib(Curve::from_density(&fx.density, fx.lo, fx.hi))?;
        for d in [1, 4, 16] {
            let r = lib(approx_convex_concave(&curve, d))?;
            for x in [&r.interpolant, &r.density] {
                if !x.is_sound(1e-6) {
                    return Err(format!("{} D={d}: {:?} > {}", fx.name, x.measured, x.bound));
                }
            }
        }
    }
    Ok("9 fixtures × 3 dimensions".into())
}

fn log_concave_fixtures_sound(_: &Constants) -> Outcome {
    let ps: Vec<Density> = vec![
        lib(fixtures::gaussian(0.0, 1.0))?.into(),
        lib(crate::LogLinear::exponential(1.0))?.into(),
        lib(crate::LogLinear::laplace(0.0, 1.0))?.into(),
        lib(fixtures::gamma(3.0))?.into(),
    ];
    for p in &ps {
        for d in [6, 12] {
            let a = lib(approx_logconcave(p, d))?;
            let m = a.measured.unwrap_or(f64::INFINITY);
            if m > 2.0 / (d * d) as f64 + 1e-6 || a.pieces > 6 * d {
                return Err(format!("{} D={d}: error {m}, {} pieces", p.kind(), a.pieces));
            }
        }
    }
    Ok("4 fixtures × 2 dimensions".into())
}

fn layer_cake_identity(_: &Constants) -> Outcome {
    let p: Density = lib(crate::LogLinear::exponential(1.0))?.into();
    for b in [0.05, 0.3, 0.7] {
        let lhs = integrate(&|x: f64| ((-x).exp() - b).max(0.0), 0.0, -f64::ln(b), 1e-12);
        let rhs = lib(tau_y(&p, b))?;
        if (lhs - rhs).abs() > 1e-6 {
            return Err(format!("B={b}: {lhs} vs {rhs}"));
        }
    }
    Ok("3 levels".into())
}

fn random_pc(r: &mut ChaCha8Rng) -> std::result::Result<Density, String> {
    let m = r.gen_range(1..5);
    let mut breaks = vec![r.gen_range(-1.0..0.5)];
    for _ in 0..m {
        let last = *breaks.last().expect("nonempty");
        breaks.push(last + r.gen_range(0.1..1.0));
    }
    let levels: Vec<f64> = (0..m).map(|_| r.gen_range(0.0..1.0)).collect();
    Ok(lib(PiecewiseConstant::from_unnormalized(breaks, levels))?.into())
}

/// `E_S[t_{(P,Q)}] = S(q > p) − P(q > p)` lies in `[d(P,Q) − d(S,Q), d(S,P)]`.
fn expected_statistic_sandwich(_: &Constants) -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(1);
    for i in 0..200 {
        let (s, p, q) = (random_pc(&mut r)?, random_pc(&mut r)?, random_pc(&mut r)?);
        let region = lib(region_above(&p, &q))?;
        let e = probability_of(&s, &region) - probability_of(&p, &region);
        let lo = lib(tv_distance(&p, &q))? - lib(tv_distance(&s, &q))?;
        let hi = lib(tv_distance(&s, &p))?;
        if e < lo - 1e-10 || e > hi + 1e-10 {
            return Err(format!("triple {i}: {e} outside [{lo}, {hi}]"));
        }
    }
    Ok("200 random triples".into())
}

fn grenander_is_a_decreasing_density(_: &Constants) -> Outcome {
    let p: Density = lib(crate::LogLinear::exponential(1.0))?.into();
    let s = lib(draw(&p, 500, 3))?;
    let g = lib(grenander(&s, 0.0))?;
    let mass: f64 = g.breaks().windows(2).zip(g.levels()).map(|(w, l)| (w[1] - w[0]) * l).sum();
    let decreasing = g.levels().windows(2).all(|w| w[1] <= w[0]);
    verdict(decreasing && (mass - 1.0).abs() < 1e-12, format!("mass {mass}, nonincreasing {decreasing}"))
}

fn mixture_of_marginals(_: &Constants) -> Outcome {
    let base: Density = lib(PiecewiseConstant::uniform(0.0, 1.0))?.into();
    let r: Density = lib(PiecewiseConstant::uniform(0.5, 4.0))?.into();
    let alpha: Vec<f64> = (0..40).map(|i| (i % 5) as f64 / 8.0).collect();
    let sc = lib(Scenario::new(base.clone(), alpha, vec![r], vec![0; 40], 0))?;
    let ps = sc.p_star();
    let d = lib(tv_distance(&ps, &base))?;
    verdict(
        (ps.total_mass() - 1.0).abs() < 1e-10 && d <= sc.alpha_bar() + 1e-12,
        format!("mass {}, d(P*, P̄) = {d} ≤ ᾱ = {}", ps.total_mass(), sc.alpha_bar()),
    )
}

fn power_law_fit(_: &Constants) -> Outcome {
    let pts: Vec<(f64, f64)> = [100.0f64, 400.0, 1600.0].iter().map(|&n| (n, 5.0 / n.sqrt())).collect();
    let f = lib(fit_rate(&pts))?;
    verdict((f.slope + 0.5).abs() < 0.01, format!("slope {}", f.slope))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes() {
        let rep = run_suite(&SuiteSpec::default()).unwrap();
        let failed: Vec<_> = rep.results.iter().filter(|r| !r.passed).collect();
        assert!(failed.is_empty(), "{failed:#?}");
        assert_eq!(rep.passed, REGISTRY.len());
    }

    #[test]
    fn corrupted_monotone_constant_fails() {
        let spec = SuiteSpec {
            suites: Some(vec!["constants".into()]),
            checks: None,
            constants: Constants { mono_dim: 8.32, ..Constants::default() },
        };
        let rep = run_suite(&spec).unwrap();
        let failed: Vec<&str> = rep.results.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect();
        assert!(failed.contains(&"monotone_dim_covers_parametric"));
        assert!(failed.contains(&"monotone_risk_doubling"));
        assert!(failed.iter().all(|n| n.starts_with("monotone")), "{failed:?}");
    }

    #[test]
    fn empty_and_unknown_suites() {
        let empty = SuiteSpec { checks: Some(vec![]), ..SuiteSpec::default() };
        assert_eq!(run_suite(&empty).unwrap_err().to_string(), "invalid specification: empty suite");
        let bad = SuiteSpec { suites: Some(vec!["nope".into()]), ..SuiteSpec::default() };
        assert!(run_suite(&bad).is_err());
    }

    #[test]
    fn spec_json() {
        let s: SuiteSpec = serde_json::from_str(r#"{"checks": ["power_law_fit"], "constants": {"mono_dim": 8.32}}"#).unwrap();
        assert_eq!(s.constants.mono_dim, 8.32);
        assert_eq!(s.constants.risk_dim, 48.0);
        assert_eq!(run_suite(&s).unwrap().results.len(), 1);
    }
}
