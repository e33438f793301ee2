//! Sampling, contamination scenarios, Monte Carlo risk and rate fitting.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::approx::Constants;
use crate::builders::{build_candidates, BuilderSpec};
use crate::density::spec::DensitySpec;
use crate::density::{tv_distance, Density};
use crate::estimator::{pair_statistic, select, EstimatorConfig};
use crate::numeric::{child_seed, kahan_sum};
use crate::sample::{Origin, Sample};
use crate::{domain, Error, Result};

/// Smallest replicate count for which aggregate statistics are reported.
pub const MIN_REPLICATES: usize = 30;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform on the open interval (0, 1).
fn open_unit(r: &mut ChaCha8Rng) -> f64 {
    loop {
        let u: f64 = r.gen();
        if u > 0.0 {
            return u;
        }
    }
}

/// `n` inverse-CDF draws from `p`.
pub fn draw(p: &Density, n: usize, seed: u64) -> Result<Sample> {
    let mut r = rng(seed);
    let values = (0..n).map(|_| p.quantile(open_unit(&mut r))).collect();
    Sample::new(values)
}

/// Observation `i` has marginal `(1 − α_i) P̄ + α_i R_{c_i}`.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub base: Density,
    pub alpha: Vec<f64>,
    pub contaminants: Vec<Density>,
    /// Index into `contaminants` for each observation.
    pub assignment: Vec<usize>,
    pub seed: u64,
}

impl Scenario {
    /// i.i.d. from `base`.
    pub fn clean(base: Density, n: usize, seed: u64) -> Result<Self> {
        Scenario::new(base, vec![0.0; n], vec![], vec![0; n], seed)
    }

    /// Every observation contaminated with the same weight.
    pub fn constant(base: Density, n: usize, alpha: f64, contaminant: Density, seed: u64) -> Result<Self> {
        Scenario::new(base, vec![alpha; n], vec![contaminant], vec![0; n], seed)
    }

    /// `α_i = 1` on `indices`, `0` elsewhere.
    pub fn outliers(base: Density, n: usize, indices: &[usize], contaminant: Density, seed: u64) -> Result<Self> {
        let mut alpha = vec![0.0; n];
        for &i in indices {
            if i >= n {
                return domain(format!("outlier index {i} out of range for n = {n}"));
            }
            alpha[i] = 1.0;
        }
        Scenario::new(base, alpha, vec![contaminant], vec![0; n], seed)
    }

    pub fn new(
        base: Density,
        alpha: Vec<f64>,
        contaminants: Vec<Density>,
        assignment: Vec<usize>,
        seed: u64,
    ) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        if alpha.len() != assignment.len() {
            return domain("one contaminant index per observation is required");
        }
        if let Some(a) = alpha.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return domain(format!("contamination weight {a} outside [0, 1]"));
        }
        for (a, &c) in alpha.iter().zip(&assignment) {
            if *a > 0.0 && c >= contaminants.len() {
                return domain(format!("contaminant index {c} out of range"));
            }
        }
        Ok(Scenario { base, alpha, contaminants, assignment, seed })
    }

    pub fn n(&self) -> usize {
        self.alpha.len()
    }

    /// `ᾱ = (1/n) Σ α_i`.
    pub fn alpha_bar(&self) -> f64 {
        kahan_sum(self.alpha.iter().copied()) / self.n() as f64
    }

    /// `P* = (1/n) Σ P*_i` as an explicit mixture, equal contaminants merged.
    pub fn p_star(&self) -> Density {
        let n = self.n() as f64;
        let mut w = vec![0.0; self.contaminants.len()];
        for (a, &c) in self.alpha.iter().zip(&self.assignment) {
            if *a > 0.0 {
                w[c] += a / n;
            }
        }
        let mut parts = vec![(1.0 - self.alpha_bar(), self.base.clone())];
        parts.extend(w.into_iter().zip(self.contaminants.iter().cloned()).filter(|(w, _)| *w > 0.0));
        if parts.len() == 1 {
            return self.base.clone();
        }
        Density::Mixture(parts)
    }

    /// One sample under `seed`: a Bernoulli(α_i) choice of source, then an
    /// inverse-CDF draw. `α_i = 1` is tagged as an outlier.
    pub fn generate_with_seed(&self, seed: u64) -> Result<Sample> {
        let mut r = rng(seed);
        let mut values = Vec::with_capacity(self.n());
        let mut origins = Vec::with_capacity(self.n());
        for (a, &c) in self.alpha.iter().zip(&self.assignment) {
            let (src, tag) = if *a >= 1.0 {
                (&self.contaminants[c], Origin::Outlier)
            } else if *a > 0.0 && r.gen::<f64>() < *a {
                (&self.contaminants[c], Origin::Contaminant)
            } else {
                (&self.base, Origin::Clean)
            };
            values.push(src.quantile(open_unit(&mut r)));
            origins.push(tag);
        }
        Sample::tagged(values, origins)
    }
}

pub fn generate(s: &Scenario) -> Result<Sample> {
    s.generate_with_seed(s.seed)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ContaminationSpec {
    #[default]
    None,
    Constant {
        alpha: f64,
        contaminant: DensitySpec,
    },
    Outliers {
        indices: Vec<usize>,
        contaminant: DensitySpec,
    },
    PerObservation {
        alpha: Vec<f64>,
        contaminants: Vec<DensitySpec>,
        #[serde(default)]
        assignment: Vec<usize>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub base: DensitySpec,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub contamination: ContaminationSpec,
}

impl ScenarioSpec {
    pub fn build(&self) -> Result<Scenario> {
        let base = self.base.build()?;
        match &self.contamination {
            ContaminationSpec::None => Scenario::clean(base, self.n, self.seed),
            ContaminationSpec::Constant { alpha, contaminant } => {
                Scenario::constant(base, self.n, *alpha, contaminant.build()?, self.seed)
            }
            ContaminationSpec::Outliers { indices, contaminant } => {
                Scenario::outliers(base, self.n, indices, contaminant.build()?, self.seed)
            }
            ContaminationSpec::PerObservation { alpha, contaminants, assignment } => {
                if alpha.len() != self.n {
                    return Err(Error::Spec(format!("{} weights for n = {}", alpha.len(), self.n)));
                }
                let assignment = if assignment.is_empty() { vec![0; self.n] } else { assignment.clone() };
                let cs = contaminants.iter().map(DensitySpec::build).collect::<Result<Vec<_>>>()?;
                Scenario::new(base, alpha.clone(), cs, assignment, self.seed)
            }
        }
    }

    pub fn with_n(&self, n: usize) -> Self {
        ScenarioSpec { n, ..self.clone() }
    }
}

/// Monte Carlo summary at one sample size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskPoint {
    pub n: usize,
    pub replicates: usize,
    pub alpha_bar: f64,
    pub seeds: Vec<u64>,
    /// `d(P̄, P̂)` per replicate.
    pub errors_base: Vec<f64>,
    /// `d(P*, P̂)` per replicate.
    pub errors_star: Vec<f64>,
    /// Index of the selected candidate per replicate.
    pub selected: Vec<usize>,
    pub mean_base: f64,
    pub se_base: f64,
    pub mean_star: f64,
    pub se_star: f64,
    /// Empirical 0.9 quantile of `d(P̄, P̂)`; recorded, not checked.
    pub q90_base: f64,
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = kahan_sum(xs.iter().copied()) / n;
    let v = kahan_sum(xs.iter().map(|x| (x - m).powi(2))) / (n - 1.0);
    (m, (v / n).sqrt())
}

fn quantile90(xs: &[f64]) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let h = 0.9 * (s.len() - 1) as f64;
    let (i, f) = (h.floor() as usize, h.fract());
    if i + 1 < s.len() {
        s[i] + f * (s[i + 1] - s[i])
    } else {
        s[i]
    }
}

/// Replicate `r` draws from `scenario` under `child_seed(scenario.seed, r)`,
/// builds candidates, selects and records both losses. Replicates run in
/// parallel; results are combined in replicate order.
pub fn run_risk(
    scenario: &Scenario,
    builder: &BuilderSpec,
    config: &EstimatorConfig,
    replicates: usize,
) -> Result<RiskPoint> {
    if replicates < MIN_REPLICATES {
        return Err(Error::InsufficientData { needed: MIN_REPLICATES, got: replicates });
    }
    builder.validate()?;
    config.validate()?;
    let star = scenario.p_star();
    let seeds: Vec<u64> = (0..replicates as u64).map(|r| child_seed(scenario.seed, r)).collect();
    let rows = seeds
        .par_iter()
        .map(|&seed| {
            let sample = scenario.generate_with_seed(seed)?;
            let candidates = build_candidates(&sample, builder)?;
            let sel = select(&sample, &candidates, config)?;
            Ok((tv_distance(&scenario.base, &sel.density)?, tv_distance(&star, &sel.density)?, sel.index))
        })
        .collect::<Result<Vec<_>>>()?;
    let errors_base: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let errors_star: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let (mean_base, se_base) = mean_se(&errors_base);
    let (mean_star, se_star) = mean_se(&errors_star);
    Ok(RiskPoint {
        n: scenario.n(),
        replicates,
        alpha_bar: scenario.alpha_bar(),
        seeds,
        q90_base: quantile90(&errors_base),
        selected: rows.iter().map(|r| r.2).collect(),
        errors_base,
        errors_star,
        mean_base,
        se_base,
        mean_star,
        se_star,
    })
}

/// OLS fit of `log risk` on `log n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub se: f64,
    /// 95% t-interval for the slope; infinite with two points.
    #[serde(with = "crate::serde_ext::ext")]
    pub ci_lo: f64,
    #[serde(with = "crate::serde_ext::ext")]
    pub ci_hi: f64,
}

pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: points.len() });
    }
    if points.iter().any(|&(n, r)| !(n > 0.0) || !(r > 0.0)) {
        return Err(Error::Degenerate("log-log fit needs positive sizes and risks".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (kahan_sum(xs.iter().copied()) / m, kahan_sum(ys.iter().copied()) / m);
    let sxx = kahan_sum(xs.iter().map(|x| (x - mx).powi(2)));
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("all sample sizes are equal".into()));
    }
    let sxy = kahan_sum(xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)));
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let df = m - 2.0;
    if df < 1.0 {
        return Ok(RateFit { slope, intercept, se: f64::INFINITY, ci_lo: f64::NEG_INFINITY, ci_hi: f64::INFINITY });
    }
    let rss = kahan_sum(xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)));
    let se = (rss / df / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Domain(e.to_string()))?.inverse_cdf(0.975);
    Ok(RateFit { slope, intercept, se, ci_lo: slope - t * se, ci_hi: slope + t * se })
}

/// A declared inequality for a bench run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundSpec {
    /// `48√(D/n)`.
    Parametric { dim: f64 },
    /// `82.6(R/n)^{1/3} + 166.4√(2k/n)`.
    Monotone { budget: f64, k: usize },
    /// `2·7.71[15.06(R/n)^{2/5} + 8.82√((4k−5)/n)]`.
    ConvexConcave { budget: f64, k: usize },
    /// `320/n^{2/5} + 451/√n`.
    Concave,
    /// `300/n^{2/5} + 837/√n`.
    LogConcave,
    /// A fixed number.
    Value { value: f64 },
    /// Fitted slope inside `[lo, hi]`.
    Slope { lo: f64, hi: f64 },
}

impl BoundSpec {
    /// Bound value at sample size `n`; `None` for slope targets.
    pub fn value(&self, n: usize, c: &Constants) -> Option<f64> {
        let nf = n as f64;
        Some(match self {
            BoundSpec::Parametric { dim } => c.risk_dim * (dim / nf).sqrt(),
            BoundSpec::Monotone { budget, k } => {
                c.mono_risk_rate * (budget / nf).cbrt() + c.mono_risk_dim * (2.0 * *k as f64 / nf).sqrt()
            }
            BoundSpec::ConvexConcave { budget, k } => {
                let inner = (4.0 * *k as f64 - 5.0).max(0.0);
                2.0 * c.cvx_outer * (c.cvx_rate * (budget / nf).powf(0.4) + c.cvx_inner * (inner / nf).sqrt())
            }
            BoundSpec::Concave => c.concave_risk_rate / nf.powf(0.4) + c.concave_risk_dim / nf.sqrt(),
            BoundSpec::LogConcave => c.lc_risk_rate / nf.powf(0.4) + c.lc_risk_dim / nf.sqrt(),
            BoundSpec::Value { value } => *value,
            BoundSpec::Slope { .. } => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub bound: BoundSpec,
    /// Sample size, absent for slope checks.
    pub n: Option<usize>,
    /// The mean `d(P̄, P̂)`, or the slope.
    pub observed: f64,
    pub target: f64,
    pub holds: bool,
}

/// Risk over an n-grid, with the fitted rate and the declared checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub points: Vec<RiskPoint>,
    pub fit: Option<RateFit>,
    pub checks: Vec<BoundCheck>,
}

impl RiskReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    /// `(n, replicate, seed, error_base, error_star, selected)` per replicate.
    pub fn rows(&self) -> impl Iterator<Item = (usize, usize, u64, f64, f64, usize)> + '_ {
        self.points.iter().flat_map(|p| {
            (0..p.replicates).map(move |r| (p.n, r, p.seeds[r], p.errors_base[r], p.errors_star[r], p.selected[r]))
        })
    }
}

/// What the `bench` command reads.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSpec {
    pub scenario: ScenarioSpec,
    pub builder: BuilderSpec,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    pub replicates: usize,
    /// Sample sizes; defaults to the scenario's `n`.
    #[serde(default)]
    pub n_grid: Vec<usize>,
    #[serde(default)]
    pub bounds: Vec<BoundSpec>,
    #[serde(default)]
    pub constants: Constants,
}

/// Runs `run_risk` at every size of the grid, fits the rate when there are
/// at least two sizes and evaluates the declared bounds.
pub fn run_sweep(spec: &BenchSpec) -> Result<RiskReport> {
    let grid = if spec.n_grid.is_empty() { vec![spec.scenario.n] } else { spec.n_grid.clone() };
    let mut points = Vec::with_capacity(grid.len());
    for &n in &grid {
        let scenario = spec.scenario.with_n(n).build()?;
        points.push(run_risk(&scenario, &spec.builder, &spec.estimator, spec.replicates)?);
    }
    let fit = if points.len() >= 2 {
        Some(fit_rate(&points.iter().map(|p| (p.n as f64, p.mean_base)).collect::<Vec<_>>())?)
    } else {
        None
    };
    let mut checks = vec![];
    for b in &spec.bounds {
        match b {
            BoundSpec::Slope { lo, hi } => {
                let Some(f) = fit else {
                    return Err(Error::Spec("a slope check needs at least two sample sizes".into()));
                };
                checks.push(BoundCheck {
                    bound: b.clone(),
                    n: None,
                    observed: f.slope,
                    target: f.slope.clamp(*lo, *hi),
                    holds: (*lo..=*hi).contains(&f.slope),
                });
            }
            _ => {
                for p in &points {
                    let target = b.value(p.n, &spec.constants).expect("value bound");
                    checks.push(BoundCheck {
                        bound: b.clone(),
                        n: Some(p.n),
                        observed: p.mean_base,
                        target,
                        holds: p.mean_base <= target,
                    });
                }
            }
        }
    }
    Ok(RiskReport { points, fit, checks })
}

/// Empirical mean of `t_{(P,Q)}` under a sample of `scenario` against the
/// interval `[d(P,Q) − d(S,Q), d(S,P)]`, `S = P*`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    pub mean: f64,
    pub se: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Sandwich {
    pub fn holds(&self, k_se: f64) -> bool {
        self.mean >= self.lower - k_se * self.se && self.mean <= self.upper + k_se * self.se
    }
}

pub fn sandwich(scenario: &Scenario, p: &Density, q: &Density, seed: u64) -> Result<Sandwich> {
    let s = scenario.p_star();
    let sample = scenario.generate_with_seed(seed)?;
    let n = sample.len() as f64;
    // T is n times the empirical mean of t; t ∈ [−1, 1] has variance ≤ 1
    let mean = pair_statistic(&sample, p, q)? / n;
    let se = 1.0 / n.sqrt();
    let lower = tv_distance(p, q)? - tv_distance(&s, q)?;
    let upper = tv_distance(&s, p)?;
    Ok(Sandwich { mean, se, lower, upper })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::Model;
    use crate::density::fixtures;
    use crate::PiecewiseConstant;

    fn u01() -> Density {
        PiecewiseConstant::uniform(0.0, 1.0).unwrap().into()
    }

    #[test]
    fn draws_are_reproducible() {
        let a = draw(&u01(), 50, 7).unwrap();
        let b = draw(&u01(), 50, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, draw(&u01(), 50, 8).unwrap());
    }

    #[test]
    fn uniform_sampler_ks() {
        let s = draw(&u01(), 100_000, 11).unwrap();
        let n = s.len() as f64;
        let ks = s
            .values()
            .iter()
            .enumerate()
            .map(|(i, &x)| (x - i as f64 / n).abs().max(((i + 1) as f64 / n - x).abs()))
            .fold(0.0, f64::max);
        assert!(ks < 0.01, "{ks}");
    }

    #[test]
    fn exponential_sampler_mean() {
        let p: Density = crate::LogLinear::exponential(1.0).unwrap().into();
        let s = draw(&p, 100_000, 3).unwrap();
        let m = s.values().iter().sum::<f64>() / 1e5;
        assert!((m - 1.0).abs() < 4.0 / 1e5f64.sqrt());
    }

    #[test]
    fn cell_frequencies_match() {
        let p = PiecewiseConstant::new(vec![0.0, 1.0, 2.0, 4.0], vec![0.5, 0.3, 0.1]).unwrap();
        let s = draw(&p.clone().into(), 100_000, 5).unwrap();
        let probs: [f64; 3] = [0.5, 0.3, 0.2];
        for (j, w) in p.breaks().windows(2).enumerate() {
            let c = s.values().iter().filter(|&&x| x > w[0] && x <= w[1]).count() as f64 / 1e5;
            let sd = (probs[j] * (1.0 - probs[j]) / 1e5).sqrt();
            assert!((c - probs[j]).abs() < 4.0 * sd, "cell {j}: {c}");
        }
    }

    #[test]
    fn gaussian_sampler_median() {
        let p: Density = fixtures::gaussian(2.0, 1.0).unwrap().into();
        let s = draw(&p, 20_001, 9).unwrap();
        assert!((s.values()[10_000] - 2.0).abs() < 0.05);
    }

    #[test]
    fn outlier_pattern_is_exact() {
        let r: Density = PiecewiseConstant::uniform(10.0, 11.0).unwrap().into();
        let sc = Scenario::outliers(u01(), 40, &[0, 3, 9, 17, 39], r, 1).unwrap();
        let s = generate(&sc).unwrap();
        assert_eq!(s.count(Origin::Outlier), 5);
        assert_eq!(s.values().iter().filter(|&&x| x >= 10.0).count(), 5);
        assert!((sc.alpha_bar() - 5.0 / 40.0).abs() < 1e-15);
    }

    #[test]
    fn clean_scenario_is_iid() {
        let sc = Scenario::clean(u01(), 100, 4).unwrap();
        let s = generate(&sc).unwrap();
        assert_eq!(s.count(Origin::Clean), 100);
        assert_eq!(sc.p_star(), u01());
    }

    #[test]
    fn contaminated_count_is_binomial() {
        let r: Density = PiecewiseConstant::uniform(10.0, 11.0).unwrap().into();
        let (n, a) = (50, 0.2);
        let sc = Scenario::constant(u01(), n, a, r, 0).unwrap();
        let counts: Vec<f64> =
            (0..1000).map(|s| sc.generate_with_seed(s).unwrap().count(Origin::Contaminant) as f64).collect();
        let m = counts.iter().sum::<f64>() / 1000.0;
        let v = counts.iter().map(|c| (c - m).powi(2)).sum::<f64>() / 999.0;
        let (em, ev) = (n as f64 * a, n as f64 * a * (1.0 - a));
        assert!((m - em).abs() < 4.0 * (ev / 1000.0).sqrt(), "{m}");
        assert!((v / ev - 1.0).abs() < 0.2, "{v}");
    }

    #[test]
    fn p_star_is_a_density_and_close_to_base() {
        let r1: Density = PiecewiseConstant::uniform(10.0, 11.0).unwrap().into();
        let r2: Density = PiecewiseConstant::uniform(0.5, 3.0).unwrap().into();
        let alpha: Vec<f64> = (0..30).map(|i| (i % 7) as f64 / 10.0).collect();
        let assignment: Vec<usize> = (0..30).map(|i| i % 2).collect();
        let sc = Scenario::new(u01(), alpha, vec![r1, r2], assignment, 0).unwrap();
        let ps = sc.p_star();
        assert!((ps.total_mass() - 1.0).abs() < 1e-10);
        assert!(tv_distance(&ps, &u01()).unwrap() <= sc.alpha_bar() + 1e-12);
    }

    #[test]
    fn invalid_scenarios() {
        assert!(Scenario::constant(u01(), 10, 1.5, u01(), 0).is_err());
        assert!(Scenario::outliers(u01(), 10, &[10], u01(), 0).is_err());
        assert!(Scenario::clean(u01(), 0, 0).is_err());
    }

    #[test]
    fn power_law_fits() {
        let half: Vec<(f64, f64)> = [100.0, 400.0, 1600.0, 6400.0].iter().map(|&n: &f64| (n, 3.0 / n.sqrt())).collect();
        let f = fit_rate(&half).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert!(f.ci_lo <= f.slope && f.slope <= f.ci_hi);
        let third: Vec<(f64, f64)> = [10.0, 100.0, 1000.0].iter().map(|&n: &f64| (n, 2.0 * n.powf(-1.0 / 3.0))).collect();
        assert!((fit_rate(&third).unwrap().slope + 1.0 / 3.0).abs() < 1e-12);
        assert!(fit_rate(&[(10.0, 1.0)]).is_err());
        assert!(fit_rate(&[(10.0, 1.0), (10.0, 2.0)]).is_err());
    }

    #[test]
    fn risk_refuses_few_replicates() {
        let sc = Scenario::clean(u01(), 20, 0).unwrap();
        let b = BuilderSpec::new(Model::Mk, 3, vec![1, 2]);
        let e = run_risk(&sc, &b, &EstimatorConfig::default(), 29).unwrap_err();
        assert!(matches!(e, Error::InsufficientData { needed: 30, got: 29 }));
    }

    #[test]
    fn risk_is_reproducible() {
        let sc = Scenario::clean(u01(), 60, 17).unwrap();
        let b = BuilderSpec::new(Model::Mk, 3, vec![1, 2, 4]);
        let cfg = EstimatorConfig::default();
        let a = run_risk(&sc, &b, &cfg, 30).unwrap();
        let c = run_risk(&sc, &b, &cfg, 30).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&c).unwrap());
        assert!(a.errors_base.iter().all(|e| (0.0..=1.0).contains(e)));
        assert!(a.mean_base <= BoundSpec::Parametric { dim: 4.0 }.value(60, &Constants::default()).unwrap());
    }

    #[test]
    fn sandwich_under_contamination() {
        let r: Density = PiecewiseConstant::uniform(0.5, 2.0).unwrap().into();
        let sc = Scenario::constant(u01(), 20_000, 0.3, r, 2).unwrap();
        let p: Density = PiecewiseConstant::uniform(0.0, 1.5).unwrap().into();
        let q: Density = fixtures::linear_decreasing().into();
        for (a, b) in [(&p, &q), (&q, &p), (&u01(), &p)] {
            let s = sandwich(&sc, a, b, 5).unwrap();
            assert!(s.lower <= s.upper + 1e-12);
            assert!(s.holds(4.0), "{s:?}");
        }
    }

    #[test]
    fn bench_spec_round_trip() {
        let json = r#"{
            "scenario": {"base": {"type": "named", "name": "uniform"}, "n": 50, "seed": 3,
                         "contamination": {"type": "constant", "alpha": 0.1,
                                           "contaminant": {"type": "named", "name": "uniform(10,11)"}}},
            "builder": {"model": "Mk", "k": 3, "D_grid": [1, 2]},
            "replicates": 30,
            "n_grid": [40, 80],
            "bounds": [{"kind": "parametric", "dim": 12}, {"kind": "slope", "lo": -5, "hi": 5}]
        }"#;
        let spec: BenchSpec = serde_json::from_str(json).unwrap();
        let again: BenchSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(spec, again);
        let rep = run_sweep(&spec).unwrap();
        assert_eq!(rep.points.len(), 2);
        assert_eq!(rep.checks.len(), 3);
        assert!(rep.fit.is_some());
        assert_eq!(rep.rows().count(), 60);
        assert!((rep.points[0].alpha_bar - 0.1).abs() < 1e-15);
    }
}
