//! Data-driven candidate sets and the Grenander baseline.

use serde::{Deserialize, Serialize};

use crate::density::spec::DensitySpec;
use crate::density::{Density, LogLinear, PiecewiseConstant, PiecewiseLinear};
use crate::estimator::{CandidateMeta, CandidateSet};
use crate::polyline::Polyline;
use crate::sample::Sample;
use crate::{domain, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Model {
    /// piecewise monotone, step candidates
    Mk,
    /// piecewise monotone convex-concave, piecewise linear candidates
    M1k,
    /// log-concave, log-linear candidates
    #[serde(rename = "MLC")]
    Mlc,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BreakpointRule {
    #[default]
    Quantile,
    EqualWidth,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuilderSpec {
    pub model: Model,
    pub k: usize,
    #[serde(rename = "D_grid")]
    pub d_grid: Vec<usize>,
    #[serde(default)]
    pub breakpoint_rule: BreakpointRule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub include_true: Option<DensitySpec>,
}

impl BuilderSpec {
    pub fn new(model: Model, k: usize, d_grid: Vec<usize>) -> Self {
        BuilderSpec { model, k, d_grid, breakpoint_rule: BreakpointRule::Quantile, include_true: None }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::Spec("k must be at least 2".into()));
        }
        if self.d_grid.is_empty() || self.d_grid.contains(&0) {
            return Err(Error::Spec("D_grid must be a nonempty list of positive integers".into()));
        }
        Ok(())
    }

    fn injected(&self) -> Result<Option<Density>> {
        self.include_true.as_ref().map(|s| s.build()).transpose()
    }
}

/// Builds the candidate set of the spec's model.
pub fn build_candidates(sample: &Sample, spec: &BuilderSpec) -> Result<CandidateSet> {
    match spec.model {
        Model::Mk => build_pc_candidates(sample, spec),
        Model::M1k => build_pl_candidates(sample, spec),
        Model::Mlc => build_loglinear_candidates(sample, spec),
    }
}

/// Weighted pool-adjacent-violators: the weighted least-squares
/// nondecreasing (or nonincreasing) fit of `y`.
pub fn pava(y: &[f64], w: &[f64], increasing: bool) -> Vec<f64> {
    assert_eq!(y.len(), w.len());
    let sgn = if increasing { 1.0 } else { -1.0 };
    // blocks of (mean, weight, length)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(y.len());
    for (&v, &wt) in y.iter().zip(w) {
        blocks.push((sgn * v, wt, 1));
        while blocks.len() >= 2 {
            let (m2, w2, l2) = blocks[blocks.len() - 1];
            let (m1, w1, l1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            let wt = w1 + w2;
            let m = if wt > 0.0 { (m1 * w1 + m2 * w2) / wt } else { 0.5 * (m1 + m2) };
            blocks.truncate(blocks.len() - 2);
            blocks.push((m, wt, l1 + l2));
        }
    }
    blocks.iter().flat_map(|&(m, _, l)| std::iter::repeat(sgn * m).take(l)).collect()
}

/// Grid of at most `d` cells spanning the sample range.
pub fn grid(sample: &Sample, d: usize, rule: BreakpointRule) -> Vec<f64> {
    let xs = sample.values();
    let n = xs.len();
    let mut b: Vec<f64> = match rule {
        BreakpointRule::Quantile => (0..=d).map(|j| xs[j * (n - 1) / d]).collect(),
        BreakpointRule::EqualWidth => {
            let (lo, hi) = (xs[0], xs[n - 1]);
            (0..=d).map(|j| if j == d { hi } else { lo + (hi - lo) * j as f64 / d as f64 }).collect()
        }
    };
    b.dedup();
    b
}

/// Histogram heights on `breaks`; the first cell is closed on the left.
pub fn histogram(sample: &Sample, breaks: &[f64]) -> Vec<f64> {
    let xs = sample.values();
    let n = xs.len() as f64;
    (0..breaks.len() - 1)
        .map(|j| {
            let lo = if j == 0 { xs.partition_point(|&x| x < breaks[0]) } else { xs.partition_point(|&x| x <= breaks[j]) };
            let hi = xs.partition_point(|&x| x <= breaks[j + 1]);
            (hi - lo) as f64 / (n * (breaks[j + 1] - breaks[j]))
        })
        .collect()
}

fn check_size(sample: &Sample) -> Result<()> {
    if sample.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: sample.len() });
    }
    if sample.min() == sample.max() {
        return Err(Error::Degenerate("all observations are equal".into()));
    }
    Ok(())
}

fn meta(model: &str, d: usize, k: usize, label: impl Into<String>) -> CandidateMeta {
    CandidateMeta { model: model.into(), d, k, label: label.into() }
}

fn finish(mut set: CandidateSet, spec: &BuilderSpec) -> Result<CandidateSet> {
    if let Some(t) = spec.injected()? {
        let m = meta("true", 0, spec.k, "include_true");
        if !set.contains(&t) {
            set.push(t, m);
        }
    }
    Ok(set)
}

/// Step candidates: histograms on quantile grids and their monotone and
/// unimodal rearrangements.
pub fn build_pc_candidates(sample: &Sample, spec: &BuilderSpec) -> Result<CandidateSet> {
    spec.validate()?;
    check_size(sample)?;
    let mut set = CandidateSet::new();
    let k = spec.k;
    for &d in &spec.d_grid {
        let b = grid(sample, d, spec.breakpoint_rule);
        if b.len() < 2 {
            continue;
        }
        let h = histogram(sample, &b);
        let w: Vec<f64> = b.windows(2).map(|x| x[1] - x[0]).collect();
        let mut variants: Vec<(String, Vec<f64>)> = vec![("histogram".into(), h.clone())];
        variants.push(("decreasing".into(), pava(&h, &w, false)));
        variants.push(("increasing".into(), pava(&h, &w, true)));
        for m in 0..h.len().saturating_sub(1) {
            let mut v = pava(&h[..=m], &w[..=m], true);
            v.extend(pava(&h[m + 1..], &w[m + 1..], false));
            variants.push((format!("unimodal@{m}"), v));
        }
        for (label, levels) in variants {
            let p = PiecewiseConstant::from_unnormalized(b.clone(), levels)?.canonical();
            if !p.in_class(d, k) {
                continue;
            }
            set.push_unique(p.into(), meta("Mk", d, k, label));
        }
    }
    finish(set, spec)
}

fn pl_from_values(knots: &[f64], values: &[f64]) -> Option<PiecewiseLinear> {
    let v: Vec<f64> = values.iter().map(|v| v.max(0.0)).collect();
    PiecewiseLinear::continuous_unnormalized(knots.to_vec(), v).ok().map(|p| p.canonical())
}

/// Piecewise linear candidates: interpolants of the histogram (raw and
/// monotone) at cell midpoints and at breakpoints, with concave and convex
/// hull variants.
pub fn build_pl_candidates(sample: &Sample, spec: &BuilderSpec) -> Result<CandidateSet> {
    spec.validate()?;
    check_size(sample)?;
    let mut set = CandidateSet::new();
    let k = spec.k;
    for &d in &spec.d_grid {
        let b = grid(sample, d, spec.breakpoint_rule);
        if b.len() < 2 {
            continue;
        }
        let h = histogram(sample, &b);
        let w: Vec<f64> = b.windows(2).map(|x| x[1] - x[0]).collect();
        let (x0, xd) = (b[0], b[b.len() - 1]);
        let mids: Vec<f64> = b.windows(2).map(|x| 0.5 * (x[0] + x[1])).collect();
        let mut knots = vec![x0];
        knots.extend_from_slice(&mids);
        knots.push(xd);
        let bases = [("raw", h.clone()), ("decreasing", pava(&h, &w, false)), ("increasing", pava(&h, &w, true))];
        let mut curves: Vec<(String, Vec<f64>, Vec<f64>)> = Vec::new();
        for (name, hv) in &bases {
            let m = hv.len();
            let (el, er) = if m == 1 {
                (hv[0], hv[0])
            } else {
                let sl = (hv[1] - hv[0]) / (mids[1] - mids[0]);
                let sr = (hv[m - 1] - hv[m - 2]) / (mids[m - 1] - mids[m - 2]);
                (hv[0] - sl * (mids[0] - x0), hv[m - 1] + sr * (xd - mids[m - 1]))
            };
            let mut ext = vec![el.max(0.0)];
            ext.extend_from_slice(hv);
            ext.push(er.max(0.0));
            let mut zero = vec![0.0];
            zero.extend_from_slice(hv);
            zero.push(0.0);
            curves.push((format!("{name}/mid-extrapolated"), knots.clone(), ext));
            curves.push((format!("{name}/mid-zero"), knots.clone(), zero));
            // knots at the breakpoints, interior values averaging the two cells
            let mut at_breaks = vec![hv[0]];
            at_breaks.extend(hv.windows(2).map(|x| 0.5 * (x[0] + x[1])));
            at_breaks.push(hv[m - 1]);
            let mut at_breaks_zero = at_breaks.clone();
            at_breaks_zero[0] = 0.0;
            at_breaks_zero[m] = 0.0;
            curves.push((format!("{name}/breaks"), b.clone(), at_breaks));
            curves.push((format!("{name}/breaks-zero"), b.clone(), at_breaks_zero));
        }
        let mut hulls = Vec::new();
        for (label, kn, v) in &curves {
            let keep = Polyline::upper_hull(kn, v);
            let lcm: Vec<f64> = {
                let poly = Polyline::new(keep.iter().map(|&i| kn[i]).collect(), keep.iter().map(|&i| v[i]).collect());
                match poly {
                    Ok(p) => p.sample_at(kn),
                    Err(_) => continue,
                }
            };
            hulls.push((format!("{label}/lcm"), kn.clone(), lcm));
            if label.ends_with("extrapolated") || label.ends_with("/breaks") {
                let keep = Polyline::lower_hull(kn, v);
                if let Ok(p) = Polyline::new(keep.iter().map(|&i| kn[i]).collect(), keep.iter().map(|&i| v[i]).collect()) {
                    let gcm = p.sample_at(kn);
                    if gcm.iter().any(|&g| g > 0.0) {
                        hulls.push((format!("{label}/gcm"), kn.clone(), gcm));
                    }
                }
            }
        }
        curves.extend(hulls);
        for (label, kn, v) in curves {
            let Some(p) = pl_from_values(&kn, &v) else { continue };
            if !p.in_class(kn.len() - 1, k) {
                continue;
            }
            set.push_unique(p.into(), meta("M1k", d, k, label));
        }
    }
    finish(set, spec)
}

/// Log-linear candidates: concave majorant of the log-histogram at the
/// midpoints of `D + 1` cells, extended to the sample range (and, when the
/// end slopes allow it, to infinite tails).
pub fn build_loglinear_candidates(sample: &Sample, spec: &BuilderSpec) -> Result<CandidateSet> {
    spec.validate()?;
    check_size(sample)?;
    let mut set = CandidateSet::new();
    let n = sample.len() as f64;
    let floor = 1.0 / (n * (sample.max() - sample.min()));
    for &d in &spec.d_grid {
        let b = grid(sample, d + 1, spec.breakpoint_rule);
        if b.len() < 3 {
            continue;
        }
        let h = histogram(sample, &b);
        let mids: Vec<f64> = b.windows(2).map(|x| 0.5 * (x[0] + x[1])).collect();
        let logs: Vec<f64> = h.iter().map(|v| (v + floor).ln()).collect();
        let keep = Polyline::upper_hull(&mids, &logs);
        let hx: Vec<f64> = keep.iter().map(|&i| mids[i]).collect();
        let hy: Vec<f64> = keep.iter().map(|&i| logs[i]).collect();
        let m = hx.len() - 1;
        let slopes: Vec<f64> = (0..m).map(|j| (hy[j + 1] - hy[j]) / (hx[j + 1] - hx[j])).collect();
        let intercepts: Vec<f64> = (0..m).map(|j| hy[j] - slopes[j] * hx[j]).collect();
        let (x0, xh) = (b[0], b[b.len() - 1]);
        let mut knots = hx.clone();
        knots[0] = x0;
        knots[m] = xh;
        let mut variants = vec![("finite", knots.clone())];
        if slopes[m - 1] < 0.0 {
            let mut k2 = knots.clone();
            k2[m] = f64::INFINITY;
            variants.push(("right-tail", k2));
        }
        if slopes[0] > 0.0 {
            let mut k2 = knots.clone();
            k2[0] = f64::NEG_INFINITY;
            variants.push(("left-tail", k2.clone()));
            if slopes[m - 1] < 0.0 {
                k2[m] = f64::INFINITY;
                variants.push(("both-tails", k2));
            }
        }
        for (label, kn) in variants {
            let Ok(p) = LogLinear::from_unnormalized(kn, slopes.clone(), intercepts.clone()) else { continue };
            if !p.is_log_concave() || p.pieces() > d {
                continue;
            }
            set.push_unique(p.into(), meta("MLC", d, spec.k, label));
        }
    }
    finish(set, spec)
}

/// The Grenander estimator on `(left, x_(n)]`: the antitonic fit of the
/// empirical cell densities, by pool-adjacent-violators on (count, width)
/// blocks. The pooled levels are the slopes of the least concave majorant of
/// the empirical CDF.
pub fn grenander(sample: &Sample, left: f64) -> Result<PiecewiseConstant> {
    let xs = sample.values();
    if !left.is_finite() {
        return domain("the support's left end must be finite");
    }
    if xs[0] < left {
        return domain(format!("observation {} lies left of the support end {left}", xs[0]));
    }
    if xs[0] == left {
        return Err(Error::Degenerate("an observation at the support end gives an unbounded estimate".into()));
    }
    let n = xs.len() as f64;
    // (left end, right end, count) per block
    let mut blocks: Vec<(f64, f64, usize)> = vec![];
    let mut lo = left;
    let mut i = 0;
    while i < xs.len() {
        let x = xs[i];
        let mut c = 0;
        while i < xs.len() && xs[i] == x {
            c += 1;
            i += 1;
        }
        blocks.push((lo, x, c));
        lo = x;
        while blocks.len() >= 2 {
            let (a, b) = (blocks[blocks.len() - 2], blocks[blocks.len() - 1]);
            // a violation: the left block is strictly lower than the right one
            if (a.2 as f64) * (b.1 - b.0) < (b.2 as f64) * (a.1 - a.0) {
                blocks.pop();
                *blocks.last_mut().expect("two blocks") = (a.0, b.1, a.2 + b.2);
            } else {
                break;
            }
        }
    }
    let mut breaks = vec![left];
    breaks.extend(blocks.iter().map(|b| b.1));
    let levels = blocks.iter().map(|b| b.2 as f64 / (n * (b.1 - b.0))).collect();
    Ok(PiecewiseConstant::new(breaks, levels)?.canonical())
}
