//! Test statistics and the ε-minimizer selection rule.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::piece::RegionRule;
use crate::density::{region_with_masses, Density};
use crate::sample::Sample;
use crate::{Error, Result};

pub const DEFAULT_MAX_CANDIDATES: usize = 4096;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    #[default]
    Tv,
    Dl,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    pub epsilon: f64,
    pub statistic: Statistic,
    pub max_candidates: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig { epsilon: 0.0, statistic: Statistic::Tv, max_candidates: DEFAULT_MAX_CANDIDATES }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) {
            return Err(Error::Domain("epsilon must be nonnegative".into()));
        }
        if self.max_candidates == 0 {
            return Err(Error::Domain("max_candidates must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CandidateMeta {
    pub model: String,
    pub d: usize,
    pub k: usize,
    pub label: String,
}

/// Ordered finite candidate set.
#[derive(Clone, Debug, Default)]
pub struct CandidateSet {
    densities: Vec<Density>,
    meta: Vec<CandidateMeta>,
}

impl CandidateSet {
    pub fn new() -> Self {
        CandidateSet::default()
    }

    pub fn from_densities(densities: Vec<Density>) -> Self {
        let meta = densities
            .iter()
            .map(|d| CandidateMeta { model: d.kind().into(), ..CandidateMeta::default() })
            .collect();
        CandidateSet { densities, meta }
    }

    pub fn push(&mut self, d: Density, meta: CandidateMeta) {
        self.densities.push(d);
        self.meta.push(meta);
    }

    /// Pushes unless an equal density is already present.
    pub fn push_unique(&mut self, d: Density, meta: CandidateMeta) -> bool {
        if self.densities.contains(&d) {
            return false;
        }
        self.push(d, meta);
        true
    }

    pub fn len(&self) -> usize {
        self.densities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.densities.is_empty()
    }

    pub fn get(&self, i: usize) -> &Density {
        &self.densities[i]
    }

    pub fn meta(&self, i: usize) -> &CandidateMeta {
        &self.meta[i]
    }

    pub fn densities(&self) -> &[Density] {
        &self.densities
    }

    pub fn contains(&self, d: &Density) -> bool {
        self.densities.contains(d)
    }

    pub fn validate(&self, cap: usize) -> Result<()> {
        if self.is_empty() {
            return Err(Error::Domain("candidate set is empty".into()));
        }
        if self.len() > cap {
            return Err(Error::TooManyCandidates { got: self.len(), cap });
        }
        if let Some(d) = self.densities.iter().find(|d| !d.is_piecewise()) {
            return Err(Error::Unsupported(format!("candidate of kind {} is not piecewise", d.kind())));
        }
        Ok(())
    }

    /// Image of every candidate under `x ↦ σx + m`.
    pub fn pushforward(&self, sigma: f64, m: f64) -> Result<Self> {
        Ok(CandidateSet {
            densities: self.densities.iter().map(|d| d.pushforward(sigma, m)).collect::<Result<_>>()?,
            meta: self.meta.clone(),
        })
    }
}

/// `t_{(P,Q)}(x) = 1{q(x) > p(x)} − P(q > p)`.
pub fn test_statistic(p: &Density, q: &Density, x: f64) -> Result<f64> {
    let r = region_with_masses(p, q, RegionRule::Above)?;
    Ok(f64::from(u8::from(r.union.contains(x))) - r.mass_p)
}

/// `T(X, P, Q) = Σ_i t_{(P,Q)}(X_i)`.
pub fn pair_statistic(sample: &Sample, p: &Density, q: &Density) -> Result<f64> {
    let r = region_with_masses(p, q, RegionRule::Above)?;
    Ok(r.union.count_sorted(sample.values()) as f64 - sample.len() as f64 * r.mass_p)
}

/// `|Σ_i 1{q ≥ p}(X_i) − n P(q ≥ p)|`, the region restricted to the supports.
pub fn dl_pair_statistic(sample: &Sample, p: &Density, q: &Density) -> Result<f64> {
    let r = region_with_masses(p, q, RegionRule::AboveOrEqualOnSupport)?;
    Ok((r.union.count_sorted(sample.values()) as f64 - sample.len() as f64 * r.mass_p).abs())
}

/// `sup_Q T(X, P, Q)` over the candidates.
pub fn sup_statistic(sample: &Sample, p: &Density, candidates: &CandidateSet) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for q in candidates.densities() {
        best = best.max(pair_statistic(sample, p, q)?);
    }
    Ok(best)
}

/// Full table `T[i][j] = T(X, P_i, P_j)` (row-major), computed with one sweep
/// per unordered pair.
pub fn pair_table(sample: &Sample, candidates: &CandidateSet, statistic: Statistic) -> Result<Vec<f64>> {
    let m = candidates.len();
    let n = sample.len() as f64;
    let xs = sample.values();
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| {
            let start = if statistic == Statistic::Tv { i + 1 } else { i };
            (start..m).map(move |j| (i, j))
        })
        .collect();
    let values: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|&(i, j)| -> Result<(f64, f64)> {
            let (p, q) = (candidates.get(i), candidates.get(j));
            let (above, below) = match statistic {
                Statistic::Tv => (RegionRule::Above, RegionRule::Below),
                Statistic::Dl => (RegionRule::AboveOrEqualOnSupport, RegionRule::BelowOrEqualOnSupport),
            };
            let segs = crate::density::sweep_pair(p, q).ok_or_else(|| {
                Error::Unsupported(format!("region of a {} / {} pair", p.kind(), q.kind()))
            })?;
            let ra = crate::density::piece::region(&segs, above);
            let rb = crate::density::piece::region(&segs, below);
            // T(P_i, P_j) uses {p_j > p_i} and P_i; T(P_j, P_i) uses {p_i > p_j} and P_j
            let tij = ra.union.count_sorted(xs) as f64 - n * ra.mass_p;
            let tji = rb.union.count_sorted(xs) as f64 - n * rb.mass_q;
            Ok(match statistic {
                Statistic::Tv => (tij, tji),
                Statistic::Dl => (tij.abs(), tji.abs()),
            })
        })
        .collect::<Result<_>>()?;
    let mut table = vec![0.0; m * m];
    for (&(i, j), &(tij, tji)) in pairs.iter().zip(&values) {
        table[i * m + j] = tij;
        table[j * m + i] = tji;
    }
    Ok(table)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub candidate_index: usize,
    pub sup_stat: f64,
    pub argmax_rival_index: usize,
}

#[derive(Clone, Debug)]
pub struct Selection {
    pub index: usize,
    pub density: Density,
    pub min_sup: f64,
    pub diagnostics: Vec<Diagnostic>,
}

/// Returns the first candidate whose sup-statistic is within `ε` of the
/// minimum.
pub fn select(sample: &Sample, candidates: &CandidateSet, config: &EstimatorConfig) -> Result<Selection> {
    config.validate()?;
    candidates.validate(config.max_candidates)?;
    let m = candidates.len();
    let table = pair_table(sample, candidates, config.statistic)?;
    let diagnostics: Vec<Diagnostic> = (0..m)
        .map(|i| {
            let row = &table[i * m..(i + 1) * m];
            let (arg, sup) = row
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |(bi, bv), (j, &v)| if v > bv { (j, v) } else { (bi, bv) });
            Diagnostic { candidate_index: i, sup_stat: sup, argmax_rival_index: arg }
        })
        .collect();
    let min_sup = diagnostics.iter().map(|d| d.sup_stat).fold(f64::INFINITY, f64::min);
    let index = diagnostics
        .iter()
        .position(|d| d.sup_stat <= min_sup + config.epsilon)
        .expect("the minimum is attained");
    Ok(Selection { index, density: candidates.get(index).clone(), min_sup, diagnostics })
}
