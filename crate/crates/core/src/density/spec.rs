//! JSON density specifications.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{fixtures, Density, LogLinear, PiecewiseConstant, PiecewiseLinear};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub density: DensitySpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum DensitySpec {
    Pc {
        #[serde(alias = "breaks")]
        breakpoints: Vec<f64>,
        levels: Vec<f64>,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        sub: bool,
    },
    Pl {
        knots: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        values: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        left: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        right: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        sub: bool,
    },
    Loglinear {
        #[serde(with = "crate::serde_ext::ext_vec")]
        knots: Vec<f64>,
        slopes: Vec<f64>,
        intercepts: Vec<f64>,
    },
    Named {
        name: String,
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        params: BTreeMap<String, f64>,
    },
    Mixture {
        components: Vec<Component>,
    },
}

impl DensitySpec {
    pub fn build(&self) -> Result<Density> {
        match self {
            DensitySpec::Pc { breakpoints, levels, sub } => {
                let (b, l) = (breakpoints.clone(), levels.clone());
                Ok(if *sub { PiecewiseConstant::new_sub(b, l)? } else { PiecewiseConstant::new(b, l)? }.into())
            }
            DensitySpec::Pl { knots, values, left, right, sub } => {
                let (l, r) = match (values, left, right) {
                    (Some(v), None, None) => {
                        if v.len() != knots.len() || v.len() < 2 {
                            return Err(Error::Spec("pl needs one value per knot".into()));
                        }
                        (v[..v.len() - 1].to_vec(), v[1..].to_vec())
                    }
                    (None, Some(l), Some(r)) => (l.clone(), r.clone()),
                    _ => return Err(Error::Spec("pl needs either values or left and right".into())),
                };
                let k = knots.clone();
                Ok(if *sub { PiecewiseLinear::new_sub(k, l, r)? } else { PiecewiseLinear::new(k, l, r)? }.into())
            }
            DensitySpec::Loglinear { knots, slopes, intercepts } => {
                Ok(LogLinear::new(knots.clone(), slopes.clone(), intercepts.clone())?.into())
            }
            DensitySpec::Named { name, params } => fixtures::named(name, params),
            DensitySpec::Mixture { components } => {
                if components.is_empty() {
                    return Err(Error::Spec("mixture without components".into()));
                }
                let mut c = Vec::with_capacity(components.len());
                let mut total = 0.0;
                for comp in components {
                    if !(comp.weight >= 0.0) || !comp.weight.is_finite() {
                        return Err(Error::Spec("mixture weights must be nonnegative".into()));
                    }
                    total += comp.weight;
                    c.push((comp.weight, comp.density.build()?));
                }
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::Spec(format!("mixture weights sum to {total}, not 1")));
                }
                Ok(Density::Mixture(c))
            }
        }
    }

    pub fn from_density(d: &Density) -> Result<Self> {
        Ok(match d {
            Density::Constant(p) => {
                DensitySpec::Pc { breakpoints: p.breaks().to_vec(), levels: p.levels().to_vec(), sub: p.is_sub() }
            }
            Density::Linear(p) => match p.continuous_values() {
                Some(v) => DensitySpec::Pl { knots: p.knots().to_vec(), values: Some(v), left: None, right: None, sub: p.is_sub() },
                None => DensitySpec::Pl {
                    knots: p.knots().to_vec(),
                    values: None,
                    left: Some(p.left_values().to_vec()),
                    right: Some(p.right_values().to_vec()),
                    sub: p.is_sub(),
                },
            },
            Density::LogLinear(p) => DensitySpec::Loglinear {
                knots: p.knots().to_vec(),
                slopes: p.slopes().to_vec(),
                intercepts: p.intercepts().to_vec(),
            },
            Density::Generic(g) => g
                .spec()
                .cloned()
                .ok_or_else(|| Error::Unsupported(format!("generic density {:?} has no JSON form", g.name())))?,
            Density::Mixture(c) => DensitySpec::Mixture {
                components: c
                    .iter()
                    .map(|(w, d)| Ok(Component { weight: *w, density: DensitySpec::from_density(d)? }))
                    .collect::<Result<_>>()?,
            },
        })
    }
}
