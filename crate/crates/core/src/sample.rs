use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Where an observation came from in a simulated scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Clean,
    Contaminant,
    Outlier,
}

/// Sorted observations with one origin tag per point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    values: Vec<f64>,
    origins: Vec<Origin>,
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let origins = vec![Origin::Clean; values.len()];
        Sample::tagged(values, origins)
    }

    pub fn tagged(values: Vec<f64>, origins: Vec<Origin>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        if values.len() != origins.len() {
            return crate::domain("one origin tag per observation is required");
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return crate::domain(format!("non-finite observation {bad}"));
        }
        let mut pairs: Vec<(f64, Origin)> = values.into_iter().zip(origins).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (values, origins) = pairs.into_iter().unzip();
        Ok(Sample { values, origins })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn origins(&self) -> &[Origin] {
        &self.origins
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn count(&self, origin: Origin) -> usize {
        self.origins.iter().filter(|&&o| o == origin).count()
    }

    /// Applies `x ↦ σx + m` to every observation.
    pub fn pushforward(&self, sigma: f64, m: f64) -> Sample {
        Sample {
            values: self.values.iter().map(|x| sigma * x + m).collect(),
            origins: self.origins.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorts_with_tags() {
        let s = Sample::tagged(vec![3.0, 1.0, 2.0], vec![Origin::Outlier, Origin::Clean, Origin::Contaminant]).unwrap();
        assert_eq!(s.values(), &[1.0, 2.0, 3.0]);
        assert_eq!(s.origins(), &[Origin::Clean, Origin::Contaminant, Origin::Outlier]);
    }

    #[test]
    fn rejects_empty_and_nan() {
        assert!(Sample::new(vec![]).is_err());
        assert!(Sample::new(vec![f64::NAN]).is_err());
    }
}
