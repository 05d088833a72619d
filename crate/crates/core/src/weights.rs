use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-9;

/// Non-negative weights summing to one, defining the index `wᵀX`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::domain("weight vector is empty"));
        }
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::domain(format!("weights must be finite and non-negative: {w:?}")));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::domain(format!("weights must sum to one, got {sum}")));
        }
        Ok(Self(w))
    }

    /// Rescales non-negative weights onto the simplex.
    pub fn normalized(raw: Vec<f64>) -> Result<Self> {
        if raw.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::domain(format!("weights must be finite and non-negative: {raw:?}")));
        }
        let sum: f64 = raw.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::domain("weight vector is zero"));
        }
        Ok(Self(raw.into_iter().map(|x| x / sum).collect()))
    }

    pub fn equal(d: usize) -> Self {
        assert!(d > 0);
        Self(vec![1.0 / d as f64; d])
    }

    pub fn unit(d: usize, j: usize) -> Self {
        assert!(j < d);
        let mut w = vec![0.0; d];
        w[j] = 1.0;
        Self(w)
    }

    /// `(w, 1 - w)`.
    pub fn bivariate(w: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::domain(format!("bivariate weight must lie in [0,1], got {w}")));
        }
        Ok(Self(vec![w, 1.0 - w]))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.0.len());
        self.0.iter().zip(x).map(|(w, x)| w * x).sum()
    }

    pub(crate) fn check_dim(&self, d: usize) -> Result<()> {
        if self.dim() != d {
            return Err(Error::domain(format!(
                "weight vector has length {}, expected {d}",
                self.dim()
            )));
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Self {
        w.0
    }
}
