//! Probability vectors on the simplex.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on the total mass of a simplex vector.
pub const SIMPLEX_SUM_TOL: f64 = 1e-12;

/// Nonnegative weights summing to one.
///
/// Serializes as a bare JSON array; deserialization validates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SimplexVector(Vec<f64>);

impl SimplexVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidSimplex("empty weight vector".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidSimplex(format!("entry {w} is not a nonnegative real")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_SUM_TOL {
            return Err(Error::InvalidSimplex(format!("entries sum to {total}")));
        }
        Ok(Self(weights))
    }

    /// Builds a simplex vector from nonnegative masses by dividing by their total.
    pub fn normalized(masses: Vec<f64>) -> Result<Self> {
        if masses.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidSimplex("masses must be finite and nonnegative".into()));
        }
        let total: f64 = masses.iter().sum();
        if total <= 0.0 {
            return Err(Error::EmptySupport);
        }
        Ok(Self(masses.into_iter().map(|w| w / total).collect()))
    }

    /// Uniform weights over `s` entries.
    pub fn uniform(s: usize) -> Result<Self> {
        if s == 0 {
            return Err(Error::InvalidSimplex("empty weight vector".into()));
        }
        Ok(Self(vec![1.0 / s as f64; s]))
    }

    /// The `i`-th canonical basis vector of length `s`.
    pub fn vertex(s: usize, i: usize) -> Result<Self> {
        if i >= s {
            return Err(Error::InvalidParameter(format!("vertex index {i} out of range for s = {s}")));
        }
        let mut w = vec![0.0; s];
        w[i] = 1.0;
        Ok(Self(w))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Indices with strictly positive weight.
    pub fn support(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(_, w)| **w > 0.0).map(|(i, _)| i).collect()
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).map(|(w, x)| w * x).sum()
    }
}

impl std::ops::Index<usize> for SimplexVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for SimplexVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SimplexVector> for Vec<f64> {
    fn from(s: SimplexVector) -> Self {
        s.0
    }
}
