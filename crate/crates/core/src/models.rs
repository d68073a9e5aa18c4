//! Component laws and their finite mixtures.
//!
//! The catalogue is closed: exponential, Gaussian, point mass and finitely
//! supported discrete laws. Each kind carries closed forms for the CDF,
//! quantile, upper partial expectation and exponential moment, and a mixture
//! combines them linearly in the weights (`F = Σ pⱼ Fⱼ`).
//!
//! Laws deserialize from tagged JSON objects:
//!
//! ```text
//! {"kind": "exponential", "rate": 1.0}
//! {"kind": "gaussian", "mean": 0.0, "std_dev": 2.0}
//! {"kind": "point_mass", "location": 1.0}
//! {"kind": "finite_discrete", "atoms": [0.0, 3.0], "probs": [0.9, 0.1]}
//! ```

use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::roots::{bisect, Monotone};
use crate::simplex::SimplexVector;

/// Absolute tolerance in `r` for mixture quantile inversion.
pub const QUANTILE_XTOL: f64 = 1e-10;
/// Iteration budget for mixture quantile inversion.
pub const QUANTILE_MAX_ITER: usize = 200;

/// A one-dimensional probability law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LawRepr", into = "LawRepr")]
pub enum Law {
    Exponential { rate: f64 },
    Gaussian { mean: f64, std_dev: f64 },
    PointMass { location: f64 },
    FiniteDiscrete { atoms: Vec<f64>, probs: SimplexVector },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum LawRepr {
    Exponential { rate: f64 },
    Gaussian { mean: f64, std_dev: f64 },
    PointMass { location: f64 },
    FiniteDiscrete { atoms: Vec<f64>, probs: SimplexVector },
}

impl TryFrom<LawRepr> for Law {
    type Error = Error;

    fn try_from(r: LawRepr) -> Result<Self> {
        match r {
            LawRepr::Exponential { rate } => Law::exponential(rate),
            LawRepr::Gaussian { mean, std_dev } => Law::gaussian(mean, std_dev),
            LawRepr::PointMass { location } => Law::point_mass(location),
            LawRepr::FiniteDiscrete { atoms, probs } => Law::finite_discrete(atoms, probs),
        }
    }
}

impl From<Law> for LawRepr {
    fn from(l: Law) -> Self {
        match l {
            Law::Exponential { rate } => LawRepr::Exponential { rate },
            Law::Gaussian { mean, std_dev } => LawRepr::Gaussian { mean, std_dev },
            Law::PointMass { location } => LawRepr::PointMass { location },
            Law::FiniteDiscrete { atoms, probs } => LawRepr::FiniteDiscrete { atoms, probs },
        }
    }
}

impl Law {
    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::InvalidParameter(format!("exponential rate must be positive, got {rate}")));
        }
        Ok(Law::Exponential { rate })
    }

    pub fn gaussian(mean: f64, std_dev: f64) -> Result<Self> {
        if !mean.is_finite() || !(std_dev.is_finite() && std_dev > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gaussian needs finite mean and positive std_dev, got ({mean}, {std_dev})"
            )));
        }
        Ok(Law::Gaussian { mean, std_dev })
    }

    pub fn point_mass(location: f64) -> Result<Self> {
        if !location.is_finite() {
            return Err(Error::InvalidParameter(format!("point mass location {location}")));
        }
        Ok(Law::PointMass { location })
    }

    pub fn finite_discrete(atoms: Vec<f64>, probs: SimplexVector) -> Result<Self> {
        if atoms.len() != probs.len() {
            return Err(Error::LengthMismatch(atoms.len(), probs.len()));
        }
        if atoms.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("finite_discrete atoms must be finite".into()));
        }
        Ok(Law::FiniteDiscrete { atoms, probs })
    }

    /// Short lowercase name of the law kind.
    pub fn kind_name(&self) -> &'static str {
        match self {
            Law::Exponential { .. } => "exponential",
            Law::Gaussian { .. } => "gaussian",
            Law::PointMass { .. } => "point_mass",
            Law::FiniteDiscrete { .. } => "finite_discrete",
        }
    }

    /// True for laws with a continuous, strictly increasing CDF on their support.
    pub fn is_continuous(&self) -> bool {
        matches!(self, Law::Exponential { .. } | Law::Gaussian { .. })
    }

    /// Atoms and their probabilities, for the atom-bearing kinds.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            Law::PointMass { location } => Some(vec![(*location, 1.0)]),
            Law::FiniteDiscrete { atoms, probs } => Some(atoms.iter().copied().zip(probs.iter().copied()).collect()),
            _ => None,
        }
    }

    fn normal(mean: f64, std_dev: f64) -> Normal {
        Normal::new(mean, std_dev).expect("validated gaussian parameters")
    }

    /// `F(x) = μ((−∞, x])`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Law::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Law::Gaussian { mean, std_dev } => Self::normal(*mean, *std_dev).cdf(x),
            Law::PointMass { location } => {
                if x >= *location {
                    1.0
                } else {
                    0.0
                }
            }
            Law::FiniteDiscrete { atoms, probs } => {
                atoms.iter().zip(probs.iter()).filter(|(a, _)| **a <= x).map(|(_, p)| p).sum::<f64>().min(1.0)
            }
        }
    }

    /// Lebesgue density; only the continuous kinds have one.
    pub fn density(&self, x: f64) -> Result<f64> {
        match self {
            Law::Exponential { rate } => Ok(if x < 0.0 { 0.0 } else { rate * (-rate * x).exp() }),
            Law::Gaussian { mean, std_dev } => Ok(Self::normal(*mean, *std_dev).pdf(x)),
            _ => Err(Error::UnsupportedLaw(format!("{} has no density", self.kind_name()))),
        }
    }

    /// Generalized inverse `inf{x : F(x) ≥ α}` for `α ∈ (0, 1)`.
    pub fn quantile(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("quantile level {alpha} not in (0,1)")));
        }
        Ok(match self {
            Law::Exponential { rate } => -(-alpha).ln_1p() / rate,
            Law::Gaussian { mean, std_dev } => Self::normal(*mean, *std_dev).inverse_cdf(alpha),
            Law::PointMass { location } => *location,
            Law::FiniteDiscrete { atoms, probs } => {
                let mut pairs: Vec<(f64, f64)> = atoms.iter().copied().zip(probs.iter().copied()).collect();
                pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut acc = 0.0;
                let mut out = pairs.last().map(|p| p.0).unwrap_or(0.0);
                for (x, p) in pairs {
                    acc += p;
                    if acc >= alpha {
                        out = x;
                        break;
                    }
                }
                out
            }
        })
    }

    pub fn mean(&self) -> f64 {
        match self {
            Law::Exponential { rate } => 1.0 / rate,
            Law::Gaussian { mean, .. } => *mean,
            Law::PointMass { location } => *location,
            Law::FiniteDiscrete { atoms, probs } => probs.dot(atoms),
        }
    }

    /// Upper partial expectation `∫_{[t,∞)} x μ(dx)`.
    pub fn partial_expectation(&self, t: f64) -> f64 {
        match self {
            Law::Exponential { rate } => {
                if t <= 0.0 {
                    1.0 / rate
                } else {
                    (t + 1.0 / rate) * (-rate * t).exp()
                }
            }
            Law::Gaussian { mean, std_dev } => {
                let z = (t - mean) / std_dev;
                let std = Self::normal(0.0, 1.0);
                mean * std.sf(z) + std_dev * std.pdf(z)
            }
            Law::PointMass { location } => {
                if *location >= t {
                    *location
                } else {
                    0.0
                }
            }
            Law::FiniteDiscrete { atoms, probs } => {
                atoms.iter().zip(probs.iter()).filter(|(a, _)| **a >= t).map(|(a, p)| a * p).sum()
            }
        }
    }

    /// `E[e^{θX}]`.
    pub fn exp_moment(&self, theta: f64) -> Result<f64> {
        self.log_exp_moment(theta).map(f64::exp)
    }

    /// `log E[e^{θX}]`, evaluated without forming the moment itself.
    pub fn log_exp_moment(&self, theta: f64) -> Result<f64> {
        match self {
            Law::Exponential { rate } => {
                if theta >= *rate {
                    Err(Error::DivergentMoment { theta, rate: *rate })
                } else {
                    Ok(rate.ln() - (rate - theta).ln())
                }
            }
            Law::Gaussian { mean, std_dev } => Ok(theta * mean + 0.5 * theta * theta * std_dev * std_dev),
            Law::PointMass { location } => Ok(theta * location),
            Law::FiniteDiscrete { atoms, probs } => {
                let terms: Vec<f64> = atoms
                    .iter()
                    .zip(probs.iter())
                    .filter(|(_, p)| **p > 0.0)
                    .map(|(a, p)| p.ln() + theta * a)
                    .collect();
                Ok(log_sum_exp(&terms))
            }
        }
    }
}

/// `log Σ exp(xᵢ)` with a max shift. Returns `-∞` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// A finite mixture `Σ pⱼ μⱼ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    components: Vec<Law>,
    weights: SimplexVector,
}

impl Mixture {
    pub fn new(components: Vec<Law>, weights: SimplexVector) -> Result<Self> {
        if components.len() != weights.len() {
            return Err(Error::LengthMismatch(components.len(), weights.len()));
        }
        Ok(Self { components, weights })
    }

    pub fn components(&self) -> &[Law] {
        &self.components
    }

    pub fn weights(&self) -> &SimplexVector {
        &self.weights
    }

    fn weighted<F: Fn(&Law) -> f64>(&self, f: F) -> f64 {
        self.components.iter().zip(self.weights.iter()).filter(|(_, w)| **w > 0.0).map(|(l, w)| w * f(l)).sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.weighted(|l| l.cdf(x)).clamp(0.0, 1.0)
    }

    pub fn mean(&self) -> f64 {
        self.weighted(Law::mean)
    }

    /// The unique `r` with `F(r) = α`, by bisection between the extreme
    /// component quantiles.
    pub fn quantile(&self, alpha: f64) -> Result<f64> {
        if let Some(bad) = self.components.iter().find(|l| !l.is_continuous()) {
            return Err(Error::UnsupportedLaw(format!(
                "mixture quantile needs continuous strictly increasing components, found {}",
                bad.kind_name()
            )));
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for l in &self.components {
            let q = l.quantile(alpha)?;
            lo = lo.min(q);
            hi = hi.max(q);
        }
        if lo == hi {
            return Ok(lo);
        }
        bisect(|x| self.cdf(x) - alpha, lo, hi, Monotone::Increasing, QUANTILE_XTOL, QUANTILE_MAX_ITER)
    }

    /// `Σ pⱼ ∫_{[t,∞)} x μⱼ(dx)`.
    pub fn partial_expectation(&self, t: f64) -> f64 {
        self.weighted(|l| l.partial_expectation(t))
    }

    pub fn exp_moment(&self, theta: f64) -> Result<f64> {
        self.log_exp_moment(theta).map(f64::exp)
    }

    /// `log Σ pⱼ E_{μⱼ}[e^{θX}]`.
    pub fn log_exp_moment(&self, theta: f64) -> Result<f64> {
        let mut terms = Vec::with_capacity(self.components.len());
        for (l, w) in self.components.iter().zip(self.weights.iter()) {
            // a divergent component poisons the mixture even at zero weight
            let lm = l.log_exp_moment(theta)?;
            if *w > 0.0 {
                terms.push(w.ln() + lm);
            }
        }
        Ok(log_sum_exp(&terms))
    }
}
