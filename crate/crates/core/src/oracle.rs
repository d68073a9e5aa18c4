//! Brute-force check of the rate function.
//!
//! Relative entropy is minimized over the simplex grid
//! `{(k₁/m, …, k_s/m) : kⱼ ≥ 0, Σ kⱼ = m}` subject to either the raw risk
//! constraint `ρ(Σ pⱼ μⱼ) = r` or its weight-linear form `Σ pⱼ Ψⱼ = 0`.
//! Grid points rarely hit the constraint exactly, so feasibility is a band
//! of width `constraint_tol`. Nothing here touches the multiplier machinery.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::{Law, Mixture};
use crate::riskmeasures::{PsiProfile, RiskMeasure};
use crate::simplex::SimplexVector;

/// Largest number of components the grid is enumerated for.
pub const MAX_COMPONENTS: usize = 6;

/// `Σ pⱼ log(pⱼ/πⱼ)` with `0·log(0/πⱼ) = 0` and `+∞` when `p` puts mass where `π` has none.
pub fn relative_entropy(p: &SimplexVector, pi: &SimplexVector) -> Result<f64> {
    if p.len() != pi.len() {
        return Err(Error::LengthMismatch(p.len(), pi.len()));
    }
    Ok(entropy_terms(p.iter().copied(), pi.as_slice()))
}

fn entropy_terms(p: impl Iterator<Item = f64>, pi: &[f64]) -> f64 {
    let mut total = 0.0;
    for (pj, qj) in p.zip(pi) {
        if pj == 0.0 {
            continue;
        }
        if *qj == 0.0 {
            return f64::INFINITY;
        }
        total += pj * (pj / qj).ln();
    }
    total.max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub resolution: usize,
    pub constraint_tol: f64,
}

impl GridSpec {
    pub fn new(resolution: usize, constraint_tol: f64) -> Result<Self> {
        if resolution == 0 {
            return Err(Error::InvalidParameter("grid resolution must be at least 1".into()));
        }
        if !(constraint_tol.is_finite() && constraint_tol > 0.0) {
            return Err(Error::InvalidParameter(format!("constraint tolerance must be positive, got {constraint_tol}")));
        }
        Ok(Self { resolution, constraint_tol })
    }

    /// Default band for the weight-linear constraint at one `r`: half the
    /// lattice spacing `(maxⱼ Ψⱼ − minⱼ Ψⱼ)/m` of `Σ pⱼ Ψⱼ` along the edge
    /// joining the extreme components, expressed relative to `max |Ψ|`.
    /// Some grid point always falls inside it when `Ψ` changes sign.
    pub fn for_profile(resolution: usize, profile: &PsiProfile) -> Result<Self> {
        let hi = profile.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = profile.values.iter().copied().fold(f64::INFINITY, f64::min);
        let scale = hi.abs().max(lo.abs());
        let rel = if scale > 0.0 && hi > lo { (hi - lo) / (2.0 * scale) } else { 1.0 };
        // slack so a target exactly midway between lattice points stays feasible
        Self::new(resolution, rel * (1.0 + 1e-9) / resolution.max(1) as f64)
    }

    /// Default band for the raw constraint: `span/m` in risk units, twice
    /// the lattice half-spacing of a linear risk measure, where
    /// `span` is the width of the attainable risk range.
    pub fn for_general(resolution: usize, span: f64) -> Result<Self> {
        let span = if span > 0.0 { span } else { 1.0 };
        Self::new(resolution, span / resolution.max(1) as f64)
    }

    /// Number of grid points for `s` components, `binomial(m+s−1, s−1)`.
    pub fn size(&self, s: usize) -> u128 {
        binomial(self.resolution as u128 + s as u128 - 1, s as u128 - 1)
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Deviation allowed between the grid minimum under the weight-linear
/// constraint and the rate function at resolution `m`.
pub fn condition_resolution_bound(resolution: usize) -> f64 {
    4.0 / resolution as f64
}

/// Same, for the raw risk constraint.
pub fn general_resolution_bound(resolution: usize) -> f64 {
    8.0 / resolution as f64
}

/// Compositions of `total` into `parts` nonnegative integers, in
/// lexicographic order starting from `(0, …, 0, total)`.
#[derive(Debug, Clone)]
pub struct Compositions {
    current: Option<Vec<usize>>,
}

impl Compositions {
    pub fn new(total: usize, parts: usize) -> Self {
        let current = (parts > 0).then(|| {
            let mut k = vec![0; parts];
            k[parts - 1] = total;
            k
        });
        Self { current }
    }
}

impl Iterator for Compositions {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.take()?;
        let s = out.len();
        // the entry before the last nonzero one takes a unit, the rest of the tail collapses to the end
        if let Some(last) = out.iter().rposition(|&k| k > 0).filter(|&j| j > 0) {
            let i = last - 1;
            let tail: usize = out[i + 1..].iter().sum();
            let mut next = out.clone();
            next[i] += 1;
            next[i + 1..].iter_mut().for_each(|k| *k = 0);
            next[s - 1] = tail - 1;
            self.current = Some(next);
        }
        Some(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Smallest relative entropy over feasible grid points; `+∞` if none.
    pub min_entropy: f64,
    /// First feasible grid point attaining the minimum, `None` if none is feasible.
    pub argmin: Option<SimplexVector>,
    pub feasible_count: u64,
}

struct Best {
    entropy: f64,
    counts: Option<Vec<usize>>,
    feasible: u64,
}

impl Best {
    fn empty() -> Self {
        Self { entropy: f64::INFINITY, counts: None, feasible: 0 }
    }

    // strict comparison keeps the earlier point on ties
    fn offer(&mut self, entropy: f64, counts: &[usize]) {
        self.feasible += 1;
        if self.counts.is_none() || entropy < self.entropy {
            self.entropy = entropy;
            self.counts = Some(counts.to_vec());
        }
    }

    fn merge(mut self, later: Best) -> Best {
        let feasible = self.feasible + later.feasible;
        if let Some(c) = later.counts {
            if self.counts.is_none() || later.entropy < self.entropy {
                self.entropy = later.entropy;
                self.counts = Some(c);
            }
        }
        self.feasible = feasible;
        self
    }
}

fn check_size(s: usize) -> Result<()> {
    if s == 0 {
        return Err(Error::EmptySupport);
    }
    if s > MAX_COMPONENTS {
        return Err(Error::TooManyComponents { got: s, max: MAX_COMPONENTS });
    }
    Ok(())
}

fn to_weights(counts: &[usize], m: usize) -> Vec<f64> {
    counts.iter().map(|&k| k as f64 / m as f64).collect()
}

/// Runs `feasible` over every grid point, split by the first coordinate
/// across workers and merged back in enumeration order.
fn search<F>(s: usize, pi: &[f64], m: usize, feasible: F) -> Result<OracleResult>
where
    F: Fn(&[usize], &[f64]) -> Result<bool> + Sync,
{
    let visit = |counts: &[usize], best: &mut Best| -> Result<()> {
        let p = to_weights(counts, m);
        if feasible(counts, &p)? {
            best.offer(entropy_terms(p.iter().copied(), pi), counts);
        }
        Ok(())
    };
    let best = if s == 1 {
        let mut best = Best::empty();
        visit(&[m], &mut best)?;
        best
    } else {
        let parts: Vec<Best> = (0..=m)
            .into_par_iter()
            .map(|k1| {
                let mut best = Best::empty();
                let mut counts = vec![0; s];
                counts[0] = k1;
                for rest in Compositions::new(m - k1, s - 1) {
                    counts[1..].copy_from_slice(&rest);
                    visit(&counts, &mut best)?;
                }
                Ok(best)
            })
            .collect::<Result<_>>()?;
        parts.into_iter().fold(Best::empty(), Best::merge)
    };
    let argmin = best.counts.map(|c| SimplexVector::normalized(to_weights(&c, m))).transpose()?;
    Ok(OracleResult { min_entropy: best.entropy, argmin, feasible_count: best.feasible })
}

/// Grid minimum of relative entropy under `|ρ(Σ pⱼ μⱼ) − r| ≤ constraint_tol`.
pub fn grid_min_general(rho: &RiskMeasure, components: &[Law], pi: &SimplexVector, r: f64, grid: &GridSpec) -> Result<OracleResult> {
    if components.len() != pi.len() {
        return Err(Error::LengthMismatch(components.len(), pi.len()));
    }
    check_size(pi.len())?;
    search(pi.len(), pi.as_slice(), grid.resolution, |_, p| {
        let mix = Mixture::new(components.to_vec(), SimplexVector::normalized(p.to_vec())?)?;
        Ok((rho.evaluate(&mix)? - r).abs() <= grid.constraint_tol)
    })
}

/// Grid minimum of relative entropy under `|Σ pⱼ Ψⱼ| ≤ constraint_tol · maxⱼ |Ψⱼ|`.
pub fn grid_min_condition(profile: &PsiProfile, pi: &SimplexVector, grid: &GridSpec) -> Result<OracleResult> {
    let psi = &profile.values;
    if psi.len() != pi.len() {
        return Err(Error::LengthMismatch(psi.len(), pi.len()));
    }
    check_size(pi.len())?;
    let band = grid.constraint_tol * psi.iter().copied().map(f64::abs).fold(0.0, f64::max);
    let m = grid.resolution as f64;
    search(pi.len(), pi.as_slice(), grid.resolution, |counts, _| {
        // integer counts keep the sum exact up to one rounding
        let s: f64 = counts.iter().zip(psi).map(|(&k, p)| k as f64 * p).sum();
        Ok((s / m).abs() <= band)
    })
}
