//! Rate function of the empirical risk estimator.
//!
//! Given a risk measure whose constraint is weight-linear, `Σ pⱼ Ψⱼ(r) = 0`,
//! the rate function is the smallest relative entropy `Σ pⱼ log(pⱼ/πⱼ)` over
//! weights meeting the constraint. Inside the support interval the minimizer
//! is an exponential tilt of `π`,
//!
//! ```text
//! pᵢ(r) = πᵢ e^{−λΨᵢ} / Σⱼ πⱼ e^{−λΨⱼ},    Σⱼ pⱼ(r) Ψⱼ = 0,
//! ```
//!
//! and the rate is `H(r) = −log Σⱼ πⱼ e^{−λ*(r) Ψⱼ}`. At the ends of the
//! interval the mass sits on the components whose root attains the bound;
//! outside it no weight vector is feasible and `H = +∞`.
//!
//! `+∞` is returned as `f64::INFINITY` and only from the outside and
//! degenerate branches; every finite value goes through a log-sum-exp.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::{log_sum_exp, Law, Mixture};
use crate::riskmeasures::{ConditionClass, PsiProfile, RiskMeasure};
use crate::roots::{expand_bracket, safeguarded_newton, Monotone};
use crate::simplex::SimplexVector;

/// Support widths at or below this are treated as a single common root.
pub const DEGENERACY_TOL: f64 = 1e-9;
/// Component roots within this distance are grouped into one extreme set.
pub const ROOT_TIE_TOL: f64 = 1e-9;
/// Residual tolerance for the multiplier equation, relative to `max |Ψ|`.
pub const LAMBDA_RESIDUAL_TOL: f64 = 1e-10;
/// The multiplier bracket grows from `[−1, 1]` up to this half-width.
pub const LAMBDA_BRACKET_LIMIT: f64 = 1e6;
const LAMBDA_MAX_ITER: usize = 500;
/// Tolerance on `Σ πⱼ Ψⱼ(r₀)`, relative to `max(1, max |Ψ|)`.
pub const R0_CONSISTENCY_TOL: f64 = 1e-7;

/// Which branch of the rate function produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Degenerate,
    Interior,
    LowerBoundary,
    UpperBoundary,
    Outside,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Degenerate => "degenerate",
            Branch::Interior => "interior",
            Branch::LowerBoundary => "lower_boundary",
            Branch::UpperBoundary => "upper_boundary",
            Branch::Outside => "outside",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateResult {
    pub r: f64,
    /// Rate value; `f64::INFINITY` when no weights meet the constraint.
    pub value: f64,
    /// Lagrange multiplier, interior branch only.
    pub lambda_star: Option<f64>,
    /// Optimal weights over the original components, wherever `value` is finite.
    pub minimizer: Option<SimplexVector>,
    pub branch: Branch,
}

/// Range of attainable risk values and where it is attained.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportBounds {
    pub lower: f64,
    pub upper: f64,
    pub r0: f64,
    /// Original component indices whose root equals `lower`.
    pub argmin: Vec<usize>,
    /// Original component indices whose root equals `upper`.
    pub argmax: Vec<usize>,
}

impl SupportBounds {
    pub fn is_degenerate(&self) -> bool {
        self.upper - self.lower <= DEGENERACY_TOL
    }
}

/// Components and weights restricted to `{i : πᵢ > 0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSupport {
    pub weights: SimplexVector,
    pub components: Vec<Law>,
    /// Original index of each kept component.
    pub indices: Vec<usize>,
}

/// Drops the components carrying zero weight.
pub fn reduce_support(pi: &SimplexVector, components: &[Law]) -> Result<ReducedSupport> {
    if pi.len() != components.len() {
        return Err(Error::LengthMismatch(pi.len(), components.len()));
    }
    let indices = pi.support();
    if indices.is_empty() {
        return Err(Error::EmptySupport);
    }
    let weights = SimplexVector::normalized(indices.iter().map(|&i| pi[i]).collect())?;
    let components = indices.iter().map(|&i| components[i].clone()).collect();
    Ok(ReducedSupport { weights, components, indices })
}

/// Solution of the multiplier equation for one constraint vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentialTilt {
    pub lambda: f64,
    /// `log Σ πⱼ e^{−λΨⱼ}`; the rate is its negative.
    pub log_partition: f64,
    /// Tilted weights `πᵢ e^{−λΨᵢ} / Σ πⱼ e^{−λΨⱼ}`.
    pub weights: Vec<f64>,
}

/// Tilted mean of `Ψ` and minus its tilted variance: the multiplier equation
/// residual and its derivative in `λ`.
pub fn tilt_residual(psi: &[f64], log_pi: &[f64], lambda: f64) -> (f64, f64) {
    let expo: Vec<f64> = log_pi.iter().zip(psi).map(|(lp, p)| lp - lambda * p).collect();
    let m = expo.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for (e, p) in expo.iter().zip(psi) {
        let w = (e - m).exp();
        z += w;
        s1 += w * p;
        s2 += w * p * p;
    }
    let mean = s1 / z;
    (mean, -(s2 / z - mean * mean).max(0.0))
}

/// Finds `λ` with `Σ πⱼ Ψⱼ e^{−λΨⱼ} = 0` and the tilted weights.
///
/// `Ψ` must take both signs on the support of `π`, otherwise no root exists.
pub fn solve_tilt(psi: &[f64], pi: &[f64]) -> Result<ExponentialTilt> {
    if psi.len() != pi.len() {
        return Err(Error::LengthMismatch(psi.len(), pi.len()));
    }
    let live = || psi.iter().zip(pi).filter(|(_, w)| **w > 0.0).map(|(p, _)| *p);
    if !(live().any(|p| p > 0.0) && live().any(|p| p < 0.0)) {
        return Err(Error::NoBracket("multiplier equation (constraint values share one sign)"));
    }
    let log_pi: Vec<f64> = pi.iter().map(|w| w.ln()).collect();
    let scale = live().map(f64::abs).fold(0.0, f64::max);
    let ftol = LAMBDA_RESIDUAL_TOL * scale;

    let resid = |l: f64| tilt_residual(psi, &log_pi, l).0;
    let lambda = if resid(0.0).abs() <= ftol {
        0.0
    } else {
        let (lo, hi) = expand_bracket(resid, -1.0, 1.0, Monotone::Decreasing, LAMBDA_BRACKET_LIMIT, "multiplier equation")?;
        safeguarded_newton(
            |l| tilt_residual(psi, &log_pi, l),
            lo,
            hi,
            0.0,
            Monotone::Decreasing,
            ftol,
            1e-15,
            LAMBDA_MAX_ITER,
        )?
    };

    let expo: Vec<f64> = log_pi.iter().zip(psi).map(|(lp, p)| lp - lambda * p).collect();
    let log_partition = log_sum_exp(&expo);
    let weights = expo.iter().map(|e| (e - log_partition).exp()).collect();
    Ok(ExponentialTilt { lambda, log_partition, weights })
}

/// The object a rate function is computed for: a risk measure, component
/// laws and true weights, restricted to the weights' support.
#[derive(Debug, Clone)]
pub struct RateProblem {
    rho: RiskMeasure,
    class: ConditionClass,
    reduced: ReducedSupport,
    original_len: usize,
    roots: Vec<f64>,
    bounds: SupportBounds,
}

impl RateProblem {
    pub fn new(rho: RiskMeasure, components: Vec<Law>, pi: SimplexVector) -> Result<Self> {
        rho.validate()?;
        let original_len = components.len();
        let reduced = reduce_support(&pi, &components)?;
        let class = rho.check_condition(&reduced.components);
        if let ConditionClass::Unsupported(reason) = &class {
            return Err(Error::ConditionUnsupported(reason.clone()));
        }
        let roots = reduced.components.iter().map(|l| rho.component_root(l)).collect::<Result<Vec<_>>>()?;

        let lower = roots.iter().copied().fold(f64::INFINITY, f64::min);
        let upper = roots.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let pick = |target: f64| -> Vec<usize> {
            roots.iter().enumerate().filter(|(_, r)| (*r - target).abs() <= ROOT_TIE_TOL).map(|(i, _)| reduced.indices[i]).collect()
        };
        let argmin = pick(lower);
        let argmax = pick(upper);

        let mix = Mixture::new(reduced.components.clone(), reduced.weights.clone())?;
        let r0 = rho.evaluate(&mix)?;
        let mut problem = Self {
            rho,
            class,
            reduced,
            original_len,
            roots,
            bounds: SupportBounds { lower, upper, r0, argmin, argmax },
        };
        problem.check_r0()?;
        // clamp round-off so that lower ≤ r0 ≤ upper holds exactly
        problem.bounds.r0 = problem.bounds.r0.clamp(lower, upper);
        Ok(problem)
    }

    fn check_r0(&self) -> Result<()> {
        let psi = self.psi_values(self.bounds.r0)?;
        let scale = psi.iter().copied().map(f64::abs).fold(1.0, f64::max);
        let resid = self.reduced.weights.dot(&psi);
        if resid.abs() > R0_CONSISTENCY_TOL * scale {
            return Err(Error::Inconsistent(format!("Σ πⱼ Ψⱼ(r₀) = {resid:e} at r₀ = {}", self.bounds.r0)));
        }
        Ok(())
    }

    pub fn risk_measure(&self) -> &RiskMeasure {
        &self.rho
    }

    pub fn condition(&self) -> &ConditionClass {
        &self.class
    }

    /// Components with positive weight.
    pub fn components(&self) -> &[Law] {
        &self.reduced.components
    }

    /// Positive weights, aligned with [`components`](Self::components).
    pub fn weights(&self) -> &SimplexVector {
        &self.reduced.weights
    }

    /// Original indices of the kept components.
    pub fn support_indices(&self) -> &[usize] {
        &self.reduced.indices
    }

    /// Number of components before support reduction.
    pub fn original_len(&self) -> usize {
        self.original_len
    }

    /// Component roots `rᵢ⁽⁰⁾` on the reduced support.
    pub fn component_roots(&self) -> &[f64] {
        &self.roots
    }

    pub fn support_bounds(&self) -> &SupportBounds {
        &self.bounds
    }

    /// `r₀ = ρ(Σ πⱼ μⱼ)`.
    pub fn r_zero(&self) -> f64 {
        self.bounds.r0
    }

    pub fn is_degenerate(&self) -> bool {
        self.bounds.is_degenerate()
    }

    /// `(Ψ(μ₁, r), …, Ψ(μ_s, r))` on the reduced support.
    pub fn psi_values(&self, r: f64) -> Result<Vec<f64>> {
        self.reduced.components.iter().map(|l| self.rho.psi(l, r)).collect()
    }

    pub fn profile(&self, r: f64) -> Result<PsiProfile> {
        Ok(PsiProfile { r, values: self.psi_values(r)?, roots: self.roots.clone() })
    }

    /// Widens reduced weights back to the original component indexing.
    pub fn expand_weights(&self, reduced: &[f64]) -> Result<SimplexVector> {
        let mut full = vec![0.0; self.original_len];
        for (&i, &w) in self.reduced.indices.iter().zip(reduced) {
            full[i] = w;
        }
        SimplexVector::normalized(full)
    }

    fn is_interior(&self, r: f64) -> bool {
        !self.is_degenerate() && r > self.bounds.lower && r < self.bounds.upper
    }

    /// Multiplier `λ*(r)` for `r` strictly inside the support.
    pub fn lambda_star(&self, r: f64) -> Result<f64> {
        self.interior_tilt(r).map(|t| t.lambda)
    }

    fn interior_tilt(&self, r: f64) -> Result<ExponentialTilt> {
        if !self.is_interior(r) {
            return Err(Error::OutOfInterior { r, lower: self.bounds.lower, upper: self.bounds.upper });
        }
        solve_tilt(&self.psi_values(r)?, self.reduced.weights.as_slice())
    }

    /// Weights attaining the infimum at `r`, over the original components.
    pub fn minimizer(&self, r: f64) -> Result<SimplexVector> {
        self.rate(r)?.minimizer.ok_or(Error::OutOfSupport { r, lower: self.bounds.lower, upper: self.bounds.upper })
    }

    fn boundary(&self, r: f64, branch: Branch) -> Result<RateResult> {
        let target = if branch == Branch::LowerBoundary { self.bounds.lower } else { self.bounds.upper };
        let pi = self.reduced.weights.as_slice();
        let masses: Vec<f64> = self
            .roots
            .iter()
            .zip(pi)
            .map(|(root, w)| if (root - target).abs() <= ROOT_TIE_TOL { *w } else { 0.0 })
            .collect();
        let total: f64 = masses.iter().sum();
        let reduced = SimplexVector::normalized(masses)?;
        Ok(RateResult {
            r,
            value: -total.ln(),
            lambda_star: None,
            minimizer: Some(self.expand_weights(reduced.as_slice())?),
            branch,
        })
    }

    /// Rate function value, branch, multiplier and minimizer at `r`.
    pub fn rate(&self, r: f64) -> Result<RateResult> {
        let SupportBounds { lower, upper, .. } = self.bounds;
        if self.is_degenerate() {
            let common = 0.5 * (lower + upper);
            let hit = (r - common).abs() <= DEGENERACY_TOL;
            return Ok(RateResult {
                r,
                value: if hit { 0.0 } else { f64::INFINITY },
                lambda_star: None,
                minimizer: if hit { Some(self.expand_weights(self.reduced.weights.as_slice())?) } else { None },
                branch: Branch::Degenerate,
            });
        }
        if r.is_nan() {
            return Err(Error::InvalidParameter("r is NaN".into()));
        }
        if r < lower || r > upper {
            return Ok(RateResult { r, value: f64::INFINITY, lambda_star: None, minimizer: None, branch: Branch::Outside });
        }
        if r == lower {
            return self.boundary(r, Branch::LowerBoundary);
        }
        if r == upper {
            return self.boundary(r, Branch::UpperBoundary);
        }
        let psi = self.psi_values(r)?;
        // r within round-off of a bound: Ψ no longer changes sign
        if !psi.iter().any(|p| *p < 0.0) {
            return self.boundary(r, Branch::LowerBoundary);
        }
        if !psi.iter().any(|p| *p > 0.0) {
            return self.boundary(r, Branch::UpperBoundary);
        }
        let tilt = solve_tilt(&psi, self.reduced.weights.as_slice())?;
        Ok(RateResult {
            r,
            value: (-tilt.log_partition).max(0.0),
            lambda_star: Some(tilt.lambda),
            minimizer: Some(self.expand_weights(&tilt.weights)?),
            branch: Branch::Interior,
        })
    }

    /// Rate function over a grid of `r` values, evaluated in parallel.
    pub fn rate_curve(&self, rs: &[f64]) -> Vec<Result<RateResult>> {
        rs.par_iter().map(|&r| self.rate(r)).collect()
    }

    /// Two-component closed form for the interior rate.
    pub fn rate_closed_s2(&self, r: f64) -> Result<f64> {
        if self.reduced.components.len() != 2 {
            return Err(Error::InvalidParameter(format!(
                "two-component closed form needs s = 2, got {}",
                self.reduced.components.len()
            )));
        }
        if !self.is_interior(r) {
            return Err(Error::OutOfInterior { r, lower: self.bounds.lower, upper: self.bounds.upper });
        }
        let psi = self.psi_values(r)?;
        let pi = self.reduced.weights.as_slice();
        closed_form_s2(psi[0], psi[1], pi[0], pi[1])
            .ok_or(Error::OutOfInterior { r, lower: self.bounds.lower, upper: self.bounds.upper })
    }

    /// `H''(r₀) = (Σ πₕ Ψ'ₕ(r₀))² / Σ πₕ Ψₕ(r₀)²`.
    pub fn curvature(&self) -> Result<f64> {
        if self.is_degenerate() {
            return Err(Error::DegenerateProblem("all component roots coincide".into()));
        }
        let r0 = self.bounds.r0;
        let pi = &self.reduced.weights;
        let psi = self.psi_values(r0)?;
        let dpsi = self.reduced.components.iter().map(|l| self.rho.psi_prime(l, r0)).collect::<Result<Vec<_>>>()?;
        let num = pi.dot(&dpsi).powi(2);
        let var: f64 = pi.iter().zip(&psi).map(|(w, p)| w * p * p).sum();
        if var <= 0.0 {
            return Err(Error::DegenerateProblem("constraint values vanish at r₀".into()));
        }
        Ok(num / var)
    }

    /// `h_δ = inf{H(r) : |r − r₀| ≥ δ}`, taken as the smaller of `H(r₀ ± δ)`.
    pub fn decay_constant(&self, delta: f64) -> Result<f64> {
        if delta.is_nan() || delta <= 0.0 {
            return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
        }
        let r0 = self.bounds.r0;
        let left = self.rate(r0 - delta)?.value;
        let right = self.rate(r0 + delta)?.value;
        Ok(left.min(right))
    }
}

// −log Σₕ πₕ B^{Ψₕ/(Ψ₂−Ψ₁)} with B = −π₁Ψ₁/(π₂Ψ₂), in log space.
fn closed_form_s2(psi1: f64, psi2: f64, pi1: f64, pi2: f64) -> Option<f64> {
    if psi1.is_nan() || psi2.is_nan() || psi1 * psi2 >= 0.0 {
        return None;
    }
    let log_base = (-pi1 * psi1 / (pi2 * psi2)).ln();
    let d = psi2 - psi1;
    let terms = [pi1.ln() + log_base * psi1 / d, pi2.ln() + log_base * psi2 / d];
    Some(-log_sum_exp(&terms))
}

/// Closed form for three components with `Ψᵢ(r) = Ψ(r) + (i−1)a`.
///
/// `psi_at` is the first component's constraint function. The multiplier
/// enters only through `t = e^{−λa}`, the positive root of
/// `π₃(Ψ+2a)t² + π₂(Ψ+a)t + π₁Ψ = 0`.
pub fn rate_closed_s3_affine<F>(psi_at: F, a: f64, pi: &SimplexVector, r: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if pi.len() != 3 {
        return Err(Error::LengthMismatch(pi.len(), 3));
    }
    if a.is_nan() || a <= 0.0 {
        return Err(Error::InvalidParameter(format!("spacing a must be positive, got {a}")));
    }
    if pi.iter().any(|w| *w <= 0.0) {
        return Err(Error::InvalidParameter("three-component closed form needs all weights positive".into()));
    }
    let psi = psi_at(r);
    if !(psi < 0.0 && psi + 2.0 * a > 0.0) {
        return Err(Error::OutOfInterior { r, lower: f64::NAN, upper: f64::NAN });
    }
    let (p1, p2, p3) = (pi[0], pi[1], pi[2]);
    let qa = p3 * (psi + 2.0 * a);
    let qb = p2 * (psi + a);
    let qc = p1 * psi;
    let disc = qb * qb - 4.0 * qa * qc;
    debug_assert!(disc >= 0.0, "qa > 0 > qc forces a nonnegative discriminant");
    let sq = disc.max(0.0).sqrt();
    // same positive root, arranged to avoid cancellation
    let t = if qb >= 0.0 { 2.0 * qc / (-qb - sq) } else { (-qb + sq) / (2.0 * qa) };
    let log_t = t.ln();
    let terms: Vec<f64> = (0..3).map(|j| pi[j].ln() + log_t * (psi + j as f64 * a) / a).collect();
    Ok(-log_sum_exp(&terms))
}
