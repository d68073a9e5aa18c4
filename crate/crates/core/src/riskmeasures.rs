//! Risk measures on laws and mixtures, and their weight-linear constraint
//! functions.
//!
//! For every supported measure the constraint `ρ(Σ pⱼ μⱼ) = r` is rewritten
//! as `Σ pⱼ Ψ(μⱼ, r) = 0` with each `Ψ(μⱼ, ·)` decreasing and vanishing at a
//! unique component root. The forms used:
//!
//! | measure | `Ψ(μ, r)` | root |
//! |---|---|---|
//! | mean | `E_μ[X] − r` | mean |
//! | ES (common α-quantile only) | `ES_α(μ) − r` | `ES_α(μ)` |
//! | quantile | `α − F_μ(r)` | `F_μ⁻¹(α)` |
//! | entropic | `e^{θρ(μ)} − e^{θr}` | `ρ(μ)` |
//! | shortfall | `∫ ℓ(x − r) μ(dx) − x₀` | solves `Ψ = 0` |
//!
//! All of these are decreasing in `r` as written, so no sign flip is needed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Law, Mixture};
use crate::roots::{bisect, expand_bracket, Monotone};

/// Two component α-quantiles closer than this count as equal.
pub const COMMON_QUANTILE_TOL: f64 = 1e-9;

const SHORTFALL_XTOL: f64 = 1e-13;
const SHORTFALL_MAX_ITER: usize = 400;

/// Reason reported when ES is requested over components with distinct α-quantiles.
pub const ES_COMMON_QUANTILE_REASON: &str = "ES requires common α-quantile";

/// Convex nondecreasing loss `ℓ` for shortfall risk measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LossRepr", into = "LossRepr")]
pub enum LossFunction {
    /// `ℓ(x) = e^{θx}`.
    Exponential { theta: f64 },
    /// `ℓ(x) = s₀x + Σᵢ (sᵢ₊₁ − sᵢ)(x − kᵢ)⁺`, slope `sᵢ` left of knot `kᵢ`
    /// and `s_m` right of the last knot.
    PiecewiseLinear { knots: Vec<f64>, slopes: Vec<f64> },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum LossRepr {
    Exponential { theta: f64 },
    PiecewiseLinear { knots: Vec<f64>, slopes: Vec<f64> },
}

impl TryFrom<LossRepr> for LossFunction {
    type Error = Error;

    fn try_from(r: LossRepr) -> Result<Self> {
        match r {
            LossRepr::Exponential { theta } => LossFunction::exponential(theta),
            LossRepr::PiecewiseLinear { knots, slopes } => LossFunction::piecewise_linear(knots, slopes),
        }
    }
}

impl From<LossFunction> for LossRepr {
    fn from(l: LossFunction) -> Self {
        match l {
            LossFunction::Exponential { theta } => LossRepr::Exponential { theta },
            LossFunction::PiecewiseLinear { knots, slopes } => LossRepr::PiecewiseLinear { knots, slopes },
        }
    }
}

impl LossFunction {
    pub fn exponential(theta: f64) -> Result<Self> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(Error::InvalidParameter(format!("loss theta must be positive, got {theta}")));
        }
        Ok(LossFunction::Exponential { theta })
    }

    pub fn piecewise_linear(knots: Vec<f64>, slopes: Vec<f64>) -> Result<Self> {
        if slopes.len() != knots.len() + 1 {
            return Err(Error::InvalidParameter(format!(
                "piecewise loss needs one more slope than knots ({} knots, {} slopes)",
                knots.len(),
                slopes.len()
            )));
        }
        if knots.iter().chain(&slopes).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("piecewise loss parameters must be finite".into()));
        }
        if knots.windows(2).any(|k| k[0] >= k[1]) {
            return Err(Error::InvalidParameter("knots must be strictly increasing".into()));
        }
        if slopes[0] < 0.0 || slopes.windows(2).any(|s| s[0] > s[1]) {
            return Err(Error::InvalidParameter("slopes must be nonnegative and nondecreasing".into()));
        }
        if slopes[slopes.len() - 1] <= 0.0 {
            return Err(Error::InvalidParameter("loss must not be constant".into()));
        }
        Ok(LossFunction::PiecewiseLinear { knots, slopes })
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            LossFunction::Exponential { theta } => (theta * x).exp(),
            LossFunction::PiecewiseLinear { knots, slopes } => {
                slopes[0] * x
                    + knots.iter().enumerate().map(|(i, k)| (slopes[i + 1] - slopes[i]) * (x - k).max(0.0)).sum::<f64>()
            }
        }
    }

    /// Derivative, or `None` at a kink.
    pub fn derivative(&self, x: f64) -> Option<f64> {
        match self {
            LossFunction::Exponential { theta } => Some(theta * (theta * x).exp()),
            LossFunction::PiecewiseLinear { knots, slopes } => {
                if knots.contains(&x) {
                    return None;
                }
                Some(slopes[knots.iter().filter(|k| **k < x).count()])
            }
        }
    }

    /// Infimum of `ℓ` over the real line.
    pub fn infimum(&self) -> f64 {
        match self {
            LossFunction::Exponential { .. } => 0.0,
            LossFunction::PiecewiseLinear { slopes, .. } => {
                if slopes[0] > 0.0 {
                    f64::NEG_INFINITY
                } else {
                    0.0
                }
            }
        }
    }
}

/// Which risk measure is in force.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RiskRepr", into = "RiskRepr")]
pub enum RiskMeasure {
    Mean,
    Quantile { alpha: f64 },
    ExpectedShortfall { alpha: f64 },
    Shortfall { loss: LossFunction, threshold: f64 },
    Entropic { theta: f64 },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RiskRepr {
    Mean,
    Quantile { alpha: f64 },
    ExpectedShortfall { alpha: f64 },
    Shortfall { loss: LossFunction, threshold: f64 },
    Entropic { theta: f64 },
}

impl TryFrom<RiskRepr> for RiskMeasure {
    type Error = Error;

    fn try_from(r: RiskRepr) -> Result<Self> {
        let rho = match r {
            RiskRepr::Mean => RiskMeasure::Mean,
            RiskRepr::Quantile { alpha } => RiskMeasure::Quantile { alpha },
            RiskRepr::ExpectedShortfall { alpha } => RiskMeasure::ExpectedShortfall { alpha },
            RiskRepr::Shortfall { loss, threshold } => RiskMeasure::Shortfall { loss, threshold },
            RiskRepr::Entropic { theta } => RiskMeasure::Entropic { theta },
        };
        rho.validate()?;
        Ok(rho)
    }
}

impl From<RiskMeasure> for RiskRepr {
    fn from(r: RiskMeasure) -> Self {
        match r {
            RiskMeasure::Mean => RiskRepr::Mean,
            RiskMeasure::Quantile { alpha } => RiskRepr::Quantile { alpha },
            RiskMeasure::ExpectedShortfall { alpha } => RiskRepr::ExpectedShortfall { alpha },
            RiskMeasure::Shortfall { loss, threshold } => RiskRepr::Shortfall { loss, threshold },
            RiskMeasure::Entropic { theta } => RiskRepr::Entropic { theta },
        }
    }
}

/// Which weight-linear constraint form applies, if any.
#[derive(Debug, Clone, PartialEq)]
pub enum ConditionClass {
    SupportedLinear,
    SupportedQuantile,
    SupportedEntropic,
    SupportedShortfall,
    Unsupported(String),
}

impl ConditionClass {
    pub fn is_supported(&self) -> bool {
        !matches!(self, ConditionClass::Unsupported(_))
    }
}

/// Constraint values `Ψ(μⱼ, r)` at one `r`, with the component roots.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiProfile {
    pub r: f64,
    pub values: Vec<f64>,
    pub roots: Vec<f64>,
}

impl RiskMeasure {
    pub fn validate(&self) -> Result<()> {
        let level_ok = |a: f64| a > 0.0 && a < 1.0;
        match self {
            RiskMeasure::Mean => Ok(()),
            RiskMeasure::Quantile { alpha } | RiskMeasure::ExpectedShortfall { alpha } if !level_ok(*alpha) => {
                Err(Error::InvalidParameter(format!("level alpha = {alpha} not in (0,1)")))
            }
            RiskMeasure::Entropic { theta } if !(theta.is_finite() && *theta > 0.0) => {
                Err(Error::InvalidParameter(format!("entropic theta must be positive, got {theta}")))
            }
            RiskMeasure::Shortfall { loss, threshold } => {
                if !threshold.is_finite() || *threshold <= loss.infimum() {
                    Err(Error::InvalidParameter(format!(
                        "threshold {threshold} is not an interior point of the loss range"
                    )))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            RiskMeasure::Mean => "mean".into(),
            RiskMeasure::Quantile { alpha } => format!("quantile({alpha})"),
            RiskMeasure::ExpectedShortfall { alpha } => format!("expected_shortfall({alpha})"),
            RiskMeasure::Shortfall { threshold, .. } => format!("shortfall(x0={threshold})"),
            RiskMeasure::Entropic { theta } => format!("entropic({theta})"),
        }
    }

    /// Classifies which constraint form is valid for these components.
    pub fn check_condition(&self, components: &[Law]) -> ConditionClass {
        match self {
            RiskMeasure::Mean => ConditionClass::SupportedLinear,
            RiskMeasure::ExpectedShortfall { alpha } => {
                let qs: Vec<f64> = match components.iter().map(|l| l.quantile(*alpha)).collect() {
                    Ok(q) => q,
                    Err(e) => return ConditionClass::Unsupported(e.to_string()),
                };
                let lo = qs.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = qs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if hi - lo <= COMMON_QUANTILE_TOL {
                    ConditionClass::SupportedLinear
                } else {
                    ConditionClass::Unsupported(ES_COMMON_QUANTILE_REASON.into())
                }
            }
            RiskMeasure::Quantile { .. } => {
                let all_exp = components.iter().all(|l| matches!(l, Law::Exponential { .. }));
                let all_gauss = components.iter().all(|l| matches!(l, Law::Gaussian { .. }));
                if all_exp || all_gauss {
                    ConditionClass::SupportedQuantile
                } else {
                    ConditionClass::Unsupported(
                        "quantile requires continuous strictly increasing distribution functions on a common interval"
                            .into(),
                    )
                }
            }
            RiskMeasure::Entropic { theta } => match components.iter().try_for_each(|l| l.log_exp_moment(*theta).map(|_| ())) {
                Ok(()) => ConditionClass::SupportedEntropic,
                Err(e) => ConditionClass::Unsupported(format!("entropic risk needs finite exponential moments: {e}")),
            },
            RiskMeasure::Shortfall { loss, .. } => match loss {
                LossFunction::Exponential { theta } => {
                    match components.iter().try_for_each(|l| l.log_exp_moment(*theta).map(|_| ())) {
                        Ok(()) => ConditionClass::SupportedShortfall,
                        Err(e) => ConditionClass::Unsupported(format!("shortfall loss not integrable: {e}")),
                    }
                }
                LossFunction::PiecewiseLinear { .. } => {
                    if components.iter().all(|l| l.atoms().is_some()) {
                        ConditionClass::SupportedShortfall
                    } else {
                        ConditionClass::Unsupported("piecewise-linear shortfall is only evaluated on atomic laws".into())
                    }
                }
            },
        }
    }

    /// `ρ` evaluated on a mixture.
    pub fn evaluate(&self, mix: &Mixture) -> Result<f64> {
        let unsupported = |e: Error| Error::UnsupportedCombination(format!("{} on this mixture: {e}", self.name()));
        match self {
            RiskMeasure::Mean => Ok(mix.mean()),
            RiskMeasure::Quantile { alpha } => mix.quantile(*alpha).map_err(unsupported),
            RiskMeasure::ExpectedShortfall { alpha } => {
                let q = if mix.components().iter().all(Law::is_continuous) {
                    mix.quantile(*alpha)?
                } else {
                    // atoms: only the common-quantile case has a well-defined tail point
                    match self.check_condition(mix.components()) {
                        ConditionClass::SupportedLinear => mix.components()[0].quantile(*alpha)?,
                        _ => {
                            return Err(Error::UnsupportedCombination(
                                "ES on atom-bearing components requires a common α-quantile".into(),
                            ))
                        }
                    }
                };
                Ok(mix.partial_expectation(q) / (1.0 - alpha))
            }
            RiskMeasure::Entropic { theta } => Ok(mix.log_exp_moment(*theta).map_err(unsupported)? / theta),
            RiskMeasure::Shortfall { loss, threshold } => match loss {
                LossFunction::Exponential { theta } => {
                    Ok((mix.log_exp_moment(*theta).map_err(unsupported)? - threshold.ln()) / theta)
                }
                LossFunction::PiecewiseLinear { .. } => {
                    let mut atoms = Vec::new();
                    for (l, w) in mix.components().iter().zip(mix.weights().iter()) {
                        let a = l.atoms().ok_or_else(|| {
                            Error::UnsupportedCombination(format!(
                                "piecewise-linear shortfall on {} component",
                                l.kind_name()
                            ))
                        })?;
                        atoms.extend(a.into_iter().filter(|(_, q)| *q > 0.0).map(|(x, q)| (x, w * q)));
                    }
                    shortfall_root(loss, *threshold, &atoms)
                }
            },
        }
    }

    /// `ρ(μ)` for a single law.
    pub fn evaluate_law(&self, law: &Law) -> Result<f64> {
        let mix = Mixture::new(vec![law.clone()], crate::SimplexVector::uniform(1)?)?;
        self.evaluate(&mix)
    }

    /// `Ψ(μ, r)`.
    ///
    /// For ES this is the linear form and is only meaningful when the caller
    /// has established a common α-quantile across components.
    pub fn psi(&self, law: &Law, r: f64) -> Result<f64> {
        match self {
            RiskMeasure::Mean => Ok(law.mean() - r),
            RiskMeasure::ExpectedShortfall { .. } => Ok(self.evaluate_law(law)? - r),
            RiskMeasure::Quantile { alpha } => {
                if !law.is_continuous() {
                    return Err(Error::ConditionUnsupported(format!("quantile on {} law", law.kind_name())));
                }
                Ok(alpha - law.cdf(r))
            }
            RiskMeasure::Entropic { theta } => {
                Ok(law.exp_moment(*theta).map_err(|e| Error::ConditionUnsupported(e.to_string()))? - (theta * r).exp())
            }
            RiskMeasure::Shortfall { loss, threshold } => Ok(expected_loss(loss, law, r)? - threshold),
        }
    }

    /// `dΨ(μ, r)/dr`.
    pub fn psi_prime(&self, law: &Law, r: f64) -> Result<f64> {
        match self {
            RiskMeasure::Mean | RiskMeasure::ExpectedShortfall { .. } => Ok(-1.0),
            RiskMeasure::Quantile { .. } => match law.density(r) {
                Ok(f) => Ok(-f),
                Err(_) => Err(Error::NonDifferentiable(format!("{} law has atoms", law.kind_name()))),
            },
            RiskMeasure::Entropic { theta } => Ok(-theta * (theta * r).exp()),
            RiskMeasure::Shortfall { loss, .. } => match loss {
                LossFunction::Exponential { theta } => {
                    let lm = law.log_exp_moment(*theta).map_err(|e| Error::ConditionUnsupported(e.to_string()))?;
                    Ok(-theta * (lm - theta * r).exp())
                }
                LossFunction::PiecewiseLinear { .. } => {
                    let atoms = law.atoms().ok_or_else(|| {
                        Error::ConditionUnsupported(format!("piecewise-linear shortfall on {} law", law.kind_name()))
                    })?;
                    let mut d = 0.0;
                    for (x, q) in atoms {
                        let slope = loss
                            .derivative(x - r)
                            .ok_or_else(|| Error::NonDifferentiable(format!("atom {x} sits on a loss kink at r = {r}")))?;
                        d -= q * slope;
                    }
                    Ok(d)
                }
            },
        }
    }

    /// The unique `r` with `Ψ(μ, r) = 0`.
    pub fn component_root(&self, law: &Law) -> Result<f64> {
        match self {
            RiskMeasure::Quantile { alpha } => {
                if !law.is_continuous() {
                    return Err(Error::ConditionUnsupported(format!("quantile on {} law", law.kind_name())));
                }
                law.quantile(*alpha)
            }
            RiskMeasure::Entropic { .. } | RiskMeasure::Shortfall { .. } => {
                self.evaluate_law(law).map_err(|e| Error::ConditionUnsupported(e.to_string()))
            }
            _ => self.evaluate_law(law),
        }
    }
}

/// `∫ ℓ(x − m) μ(dx)`.
pub fn expected_loss(loss: &LossFunction, law: &Law, m: f64) -> Result<f64> {
    match loss {
        LossFunction::Exponential { theta } => {
            let lm = law.log_exp_moment(*theta).map_err(|e| Error::ConditionUnsupported(e.to_string()))?;
            Ok((lm - theta * m).exp())
        }
        LossFunction::PiecewiseLinear { .. } => {
            let atoms = law.atoms().ok_or_else(|| {
                Error::ConditionUnsupported(format!("piecewise-linear shortfall on {} law", law.kind_name()))
            })?;
            Ok(atoms.iter().map(|(x, q)| q * loss.value(x - m)).sum())
        }
    }
}

// Solves Σ w ℓ(x − m) = x₀ over weighted atoms; the left side is nonincreasing in m.
fn shortfall_root(loss: &LossFunction, threshold: f64, atoms: &[(f64, f64)]) -> Result<f64> {
    let g = |m: f64| atoms.iter().map(|(x, w)| w * loss.value(x - m)).sum::<f64>() - threshold;
    let lo = atoms.iter().map(|a| a.0).fold(f64::INFINITY, f64::min) - 1.0;
    let hi = atoms.iter().map(|a| a.0).fold(f64::NEG_INFINITY, f64::max) + 1.0;
    let (a, b) = expand_bracket(g, lo, hi, Monotone::Decreasing, 1e12, "shortfall equation")?;
    bisect(g, a, b, Monotone::Decreasing, SHORTFALL_XTOL * (1.0 + a.abs().max(b.abs())), SHORTFALL_MAX_ITER)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::SimplexVector;

    fn w(v: &[f64]) -> SimplexVector {
        SimplexVector::new(v.to_vec()).unwrap()
    }

    fn dirac(c: f64) -> Law {
        Law::point_mass(c).unwrap()
    }

    fn exp(rate: f64) -> Law {
        Law::exponential(rate).unwrap()
    }

    fn q95() -> RiskMeasure {
        RiskMeasure::Quantile { alpha: 0.95 }
    }

    #[test]
    fn json_schema() {
        let r: RiskMeasure = serde_json::from_str(r#"{"kind":"quantile","alpha":0.95}"#).unwrap();
        assert_eq!(r, q95());
        let r: RiskMeasure = serde_json::from_str(r#"{"kind":"entropic","theta":1.0}"#).unwrap();
        assert_eq!(r, RiskMeasure::Entropic { theta: 1.0 });
        let r: RiskMeasure = serde_json::from_str(r#"{"kind":"mean"}"#).unwrap();
        assert_eq!(r, RiskMeasure::Mean);
        let r: RiskMeasure = serde_json::from_str(
            r#"{"kind":"shortfall","loss":{"kind":"piecewise_linear","knots":[0.0],"slopes":[0.0,1.0]},"threshold":0.5}"#,
        )
        .unwrap();
        assert!(matches!(r, RiskMeasure::Shortfall { .. }));
        assert!(serde_json::from_str::<RiskMeasure>(r#"{"kind":"quantile","alpha":1.5}"#).is_err());
        assert!(serde_json::from_str::<RiskMeasure>(r#"{"kind":"entropic","theta":0}"#).is_err());
        assert!(serde_json::from_str::<RiskMeasure>(
            r#"{"kind":"shortfall","loss":{"kind":"exponential","theta":1},"threshold":0}"#
        )
        .is_err());
    }

    #[test]
    fn loss_validation() {
        assert!(LossFunction::piecewise_linear(vec![0.0], vec![1.0, 0.5]).is_err());
        assert!(LossFunction::piecewise_linear(vec![0.0], vec![0.0, 0.0]).is_err());
        assert!(LossFunction::piecewise_linear(vec![1.0, 0.0], vec![0.0, 1.0, 2.0]).is_err());
        let l = LossFunction::piecewise_linear(vec![0.0, 1.0], vec![0.0, 1.0, 3.0]).unwrap();
        assert_eq!(l.value(-2.0), 0.0);
        assert_eq!(l.value(0.5), 0.5);
        assert_eq!(l.value(2.0), 4.0);
        assert_eq!(l.derivative(1.0), None);
        assert_eq!(l.derivative(1.5), Some(3.0));
    }

    #[test]
    fn loss_is_convex_nondecreasing_on_grid() {
        let losses = [
            LossFunction::exponential(0.7).unwrap(),
            LossFunction::piecewise_linear(vec![-1.0, 0.0, 2.0], vec![0.0, 0.5, 1.0, 4.0]).unwrap(),
        ];
        for l in &losses {
            let xs: Vec<f64> = (0..400).map(|i| -5.0 + 0.025 * i as f64).collect();
            for t in xs.windows(3) {
                let (a, b, c) = (l.value(t[0]), l.value(t[1]), l.value(t[2]));
                assert!(a <= b + 1e-12 && b <= c + 1e-12);
                assert!(b <= 0.5 * (a + c) + 1e-12);
            }
            assert!(l.value(5.0) > l.value(-5.0));
        }
    }

    #[test]
    fn evaluate_examples() {
        let m = Mixture::new(vec![dirac(0.0), dirac(1.0)], w(&[0.5, 0.5])).unwrap();
        assert_eq!(RiskMeasure::Mean.evaluate(&m).unwrap(), 0.5);
        let e = RiskMeasure::Entropic { theta: 1.0 }.evaluate(&m).unwrap();
        assert!((e - 0.62011).abs() < 1e-5);
        assert!((e - ((1.0 + std::f64::consts::E) / 2.0).ln()).abs() < 1e-14);
        let b = Mixture::new(vec![exp(1.0), exp(2.0)], w(&[0.3, 0.7])).unwrap();
        assert!((q95().evaluate(&b).unwrap() - 2.053589).abs() < 1e-5);
        let bad = Mixture::new(vec![dirac(0.0), exp(1.0)], w(&[0.5, 0.5])).unwrap();
        assert!(matches!(q95().evaluate(&bad), Err(Error::UnsupportedCombination(_))));
    }

    #[test]
    fn psi_examples() {
        assert_eq!(RiskMeasure::Mean.psi(&dirac(1.0), 0.5).unwrap(), 0.5);
        let v = q95().psi(&exp(1.0), 2.05362).unwrap();
        assert!((v - 0.078274).abs() < 1e-5);
        let v = RiskMeasure::Entropic { theta: 1.0 }.psi(&dirac(0.0), 0.62011).unwrap();
        assert!((v + 0.85914).abs() < 1e-4);
        assert!(matches!(q95().psi(&dirac(0.0), 1.0), Err(Error::ConditionUnsupported(_))));
    }

    #[test]
    fn psi_prime_examples() {
        assert_eq!(RiskMeasure::Mean.psi_prime(&exp(3.0), 7.0).unwrap(), -1.0);
        let d = q95().psi_prime(&exp(2.0), 1.0).unwrap();
        assert!((d + 2.0 * (-2.0f64).exp()).abs() < 1e-12);
        assert!((d + 0.27067).abs() < 1e-5);
        assert_eq!(RiskMeasure::Entropic { theta: 1.0 }.psi_prime(&dirac(4.0), 0.0).unwrap(), -1.0);
        assert!(matches!(q95().psi_prime(&dirac(0.0), 1.0), Err(Error::NonDifferentiable(_))));
    }

    #[test]
    fn component_root_examples() {
        let r = q95().component_root(&exp(2.0)).unwrap();
        assert!((r - 1.49787).abs() < 1e-5);
        assert!((r + 0.05f64.ln() / 2.0).abs() < 1e-14);
        assert_eq!(RiskMeasure::Mean.component_root(&dirac(-3.25)).unwrap(), -3.25);
        let r = RiskMeasure::Entropic { theta: 1.0 }.component_root(&dirac(1.0)).unwrap();
        assert!((r - 1.0).abs() < 1e-15);
    }

    #[test]
    fn check_condition_examples() {
        let gauss = |s: f64| Law::gaussian(0.0, s).unwrap();
        assert_eq!(RiskMeasure::Mean.check_condition(&[exp(1.0), dirac(3.0)]), ConditionClass::SupportedLinear);
        assert_eq!(
            RiskMeasure::ExpectedShortfall { alpha: 0.95 }.check_condition(&[exp(1.0), exp(2.0)]),
            ConditionClass::Unsupported(ES_COMMON_QUANTILE_REASON.into())
        );
        assert_eq!(
            RiskMeasure::ExpectedShortfall { alpha: 0.5 }.check_condition(&[gauss(1.0), gauss(2.0)]),
            ConditionClass::SupportedLinear
        );
        assert_eq!(q95().check_condition(&[exp(1.0), exp(2.0)]), ConditionClass::SupportedQuantile);
        assert!(!q95().check_condition(&[exp(1.0), gauss(1.0)]).is_supported());
        assert!(!q95().check_condition(&[dirac(1.0)]).is_supported());
        assert!(!RiskMeasure::Entropic { theta: 2.0 }.check_condition(&[exp(1.0)]).is_supported());
        assert_eq!(
            RiskMeasure::Entropic { theta: 0.5 }.check_condition(&[exp(1.0), gauss(3.0)]),
            ConditionClass::SupportedEntropic
        );
    }

    fn supported_cases() -> Vec<(RiskMeasure, Law)> {
        let pl = LossFunction::piecewise_linear(vec![0.0], vec![0.2, 1.0]).unwrap();
        vec![
            (RiskMeasure::Mean, Law::gaussian(1.0, 2.0).unwrap()),
            (q95(), exp(1.3)),
            (RiskMeasure::Quantile { alpha: 0.3 }, Law::gaussian(-1.0, 0.5).unwrap()),
            (RiskMeasure::ExpectedShortfall { alpha: 0.9 }, exp(2.0)),
            (RiskMeasure::Entropic { theta: 0.8 }, Law::finite_discrete(vec![0.0, 2.0], w(&[0.6, 0.4])).unwrap()),
            (RiskMeasure::Entropic { theta: 0.5 }, exp(1.0)),
            (
                RiskMeasure::Shortfall { loss: LossFunction::exponential(1.0).unwrap(), threshold: 2.0 },
                Law::gaussian(0.0, 1.0).unwrap(),
            ),
            (
                RiskMeasure::Shortfall { loss: pl, threshold: 0.7 },
                Law::finite_discrete(vec![-1.0, 0.5, 3.0], w(&[0.3, 0.3, 0.4])).unwrap(),
            ),
        ]
    }

    #[test]
    fn psi_is_strictly_decreasing_and_vanishes_at_root() {
        for (rho, law) in supported_cases() {
            let r0 = rho.component_root(&law).unwrap();
            assert!(rho.psi(&law, r0).unwrap().abs() < 1e-8, "{rho:?} {law:?}");
            let grid: Vec<f64> = (0..=200).map(|i| r0 - 1.0 + 0.01 * i as f64).collect();
            for pair in grid.windows(2) {
                assert!(rho.psi(&law, pair[0]).unwrap() > rho.psi(&law, pair[1]).unwrap(), "{rho:?} at {pair:?}");
            }
        }
    }

    #[test]
    fn psi_prime_matches_central_differences() {
        let h = 1e-6;
        for (rho, law) in supported_cases() {
            let r0 = rho.component_root(&law).unwrap();
            for r in [r0 - 0.37, r0, r0 + 0.41] {
                let Ok(d) = rho.psi_prime(&law, r) else { continue };
                let fd = (rho.psi(&law, r + h).unwrap() - rho.psi(&law, r - h).unwrap()) / (2.0 * h);
                assert!((d - fd).abs() <= 1e-4 * d.abs().max(1e-12), "{rho:?} r={r}: {d} vs {fd}");
            }
        }
    }

    #[test]
    fn mixture_evaluation_satisfies_the_linear_constraint() {
        let p = w(&[0.15, 0.25, 0.6]);
        // linear kinds
        let comps = vec![exp(1.0), Law::gaussian(2.0, 1.0).unwrap(), dirac(-1.0)];
        let m = Mixture::new(comps.clone(), p.clone()).unwrap();
        let direct: f64 = comps.iter().zip(p.iter()).map(|(l, w)| w * RiskMeasure::Mean.evaluate_law(l).unwrap()).sum();
        assert!((RiskMeasure::Mean.evaluate(&m).unwrap() - direct).abs() < 1e-10);
        // quantile kind
        let comps = vec![exp(1.0), exp(2.0), exp(0.5)];
        let m = Mixture::new(comps.clone(), p.clone()).unwrap();
        let q = q95().evaluate(&m).unwrap();
        let f: f64 = comps.iter().zip(p.iter()).map(|(l, w)| w * l.cdf(q)).sum();
        assert!((f - 0.95).abs() < 1e-8);
        // entropic kind
        let theta = 0.4;
        let rho = RiskMeasure::Entropic { theta };
        let comps = vec![exp(1.0), Law::gaussian(2.0, 1.0).unwrap(), dirac(-1.0)];
        let m = Mixture::new(comps.clone(), p.clone()).unwrap();
        let lhs = (theta * rho.evaluate(&m).unwrap()).exp();
        let rhs: f64 = comps.iter().zip(p.iter()).map(|(l, w)| w * (theta * rho.evaluate_law(l).unwrap()).exp()).sum();
        assert!((lhs - rhs).abs() < 1e-8);
    }

    #[test]
    fn shared_component_value_is_inherited_by_mixtures() {
        // every component has mean 2 / ES_0.5 equal / entropic value equal
        let comps = vec![dirac(2.0), Law::gaussian(2.0, 3.0).unwrap(), Law::finite_discrete(vec![1.0, 3.0], w(&[0.5, 0.5])).unwrap()];
        for p in [[0.2, 0.3, 0.5], [0.9, 0.05, 0.05], [0.0, 0.5, 0.5]] {
            let m = Mixture::new(comps.clone(), w(&p)).unwrap();
            assert!((RiskMeasure::Mean.evaluate(&m).unwrap() - 2.0).abs() < 1e-12);
        }
        let gs = vec![Law::gaussian(0.0, 1.0).unwrap(), Law::gaussian(1.0, 1.0).unwrap()];
        let rho = RiskMeasure::Quantile { alpha: 0.5 };
        let same = vec![Law::gaussian(1.0, 1.0).unwrap(), Law::gaussian(1.0, 4.0).unwrap()];
        for p in [[0.3, 0.7], [0.8, 0.2]] {
            let m = Mixture::new(same.clone(), w(&p)).unwrap();
            assert!((rho.evaluate(&m).unwrap() - 1.0).abs() < 1e-9);
        }
        let m = Mixture::new(gs, w(&[0.5, 0.5])).unwrap();
        assert!((rho.evaluate(&m).unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn exponential_shortfall_with_unit_threshold_is_entropic() {
        let comps = vec![exp(2.0), Law::gaussian(0.5, 0.4).unwrap()];
        let m = Mixture::new(comps, w(&[0.4, 0.6])).unwrap();
        let sf = RiskMeasure::Shortfall { loss: LossFunction::exponential(0.7).unwrap(), threshold: 1.0 };
        let en = RiskMeasure::Entropic { theta: 0.7 };
        assert!((sf.evaluate(&m).unwrap() - en.evaluate(&m).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn piecewise_shortfall_solves_its_equation() {
        let loss = LossFunction::piecewise_linear(vec![0.0], vec![0.0, 1.0]).unwrap();
        let rho = RiskMeasure::Shortfall { loss: loss.clone(), threshold: 0.25 };
        let m = Mixture::new(vec![dirac(0.0), dirac(1.0)], w(&[0.5, 0.5])).unwrap();
        // E[(X − m)⁺] = 0.5(1 − m) for m in [0,1] → m = 0.5
        let v = rho.evaluate(&m).unwrap();
        assert!((v - 0.5).abs() < 1e-10);
        let unsupported = Mixture::new(vec![exp(1.0)], w(&[1.0])).unwrap();
        assert!(matches!(rho.evaluate(&unsupported), Err(Error::UnsupportedCombination(_))));
    }

    #[test]
    fn es_common_quantile_is_linear() {
        let comps = vec![Law::gaussian(0.0, 1.0).unwrap(), Law::gaussian(0.0, 2.0).unwrap()];
        let es = RiskMeasure::ExpectedShortfall { alpha: 0.5 };
        let r1 = es.component_root(&comps[0]).unwrap();
        let r2 = es.component_root(&comps[1]).unwrap();
        let s2pi = (2.0 * std::f64::consts::PI).sqrt();
        assert!((r1 - 2.0 / s2pi).abs() < 1e-12);
        assert!((r2 - 4.0 / s2pi).abs() < 1e-12);
        let m = Mixture::new(comps, w(&[0.3, 0.7])).unwrap();
        assert!((es.evaluate(&m).unwrap() - (0.3 * r1 + 0.7 * r2)).abs() < 1e-9);
    }
}
