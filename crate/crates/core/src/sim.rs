//! Empirical weights, empirical risk and tail probabilities of the
//! estimation error `|ρ(Σ π̂ₙ(j) μⱼ) − r₀|`.
//!
//! Every replica draws from its own ChaCha stream keyed by `(seed, n)` with
//! the replica index as stream number, so estimates do not depend on how
//! replicas are spread over threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial as BinomialSampler, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, Discrete};

use crate::error::{Error, Result};
use crate::models::{log_sum_exp, Mixture};
use crate::output::format_real;
use crate::ratefn::RateProblem;
use crate::simplex::SimplexVector;

/// Slack on the deviation event so that lattice points at exactly `δ` count.
pub const DEVIATION_SLACK: f64 = 1e-12;

pub const CSV_HEADER: &str = "n,estimate,stderr,minus_log_p_over_n,h_delta_reference";

/// Relative frequencies of `n` categorical draws with law `pi`, sampled as
/// one multinomial via successive conditional binomials.
pub fn sample_weights<R: Rng + ?Sized>(pi: &SimplexVector, n: u64, rng: &mut R) -> Result<SimplexVector> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be at least 1".into()));
    }
    let s = pi.len();
    let mut counts = vec![0u64; s];
    let mut left = n;
    let mut mass = 1.0;
    for j in 0..s - 1 {
        if left == 0 {
            break;
        }
        let p = if mass > 0.0 { (pi[j] / mass).clamp(0.0, 1.0) } else { 0.0 };
        let k = if p >= 1.0 {
            left
        } else {
            BinomialSampler::new(left, p)
                .map_err(|e| Error::InvalidParameter(format!("binomial draw: {e}")))?
                .sample(rng)
        };
        counts[j] = k;
        left -= k;
        mass -= pi[j];
    }
    counts[s - 1] += left;
    SimplexVector::new(counts.iter().map(|&k| k as f64 / n as f64).collect())
        .or_else(|_| SimplexVector::normalized(counts.iter().map(|&k| k as f64).collect()))
}

/// `ρ(Σ p̂ⱼ μⱼ)` with `pihat` over the problem's positive-weight components.
pub fn empirical_risk(problem: &RateProblem, pihat: &SimplexVector) -> Result<f64> {
    if pihat.len() != problem.components().len() {
        return Err(Error::LengthMismatch(pihat.len(), problem.components().len()));
    }
    let mix = Mixture::new(problem.components().to_vec(), pihat.clone())?;
    problem.risk_measure().evaluate(&mix)
}

/// Random stream for one replica at sample size `n`.
pub fn replica_rng(seed: u64, n: u64, replica: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&n.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(replica);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMode {
    MonteCarlo,
    /// Exact binomial summation; two positive-weight components only.
    ExactBinomial,
}

#[derive(Debug, Clone)]
pub struct SimulationPlan {
    pub problem: RateProblem,
    pub delta: f64,
    pub n_grid: Vec<u64>,
    pub replicas: u64,
    pub seed: u64,
    pub mode: TailMode,
}

impl SimulationPlan {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(Error::InvalidParameter(format!("delta must be nonnegative, got {}", self.delta)));
        }
        if self.n_grid.is_empty() || self.n_grid[0] == 0 || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("n_grid must be positive and strictly increasing".into()));
        }
        if self.replicas == 0 {
            return Err(Error::InvalidParameter("replicas must be at least 1".into()));
        }
        if self.mode == TailMode::ExactBinomial && self.problem.components().len() != 2 {
            return Err(Error::InvalidParameter(format!(
                "exact binomial tails need two positive-weight components, got {}",
                self.problem.components().len()
            )));
        }
        Ok(())
    }

    fn deviates(&self, risk: f64) -> bool {
        (risk - self.problem.r_zero()).abs() >= self.delta - DEVIATION_SLACK
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate {
    pub estimate: f64,
    pub stderr: f64,
    /// `log estimate`, kept separately so exact tails far below `f64::MIN_POSITIVE` survive.
    pub log_estimate: f64,
}

/// `P(|ρ̂ₙ − r₀| ≥ δ)` by Monte Carlo or exact binomial summation.
pub fn tail_probability(plan: &SimulationPlan, n: u64) -> Result<TailEstimate> {
    plan.validate()?;
    match plan.mode {
        TailMode::MonteCarlo => monte_carlo_tail(plan, n),
        TailMode::ExactBinomial => exact_binomial_tail(plan, n),
    }
}

fn monte_carlo_tail(plan: &SimulationPlan, n: u64) -> Result<TailEstimate> {
    let pi = plan.problem.weights();
    let hits = (0..plan.replicas)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(plan.seed, n, i);
            let pihat = sample_weights(pi, n, &mut rng)?;
            Ok(plan.deviates(empirical_risk(&plan.problem, &pihat)?) as u64)
        })
        .collect::<Result<Vec<u64>>>()?
        .into_iter()
        .sum::<u64>();
    let p = hits as f64 / plan.replicas as f64;
    Ok(TailEstimate { estimate: p, stderr: (p * (1.0 - p) / plan.replicas as f64).sqrt(), log_estimate: p.ln() })
}

fn exact_binomial_tail(plan: &SimulationPlan, n: u64) -> Result<TailEstimate> {
    let p2 = plan.problem.weights()[1];
    let law = Binomial::new(p2, n).map_err(|e| Error::InvalidParameter(format!("binomial law: {e}")))?;
    let mut logs = Vec::new();
    for k in 0..=n {
        let second = k as f64 / n as f64;
        let pihat = SimplexVector::normalized(vec![(n - k) as f64, k as f64])?;
        debug_assert!((pihat[1] - second).abs() < 1e-15);
        if plan.deviates(empirical_risk(&plan.problem, &pihat)?) {
            logs.push(law.ln_pmf(k));
        }
    }
    let log_p = if logs.is_empty() { f64::NEG_INFINITY } else { log_sum_exp(&logs).min(0.0) };
    Ok(TailEstimate { estimate: log_p.exp(), stderr: 0.0, log_estimate: log_p })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayRow {
    pub n: u64,
    pub estimate: f64,
    pub stderr: f64,
    pub minus_log_p_over_n: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayEstimate {
    pub per_n: Vec<DecayRow>,
    /// `−log(p̂ₙ)/n` at the largest `n`.
    pub final_rate: f64,
    /// Slope of `−log p̂ₙ` against `n` by least squares with intercept;
    /// `None` with fewer than two sample sizes.
    pub regression_rate: Option<f64>,
    pub regression_intercept: Option<f64>,
    pub h_delta_reference: f64,
}

impl DecayEstimate {
    /// `final_rate / h_δ`.
    pub fn ratio(&self) -> f64 {
        self.final_rate / self.h_delta_reference
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in &self.per_n {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                row.n,
                format_real(row.estimate),
                format_real(row.stderr),
                format_real(row.minus_log_p_over_n),
                format_real(self.h_delta_reference)
            ));
        }
        out
    }
}

/// Tail probabilities over `n_grid` and their exponential decay rate.
pub fn decay_slope(plan: &SimulationPlan) -> Result<DecayEstimate> {
    plan.validate()?;
    let mut per_n = Vec::with_capacity(plan.n_grid.len());
    let mut points = Vec::with_capacity(plan.n_grid.len());
    for &n in &plan.n_grid {
        let t = tail_probability(plan, n)?;
        if t.estimate <= 0.0 && t.log_estimate == f64::NEG_INFINITY {
            return Err(Error::DegenerateData(format!("no deviations of size {} observed at n = {n}", plan.delta)));
        }
        let minus_log_p_over_n = -t.log_estimate / n as f64;
        points.push((n as f64, -t.log_estimate));
        per_n.push(DecayRow { n, estimate: t.estimate, stderr: t.stderr, minus_log_p_over_n });
    }
    let (regression_rate, regression_intercept) = match least_squares(&points) {
        Some((slope, intercept)) => (Some(slope), Some(intercept)),
        None => (None, None),
    };
    Ok(DecayEstimate {
        final_rate: per_n.last().map(|r| r.minus_log_p_over_n).unwrap_or(f64::NAN),
        per_n,
        regression_rate,
        regression_intercept,
        h_delta_reference: plan.problem.decay_constant(plan.delta.max(f64::MIN_POSITIVE))?,
    })
}

fn least_squares(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Law;
    use crate::riskmeasures::RiskMeasure;

    fn w(v: &[f64]) -> SimplexVector {
        SimplexVector::new(v.to_vec()).unwrap()
    }

    fn fixture_a() -> RateProblem {
        RateProblem::new(RiskMeasure::Mean, vec![Law::point_mass(0.0).unwrap(), Law::point_mass(1.0).unwrap()], w(&[0.5, 0.5]))
            .unwrap()
    }

    fn plan(mode: TailMode, delta: f64, n_grid: Vec<u64>, replicas: u64) -> SimulationPlan {
        SimulationPlan { problem: fixture_a(), delta, n_grid, replicas, seed: 7, mode }
    }

    // P(Bin(100, ½) ≤ 25 or ≥ 75) summed with exact integer binomials
    fn exact_two_sided_100() -> f64 {
        let mut c = 1f64;
        let mut total = 0.0;
        for k in 0..=100u32 {
            if k <= 25 || k >= 75 {
                total += c;
            }
            c = c * (100 - k) as f64 / (k + 1) as f64;
        }
        total / 2f64.powi(100)
    }

    #[test]
    fn sample_weights_examples() {
        let mut rng = replica_rng(1, 10, 0);
        assert_eq!(sample_weights(&w(&[1.0, 0.0]), 37, &mut rng).unwrap().as_slice(), &[1.0, 0.0]);
        for i in 0..20 {
            let mut rng = replica_rng(3, 1, i);
            let p = sample_weights(&w(&[0.2, 0.5, 0.3]), 1, &mut rng).unwrap();
            assert_eq!(p.iter().filter(|x| **x == 1.0).count(), 1);
        }
        let mut rng = replica_rng(5, 1_000_000, 0);
        let p = sample_weights(&w(&[0.5, 0.5]), 1_000_000, &mut rng).unwrap();
        assert!((p[0] - 0.5).abs() < 0.005);
    }

    #[test]
    fn sampling_is_reproducible() {
        let a = sample_weights(&w(&[0.2, 0.5, 0.3]), 500, &mut replica_rng(9, 500, 4)).unwrap();
        let b = sample_weights(&w(&[0.2, 0.5, 0.3]), 500, &mut replica_rng(9, 500, 4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empirical_risk_examples() {
        let a = fixture_a();
        assert_eq!(empirical_risk(&a, a.weights()).unwrap(), a.r_zero());
        assert_eq!(empirical_risk(&a, &w(&[0.75, 0.25])).unwrap(), 0.25);
        let b = RateProblem::new(
            RiskMeasure::Quantile { alpha: 0.95 },
            vec![Law::exponential(1.0).unwrap(), Law::exponential(2.0).unwrap()],
            w(&[0.3, 0.7]),
        )
        .unwrap();
        assert!((empirical_risk(&b, &w(&[1.0, 0.0])).unwrap() - 2.99573).abs() < 1e-5);
    }

    #[test]
    fn tail_probability_examples() {
        assert_eq!(tail_probability(&plan(TailMode::MonteCarlo, 0.0, vec![10], 200), 10).unwrap().estimate, 1.0);
        assert_eq!(tail_probability(&plan(TailMode::MonteCarlo, 1.5, vec![10], 200), 10).unwrap().estimate, 0.0);
        let exact = exact_two_sided_100();
        let mc = tail_probability(&plan(TailMode::MonteCarlo, 0.25, vec![100], 400_000), 100).unwrap();
        assert!((mc.estimate - exact).abs() <= 4.0 * mc.stderr, "{} vs {exact}", mc.estimate);
        let ex = tail_probability(&plan(TailMode::ExactBinomial, 0.25, vec![100], 1), 100).unwrap();
        assert!((ex.estimate - exact).abs() < 1e-15);
    }

    #[test]
    fn decay_slope_exact_values() {
        let d = decay_slope(&plan(TailMode::ExactBinomial, 0.25, vec![50, 100, 150, 200], 1)).unwrap();
        let want = [0.161847, 0.143889, 0.144553, 0.139031];
        for (row, v) in d.per_n.iter().zip(want) {
            assert!((row.minus_log_p_over_n - v).abs() < 1e-6, "{row:?}");
        }
        assert!((d.h_delta_reference - 0.13081203594113697).abs() < 1e-12);
        assert!((d.ratio() - 1.0).abs() <= 0.25);
        assert!(d.regression_rate.unwrap() > 0.0);
    }

    #[test]
    fn impossible_deviation_is_degenerate_data() {
        let e = decay_slope(&plan(TailMode::ExactBinomial, 0.6, vec![50, 100], 1)).unwrap_err();
        assert!(matches!(e, Error::DegenerateData(_)));
    }

    #[test]
    fn plan_validation() {
        assert!(plan(TailMode::MonteCarlo, 0.1, vec![10, 10], 5).validate().is_err());
        assert!(plan(TailMode::MonteCarlo, 0.1, vec![10], 0).validate().is_err());
        assert!(plan(TailMode::MonteCarlo, -0.1, vec![10], 5).validate().is_err());
    }

    #[test]
    fn csv_layout() {
        let d = decay_slope(&plan(TailMode::ExactBinomial, 0.25, vec![50], 1)).unwrap();
        let csv = d.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert!(lines.next().unwrap().starts_with("50,"));
    }
}
