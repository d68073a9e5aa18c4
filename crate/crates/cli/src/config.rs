//! JSON problem configuration and flag overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};

use mixture_ldp::ratefn::RateProblem;
use mixture_ldp::riskmeasures::RiskMeasure;
use mixture_ldp::{Law, SimplexVector};

use crate::error::CliError;

pub const DEFAULT_POINTS: usize = 101;
pub const DEFAULT_ORACLE_POINTS: usize = 10;
pub const DEFAULT_RESOLUTION: usize = 200;
pub const DEFAULT_DELTA: f64 = 0.1;
pub const DEFAULT_REPLICAS: u64 = 10_000;
pub const DEFAULT_N_GRID: [u64; 4] = [50, 100, 150, 200];

/// Per-subcommand knobs. Unset fields fall back to command defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Simplex grid resolution `m` for the oracle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicas: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_binomial: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub risk_measure: RiskMeasure,
    pub components: Vec<Law>,
    pub weights: Vec<f64>,
    #[serde(default)]
    pub options: Options,
}

impl ProblemConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    fn validate(&self) -> Result<(), CliError> {
        self.weight_vector()?;
        if self.weights.len() != self.components.len() {
            return Err(CliError::Parse(format!(
                "{} weights for {} components",
                self.weights.len(),
                self.components.len()
            )));
        }
        if let Some(p) = self.options.points {
            if p < 2 {
                return Err(CliError::Parse(format!("points must be at least 2, got {p}")));
            }
        }
        if let Some(m) = self.options.resolution {
            if m < 1 {
                return Err(CliError::Parse("resolution must be at least 1".into()));
            }
        }
        if let (Some(lo), Some(hi)) = (self.options.r_min, self.options.r_max) {
            if lo.is_nan() || hi.is_nan() || lo >= hi {
                return Err(CliError::Parse(format!("r_min = {lo} must be below r_max = {hi}")));
            }
        }
        Ok(())
    }

    pub fn weight_vector(&self) -> Result<SimplexVector, CliError> {
        SimplexVector::new(self.weights.clone()).map_err(|e| CliError::Parse(e.to_string()))
    }

    /// Builds the rate problem; an unsupported constraint maps to exit code 3.
    pub fn problem(&self) -> Result<RateProblem, CliError> {
        RateProblem::new(self.risk_measure.clone(), self.components.clone(), self.weight_vector()?).map_err(CliError::from)
    }

    /// Applies flag values on top of the file's options and revalidates.
    pub fn with_overrides(mut self, flags: &Options) -> Result<Self, CliError> {
        let o = &mut self.options;
        macro_rules! take {
            ($($f:ident),*) => { $( if flags.$f.is_some() { o.$f = flags.$f.clone(); } )* };
        }
        take!(r_min, r_max, points, delta, resolution, n_grid, replicas, seed, exact_binomial);
        self.validate()?;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE_A: &str = r#"{
        "risk_measure": {"kind": "mean"},
        "components": [{"kind": "point_mass", "location": 0.0}, {"kind": "point_mass", "location": 1.0}],
        "weights": [0.5, 0.5],
        "options": {"points": 25}
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ProblemConfig::from_json(FIXTURE_A).unwrap();
        assert_eq!(cfg.options.points, Some(25));
        let again = ProblemConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn bad_weights_are_parse_errors() {
        let bad = FIXTURE_A.replace("[0.5, 0.5]", "[0.5, 0.6]");
        assert!(matches!(ProblemConfig::from_json(&bad), Err(CliError::Parse(_))));
        let short = FIXTURE_A.replace("[0.5, 0.5]", "[1.0]");
        assert!(matches!(ProblemConfig::from_json(&short), Err(CliError::Parse(_))));
        let few = FIXTURE_A.replace("\"points\": 25", "\"points\": 1");
        assert!(matches!(ProblemConfig::from_json(&few), Err(CliError::Parse(_))));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = FIXTURE_A.replace("\"points\"", "\"pointz\"");
        assert!(matches!(ProblemConfig::from_json(&bad), Err(CliError::Parse(_))));
    }

    #[test]
    fn overrides_win() {
        let cfg = ProblemConfig::from_json(FIXTURE_A).unwrap();
        let flags = Options { points: Some(7), seed: Some(3), ..Default::default() };
        let cfg = cfg.with_overrides(&flags).unwrap();
        assert_eq!((cfg.options.points, cfg.options.seed), (Some(7), Some(3)));
    }
}
