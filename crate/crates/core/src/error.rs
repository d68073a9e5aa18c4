use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid simplex vector: {0}")]
    InvalidSimplex(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("unsupported law for this operation: {0}")]
    UnsupportedLaw(String),

    #[error("exponential moment diverges: theta = {theta} >= rate {rate}")]
    DivergentMoment { theta: f64, rate: f64 },

    #[error("unsupported risk measure / law combination: {0}")]
    UnsupportedCombination(String),

    #[error("constraint has no weight-linear form: {0}")]
    ConditionUnsupported(String),

    #[error("constraint function is not differentiable here: {0}")]
    NonDifferentiable(String),

    #[error("{what} did not converge within {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("no root bracket found for {0}")]
    NoBracket(&'static str),

    #[error("all weights vanish")]
    EmptySupport,

    #[error("r = {r} is not strictly inside ({lower}, {upper})")]
    OutOfInterior { r: f64, lower: f64, upper: f64 },

    #[error("r = {r} lies outside [{lower}, {upper}]")]
    OutOfSupport { r: f64, lower: f64, upper: f64 },

    #[error("consistency check failed: {0}")]
    Inconsistent(String),

    #[error("degenerate problem: {0}")]
    DegenerateProblem(String),

    #[error("grid oracle supports at most {max} components, got {got}")]
    TooManyComponents { got: usize, max: usize },

    #[error("degenerate data: {0}")]
    DegenerateData(String),
}

pub type Result<T> = std::result::Result<T, Error>;
