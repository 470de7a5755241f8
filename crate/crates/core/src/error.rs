use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure modes shared by every stage of the analysis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("transform undefined: {0}")]
    Domain(String),

    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("non-positive observation {value} for {series} at index {index}")]
    NonPositiveValue { series: String, index: usize, value: f64 },

    #[error("years must increase by exactly one: {prev} followed by {next}")]
    NonConsecutiveYears { prev: i32, next: i32 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("observed value at index {0} is zero")]
    ZeroObserved(usize),

    #[error("singular design matrix (condition number {cond:e})")]
    SingularDesign { cond: f64 },

    #[error("map denominator {value:e} is numerically zero at step {step}")]
    DenominatorNearZero { step: usize, value: f64 },

    #[error("state overflowed at step {step}")]
    Overflow { step: usize },

    #[error("invalid bounding box: {0}")]
    InvalidBBox(String),

    #[error("step size too large: local error estimate {estimate:e} at t = {t}")]
    StepTooLarge { t: f64, estimate: f64 },

    #[error("state left the first quadrant at t = {t}: ({x}, {y})")]
    NegativeState { t: f64, x: f64, y: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("baseline parameter {0} is exactly zero; its perturbation box collapses")]
    ZeroBaseline(&'static str),

    #[error("base sample size {0} must be a power of two >= 64")]
    InvalidN(usize),

    #[error("too many rejected samples: {retained} of {needed} required base rows retained")]
    TooManyRejections { retained: usize, needed: usize },
}
