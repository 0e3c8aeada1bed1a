use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operator is zero (no nonzero direction found)")]
    ZeroOperator,

    #[error(
        "operator norm estimate did not settle within {0} iterations; supply an explicit bound"
    )]
    NormNotConverged(usize),

    #[error("affine system is inconsistent (residual {0:.3e})")]
    InconsistentAffine(f64),

    #[error("{name} = {value} outside admissible range [{lo}, {hi}] at iteration {n}")]
    ScheduleOutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
        n: usize,
    },

    #[error("qualification condition could not be verified by a sufficient rule; supply a Slater point or acknowledge the override")]
    QualificationUnverified,

    #[error("grid minimizer lies on the search box boundary; widen the bounds and retry")]
    GridBoundary,

    #[error("oracle not applicable: {0}")]
    OracleNotApplicable(String),

    #[error("reference runs disagree: distance {distance:.3e} exceeds {limit:.3e}")]
    ScheduleDisagreement { distance: f64, limit: f64 },

    #[error("{0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
