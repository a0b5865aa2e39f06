use thiserror::Error;

/// Errors raised by estimation, testing and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("design matrix is rank deficient (rank {rank} of {cols} columns)")]
    RankDeficient { rank: usize, cols: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("insufficient data: need more than {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("lag order must be at least 1")]
    InsufficientLags,

    #[error("simulated path exploded at step {step} (|y| > {bound:e})")]
    Explosive { step: usize, bound: f64 },

    #[error("degenerate auxiliary design: {0}")]
    DegenerateDesign(String),

    #[error("null model did not converge; pass allow_unconverged to test it anyway")]
    NotFitted,

    #[error("no threshold candidate leaves every regime with at least {min_obs} observations")]
    EmptyRegime { min_obs: usize },

    #[error("restricted residual cross-product matrix is singular")]
    SingularRss,

    #[error("unsupported experiment design: {0}")]
    UnsupportedDesign(String),

    #[error("{failed} of {reps} replications failed (limit is 20%)")]
    TooManyFailures { failed: usize, reps: usize },

    #[error("step {step} (null m = {null_m}): {source}")]
    Step {
        step: usize,
        null_m: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Strip [`Error::Step`] wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Step { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for errors that signal a statistically degenerate design rather
    /// than bad input data.
    pub fn is_statistical(&self) -> bool {
        matches!(
            self.root(),
            Error::RankDeficient { .. }
                | Error::DegenerateDesign(_)
                | Error::SingularRss
                | Error::NotFitted
                | Error::EmptyRegime { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
