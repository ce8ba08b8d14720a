use thiserror::Error;

/// Errors produced by the kernel inference routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid bandwidth: {0}")]
    InvalidBandwidth(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Every thresholded weight is zero, so the belief carries no mass.
    #[error("degenerate belief: all thresholded weights are zero")]
    DegenerateBelief,

    #[error("numeric failure: {0}")]
    Numeric(String),

    /// The mean-shift denominator collapsed during preimage decoding.
    #[error("decode degenerate: |denominator| = {0:e}")]
    DecodeDegenerate(f64),

    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Self {
        Error::Step {
            step,
            source: Box::new(self),
        }
    }

    /// The innermost error, with any step annotations removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Step { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
