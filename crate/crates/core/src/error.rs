use thiserror::Error;

/// Errors produced by sampling, diagnostics, and estimand computations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),

    #[error("covariance matrix is not positive semidefinite")]
    NotPositiveSemidefinite,

    #[error("target log-density is not finite at the initial point")]
    NonFiniteInit,

    #[error("series too short: {len} values, need at least {min}")]
    SeriesTooShort { len: usize, min: usize },

    #[error("degenerate series: sample variance is zero")]
    DegenerateSeries,

    #[error("chain is empty")]
    EmptyChain,

    #[error("separation: zero {cell} cell in the 2x2 table")]
    Separation { cell: &'static str },

    #[error("incidence {incidence:e} is not reachable for offsets in [{lo}, {hi}]")]
    CalibrationRange { incidence: f64, lo: f64, hi: f64 },

    #[error("at draw {index}: {source}")]
    AtDraw {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wraps an error with the index of the posterior draw that produced it.
    pub fn at_draw(self, index: usize) -> Self {
        Error::AtDraw {
            index,
            source: Box::new(self),
        }
    }
}
