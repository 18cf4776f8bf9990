use thiserror::Error;

/// Errors produced by the samplers, the data layer and the command line.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {name} = {value}")]
    ParameterDomain { name: &'static str, value: f64 },

    #[error("matrix not positive definite after jitter levels {attempted:?}")]
    NumericalSingularity { attempted: Vec<f64> },

    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("need at least {needed} retained draws, got {got}")]
    InsufficientDraws { needed: usize, got: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("column `{0}` has zero variance")]
    DegenerateColumn(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: impl Into<f64>) -> Self {
        Error::ParameterDomain {
            name,
            value: value.into(),
        }
    }

    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        match self {
            e @ Error::AtIteration { .. } => e,
            e => Error::AtIteration {
                iteration,
                source: Box::new(e),
            },
        }
    }

    /// True when the root cause is a failed factorization.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NumericalSingularity { .. } => true,
            Error::AtIteration { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
