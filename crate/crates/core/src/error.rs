use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("budget exceeded: estimated {estimated:.3e} elementary operations, limit {limit:.3e}")]
    Budget { estimated: f64, limit: f64 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("L = {given} is too small, the split needs at least {required}")]
    LTooSmall { given: f64, required: f64 },

    #[error("inadmissible moment coefficients: sum of c_k is {re}{im:+}i, expected 1")]
    Inadmissible { re: f64, im: f64 },

    #[error("missing sample at grid point {0:?}")]
    MissingSample(Vec<usize>),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Checks an operation count against a limit.
    pub fn check_budget(estimated: f64, limit: f64) -> Result<()> {
        if estimated > limit {
            Err(Error::Budget { estimated, limit })
        } else {
            Ok(())
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
