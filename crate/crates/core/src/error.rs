use thiserror::Error;

/// Errors raised by the lattice, coding and estimation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    Dimension(String),

    #[error("matrix is rank deficient (column {column})")]
    RankDeficient { column: usize },

    #[error("channel or basis is numerically singular")]
    Singular,

    #[error("enumeration budget of {budget} exceeded")]
    Budget { budget: u64 },

    #[error("trial {trial}: {source}")]
    Trial {
        trial: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

impl Error {
    /// True for enumeration and codebook budget failures, possibly wrapped
    /// in a trial context.
    pub fn is_budget(&self) -> bool {
        match self {
            Error::Budget { .. } => true,
            Error::Trial { source, .. } => source.is_budget(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
