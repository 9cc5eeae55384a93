use thiserror::Error;

/// Errors produced by estimation, ingestion and simulation routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A matrix that had to be symmetric positive definite was not. For Gram
    /// matrices this signals an empirically singular design.
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("column {0:?} not found in header")]
    MissingColumn(String),

    #[error("too few rows: n = {n} with p = {p} columns, need n >= p + 2")]
    TooFewRows { n: usize, p: usize },

    #[error("response has zero empirical variance")]
    DegenerateResponse,

    #[error("design column {0} has zero empirical variance")]
    DegenerateColumn(usize),

    #[error("residualized variables have zero empirical variance")]
    DegenerateResiduals,

    #[error("singular design: columns are empirically linearly dependent")]
    SingularDesign,

    #[error("singular sub-covariance matrix in Wald test")]
    SingularSubcovariance,

    #[error("numerical error: {0}")]
    Numerical(String),

    /// An error raised inside a Monte Carlo replicate, tagged with its cell.
    #[error("replicate {replicate} at n = {n}: {source}")]
    Replicate {
        n: usize,
        replicate: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
