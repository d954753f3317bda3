use thiserror::Error;

/// Errors raised by the tensor kernels, solvers and factorization drivers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("mode {mode} out of range for a {ndim}-mode tensor")]
    ModeOutOfRange { mode: usize, ndim: usize },

    #[error("block {block} out of range for a problem with {num_blocks} blocks")]
    BlockOutOfRange { block: usize, num_blocks: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("start point is infeasible: {0}")]
    Infeasible(String),

    #[error("sub-problem solver produced NaN at iteration {iteration}")]
    SolverNan { iteration: usize },

    #[error("block {block}: {source}")]
    Block {
        block: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("sweep {sweep}: {source}")]
    Sweep {
        sweep: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o: {0}")]
    Io(String),

    #[error("malformed NTF1 data: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
