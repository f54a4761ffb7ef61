use thiserror::Error;

/// Errors produced by map I/O, perception, planning and the exploration loop.
#[derive(Debug, Error)]
pub enum Error {
    #[error("format error: {0}")]
    Format(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("cell {index} out of bounds for a {width}x{height} map")]
    Bounds {
        index: usize,
        width: usize,
        height: usize,
    },

    #[error("invalid pose: {0}")]
    Pose(String),

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("no candidate frontiers")]
    NoCandidates,

    #[error("exploration did not halt within {0} steps")]
    StepLimit(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

macro_rules! param_err {
    ($($arg:tt)*) => { $crate::error::Error::Param(format!($($arg)*)) };
}
pub(crate) use param_err;
