use std::path::PathBuf;

use crate::quadrature::QuadState;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A single wheel increment exceeded the per-step sanity bound.
    #[error(
        "step {step}: wheel travel (left {d_left_m} m, right {d_right_m} m) exceeds bound {bound_m} m"
    )]
    StepTooLarge {
        step: usize,
        d_left_m: f64,
        d_right_m: f64,
        bound_m: f64,
    },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("degenerate circle fit: {0}")]
    DegenerateFit(&'static str),

    #[error("invalid value: {0}")]
    Validation(String),

    #[error("timestamps not strictly increasing at index {index} ({prev} -> {next})")]
    NonMonotonic { index: usize, prev: u64, next: u64 },

    #[error("illegal quadrature transition {from} -> {to} at sample {index}")]
    IllegalTransition {
        index: usize,
        from: QuadState,
        to: QuadState,
    },

    /// Quadrature emission would need sub-microsecond sample spacing.
    #[error("cannot emit quadrature without aliasing: {0}")]
    Aliasing(String),

    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        msg: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// True for errors caused by unreadable or malformed input files.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Parse { .. } | Error::Io { .. })
    }
}
