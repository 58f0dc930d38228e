use std::path::PathBuf;

use thiserror::Error;

use crate::image::PgmError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions {width}x{height}: {reason}")]
    InvalidDimensions {
        width: usize,
        height: usize,
        reason: &'static str,
    },

    #[error("dimension mismatch: {left_w}x{left_h} vs {right_w}x{right_h}")]
    DimensionMismatch {
        left_w: usize,
        left_h: usize,
        right_w: usize,
        right_h: usize,
    },

    #[error("{name} = {value} is out of range ({expected})")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("target rmse {target} unreachable (floor {floor})")]
    TargetUnreachable { target: f64, floor: f64 },

    #[error("underdetermined system: {unknowns} unknowns but only {equations} samples")]
    Underdetermined { unknowns: usize, equations: usize },

    #[error(
        "rank-deficient system: numerical rank {rank} of {unknowns}, condition estimate {condition:.3e}"
    )]
    RankDeficient {
        rank: usize,
        unknowns: usize,
        condition: f64,
    },

    #[error(
        "aliasing: out-of-band energy {leaked:.3e} exceeds tolerance ({fraction:.3e} of total)"
    )]
    Aliasing { leaked: f64, fraction: f64 },

    #[error("malformed sample file at line {line}: {reason}")]
    SampleFile { line: usize, reason: String },

    #[error("{path}: {source}")]
    Pgm {
        path: PathBuf,
        #[source]
        source: PgmError,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::TargetUnreachable { .. } | Error::RankDeficient { .. } | Error::Aliasing { .. }
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
