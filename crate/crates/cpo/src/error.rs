use std::path::PathBuf;

use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse error class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad or unreadable input data.
    Data,
    /// Infeasible or degenerate numerical problem.
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing file: {}", path.display())]
    MissingFile { path: PathBuf },

    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("csv parse error: {0}")]
    Csv(String),

    #[error("column {0:?} not found in header")]
    MissingColumn(String),

    #[error("no parseable rows for asset {asset:?}")]
    NoParseableRows { asset: String },

    #[error("duplicate timestamp {date} in asset {asset:?}")]
    DuplicateTimestamp { asset: String, date: NaiveDate },

    #[error("invalid series {asset:?}: {reason}")]
    InvalidSeries { asset: String, reason: String },

    #[error("empty timestamp intersection across series")]
    EmptyIntersection,

    #[error("series too short: {len} observations, need at least {min}")]
    SeriesTooShort { len: usize, min: usize },

    #[error("split index {k} out of range [{lo}, {hi}]")]
    SplitOutOfRange { k: usize, lo: usize, hi: usize },

    #[error("empty break set for asset {asset:?}")]
    EmptyBreakSet { asset: String },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("infeasible bounds: {0}")]
    InfeasibleBounds(String),

    #[error("empty weight grid at resolution {resolution}; try a finer resolution")]
    EmptyGrid { resolution: f64 },

    #[error("degenerate risk: w'Mw is not positive")]
    DegenerateRisk,

    #[error("zero variance: statistic undefined")]
    ZeroVariance,

    #[error("cluster count {k} out of range [1, {n}]")]
    ClusterCountOutOfRange { k: usize, n: usize },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::MissingFile { .. }
            | Error::Io { .. }
            | Error::Csv(_)
            | Error::MissingColumn(_)
            | Error::NoParseableRows { .. }
            | Error::DuplicateTimestamp { .. }
            | Error::InvalidSeries { .. }
            | Error::EmptyIntersection
            | Error::Json(_) => ErrorKind::Data,
            Error::SeriesTooShort { .. }
            | Error::SplitOutOfRange { .. }
            | Error::EmptyBreakSet { .. }
            | Error::InvalidConfig(_)
            | Error::InfeasibleBounds(_)
            | Error::EmptyGrid { .. }
            | Error::DegenerateRisk
            | Error::ZeroVariance
            | Error::ClusterCountOutOfRange { .. } => ErrorKind::Numerical,
        }
    }
}
