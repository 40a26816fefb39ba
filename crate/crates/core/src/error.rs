use std::path::PathBuf;

use thiserror::Error;

use crate::time::Instant;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot schedule event at {at}: simulation clock is already at {now}")]
    EventInPast { at: Instant, now: Instant },

    #[error("topic `{topic}`: publish at {at} precedes previous publish at {last}")]
    NonMonotonePublish { topic: String, at: Instant, last: Instant },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("budget infeasible on this platform: lower bound {lower_bound_us}us exceeds T_VIO {t_vio_us}us")]
    InfeasibleSchedule { lower_bound_us: u64, t_vio_us: u64 },

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("trace format error at line {line}: {msg}")]
    TraceFormat { line: usize, msg: String },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON in {path}: {msg}")]
    Json { path: PathBuf, msg: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
