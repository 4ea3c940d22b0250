use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the simulation library and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("point {point:?} lies outside the realized environment box")]
    OutOfDomain { point: Vec<f64> },

    #[error(
        "particle left the realized environment at time {time}; \
         use a box half-width of at least {required_half_width}"
    )]
    EnvironmentTooSmall { time: f64, required_half_width: f64 },

    #[error("dimension {dim} is outside the supported range {min}..={max}")]
    Range { dim: usize, min: usize, max: usize },

    #[error("config error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("checkpoint was written for config {found}, current config hashes to {expected}")]
    ConfigHashMismatch { expected: String, found: String },

    #[error("malformed {what}: {message}")]
    Format { what: &'static str, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
