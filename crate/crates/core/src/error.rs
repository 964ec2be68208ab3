use std::path::PathBuf;

/// Errors produced by the simulation core.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid scene: {0}")]
    Validation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("channel is identically zero")]
    ZeroChannel,

    #[error("coverage infeasible: required EIRP {required_dbm:.2} dBm exceeds limit {limit_dbm:.2} dBm")]
    Infeasible { required_dbm: f64, limit_dbm: f64 },

    #[error("every simplex vertex is infeasible")]
    AllInfeasible,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid configuration at `{field}`: {msg}")]
    Config { field: String, msg: String },

    #[error("no pedestrian cell available for spawning")]
    NoPedestrianCells,

    #[error("no unmasked sample available")]
    EmptySamples,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn config(field: &str, msg: impl Into<String>) -> Error {
    Error::Config {
        field: field.to_string(),
        msg: msg.into(),
    }
}
