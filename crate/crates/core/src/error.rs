use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the geometry kernel, parsers and the session.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate view: eye coincides with target")]
    DegenerateView,

    #[error("point lies behind the camera")]
    BehindCamera,

    #[error("navigation is locked in projection mode")]
    ModeLocked,

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: u32, column: u32, message: String },

    #[error("schema error in <{element}>: {message}")]
    Schema { element: String, message: String },

    #[error("dangling reference: `{from}` refers to undefined volume `{to}`")]
    DanglingReference { from: String, to: String },

    #[error("not found: {0}")]
    NotFound(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("i/o error on {path}: {message}")]
    Io { path: PathBuf, message: String },

    #[error("unknown command: {0}")]
    UnknownCommand(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, err: std::io::Error) -> Error {
        Error::Io { path: path.into(), message: err.to_string() }
    }

    pub(crate) fn schema(element: impl Into<String>, message: impl Into<String>) -> Error {
        Error::Schema { element: element.into(), message: message.into() }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
