use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A ball, cylinder or sample region does not fit where it has to.
    #[error("geometry error: {0}")]
    Geometry(String),

    /// A parameter is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A time window is empty, inverted or not covered by the data.
    #[error("window error: {0}")]
    Window(String),

    /// The data is too coarse (in space or time) for the requested quantity.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// Arrays disagree in grid or length.
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("iterative solver did not converge: {0}")]
    Solver(String),

    #[error("CFL violation at t = {time}: max|v|*dt/h = {courant:.3}")]
    Stability { time: f64, courant: f64 },

    #[error("solution diverged at t = {time}")]
    Divergence { time: f64 },

    #[error("degenerate field: {0}")]
    Degenerate(String),

    /// The Chebyshev step found no admissible slice in the window.
    #[error("no good slice: {0}")]
    NoGoodSlice(String),

    #[error("config error for key `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("checksum mismatch for {path}: expected {expected:016x}, found {found:016x}")]
    Checksum {
        path: PathBuf,
        expected: u64,
        found: u64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn geometry(msg: impl Into<String>) -> Self {
        Error::Geometry(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn window(msg: impl Into<String>) -> Self {
        Error::Window(msg.into())
    }

    pub(crate) fn resolution(msg: impl Into<String>) -> Self {
        Error::Resolution(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}
