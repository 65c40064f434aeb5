use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("inadmissible state (rho = {rho:e}, internal energy = {internal_energy:e})")]
    Inadmissible { rho: f64, internal_energy: f64 },

    #[error("inadmissible state in element {element}, node {node}: rho = {rho:e}, internal energy = {internal_energy:e}")]
    InadmissibleAt {
        element: usize,
        node: usize,
        rho: f64,
        internal_energy: f64,
    },

    #[error("geometry error in element {element}: {reason}")]
    Geometry { element: usize, reason: String },

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("time step {tau:e} underflowed at t = {time:e} (limited by {bound})")]
    StepUnderflow { tau: f64, time: f64, bound: String },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, err: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            message: err.to_string(),
        }
    }

    /// True for failures caused by user input rather than by the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Parameter(_) | Error::Mesh(_) | Error::Io { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
