use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = DqdError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum DqdError {
    /// A matrix or state is outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: String, reason: String },

    /// The integrator produced a state with a significantly negative
    /// eigenvalue; usually the step is too large for the Hamiltonian norm.
    #[error("integrator blow-up at t = {t} ps: eigenvalue {eigenvalue:.3e} (reduce dt)")]
    IntegratorBlowUp { t: f64, eigenvalue: f64 },

    #[error("time {t} ps outside pulse support [0, {end}] ps")]
    OutsideSupport { t: f64, end: f64 },

    #[error("trajectory is empty")]
    EmptyTrajectory,

    #[error("sweep result has no unmasked cells")]
    FullyMasked,

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl DqdError {
    pub fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}
