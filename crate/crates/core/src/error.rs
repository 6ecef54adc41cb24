use std::path::PathBuf;

/// Errors produced by the simulator, the asymptotic solvers and the output writers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("water-filling needs at least one candidate channel")]
    EmptyCandidateSet,

    #[error("power budget must be positive, got {0}")]
    NonpositiveBudget(f64),

    #[error("numerical procedure did not converge: {0}")]
    NonConvergence(String),

    #[error("Monte Carlo estimator too noisy to bracket the root: {0}")]
    McVarianceTooHigh(String),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerical machinery (as opposed to bad input or IO).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonConvergence(_) | Error::McVarianceTooHigh(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
