use hawkes_core::HawkesError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] HawkesError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("configuration error: {0}")]
    Config(String),
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// 0 ok, 2 usage, 3 data, 4 numerical/convergence, 5 configuration.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Io { .. } | Self::Parse { .. } => 3,
            Self::Config(_) => 5,
            Self::Model(e) => match e {
                HawkesError::Data(_) | HawkesError::Profile(_) => 3,
                HawkesError::Numerical(_)
                | HawkesError::Model(_)
                | HawkesError::Explosion { .. }
                | HawkesError::Critical { .. } => 4,
                HawkesError::Domain(_)
                | HawkesError::Kernel(_)
                | HawkesError::Config(_)
                | HawkesError::Unsupported(_) => 5,
            },
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
