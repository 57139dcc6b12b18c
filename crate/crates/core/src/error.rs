use thiserror::Error;

/// Errors raised by the toolkit.
///
/// The variants double as error classes for the command-line front end,
/// which maps each one to a distinct exit code.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum HawkesError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The branching ratio is at or above one, so stationary averages do not exist.
    #[error("process is critical or supercritical (n = {n}); average rate undefined")]
    Critical { n: f64 },

    /// Invalid kernel parameters or a kernel that fails its construction checks.
    #[error("invalid kernel: {0}")]
    Kernel(String),

    /// Malformed, unsorted or insufficient event data.
    #[error("data error: {0}")]
    Data(String),

    /// An intraday profile with empty or non-positive bins.
    #[error("profile error: {0}")]
    Profile(String),

    /// Inconsistent configuration (window sizes, unknown keys, calendars).
    #[error("configuration error: {0}")]
    Config(String),

    /// The simulated intensity ran away past the event-count cap.
    #[error("simulation exploded after {events} events (t = {time:.3} s)")]
    Explosion { events: usize, time: f64 },

    /// A numerical procedure failed (non-finite compensator, spectral inversion).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A fitted model produced a non-finite intensity or compensator.
    #[error("model error: {0}")]
    Model(String),

    /// The operation is not available for this kernel family.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T, E = HawkesError> = std::result::Result<T, E>;
