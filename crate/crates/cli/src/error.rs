use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// Checks that abort a run with exit code 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Guard {
    Truncation,
    Fit,
    TraceDrift,
    SteadyState,
    Integrator,
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Guard::Truncation => "truncation",
            Guard::Fit => "fit",
            Guard::TraceDrift => "trace_drift",
            Guard::SteadyState => "steady_state",
            Guard::Integrator => "integrator",
        })
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error in {file}: {msg}")]
    Parse { file: PathBuf, msg: String },

    /// Semantic error; `field` is the dotted path into the config.
    #[error("config error: `{field}`: {msg}")]
    Field { field: String, msg: String },

    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("guard `{guard}` failed: {msg}")]
    Guard { guard: Guard, msg: String },

    #[error(transparent)]
    Core(usc_core::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn field(field: impl Into<String>, msg: impl Into<String>) -> Self {
        CliError::Field { field: field.into(), msg: msg.into() }
    }

    pub fn guard(guard: Guard, msg: impl Into<String>) -> Self {
        CliError::Guard { guard, msg: msg.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 2 for configuration and i/o problems, 3 for guard failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Guard { .. } => 3,
            _ => 2,
        }
    }
}

/// Numerical failures inside the core map onto guards; everything else is
/// a bad input.
impl From<usc_core::Error> for CliError {
    fn from(e: usc_core::Error) -> Self {
        use usc_core::Error as E;
        let guard = match &e {
            E::DegenerateSteadyState(..) => Some(Guard::SteadyState),
            E::StepSizeUnderflow { .. } | E::StepLimit { .. } => Some(Guard::Integrator),
            E::FitFailed(_) => Some(Guard::Fit),
            E::InsufficientTruncation(_) => Some(Guard::Truncation),
            _ => None,
        };
        match guard {
            Some(g) => CliError::guard(g, e.to_string()),
            None => CliError::Core(e),
        }
    }
}
